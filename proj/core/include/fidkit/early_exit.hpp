#pragma once

#include <span>
#include <vector>

namespace fidkit {

class Model;

// Confidence-based decoder layer skipping. A token's decoder pass may stop
// at layer l once the confidence of the current hidden state crosses the
// step's effective threshold; under beam search the confidence used is the
// minimum over all active beams, so every beam exits at the same layer.
struct ExitConfig {
  double base_threshold = 1.0;  // in [0, 1]
  double threshold_coef = 1.0;  // in (0, 1]
  int threshold_decay = 4;      // positive
  enum class Confidence { SoftmaxTop2Diff } confidence_measure = Confidence::SoftmaxTop2Diff;

  void validate() const;  // throws Error(Usage) on out-of-range values
};

struct ExitDecision {
  int layer = 0;                              // 1-based layer the step exited at
  std::vector<double> confidences_per_layer;  // min-over-beams, layers 1..layer
};

// Decaying threshold schedule for generated-token index t (1-based):
//   lambda(t) = base * (coef + (1 - coef) * exp(-(t - 1) / decay))
// Non-increasing in t, anchored at base for t = 1, tending to coef * base.
double effective_threshold(int t, const ExitConfig& cfg);

// Gap between the two largest softmax probabilities, in [0, 1).
double softmax_top2_gap(std::span<const float> logits);

// Projects a decoder hidden state through the final norm and LM head and
// returns the top-2 softmax gap.
double confidence(const Model& model, const float* hidden);

}  // namespace fidkit
