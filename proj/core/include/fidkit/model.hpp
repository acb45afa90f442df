#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fidkit/container.hpp"
#include "fidkit/early_exit.hpp"
#include "fidkit/tensor.hpp"

namespace fidkit {

// T5-style relative position bucket. `relative_position` is key position
// minus query position.
int relative_position_bucket(int relative_position, bool bidirectional, int num_buckets,
                             int max_distance = 128);

// Everything the decoder cross-attends to. Shared by all beams of one
// generation job; token filtering prunes it in place.
struct CrossSource {
  Matrix enc_states;                  // [T x d_model]
  std::vector<std::uint8_t> mask;     // [T], 1 = attendable
  std::vector<int> token_to_passage;  // [T], 1-based passage rank
  std::vector<int> orig_index;        // [T] -> position in the original input
  std::vector<Matrix> k;              // per decoder layer: [T x h*d_kv]
  std::vector<Matrix> v;              // per decoder layer: [T x h*d_kv]
  std::vector<float> attn_bias;       // [T], 0 or -inf, derived from mask

  std::size_t source_len() const { return mask.size(); }
};

// Per-beam incremental decoder state: self-attention KV per layer, one row
// appended per generated position.
struct DecoderState {
  std::vector<Matrix> self_k;  // per layer: [n_past x h*d_kv]
  std::vector<Matrix> self_v;
  int n_past = 0;
};

// Cross-attention probabilities captured for one (step, layer), one row per
// head over the current source length.
struct CapturedCross {
  int layer = 0;  // 1-based
  Matrix probs;   // [h x src_len]
};

struct BeamStepOptions {
  int step_index = 1;  // t, 1-based generated-token index

  // Early exit; nullptr disables the checks entirely.
  const ExitConfig* exit = nullptr;
  // Layers below this bound never exit (used to guarantee the filter's
  // trigger layer is reached on the trigger step).
  int exit_min_layer = 1;

  // capture_layers[l-1] != 0 requests cross-attention probabilities for
  // layer l in BeamStepResult. Empty = capture nothing.
  std::vector<std::uint8_t> capture_layers;
};

struct BeamStepResult {
  std::vector<std::vector<float>> logits;  // per beam, [vocab]
  ExitDecision exit;                       // layer = L when no exit fired
  std::vector<std::vector<double>> per_beam_confidences;  // [beam][layer-1..]
  std::vector<std::vector<CapturedCross>> captured;       // [beam] -> captured layers
};

class Model {
 public:
  explicit Model(ModelWeights weights);

  const ModelConfig& config() const { return config_; }
  const ModelWeights& weights() const { return weights_; }

  // --- encoder -------------------------------------------------------------

  // Hidden states for one sequence. Masked positions contribute nothing to
  // the attention of unmasked positions. Throws on id out of vocab range or
  // length mismatch.
  Matrix encode(std::span<const int> token_ids, std::span<const std::uint8_t> mask) const;

  // --- decoder -------------------------------------------------------------

  // Projects encoder states through every decoder layer's cross-attention
  // K/V once; also derives the additive attention bias from the mask.
  CrossSource make_cross_source(Matrix enc_states, std::vector<std::uint8_t> mask,
                                std::vector<int> token_to_passage) const;

  DecoderState make_decoder_state() const;

  // Additive self-attention bias for decode positions 0..n-1, layout
  // [h x n x n] flattened row-major.
  Tensor build_decoder_self_bias(int n_positions) const;

  // Advances every beam through one decode step, layer-synchronously so the
  // joint (min-over-beams) exit rule can be applied after each layer. Beams,
  // tokens and states are index-aligned. `self_bias` must cover position
  // `states[0].n_past`.
  BeamStepResult step_beams(std::span<DecoderState> states, std::span<const int> tokens,
                            const CrossSource& cross, const Tensor& self_bias,
                            const BeamStepOptions& opts) const;

  // Single-beam convenience wrapper.
  struct StepResult {
    std::vector<float> logits;
    int exit_layer = 0;
    std::vector<CapturedCross> captured;
  };
  StepResult decode_step(DecoderState& state, int token, const CrossSource& cross,
                         const Tensor& self_bias, const BeamStepOptions& opts = {}) const;

  // Final decoder norm + LM head.
  std::vector<float> project_to_vocab(const float* hidden) const;

 private:
  struct AttnWeights {
    const Tensor* q;
    const Tensor* k;
    const Tensor* v;
    const Tensor* o;
    const Tensor* norm;
  };
  struct FfnWeights {
    const Tensor* wi;
    const Tensor* wo;
    const Tensor* norm;
  };

  AttnWeights attn(const std::string& prefix) const;
  FfnWeights ffn(const std::string& prefix) const;

  // One decoder layer for one beam at position `pos`; appends this position's
  // self K/V to `state` and optionally captures cross probabilities.
  void decoder_layer(int layer, DecoderState& state, float* hidden, const CrossSource& cross,
                    const Tensor& self_bias, int pos, Matrix* cross_probs) const;

  // State propagation for layers skipped by early exit: runs the layer's own
  // input norm and K/V projections over `hidden` so future full-depth steps
  // can attend to this position.
  void fill_skipped_kv(int layer, DecoderState& state, const float* hidden) const;

  void rmsnorm(const float* x, const Tensor& weight, float* out) const;

  ModelConfig config_;
  ModelWeights weights_;
  float lm_scale_ = 1.0f;  // d_model^-1/2 for tied heads, 1 otherwise
};

}  // namespace fidkit
