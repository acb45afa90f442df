#include "fidkit/early_exit.hpp"

#include <algorithm>
#include <cmath>

#include "fidkit/errors.hpp"
#include "fidkit/model.hpp"
#include "fidkit/tensor.hpp"

namespace fidkit {

void ExitConfig::validate() const {
  if (base_threshold < 0.0 || base_threshold > 1.0) {
    throw_usage("exit threshold must be in [0, 1], got " + std::to_string(base_threshold));
  }
  if (threshold_coef <= 0.0 || threshold_coef > 1.0) {
    throw_usage("exit threshold coefficient must be in (0, 1], got " +
                std::to_string(threshold_coef));
  }
  if (threshold_decay < 1) {
    throw_usage("exit threshold decay must be a positive integer, got " +
                std::to_string(threshold_decay));
  }
}

double effective_threshold(int t, const ExitConfig& cfg) {
  if (t < 1) throw_usage("generated-token index must be >= 1");
  const double decayed =
      std::exp(-static_cast<double>(t - 1) / static_cast<double>(cfg.threshold_decay));
  return cfg.base_threshold * (cfg.threshold_coef + (1.0 - cfg.threshold_coef) * decayed);
}

double softmax_top2_gap(std::span<const float> logits) {
  if (logits.size() < 2) return logits.empty() ? 0.0 : 1.0;
  double top1 = -std::numeric_limits<double>::infinity();
  double top2 = -std::numeric_limits<double>::infinity();
  double max_logit = -std::numeric_limits<double>::infinity();
  for (float v : logits) max_logit = std::max(max_logit, static_cast<double>(v));
  double sum = 0.0;
  for (float v : logits) {
    const double e = std::exp(static_cast<double>(v) - max_logit);
    sum += e;
    if (e > top1) {
      top2 = top1;
      top1 = e;
    } else if (e > top2) {
      top2 = e;
    }
  }
  return (top1 - top2) / sum;
}

double confidence(const Model& model, const float* hidden) {
  const std::vector<float> logits = model.project_to_vocab(hidden);
  return softmax_top2_gap(logits);
}

}  // namespace fidkit
