#pragma once

#include <cstddef>
#include <vector>

#include "fidkit/model.hpp"
#include "fidkit/trace.hpp"

namespace fidkit {

// One-shot pruning of the decoder's cross-attention inputs: at generated
// token t* and decoder layer l*, rank every input token by head-averaged
// cross-attention, keep the top p%, and drop the rest from every tensor the
// decoder reads from that point on.
struct FilterConfig {
  double p_percent = 100.0;  // in (0, 100]
  int trigger_token = 1;     // t*, 1-based
  int trigger_layer = 1;     // l*, 1-based
  bool value_norm = false;
  bool mean_over_layers = false;

  enum class BeamAggregate { Mean, Min } beam_aggregate = BeamAggregate::Mean;

  void validate(int n_dec_layers) const;  // throws Error(Usage)
};

struct SalienceScores {
  std::vector<float> scores;  // one per input token column
  int t = 0;
  int layer = 0;
};

// Number of tokens kept by a top-p% selection over n candidates.
std::size_t top_count(double p_percent, std::size_t n);

// Head-mean of the cross-attention rows at (t, l); with mean_over_layers the
// average additionally runs over layers 1..l, and with value_norm each score
// is scaled by the L2 norm of that token's cross-attention value row
// (`values`, [T x h*d_kv]).
SalienceScores score_tokens(const CrossAttnTrace& trace, int t, int layer,
                            const FilterConfig& cfg, const Matrix* values = nullptr);

// Indices of the ceil(p/100 * T) highest scores, ties broken toward the
// lower index, returned in ascending index order.
std::vector<int> select_top(const SalienceScores& scores, double p_percent);

// Drops every source position not in `keep` (ascending positions into the
// current source) from the cross-attention K/V of all decoder layers, the
// encoder states, mask, passage map and additive attention bias. Relative
// order is preserved. Self-attention caches are untouched by construction.
void prune_cross_source(CrossSource& cross, const std::vector<int>& keep);

}  // namespace fidkit
