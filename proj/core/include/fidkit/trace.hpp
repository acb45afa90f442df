#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "fidkit/tensor.hpp"

namespace fidkit {

// Post-softmax cross-attention probabilities for one (generated token index,
// decoder layer), averaged over active beams. `cols[i]` maps column i back to
// the token's position in the original concatenated input, so entries
// recorded after a filtering trigger stay interpretable.
struct TraceEntry {
  int t = 0;           // generated-token index, 1-based
  int layer = 0;       // decoder layer, 1-based
  Matrix probs;        // [h x width]
  std::vector<int> cols;
};

struct CrossAttnTrace {
  int n_heads = 0;
  std::vector<TraceEntry> entries;
  std::vector<int> token_to_passage;  // original input, 1-based passage ranks
  std::optional<int> gold_rank;

  const TraceEntry* find(int t, int layer) const {
    for (const auto& e : entries) {
      if (e.t == t && e.layer == layer) return &e;
    }
    return nullptr;
  }

  std::size_t bytes() const {
    std::size_t n = 0;
    for (const auto& e : entries) {
      n += e.probs.numel() * sizeof(float) + e.cols.size() * sizeof(int);
    }
    return n;
  }
};

// What to record during generation. Empty layer/token lists mean "all".
struct TraceRequest {
  std::vector<int> layers;  // 1-based
  std::vector<int> tokens;  // 1-based generated-token indices
  std::size_t max_bytes = std::size_t(256) << 20;

  bool wants_layer(int layer) const {
    if (layers.empty()) return true;
    for (int l : layers) {
      if (l == layer) return true;
    }
    return false;
  }
  bool wants_token(int t) const {
    if (tokens.empty()) return true;
    for (int x : tokens) {
      if (x == t) return true;
    }
    return false;
  }
};

}  // namespace fidkit
