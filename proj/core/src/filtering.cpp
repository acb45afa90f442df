#include "fidkit/filtering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fidkit/errors.hpp"

namespace fidkit {

void FilterConfig::validate(int n_dec_layers) const {
  if (!(p_percent > 0.0) || p_percent > 100.0) {
    throw_usage("filter percentage must be in (0, 100], got " + std::to_string(p_percent));
  }
  if (trigger_token < 1) {
    throw_usage("filter trigger token must be >= 1, got " + std::to_string(trigger_token));
  }
  if (trigger_layer < 1 || trigger_layer > n_dec_layers) {
    throw_usage("filter trigger layer must be in [1, " + std::to_string(n_dec_layers) +
                "], got " + std::to_string(trigger_layer));
  }
}

std::size_t top_count(double p_percent, std::size_t n) {
  if (n == 0) return 0;
  // Multiply before dividing so integer-valued percentages stay exact; the
  // small slack absorbs decimal percentages that cannot be represented.
  const double exact = p_percent * static_cast<double>(n) / 100.0;
  auto count = static_cast<std::size_t>(std::ceil(exact - 1e-9));
  return std::clamp<std::size_t>(count, 1, n);
}

SalienceScores score_tokens(const CrossAttnTrace& trace, int t, int layer,
                            const FilterConfig& cfg, const Matrix* values) {
  std::vector<const TraceEntry*> sources;
  if (cfg.mean_over_layers) {
    for (int l = 1; l <= layer; ++l) {
      const TraceEntry* e = trace.find(t, l);
      if (!e) {
        throw_data("score_tokens: trace is missing layer " + std::to_string(l) + " at token " +
                   std::to_string(t));
      }
      sources.push_back(e);
    }
  } else {
    const TraceEntry* e = trace.find(t, layer);
    if (!e) {
      throw_data("score_tokens: trace has no entry for token " + std::to_string(t) +
                 ", layer " + std::to_string(layer));
    }
    sources.push_back(e);
  }

  const std::size_t width = sources.front()->probs.n_cols;
  const std::size_t heads = sources.front()->probs.n_rows;
  for (const TraceEntry* e : sources) {
    if (e->probs.n_cols != width || e->probs.n_rows != heads) {
      throw_data("score_tokens: inconsistent trace entry shapes");
    }
  }

  SalienceScores out;
  out.t = t;
  out.layer = layer;
  out.scores.assign(width, 0.0f);
  for (const TraceEntry* e : sources) {
    for (std::size_t h = 0; h < heads; ++h) {
      const float* row = e->probs.row(h);
      for (std::size_t i = 0; i < width; ++i) out.scores[i] += row[i];
    }
  }
  const float inv = 1.0f / static_cast<float>(heads * sources.size());
  for (float& s : out.scores) s *= inv;

  if (cfg.value_norm) {
    if (!values || values->n_rows != width) {
      throw_data("score_tokens: value rows required for value normalization (need " +
                 std::to_string(width) + " rows)");
    }
    for (std::size_t i = 0; i < width; ++i) {
      const float* row = values->row(i);
      float ss = 0.0f;
      for (std::size_t j = 0; j < values->n_cols; ++j) ss += row[j] * row[j];
      out.scores[i] *= std::sqrt(ss);
    }
  }
  return out;
}

std::vector<int> select_top(const SalienceScores& scores, double p_percent) {
  const std::size_t n = scores.scores.size();
  if (n == 0) throw_data("select_top: empty score vector");
  if (!(p_percent > 0.0) || p_percent > 100.0) {
    throw_usage("select_top: percentage must be in (0, 100]");
  }
  const std::size_t keep = top_count(p_percent, n);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const float sa = scores.scores[static_cast<std::size_t>(a)];
    const float sb = scores.scores[static_cast<std::size_t>(b)];
    if (sa != sb) return sa > sb;
    return a < b;
  });
  order.resize(keep);
  std::sort(order.begin(), order.end());
  return order;
}

namespace {

template <typename T>
std::vector<T> take(const std::vector<T>& src, const std::vector<int>& keep) {
  std::vector<T> out;
  out.reserve(keep.size());
  for (int i : keep) out.push_back(src[static_cast<std::size_t>(i)]);
  return out;
}

Matrix take_rows(const Matrix& src, const std::vector<int>& keep) {
  Matrix out(keep.size(), src.n_cols);
  for (std::size_t r = 0; r < keep.size(); ++r) {
    std::copy_n(src.row(static_cast<std::size_t>(keep[r])), src.n_cols, out.row(r));
  }
  return out;
}

}  // namespace

void prune_cross_source(CrossSource& cross, const std::vector<int>& keep) {
  if (keep.empty()) throw_data("prune_cross_source: keep set is empty");
  const std::size_t n = cross.source_len();
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i] < 0 || static_cast<std::size_t>(keep[i]) >= n) {
      throw_data("prune_cross_source: keep index out of range");
    }
    if (i > 0 && keep[i] <= keep[i - 1]) {
      throw_data("prune_cross_source: keep set must be strictly ascending");
    }
  }
  if (keep.size() == n) return;  // no-op; leave tensors bit-identical

  cross.enc_states = take_rows(cross.enc_states, keep);
  for (auto& m : cross.k) m = take_rows(m, keep);
  for (auto& m : cross.v) m = take_rows(m, keep);
  cross.mask = take(cross.mask, keep);
  cross.token_to_passage = take(cross.token_to_passage, keep);
  cross.orig_index = take(cross.orig_index, keep);
  cross.attn_bias = take(cross.attn_bias, keep);
}

}  // namespace fidkit
