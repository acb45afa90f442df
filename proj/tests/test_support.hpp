#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "fidkit/model.hpp"
#include "fidkit/runtime.hpp"
#include "fidkit/toy_model.hpp"

namespace testsup {

inline fidkit::ModelConfig tiny_config() {
  fidkit::ModelConfig c;
  c.d_model = 8;
  c.n_heads = 2;
  c.n_enc_layers = 2;
  c.n_dec_layers = 2;
  c.d_ff = 16;
  c.d_kv = 4;
  c.vocab_size = 32;
  c.rel_pos_buckets = 8;
  return c;
}

inline fidkit::ModelConfig toy_config() {
  fidkit::ModelConfig c;
  c.d_model = 64;
  c.n_heads = 4;
  c.n_enc_layers = 4;
  c.n_dec_layers = 4;
  c.d_ff = 128;
  c.d_kv = 16;
  c.vocab_size = 512;
  c.rel_pos_buckets = 32;
  return c;
}

inline fidkit::Model make_model(const fidkit::ModelConfig& config, std::uint64_t seed,
                                bool untied_head = true) {
  fidkit::ModelConfig cfg = config;
  cfg.tied_lm_head = !untied_head;
  return fidkit::Model(
      fidkit::ModelWeights(cfg, fidkit::make_toy_tensors(config, seed, untied_head)));
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("fidkit_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
  std::string file(const std::string& name) const { return (path / name).string(); }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
};

// ---------------------------------------------------------------------------
// Reference decoder: full-sequence batch forward with no incremental cache,
// re-deriving the arithmetic (norms, buckets, attention) locally so cache
// handling in the production path is checked against an independent route.
// ---------------------------------------------------------------------------

namespace detail {

inline int ref_bucket(int rel, bool bidirectional, int num_buckets, int max_distance = 128) {
  int bucket = 0;
  int n = rel;
  if (bidirectional) {
    num_buckets /= 2;
    if (n > 0) bucket += num_buckets;
    n = std::abs(n);
  } else {
    n = std::max(-n, 0);
  }
  const int max_exact = num_buckets / 2;
  if (n < max_exact) return bucket + n;
  int large = max_exact + static_cast<int>(std::log(static_cast<double>(n) / max_exact) /
                                           std::log(static_cast<double>(max_distance) / max_exact) *
                                           (num_buckets - max_exact));
  return bucket + std::min(large, num_buckets - 1);
}

inline std::vector<float> ref_rmsnorm(const std::vector<float>& x, const fidkit::Tensor& w) {
  double ss = 0.0;
  for (float v : x) ss += static_cast<double>(v) * v;
  const float scale = 1.0f / std::sqrt(static_cast<float>(ss / x.size()) + 1e-6f);
  std::vector<float> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * scale * w.data[i];
  return out;
}

inline std::vector<float> ref_linear(const std::vector<float>& x, const fidkit::Tensor& w) {
  const std::size_t in = w.shape[0];
  const std::size_t out_dim = w.shape[1];
  std::vector<float> out(out_dim, 0.0f);
  for (std::size_t i = 0; i < in; ++i) {
    for (std::size_t j = 0; j < out_dim; ++j) out[j] += x[i] * w.data[i * out_dim + j];
  }
  return out;
}

}  // namespace detail

// Logits for every position of `prefix`, cross-attending to `enc_states`
// under `enc_mask`. Row i corresponds to decode step i+1.
inline fidkit::Matrix reference_decoder_logits(const fidkit::Model& model,
                                               const std::vector<int>& prefix,
                                               const fidkit::Matrix& enc_states,
                                               const std::vector<std::uint8_t>& enc_mask) {
  using detail::ref_bucket;
  using detail::ref_linear;
  using detail::ref_rmsnorm;

  const fidkit::ModelConfig& cfg = model.config();
  const fidkit::ModelWeights& w = model.weights();
  const std::size_t tq = prefix.size();
  const std::size_t src = enc_states.n_rows;
  const std::size_t heads = static_cast<std::size_t>(cfg.n_heads);
  const std::size_t d_kv = static_cast<std::size_t>(cfg.d_kv);
  const std::size_t d_model = static_cast<std::size_t>(cfg.d_model);
  const float neg_inf = -std::numeric_limits<float>::infinity();

  std::vector<std::vector<float>> x(tq);
  const fidkit::Tensor& emb = w.get("shared.embedding");
  for (std::size_t i = 0; i < tq; ++i) {
    x[i].assign(emb.row(static_cast<std::size_t>(prefix[i])),
                emb.row(static_cast<std::size_t>(prefix[i])) + d_model);
  }

  const fidkit::Tensor& table = w.get("dec.0.self_attn.rel_bias");

  auto attend = [&](const std::vector<std::vector<float>>& q,
                    const std::vector<std::vector<float>>& k,
                    const std::vector<std::vector<float>>& v, std::size_t i, std::size_t n_keys,
                    auto bias_fn) {
    std::vector<float> out(heads * d_kv, 0.0f);
    std::vector<float> scores(n_keys);
    for (std::size_t h = 0; h < heads; ++h) {
      float max_score = neg_inf;
      for (std::size_t j = 0; j < n_keys; ++j) {
        float s = bias_fn(h, j);
        if (!(std::isinf(s) && s < 0.0f)) {
          for (std::size_t d = 0; d < d_kv; ++d) {
            s += q[i][h * d_kv + d] * k[j][h * d_kv + d];
          }
        }
        scores[j] = s;
        max_score = std::max(max_score, s);
      }
      float denom = 0.0f;
      for (std::size_t j = 0; j < n_keys; ++j) {
        scores[j] = (std::isinf(scores[j]) && scores[j] < 0.0f)
                        ? 0.0f
                        : std::exp(scores[j] - max_score);
        denom += scores[j];
      }
      for (std::size_t j = 0; j < n_keys; ++j) {
        const float p = scores[j] / denom;
        for (std::size_t d = 0; d < d_kv; ++d) {
          out[h * d_kv + d] += p * v[j][h * d_kv + d];
        }
      }
    }
    return out;
  };

  for (int layer = 0; layer < cfg.n_dec_layers; ++layer) {
    const std::string base = "dec." + std::to_string(layer);
    // self-attention
    {
      std::vector<std::vector<float>> q(tq), k(tq), v(tq), normed(tq);
      for (std::size_t i = 0; i < tq; ++i) {
        normed[i] = ref_rmsnorm(x[i], w.get(base + ".self_attn.norm"));
        q[i] = ref_linear(normed[i], w.get(base + ".self_attn.q"));
        k[i] = ref_linear(normed[i], w.get(base + ".self_attn.k"));
        v[i] = ref_linear(normed[i], w.get(base + ".self_attn.v"));
      }
      for (std::size_t i = 0; i < tq; ++i) {
        auto bias = [&](std::size_t h, std::size_t j) -> float {
          if (j > i) return neg_inf;
          return table.at(static_cast<std::size_t>(ref_bucket(
                              static_cast<int>(j) - static_cast<int>(i), false,
                              cfg.rel_pos_buckets)),
                          h);
        };
        const auto attn = attend(q, k, v, i, tq, bias);
        const auto proj = ref_linear(attn, w.get(base + ".self_attn.o"));
        for (std::size_t d = 0; d < d_model; ++d) x[i][d] += proj[d];
      }
    }
    // cross-attention
    {
      std::vector<std::vector<float>> k(src), v(src);
      for (std::size_t s = 0; s < src; ++s) {
        std::vector<float> row(enc_states.row(s), enc_states.row(s) + d_model);
        k[s] = ref_linear(row, w.get(base + ".cross_attn.k"));
        v[s] = ref_linear(row, w.get(base + ".cross_attn.v"));
      }
      for (std::size_t i = 0; i < tq; ++i) {
        auto normed = ref_rmsnorm(x[i], w.get(base + ".cross_attn.norm"));
        std::vector<std::vector<float>> q(tq);
        q[i] = ref_linear(normed, w.get(base + ".cross_attn.q"));
        auto bias = [&](std::size_t, std::size_t j) -> float {
          return enc_mask[j] ? 0.0f : neg_inf;
        };
        const auto attn = attend(q, k, v, i, src, bias);
        const auto proj = ref_linear(attn, w.get(base + ".cross_attn.o"));
        for (std::size_t d = 0; d < d_model; ++d) x[i][d] += proj[d];
      }
    }
    // feed-forward
    for (std::size_t i = 0; i < tq; ++i) {
      auto normed = ref_rmsnorm(x[i], w.get(base + ".ffn.norm"));
      auto ff = ref_linear(normed, w.get(base + ".ffn.wi"));
      for (float& f : ff) f = f > 0.0f ? f : 0.0f;
      const auto proj = ref_linear(ff, w.get(base + ".ffn.wo"));
      for (std::size_t d = 0; d < d_model; ++d) x[i][d] += proj[d];
    }
  }

  fidkit::Matrix logits(tq, static_cast<std::size_t>(cfg.vocab_size));
  for (std::size_t i = 0; i < tq; ++i) {
    auto fn = ref_rmsnorm(x[i], w.get("dec.final_norm"));
    if (cfg.tied_lm_head) {
      const float scale = 1.0f / std::sqrt(static_cast<float>(cfg.d_model));
      for (int vtok = 0; vtok < cfg.vocab_size; ++vtok) {
        float s = 0.0f;
        for (std::size_t d = 0; d < d_model; ++d) {
          s += fn[d] * emb.at(static_cast<std::size_t>(vtok), d);
        }
        logits.at(i, static_cast<std::size_t>(vtok)) = s * scale;
      }
    } else {
      const auto row = ref_linear(fn, w.get("lm_head"));
      std::copy(row.begin(), row.end(), logits.row(i));
    }
  }
  return logits;
}

// Random token sequence (avoiding specials) for mask/equivalence tests.
inline std::vector<int> random_ids(std::mt19937& rng, std::size_t n, int vocab) {
  std::uniform_int_distribution<int> dist(3, vocab - 1);
  std::vector<int> ids(n);
  for (auto& id : ids) id = dist(rng);
  return ids;
}

}  // namespace testsup
