#include "fidkit/model.hpp"

#include <cmath>
#include <cstring>

#include "fidkit/errors.hpp"

namespace fidkit {

namespace {
constexpr float kNormEps = 1e-6f;
constexpr float kNegInf = -std::numeric_limits<float>::infinity();
}  // namespace

int relative_position_bucket(int relative_position, bool bidirectional, int num_buckets,
                             int max_distance) {
  int bucket = 0;
  int n = relative_position;
  if (bidirectional) {
    num_buckets /= 2;
    if (n > 0) bucket += num_buckets;
    n = std::abs(n);
  } else {
    n = std::max(-n, 0);
  }
  const int max_exact = num_buckets / 2;
  if (n < max_exact) return bucket + n;
  const double log_ratio = std::log(static_cast<double>(n) / max_exact) /
                           std::log(static_cast<double>(max_distance) / max_exact);
  int large = max_exact + static_cast<int>(log_ratio * (num_buckets - max_exact));
  large = std::min(large, num_buckets - 1);
  return bucket + large;
}

Model::Model(ModelWeights weights) : config_(weights.config()), weights_(std::move(weights)) {
  config_.validate();
  lm_scale_ = config_.tied_lm_head
                  ? 1.0f / std::sqrt(static_cast<float>(config_.d_model))
                  : 1.0f;
}

Model::AttnWeights Model::attn(const std::string& prefix) const {
  return {&weights_.get(prefix + ".q"), &weights_.get(prefix + ".k"),
          &weights_.get(prefix + ".v"), &weights_.get(prefix + ".o"),
          &weights_.get(prefix + ".norm")};
}

Model::FfnWeights Model::ffn(const std::string& prefix) const {
  return {&weights_.get(prefix + ".wi"), &weights_.get(prefix + ".wo"),
          &weights_.get(prefix + ".norm")};
}

void Model::rmsnorm(const float* x, const Tensor& weight, float* out) const {
  const std::size_t d = static_cast<std::size_t>(config_.d_model);
  float ss = 0.0f;
  for (std::size_t i = 0; i < d; ++i) ss += x[i] * x[i];
  const float scale = 1.0f / std::sqrt(ss / static_cast<float>(d) + kNormEps);
  for (std::size_t i = 0; i < d; ++i) out[i] = x[i] * scale * weight.data[i];
}

Matrix Model::encode(std::span<const int> token_ids,
                     std::span<const std::uint8_t> mask) const {
  if (token_ids.size() != mask.size()) {
    throw_data("encode: token/mask length mismatch (" + std::to_string(token_ids.size()) +
               " vs " + std::to_string(mask.size()) + ")");
  }
  const std::size_t seq = token_ids.size();
  const std::size_t d_model = static_cast<std::size_t>(config_.d_model);
  const std::size_t heads = static_cast<std::size_t>(config_.n_heads);
  const std::size_t d_kv = static_cast<std::size_t>(config_.d_kv);
  const std::size_t inner = heads * d_kv;

  const Tensor& embedding = weights_.get("shared.embedding");
  Matrix x(seq, d_model);
  for (std::size_t i = 0; i < seq; ++i) {
    const int id = token_ids[i];
    if (id < 0 || id >= config_.vocab_size) {
      throw_data("encode: token id " + std::to_string(id) + " out of vocab range [0, " +
                 std::to_string(config_.vocab_size) + ")");
    }
    std::memcpy(x.row(i), embedding.row(static_cast<std::size_t>(id)), d_model * sizeof(float));
  }

  // Position bias shared by all layers; masked keys get -inf for every query.
  const Tensor& rel_table = weights_.get("enc.0.self_attn.rel_bias");
  Matrix bias(heads, seq * seq);
  for (std::size_t h = 0; h < heads; ++h) {
    float* brow = bias.row(h);
    for (std::size_t i = 0; i < seq; ++i) {
      for (std::size_t j = 0; j < seq; ++j) {
        if (!mask[j]) {
          brow[i * seq + j] = kNegInf;
          continue;
        }
        const int bucket = relative_position_bucket(static_cast<int>(j) - static_cast<int>(i),
                                                    /*bidirectional=*/true,
                                                    config_.rel_pos_buckets);
        brow[i * seq + j] = rel_table.at(static_cast<std::size_t>(bucket), h);
      }
    }
  }

  std::vector<float> normed(d_model);
  std::vector<float> scores(seq);
  std::vector<float> attn_out(inner);

  for (int layer = 0; layer < config_.n_enc_layers; ++layer) {
    const std::string base = "enc." + std::to_string(layer);
    const AttnWeights aw = attn(base + ".self_attn");

    Matrix pre(seq, d_model);
    for (std::size_t i = 0; i < seq; ++i) rmsnorm(x.row(i), *aw.norm, pre.row(i));
    const Matrix q = matmul(pre, aw.q->data.data(), d_model, inner);
    const Matrix k = matmul(pre, aw.k->data.data(), d_model, inner);
    const Matrix v = matmul(pre, aw.v->data.data(), d_model, inner);

    for (std::size_t i = 0; i < seq; ++i) {
      std::fill(attn_out.begin(), attn_out.end(), 0.0f);
      for (std::size_t h = 0; h < heads; ++h) {
        const float* qh = q.row(i) + h * d_kv;
        const float* brow = bias.row(h) + i * seq;
        for (std::size_t j = 0; j < seq; ++j) {
          scores[j] = dot(qh, k.row(j) + h * d_kv, d_kv) + brow[j];
        }
        softmax_inplace(scores.data(), seq);
        float* oh = attn_out.data() + h * d_kv;
        for (std::size_t j = 0; j < seq; ++j) {
          const float p = scores[j];
          if (p == 0.0f) continue;
          const float* vh = v.row(j) + h * d_kv;
          for (std::size_t d = 0; d < d_kv; ++d) oh[d] += p * vh[d];
        }
      }
      add_vec_mat(attn_out.data(), inner, aw.o->data.data(), d_model, x.row(i));
    }

    const FfnWeights fw = ffn(base + ".ffn");
    std::vector<float> ff(config_.d_ff);
    for (std::size_t i = 0; i < seq; ++i) {
      rmsnorm(x.row(i), *fw.norm, normed.data());
      vec_mat(normed.data(), d_model, fw.wi->data.data(), config_.d_ff, ff.data());
      relu_inplace(ff.data(), config_.d_ff);
      add_vec_mat(ff.data(), config_.d_ff, fw.wo->data.data(), d_model, x.row(i));
    }
  }

  const Tensor& final_norm = weights_.get("enc.final_norm");
  for (std::size_t i = 0; i < seq; ++i) {
    rmsnorm(x.row(i), final_norm, normed.data());
    std::memcpy(x.row(i), normed.data(), d_model * sizeof(float));
  }
  return x;
}

CrossSource Model::make_cross_source(Matrix enc_states, std::vector<std::uint8_t> mask,
                                     std::vector<int> token_to_passage) const {
  const std::size_t n = enc_states.n_rows;
  if (mask.size() != n || token_to_passage.size() != n) {
    throw_data("cross source: states/mask/passage-map length mismatch");
  }
  const std::size_t d_model = static_cast<std::size_t>(config_.d_model);
  const std::size_t inner =
      static_cast<std::size_t>(config_.n_heads) * static_cast<std::size_t>(config_.d_kv);

  CrossSource cs;
  cs.mask = std::move(mask);
  cs.token_to_passage = std::move(token_to_passage);
  cs.orig_index.resize(n);
  for (std::size_t i = 0; i < n; ++i) cs.orig_index[i] = static_cast<int>(i);
  cs.attn_bias.resize(n);
  for (std::size_t i = 0; i < n; ++i) cs.attn_bias[i] = cs.mask[i] ? 0.0f : kNegInf;

  cs.k.reserve(config_.n_dec_layers);
  cs.v.reserve(config_.n_dec_layers);
  for (int layer = 0; layer < config_.n_dec_layers; ++layer) {
    const std::string base = "dec." + std::to_string(layer) + ".cross_attn";
    cs.k.push_back(matmul(enc_states, weights_.get(base + ".k").data.data(), d_model, inner));
    cs.v.push_back(matmul(enc_states, weights_.get(base + ".v").data.data(), d_model, inner));
  }
  cs.enc_states = std::move(enc_states);
  return cs;
}

DecoderState Model::make_decoder_state() const {
  DecoderState st;
  const std::size_t inner =
      static_cast<std::size_t>(config_.n_heads) * static_cast<std::size_t>(config_.d_kv);
  st.self_k.assign(static_cast<std::size_t>(config_.n_dec_layers), Matrix(0, inner));
  st.self_v.assign(static_cast<std::size_t>(config_.n_dec_layers), Matrix(0, inner));
  return st;
}

Tensor Model::build_decoder_self_bias(int n_positions) const {
  const std::size_t n = static_cast<std::size_t>(n_positions);
  const std::size_t heads = static_cast<std::size_t>(config_.n_heads);
  const Tensor& rel_table = weights_.get("dec.0.self_attn.rel_bias");
  Tensor bias({heads, n, n});
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const int bucket = relative_position_bucket(static_cast<int>(j) - static_cast<int>(i),
                                                    /*bidirectional=*/false,
                                                    config_.rel_pos_buckets);
        bias.data[(h * n + i) * n + j] = rel_table.at(static_cast<std::size_t>(bucket), h);
      }
    }
  }
  return bias;
}

namespace {
// Appends one row to a [n x cols] matrix.
void append_row(Matrix& m, const float* row) {
  m.data.insert(m.data.end(), row, row + m.n_cols);
  ++m.n_rows;
}
}  // namespace

void Model::decoder_layer(int layer, DecoderState& state, float* hidden,
                          const CrossSource& cross, const Tensor& self_bias, int pos,
                          Matrix* cross_probs) const {
  const std::size_t d_model = static_cast<std::size_t>(config_.d_model);
  const std::size_t heads = static_cast<std::size_t>(config_.n_heads);
  const std::size_t d_kv = static_cast<std::size_t>(config_.d_kv);
  const std::size_t inner = heads * d_kv;
  const std::string base = "dec." + std::to_string(layer);

  std::vector<float> normed(d_model);
  std::vector<float> qkv(inner);
  std::vector<float> attn_out(inner);

  // Self-attention over cached positions 0..pos.
  {
    const AttnWeights aw = attn(base + ".self_attn");
    rmsnorm(hidden, *aw.norm, normed.data());
    vec_mat(normed.data(), d_model, aw.k->data.data(), inner, qkv.data());
    append_row(state.self_k[static_cast<std::size_t>(layer)], qkv.data());
    vec_mat(normed.data(), d_model, aw.v->data.data(), inner, qkv.data());
    append_row(state.self_v[static_cast<std::size_t>(layer)], qkv.data());
    vec_mat(normed.data(), d_model, aw.q->data.data(), inner, qkv.data());

    const Matrix& kc = state.self_k[static_cast<std::size_t>(layer)];
    const Matrix& vc = state.self_v[static_cast<std::size_t>(layer)];
    const std::size_t n_ctx = static_cast<std::size_t>(pos) + 1;
    const std::size_t n_bias = self_bias.shape[1];
    std::vector<float> scores(n_ctx);
    std::fill(attn_out.begin(), attn_out.end(), 0.0f);
    for (std::size_t h = 0; h < heads; ++h) {
      const float* qh = qkv.data() + h * d_kv;
      const float* brow =
          self_bias.data.data() + (h * n_bias + static_cast<std::size_t>(pos)) * n_bias;
      for (std::size_t j = 0; j < n_ctx; ++j) {
        scores[j] = dot(qh, kc.row(j) + h * d_kv, d_kv) + brow[j];
      }
      softmax_inplace(scores.data(), n_ctx);
      float* oh = attn_out.data() + h * d_kv;
      for (std::size_t j = 0; j < n_ctx; ++j) {
        const float p = scores[j];
        const float* vh = vc.row(j) + h * d_kv;
        for (std::size_t d = 0; d < d_kv; ++d) oh[d] += p * vh[d];
      }
    }
    add_vec_mat(attn_out.data(), inner, aw.o->data.data(), d_model, hidden);
  }

  // Cross-attention over the (possibly pruned) source.
  {
    const AttnWeights aw = attn(base + ".cross_attn");
    rmsnorm(hidden, *aw.norm, normed.data());
    vec_mat(normed.data(), d_model, aw.q->data.data(), inner, qkv.data());

    const Matrix& kc = cross.k[static_cast<std::size_t>(layer)];
    const Matrix& vc = cross.v[static_cast<std::size_t>(layer)];
    const std::size_t src = cross.source_len();
    std::vector<float> scores(src);
    std::fill(attn_out.begin(), attn_out.end(), 0.0f);
    if (cross_probs) *cross_probs = Matrix(heads, src);
    for (std::size_t h = 0; h < heads; ++h) {
      const float* qh = qkv.data() + h * d_kv;
      for (std::size_t s = 0; s < src; ++s) {
        scores[s] = dot(qh, kc.row(s) + h * d_kv, d_kv) + cross.attn_bias[s];
      }
      softmax_inplace(scores.data(), src);
      if (cross_probs) {
        std::memcpy(cross_probs->row(h), scores.data(), src * sizeof(float));
      }
      float* oh = attn_out.data() + h * d_kv;
      for (std::size_t s = 0; s < src; ++s) {
        const float p = scores[s];
        if (p == 0.0f) continue;
        const float* vh = vc.row(s) + h * d_kv;
        for (std::size_t d = 0; d < d_kv; ++d) oh[d] += p * vh[d];
      }
    }
    add_vec_mat(attn_out.data(), inner, aw.o->data.data(), d_model, hidden);
  }

  // Feed-forward.
  {
    const FfnWeights fw = ffn(base + ".ffn");
    rmsnorm(hidden, *fw.norm, normed.data());
    std::vector<float> ff(config_.d_ff);
    vec_mat(normed.data(), d_model, fw.wi->data.data(), config_.d_ff, ff.data());
    relu_inplace(ff.data(), config_.d_ff);
    add_vec_mat(ff.data(), config_.d_ff, fw.wo->data.data(), d_model, hidden);
  }
}

void Model::fill_skipped_kv(int layer, DecoderState& state, const float* hidden) const {
  const std::size_t d_model = static_cast<std::size_t>(config_.d_model);
  const std::size_t inner =
      static_cast<std::size_t>(config_.n_heads) * static_cast<std::size_t>(config_.d_kv);
  const AttnWeights aw = attn("dec." + std::to_string(layer) + ".self_attn");
  std::vector<float> normed(d_model);
  std::vector<float> proj(inner);
  rmsnorm(hidden, *aw.norm, normed.data());
  vec_mat(normed.data(), d_model, aw.k->data.data(), inner, proj.data());
  append_row(state.self_k[static_cast<std::size_t>(layer)], proj.data());
  vec_mat(normed.data(), d_model, aw.v->data.data(), inner, proj.data());
  append_row(state.self_v[static_cast<std::size_t>(layer)], proj.data());
}

std::vector<float> Model::project_to_vocab(const float* hidden) const {
  const std::size_t d_model = static_cast<std::size_t>(config_.d_model);
  const std::size_t vocab = static_cast<std::size_t>(config_.vocab_size);
  std::vector<float> normed(d_model);
  rmsnorm(hidden, weights_.get("dec.final_norm"), normed.data());

  std::vector<float> logits(vocab);
  if (config_.tied_lm_head) {
    const Tensor& embedding = weights_.get("shared.embedding");
    for (std::size_t v = 0; v < vocab; ++v) {
      logits[v] = dot(normed.data(), embedding.row(v), d_model) * lm_scale_;
    }
  } else {
    vec_mat(normed.data(), d_model, weights_.get("lm_head").data.data(), vocab, logits.data());
  }
  return logits;
}

BeamStepResult Model::step_beams(std::span<DecoderState> states, std::span<const int> tokens,
                                 const CrossSource& cross, const Tensor& self_bias,
                                 const BeamStepOptions& opts) const {
  const std::size_t n_beams = states.size();
  if (n_beams == 0 || tokens.size() != n_beams) {
    throw_internal("step_beams: beam/token count mismatch");
  }
  if (cross.k.size() != static_cast<std::size_t>(config_.n_dec_layers)) {
    throw_data("step_beams: cross source layer count mismatch");
  }
  const int pos = states[0].n_past;
  for (const DecoderState& st : states) {
    if (st.n_past != pos) throw_internal("step_beams: beams out of sync");
  }
  if (static_cast<std::size_t>(pos) >= self_bias.shape[1]) {
    throw_internal("step_beams: self bias too small for position " + std::to_string(pos));
  }

  const std::size_t d_model = static_cast<std::size_t>(config_.d_model);
  const Tensor& embedding = weights_.get("shared.embedding");

  std::vector<std::vector<float>> hidden(n_beams, std::vector<float>(d_model));
  for (std::size_t b = 0; b < n_beams; ++b) {
    const int id = tokens[b];
    if (id < 0 || id >= config_.vocab_size) {
      throw_data("step_beams: token id " + std::to_string(id) + " out of vocab range");
    }
    std::memcpy(hidden[b].data(), embedding.row(static_cast<std::size_t>(id)),
                d_model * sizeof(float));
  }

  BeamStepResult result;
  result.logits.resize(n_beams);
  result.captured.resize(n_beams);
  result.per_beam_confidences.resize(n_beams);

  const int n_layers = config_.n_dec_layers;
  const double threshold = opts.exit ? effective_threshold(opts.step_index, *opts.exit) : 0.0;
  int exit_layer = n_layers;

  for (int layer = 0; layer < n_layers; ++layer) {
    const bool capture = layer < static_cast<int>(opts.capture_layers.size()) &&
                         opts.capture_layers[static_cast<std::size_t>(layer)];
    for (std::size_t b = 0; b < n_beams; ++b) {
      Matrix probs;
      decoder_layer(layer, states[b], hidden[b].data(), cross, self_bias, pos,
                    capture ? &probs : nullptr);
      if (capture) {
        result.captured[b].push_back({layer + 1, std::move(probs)});
      }
    }

    if (opts.exit) {
      double min_conf = 2.0;
      std::vector<std::vector<float>> layer_logits(n_beams);
      for (std::size_t b = 0; b < n_beams; ++b) {
        layer_logits[b] = project_to_vocab(hidden[b].data());
        const double c = softmax_top2_gap(layer_logits[b]);
        result.per_beam_confidences[b].push_back(c);
        min_conf = std::min(min_conf, c);
      }
      result.exit.confidences_per_layer.push_back(min_conf);
      const bool last_layer = layer + 1 == n_layers;
      if ((layer + 1 >= opts.exit_min_layer && min_conf >= threshold) || last_layer) {
        exit_layer = layer + 1;
        result.logits = std::move(layer_logits);
        if (exit_layer < n_layers) {
          for (std::size_t b = 0; b < n_beams; ++b) {
            for (int skipped = exit_layer; skipped < n_layers; ++skipped) {
              fill_skipped_kv(skipped, states[b], hidden[b].data());
            }
          }
        }
        break;
      }
    }
  }

  if (!opts.exit) {
    for (std::size_t b = 0; b < n_beams; ++b) {
      result.logits[b] = project_to_vocab(hidden[b].data());
    }
  }
  result.exit.layer = exit_layer;

  for (std::size_t b = 0; b < n_beams; ++b) ++states[b].n_past;
  return result;
}

Model::StepResult Model::decode_step(DecoderState& state, int token, const CrossSource& cross,
                                     const Tensor& self_bias,
                                     const BeamStepOptions& opts) const {
  BeamStepResult r = step_beams(std::span<DecoderState>(&state, 1),
                                std::span<const int>(&token, 1), cross, self_bias, opts);
  StepResult out;
  out.logits = std::move(r.logits[0]);
  out.exit_layer = r.exit.layer;
  out.captured = std::move(r.captured[0]);
  return out;
}

}  // namespace fidkit
