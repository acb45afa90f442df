#include "fidkit/config.hpp"

#include <fstream>
#include <sstream>

#include "fidkit/errors.hpp"
#include "json.hpp"

namespace fidkit {

namespace {
using nlohmann::json;

void require_positive(int v, const char* name) {
  if (v < 1) {
    throw_data(std::string("model config: '") + name + "' must be >= 1, got " +
               std::to_string(v));
  }
}
}  // namespace

void ModelConfig::validate() const {
  require_positive(d_model, "d_model");
  require_positive(n_heads, "n_heads");
  require_positive(n_enc_layers, "n_enc_layers");
  require_positive(n_dec_layers, "n_dec_layers");
  require_positive(d_ff, "d_ff");
  require_positive(d_kv, "d_kv");
  require_positive(vocab_size, "vocab_size");
  require_positive(rel_pos_buckets, "rel_pos_buckets");
}

std::string ModelConfig::to_json() const {
  json j = {
      {"d_model", d_model},
      {"n_heads", n_heads},
      {"n_enc_layers", n_enc_layers},
      {"n_dec_layers", n_dec_layers},
      {"d_ff", d_ff},
      {"d_kv", d_kv},
      {"vocab_size", vocab_size},
      {"rel_pos_buckets", rel_pos_buckets},
      {"tied_lm_head", tied_lm_head},
  };
  return j.dump(2);
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw_data(std::string("malformed model config JSON: ") + e.what());
  }
  ModelConfig c;
  try {
    c.d_model = j.at("d_model").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.n_enc_layers = j.at("n_enc_layers").get<int>();
    c.n_dec_layers = j.at("n_dec_layers").get<int>();
    c.d_ff = j.at("d_ff").get<int>();
    c.d_kv = j.at("d_kv").get<int>();
    c.vocab_size = j.at("vocab_size").get<int>();
    c.rel_pos_buckets = j.value("rel_pos_buckets", 32);
    c.tied_lm_head = j.value("tied_lm_head", true);
  } catch (const json::exception& e) {
    throw_data(std::string("model config missing field: ") + e.what());
  }
  c.validate();
  return c;
}

ModelConfig ModelConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open model config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void ModelConfig::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw_io("cannot open '" + path + "' for writing");
  out << to_json() << "\n";
}

std::vector<TensorSpec> required_tensors(const ModelConfig& c) {
  const auto d_model = static_cast<std::size_t>(c.d_model);
  const auto d_ff = static_cast<std::size_t>(c.d_ff);
  const auto inner = static_cast<std::size_t>(c.n_heads) * static_cast<std::size_t>(c.d_kv);
  const auto vocab = static_cast<std::size_t>(c.vocab_size);
  const auto buckets = static_cast<std::size_t>(c.rel_pos_buckets);
  const auto heads = static_cast<std::size_t>(c.n_heads);

  std::vector<TensorSpec> specs;
  specs.push_back({"shared.embedding", {vocab, d_model}});

  auto add_attn = [&](const std::string& prefix) {
    specs.push_back({prefix + ".q", {d_model, inner}});
    specs.push_back({prefix + ".k", {d_model, inner}});
    specs.push_back({prefix + ".v", {d_model, inner}});
    specs.push_back({prefix + ".o", {inner, d_model}});
    specs.push_back({prefix + ".norm", {d_model}});
  };
  auto add_ffn = [&](const std::string& prefix) {
    specs.push_back({prefix + ".wi", {d_model, d_ff}});
    specs.push_back({prefix + ".wo", {d_ff, d_model}});
    specs.push_back({prefix + ".norm", {d_model}});
  };

  for (int i = 0; i < c.n_enc_layers; ++i) {
    const std::string base = "enc." + std::to_string(i);
    add_attn(base + ".self_attn");
    add_ffn(base + ".ffn");
  }
  specs.push_back({"enc.0.self_attn.rel_bias", {buckets, heads}});
  specs.push_back({"enc.final_norm", {d_model}});

  for (int i = 0; i < c.n_dec_layers; ++i) {
    const std::string base = "dec." + std::to_string(i);
    add_attn(base + ".self_attn");
    add_attn(base + ".cross_attn");
    add_ffn(base + ".ffn");
  }
  specs.push_back({"dec.0.self_attn.rel_bias", {buckets, heads}});
  specs.push_back({"dec.final_norm", {d_model}});
  return specs;
}

TensorSpec lm_head_spec(const ModelConfig& c) {
  return {"lm_head",
          {static_cast<std::size_t>(c.d_model), static_cast<std::size_t>(c.vocab_size)}};
}

}  // namespace fidkit
