#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace fidkit {

// Architecture dimensions of a T5-style encoder-decoder.
struct ModelConfig {
  int d_model = 0;
  int n_heads = 0;
  int n_enc_layers = 0;
  int n_dec_layers = 0;
  int d_ff = 0;
  int d_kv = 0;
  int vocab_size = 0;
  int rel_pos_buckets = 32;

  // When the container carries an `lm_head` tensor the head is untied;
  // otherwise logits are projected through the shared embedding.
  bool tied_lm_head = true;

  void validate() const;  // throws Error(Data) on any dimension < 1

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
  static ModelConfig load(const std::string& path);
  void save(const std::string& path) const;
};

struct TensorSpec {
  std::string name;
  std::vector<std::size_t> shape;
};

// Full list of tensors a container must provide for `config`. The
// relative-position tables live on layer 0 only and are shared by all layers
// of the same stack.
std::vector<TensorSpec> required_tensors(const ModelConfig& config);

// Shape of the optional untied head.
TensorSpec lm_head_spec(const ModelConfig& config);

}  // namespace fidkit
