#pragma once

#include <map>
#include <string>

#include "fidkit/config.hpp"
#include "fidkit/tensor.hpp"

namespace fidkit {

// Binary tensor container:
//   bytes 0..7    magic "FIDW0001"
//   bytes 8..15   little-endian u64 header length H
//   bytes 16..16+H  UTF-8 JSON: { name: { "shape": [..], "offset": n }, .. }
//   remainder     packed little-endian float32 payload; offsets are byte
//                 offsets from the start of the payload
//
// The writer emits tensors in name order with contiguous offsets, so a given
// tensor map always serializes to identical bytes.
inline constexpr char kContainerMagic[8] = {'F', 'I', 'D', 'W', '0', '0', '0', '1'};

using TensorMap = std::map<std::string, Tensor>;

void save_container(const std::string& path, const TensorMap& tensors);

// Reads every tensor in the file. Throws Error(Io) when unreadable and
// Error(Data) for bad magic, malformed header, or a tensor whose declared
// extent runs past the payload (truncated file).
TensorMap load_container(const std::string& path);

// Validated weights for one model.
class ModelWeights {
 public:
  ModelWeights() = default;
  ModelWeights(ModelConfig config, TensorMap tensors);

  const ModelConfig& config() const { return config_; }
  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const;
  std::size_t size() const { return tensors_.size(); }

 private:
  ModelConfig config_;
  TensorMap tensors_;
};

// Loads and validates a weight container against `config`: every required
// tensor must be present with exactly the expected shape. Errors name the
// offending tensor. Detects the optional `lm_head` and flips tied_lm_head.
ModelWeights load_weights(const std::string& path, const ModelConfig& config);

}  // namespace fidkit
