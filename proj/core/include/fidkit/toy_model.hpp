#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fidkit/config.hpp"
#include "fidkit/container.hpp"

namespace fidkit {

// Seeded random weights in the container format; the same (config, seed)
// always produces byte-identical files. Toy models carry an untied lm_head
// unless asked otherwise: on random weights a tied head feeds each token's
// embedding back into its own logit and generation locks onto one token.
TensorMap make_toy_tensors(const ModelConfig& config, std::uint64_t seed, bool untied_head = true);
void write_toy_model(const ModelConfig& config, std::uint64_t seed, const std::string& path,
                     bool untied_head = true);

// Vocabulary to pair with a toy model: specials, the 256 byte tokens when
// they fit, then a fixed word list padded with numbered fillers.
std::vector<std::string> toy_vocab(int vocab_size);
void write_toy_vocab(int vocab_size, const std::string& path);

}  // namespace fidkit
