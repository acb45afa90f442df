#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fidkit {

// Whitespace tokenizer with optional byte fallback. The vocabulary is a plain
// text file, one token per line; line number = token id. Ids 0..2 are
// reserved for <pad>, </s>, <unk>. Byte fallback is active when all 256
// tokens <0x00>..<0xFF> are present.
class Tokenizer {
 public:
  static constexpr int kPadId = 0;
  static constexpr int kEosId = 1;
  static constexpr int kUnkId = 2;

  static Tokenizer load(const std::string& path);
  static Tokenizer from_tokens(std::vector<std::string> tokens);

  void save(const std::string& path) const;

  std::vector<int> encode(std::string_view text) const;

  // Inverse of encode up to whitespace normalization; specials are skipped
  // and byte-token runs are reassembled into raw bytes.
  std::string decode(std::span<const int> ids) const;

  int token_id(std::string_view token) const;  // -1 when absent
  const std::string& token(int id) const;
  int vocab_size() const { return static_cast<int>(tokens_.size()); }
  bool has_byte_fallback() const { return byte_fallback_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int byte_ids_[256] = {};
  bool byte_fallback_ = false;

  void build_index();
};

}  // namespace fidkit
