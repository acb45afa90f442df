#include "fidkit/tokenizer.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>

#include "fidkit/errors.hpp"

namespace fidkit {

namespace {

std::string byte_token(unsigned byte) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "<0x%02X>", byte);
  return buf;
}

bool parse_byte_token(std::string_view tok, unsigned char* out) {
  if (tok.size() != 6 || tok.substr(0, 3) != "<0x" || tok.back() != '>') return false;
  unsigned v = 0;
  for (char c : tok.substr(3, 2)) {
    v <<= 4;
    if (c >= '0' && c <= '9') {
      v |= static_cast<unsigned>(c - '0');
    } else if (c >= 'A' && c <= 'F') {
      v |= static_cast<unsigned>(c - 'A' + 10);
    } else {
      return false;
    }
  }
  *out = static_cast<unsigned char>(v);
  return true;
}

}  // namespace

Tokenizer Tokenizer::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open vocabulary '" + path + "'");
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return from_tokens(std::move(tokens));
}

Tokenizer Tokenizer::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < 3) throw_data("vocabulary must contain at least <pad>, </s>, <unk>");
  Tokenizer t;
  t.tokens_ = std::move(tokens);
  t.build_index();
  return t;
}

void Tokenizer::build_index() {
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    index_.emplace(tokens_[i], static_cast<int>(i));
  }
  int found = 0;
  for (unsigned b = 0; b < 256; ++b) {
    auto it = index_.find(byte_token(b));
    if (it != index_.end()) {
      byte_ids_[b] = it->second;
      ++found;
    }
  }
  byte_fallback_ = (found == 256);
}

void Tokenizer::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw_io("cannot open '" + path + "' for writing");
  for (const auto& t : tokens_) out << t << "\n";
}

int Tokenizer::token_id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? -1 : it->second;
}

const std::string& Tokenizer::token(int id) const {
  if (id < 0 || id >= vocab_size()) throw_data("token id out of range: " + std::to_string(id));
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Tokenizer::encode(std::string_view text) const {
  std::vector<int> ids;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i == start) break;
    const std::string_view word = text.substr(start, i - start);
    auto it = index_.find(std::string(word));
    if (it != index_.end()) {
      ids.push_back(it->second);
    } else if (byte_fallback_) {
      for (unsigned char b : word) ids.push_back(byte_ids_[b]);
    } else {
      ids.push_back(kUnkId);
    }
  }
  return ids;
}

std::string Tokenizer::decode(std::span<const int> ids) const {
  std::string out;
  std::string pending_bytes;
  auto flush = [&] {
    if (pending_bytes.empty()) return;
    if (!out.empty()) out += ' ';
    out += pending_bytes;
    pending_bytes.clear();
  };
  for (int id : ids) {
    if (id < 0 || id >= vocab_size()) continue;
    if (id == kPadId || id == kEosId || id == kUnkId) {
      flush();
      continue;
    }
    const std::string& tok = tokens_[static_cast<std::size_t>(id)];
    unsigned char byte = 0;
    if (parse_byte_token(tok, &byte)) {
      pending_bytes.push_back(static_cast<char>(byte));
      continue;
    }
    flush();
    if (!out.empty()) out += ' ';
    out += tok;
  }
  flush();
  return out;
}

}  // namespace fidkit
