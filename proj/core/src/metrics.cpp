#include "fidkit/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace fidkit {

namespace {

bool is_punct(unsigned char c) {
  static constexpr std::string_view kPunct = R"(!"#$%&'()*+,-./:;<=>?@[\]^_`{|}~)";
  return kPunct.find(static_cast<char>(c)) != std::string_view::npos;
}

bool is_article(const std::string& token) {
  return token == "a" || token == "an" || token == "the";
}

}  // namespace

std::vector<std::string> normalize_tokens(std::string_view text, bool strip_articles) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (current.empty()) return;
    if (!strip_articles || !is_article(current)) tokens.push_back(current);
    current.clear();
  };
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      flush();
    } else if (!is_punct(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return tokens;
}

std::string normalize_text(std::string_view text, bool strip_articles) {
  std::string out;
  for (const std::string& tok : normalize_tokens(text, strip_articles)) {
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

namespace {

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

double rouge_l(std::string_view candidate, std::string_view reference) {
  const std::vector<std::string> cand = normalize_tokens(candidate, /*strip_articles=*/true);
  const std::vector<std::string> ref = normalize_tokens(reference, /*strip_articles=*/true);
  if (cand.empty() && ref.empty()) return 1.0;
  if (cand.empty() || ref.empty()) return 0.0;
  const double lcs = static_cast<double>(lcs_length(cand, ref));
  const double precision = lcs / static_cast<double>(cand.size());
  const double recall = lcs / static_cast<double>(ref.size());
  return harmonic(precision, recall);
}

double f1(std::string_view candidate, std::string_view reference) {
  const std::vector<std::string> cand = normalize_tokens(candidate, /*strip_articles=*/false);
  const std::vector<std::string> ref = normalize_tokens(reference, /*strip_articles=*/false);
  if (cand.empty() && ref.empty()) return 1.0;
  if (cand.empty() || ref.empty()) return 0.0;

  const std::unordered_set<std::string> cand_set(cand.begin(), cand.end());
  const std::unordered_set<std::string> ref_set(ref.begin(), ref.end());
  std::size_t cand_hits = 0;
  for (const std::string& tok : cand) cand_hits += ref_set.count(tok);
  std::size_t ref_hits = 0;
  for (const std::string& tok : ref) ref_hits += cand_set.count(tok);

  const double precision = static_cast<double>(cand_hits) / static_cast<double>(cand.size());
  const double recall = static_cast<double>(ref_hits) / static_cast<double>(ref.size());
  return harmonic(precision, recall);
}

ScorePair score_pair(std::string_view candidate, std::string_view reference) {
  return {rouge_l(candidate, reference), f1(candidate, reference)};
}

}  // namespace fidkit
