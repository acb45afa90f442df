#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace fidkit {

struct ScorePair {
  double rouge_l = 0.0;
  double f1 = 0.0;
};

// Lowercases, strips ASCII punctuation, collapses whitespace and (optionally)
// drops the articles a/an/the.
std::vector<std::string> normalize_tokens(std::string_view text, bool strip_articles);
std::string normalize_text(std::string_view text, bool strip_articles);

// LCS-based F1 over normalized tokens (articles removed). Both-empty pairs
// score 1, half-empty pairs score 0.
double rouge_l(std::string_view candidate, std::string_view reference);

// Token-overlap F1 over normalized tokens: precision counts candidate tokens
// that occur in the reference, recall counts reference tokens that occur in
// the candidate. Same empty-input conventions as rouge_l.
double f1(std::string_view candidate, std::string_view reference);

ScorePair score_pair(std::string_view candidate, std::string_view reference);

}  // namespace fidkit
