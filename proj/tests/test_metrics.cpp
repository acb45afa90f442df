#include <random>

#include "doctest.h"
#include "fidkit/metrics.hpp"

using namespace fidkit;

namespace {

std::string random_text(std::mt19937& rng, int max_words) {
  static const char* kWords[] = {"red", "blue", "stone", "river", "the", "a", "an",
                                 "gate", "wall", "ship", "Ship,", "port!", "king"};
  std::uniform_int_distribution<int> n_dist(0, max_words);
  std::uniform_int_distribution<std::size_t> w_dist(0, std::size(kWords) - 1);
  std::string out;
  const int n = n_dist(rng);
  for (int i = 0; i < n; ++i) {
    if (!out.empty()) out += ' ';
    out += kWords[w_dist(rng)];
  }
  return out;
}

}  // namespace

TEST_CASE("rouge_l hand-computed examples") {
  CHECK(rouge_l("stone bridge", "stone bridge") == doctest::Approx(1.0));
  CHECK(rouge_l("red blue green", "port ship gate") == doctest::Approx(0.0));
  // After article removal the candidate is "cat sat": P = 1, R = 2/3, F = 0.8.
  CHECK(rouge_l("the cat sat", "cat sat down") == doctest::Approx(0.8));
}

TEST_CASE("f1 hand-computed examples") {
  CHECK(f1("stone bridge", "stone bridge") == doctest::Approx(1.0));
  CHECK(f1("", "") == doctest::Approx(1.0));
  CHECK(f1("stone", "") == doctest::Approx(0.0));
  CHECK(f1("", "stone") == doctest::Approx(0.0));
  // P = 2/3 (both b occurrences hit), R = 1/2, F = 4/7.
  CHECK(f1("a b b", "b c") == doctest::Approx(4.0 / 7.0));
}

TEST_CASE("normalization lowercases, strips punctuation and articles") {
  CHECK(normalize_text("The RED, gate!", true) == "red gate");
  CHECK(normalize_text("The RED, gate!", false) == "the red gate");
  const auto toks = normalize_tokens("an Apple a day", true);
  REQUIRE(toks.size() == 2);
  CHECK(toks[0] == "apple");
  CHECK(toks[1] == "day");
}

TEST_CASE("metric properties over random pairs") {
  std::mt19937 rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const std::string a = random_text(rng, 12);
    const std::string b = random_text(rng, 12);
    const ScorePair s = score_pair(a, b);
    CHECK(s.rouge_l >= 0.0);
    CHECK(s.rouge_l <= 1.0);
    CHECK(s.f1 >= 0.0);
    CHECK(s.f1 <= 1.0);
    // Identity on non-empty strings.
    if (!normalize_tokens(a, true).empty()) CHECK(rouge_l(a, a) == doctest::Approx(1.0));
    if (!normalize_tokens(a, false).empty()) CHECK(f1(a, a) == doctest::Approx(1.0));
    // Normalization idempotence.
    CHECK(rouge_l(normalize_text(a, true), b) == doctest::Approx(rouge_l(a, b)));
    CHECK(f1(normalize_text(a, false), b) == doctest::Approx(f1(a, b)));
  }
}

TEST_CASE("f1 is candidate-order invariant; rouge_l is not") {
  CHECK(f1("stone gate wall", "wall gate stone") ==
        doctest::Approx(f1("wall stone gate", "wall gate stone")));
  // Same bag, different order: LCS length differs.
  const double ordered = rouge_l("stone gate wall", "stone gate wall");
  const double shuffled = rouge_l("wall gate stone", "stone gate wall");
  CHECK(ordered == doctest::Approx(1.0));
  CHECK(shuffled < ordered);
}
