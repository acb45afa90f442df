#include <random>

#include "data/reference_values.hpp"
#include "doctest.h"
#include "fidkit/model.hpp"
#include "test_support.hpp"

using namespace fidkit;

namespace {

CrossSource cross_from_ids(const Model& model, const std::vector<int>& ids,
                           const std::vector<std::uint8_t>& mask) {
  Matrix enc = model.encode(ids, mask);
  return model.make_cross_source(std::move(enc), mask,
                                 std::vector<int>(ids.size(), 1));
}

}  // namespace

TEST_CASE("encode is deterministic bit for bit") {
  const Model model = testsup::make_model(testsup::tiny_config(), 42);
  std::mt19937 rng(7);
  const auto ids = testsup::random_ids(rng, 12, model.config().vocab_size);
  const std::vector<std::uint8_t> mask(ids.size(), 1);
  const Matrix a = model.encode(ids, mask);
  const Matrix b = model.encode(ids, mask);
  CHECK(a.data == b.data);
}

TEST_CASE("appending a fully-masked pad token leaves other outputs unchanged") {
  const Model model = testsup::make_model(testsup::tiny_config(), 42);
  std::mt19937 rng(8);
  const auto ids = testsup::random_ids(rng, 10, model.config().vocab_size);
  const std::vector<std::uint8_t> mask(ids.size(), 1);
  const Matrix base = model.encode(ids, mask);

  auto padded = ids;
  padded.push_back(0);
  auto padded_mask = mask;
  padded_mask.push_back(0);
  const Matrix ext = model.encode(padded, padded_mask);

  for (std::size_t i = 0; i < base.n_rows; ++i) {
    for (std::size_t j = 0; j < base.n_cols; ++j) {
      CHECK(std::abs(base.at(i, j) - ext.at(i, j)) < 1e-5f);
    }
  }
}

TEST_CASE("mask soundness: content at masked positions never leaks") {
  const Model model = testsup::make_model(testsup::tiny_config(), 43);
  std::mt19937 rng(9);
  auto ids = testsup::random_ids(rng, 9, model.config().vocab_size);
  std::vector<std::uint8_t> mask(ids.size(), 1);
  mask[2] = 0;
  mask[7] = 0;
  const Matrix base = model.encode(ids, mask);
  ids[2] = (ids[2] + 5) % model.config().vocab_size;
  ids[7] = (ids[7] + 11) % model.config().vocab_size;
  const Matrix changed = model.encode(ids, mask);
  for (std::size_t i = 0; i < base.n_rows; ++i) {
    if (i == 2 || i == 7) continue;
    for (std::size_t j = 0; j < base.n_cols; ++j) {
      CHECK(std::abs(base.at(i, j) - changed.at(i, j)) <= 1e-6f);
    }
  }
}

TEST_CASE("encode rejects out-of-vocab ids and length mismatches") {
  const Model model = testsup::make_model(testsup::tiny_config(), 44);
  const std::vector<int> bad = {3, 4, 99};
  const std::vector<std::uint8_t> mask(3, 1);
  CHECK_THROWS_AS(model.encode(bad, mask), Error);
  const std::vector<int> ok = {3, 4, 5};
  const std::vector<std::uint8_t> short_mask(2, 1);
  CHECK_THROWS_AS(model.encode(ok, short_mask), Error);
}

// The frozen values come from an independent numpy implementation of the same
// arithmetic (tests/oracle/reference_model.py) run against containers built
// with these exact configs and seeds.
TEST_CASE("encoder and decoder match the frozen external reference") {
  const std::vector<int> enc_ids(std::begin(refdata::kEncIds), std::end(refdata::kEncIds));
  std::vector<std::uint8_t> enc_mask;
  for (int m : refdata::kEncMask) enc_mask.push_back(static_cast<std::uint8_t>(m));
  const std::vector<int> prefix(std::begin(refdata::kDecPrefix), std::end(refdata::kDecPrefix));

  struct Case {
    std::uint64_t seed;
    bool untied;
    const float* enc_expect;
    const float* logits_expect;
  };
  const Case cases[] = {
      {1234, true, refdata::kEncoderStatesUntied, refdata::kDecoderLogitsUntied},
      {4321, false, refdata::kEncoderStatesTied, refdata::kDecoderLogitsTied},
  };

  for (const Case& c : cases) {
    CAPTURE(c.seed);
    const Model model = testsup::make_model(testsup::tiny_config(), c.seed, c.untied);
    const Matrix enc = model.encode(enc_ids, enc_mask);
    for (std::size_t i = 0; i < enc.data.size(); ++i) {
      REQUIRE(std::abs(enc.data[i] - c.enc_expect[i]) < 1e-4f);
    }

    CrossSource cross = model.make_cross_source(enc, enc_mask,
                                                std::vector<int>(enc_ids.size(), 1));
    DecoderState state = model.make_decoder_state();
    const Tensor bias = model.build_decoder_self_bias(static_cast<int>(prefix.size()) + 1);
    const std::size_t vocab = static_cast<std::size_t>(model.config().vocab_size);
    for (std::size_t step = 0; step < prefix.size(); ++step) {
      const Model::StepResult r = model.decode_step(state, prefix[step], cross, bias);
      for (std::size_t v = 0; v < vocab; ++v) {
        REQUIRE(std::abs(r.logits[v] - c.logits_expect[step * vocab + v]) < 1e-4f);
      }
    }
  }
}

TEST_CASE("decode_step returns vocab-sized logits and unit-sum attention rows") {
  const Model model = testsup::make_model(testsup::tiny_config(), 45);
  std::mt19937 rng(10);
  const auto ids = testsup::random_ids(rng, 14, model.config().vocab_size);
  std::vector<std::uint8_t> mask(ids.size(), 1);
  mask[5] = 0;
  CrossSource cross = cross_from_ids(model, ids, mask);
  DecoderState state = model.make_decoder_state();
  const Tensor bias = model.build_decoder_self_bias(4);

  BeamStepOptions opts;
  opts.capture_layers.assign(static_cast<std::size_t>(model.config().n_dec_layers), 1);
  const Model::StepResult r = model.decode_step(state, 0, cross, bias, opts);
  CHECK(r.logits.size() == static_cast<std::size_t>(model.config().vocab_size));
  REQUIRE(r.captured.size() == static_cast<std::size_t>(model.config().n_dec_layers));
  for (const CapturedCross& cap : r.captured) {
    for (std::size_t h = 0; h < cap.probs.n_rows; ++h) {
      float sum = 0.0f;
      for (std::size_t s = 0; s < cap.probs.n_cols; ++s) sum += cap.probs.at(h, s);
      CHECK(std::abs(sum - 1.0f) < 1e-5f);
      CHECK(cap.probs.at(h, 5) == 0.0f);  // masked source position
    }
  }
}

TEST_CASE("cached incremental decode equals uncached full recomputation") {
  for (std::uint64_t seed : {91u, 92u, 93u}) {
    CAPTURE(seed);
    const Model model = testsup::make_model(testsup::tiny_config(), seed, seed % 2 == 0);
    std::mt19937 rng(static_cast<unsigned>(seed));
    const auto src_ids = testsup::random_ids(rng, 11, model.config().vocab_size);
    const std::vector<std::uint8_t> src_mask(src_ids.size(), 1);
    const Matrix enc = model.encode(src_ids, src_mask);

    auto prefix = testsup::random_ids(rng, 8, model.config().vocab_size);
    prefix[0] = 0;

    const Matrix expected = testsup::reference_decoder_logits(model, prefix, enc, src_mask);

    CrossSource cross = model.make_cross_source(enc, src_mask,
                                                std::vector<int>(src_ids.size(), 1));
    DecoderState state = model.make_decoder_state();
    const Tensor bias = model.build_decoder_self_bias(static_cast<int>(prefix.size()) + 1);
    for (std::size_t step = 0; step < prefix.size(); ++step) {
      const Model::StepResult r = model.decode_step(state, prefix[step], cross, bias);
      for (std::size_t v = 0; v < expected.n_cols; ++v) {
        REQUIRE(std::abs(r.logits[v] - expected.at(step, v)) < 1e-5f);
      }
    }
  }
}

TEST_CASE("relative position buckets are symmetric-free and bounded") {
  for (int rel = -40; rel <= 40; ++rel) {
    const int b = relative_position_bucket(rel, true, 8);
    CHECK(b >= 0);
    CHECK(b < 8);
    const int c = relative_position_bucket(rel, false, 8);
    CHECK(c >= 0);
    CHECK(c < 8);
  }
  CHECK(relative_position_bucket(0, false, 8) == 0);
  // Future positions collapse to bucket 0 in the causal mode.
  CHECK(relative_position_bucket(3, false, 8) == 0);
}
