#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fidkit/early_exit.hpp"
#include "fidkit/filtering.hpp"
#include "fidkit/model.hpp"
#include "fidkit/tokenizer.hpp"
#include "fidkit/trace.hpp"

namespace fidkit {

struct Passage {
  std::string title;
  std::string context;
  bool is_gold = false;
};

struct FidInput {
  std::string question;
  std::vector<Passage> passages;  // retriever rank order, preserved end-to-end
  std::optional<std::string> reference_answer;
};

// Concatenated per-passage encoder outputs.
struct EncodedBundle {
  Matrix states;                      // [T x d_model]
  std::vector<std::uint8_t> mask;     // [T]
  std::vector<int> token_to_passage;  // [T], 1-based rank, non-decreasing
};

struct DecodeSettings {
  int n_passages = 0;  // 0 = use every passage of the input
  int beams = 4;
  int max_new_tokens = 300;
  int min_new_tokens = 0;
  int max_tokens_per_passage = 235;
  std::optional<FilterConfig> filter;
  std::optional<ExitConfig> exit;

  // Profiling support: never emit EOS, so generation runs to max_new_tokens.
  bool suppress_eos = false;

  std::optional<TraceRequest> trace;

  void validate(int n_dec_layers) const;
};

struct GenerationResult {
  std::vector<int> token_ids;
  std::string text;
  double encoder_seconds = 0.0;
  std::vector<double> per_token_decoder_seconds;  // aligned with token_ids
  std::vector<int> exit_layer_per_token;          // aligned with token_ids
  std::optional<std::vector<int>> surviving_token_indices;  // original positions
  int beams_used = 0;
};

// Tokenizes "question: {q} title: {t} context: {c}" per passage (truncated to
// settings.max_tokens_per_passage), encodes each passage independently and
// concatenates the outputs in rank order.
EncodedBundle encode_passages(const Model& model, const Tokenizer& tokenizer,
                              const FidInput& input, const DecodeSettings& settings);

// Beam-search generation with length-normalized log-probability scoring.
// Filtering and early exit run exactly where configured; encoder time and
// each decoder step are measured separately on a monotonic clock. When
// `trace` is non-null and settings.trace is set, cross-attention rows
// (averaged over active beams) are recorded into it.
GenerationResult generate(const Model& model, const Tokenizer& tokenizer, const FidInput& input,
                          const DecodeSettings& settings, CrossAttnTrace* trace = nullptr);

struct DecoderShareRecord {
  int tokens = 0;
  int n_passages = 0;
  double decoder_share = 0.0;  // decoder step time / (encoder + decoder time)
};

// Forces generation to exactly each budgeted length (EOS suppressed) and
// reports the decoder's share of end-to-end time, median over `repeats`
// timed runs after `warmup` untimed ones.
std::vector<DecoderShareRecord> profile_decoder_share(const Model& model,
                                                      const Tokenizer& tokenizer,
                                                      const FidInput& input,
                                                      const DecodeSettings& settings,
                                                      const std::vector<int>& token_budgets,
                                                      int repeats = 5, int warmup = 2);

}  // namespace fidkit
