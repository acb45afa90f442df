#include "fidkit/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>

#include "fidkit/errors.hpp"

namespace fidkit {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Hypothesis {
  std::vector<int> tokens;
  double sum_logp = 0.0;

  double normalized_score() const {
    return tokens.empty() ? -std::numeric_limits<double>::infinity()
                          : sum_logp / static_cast<double>(tokens.size());
  }
};

}  // namespace

void DecodeSettings::validate(int n_dec_layers) const {
  if (beams < 1) throw_usage("beams must be >= 1, got " + std::to_string(beams));
  if (max_new_tokens < 1) throw_usage("max_new_tokens must be >= 1");
  if (min_new_tokens < 0 || min_new_tokens > max_new_tokens) {
    throw_usage("min_new_tokens must be in [0, max_new_tokens]");
  }
  if (max_tokens_per_passage < 1) throw_usage("max_tokens_per_passage must be >= 1");
  if (n_passages < 0) throw_usage("n_passages must be >= 0");
  if (filter) filter->validate(n_dec_layers);
  if (exit) exit->validate();
}

EncodedBundle encode_passages(const Model& model, const Tokenizer& tokenizer,
                              const FidInput& input, const DecodeSettings& settings) {
  const int available = static_cast<int>(input.passages.size());
  const int n = settings.n_passages == 0 ? available : settings.n_passages;
  if (n == 0) throw_data("encode_passages: input has no passages");
  if (n > available) {
    throw_data("encode_passages: requested " + std::to_string(n) + " passages, input has " +
               std::to_string(available));
  }

  EncodedBundle bundle;
  std::vector<Matrix> blocks;
  blocks.reserve(static_cast<std::size_t>(n));
  std::size_t total = 0;
  for (int p = 0; p < n; ++p) {
    const Passage& passage = input.passages[static_cast<std::size_t>(p)];
    const std::string text =
        "question: " + input.question + " title: " + passage.title + " context: " + passage.context;
    std::vector<int> ids = tokenizer.encode(text);
    if (ids.empty()) ids.push_back(Tokenizer::kPadId);
    if (ids.size() > static_cast<std::size_t>(settings.max_tokens_per_passage)) {
      ids.resize(static_cast<std::size_t>(settings.max_tokens_per_passage));
    }
    const std::vector<std::uint8_t> mask(ids.size(), 1);
    blocks.push_back(model.encode(ids, mask));
    total += ids.size();
    bundle.token_to_passage.insert(bundle.token_to_passage.end(), ids.size(), p + 1);
  }

  bundle.states = Matrix(total, static_cast<std::size_t>(model.config().d_model));
  std::size_t row = 0;
  for (const Matrix& block : blocks) {
    std::memcpy(bundle.states.row(row), block.data.data(), block.data.size() * sizeof(float));
    row += block.n_rows;
  }
  bundle.mask.assign(total, 1);
  return bundle;
}

namespace {

// Averages (or takes the elementwise minimum of) the captured cross rows
// over beams, producing one trace entry per captured layer.
std::vector<TraceEntry> aggregate_captures(
    const std::vector<std::vector<CapturedCross>>& captured, int t,
    const std::vector<int>& col_index, FilterConfig::BeamAggregate agg) {
  std::vector<TraceEntry> entries;
  if (captured.empty()) return entries;
  const std::size_t n_beams = captured.size();
  for (std::size_t li = 0; li < captured[0].size(); ++li) {
    TraceEntry e;
    e.t = t;
    e.layer = captured[0][li].layer;
    e.cols = col_index;
    e.probs = captured[0][li].probs;
    for (std::size_t b = 1; b < n_beams; ++b) {
      const Matrix& m = captured[b][li].probs;
      for (std::size_t i = 0; i < e.probs.data.size(); ++i) {
        if (agg == FilterConfig::BeamAggregate::Min) {
          e.probs.data[i] = std::min(e.probs.data[i], m.data[i]);
        } else {
          e.probs.data[i] += m.data[i];
        }
      }
    }
    if (agg == FilterConfig::BeamAggregate::Mean && n_beams > 1) {
      const float inv = 1.0f / static_cast<float>(n_beams);
      for (float& v : e.probs.data) v *= inv;
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace

GenerationResult generate(const Model& model, const Tokenizer& tokenizer, const FidInput& input,
                          const DecodeSettings& settings, CrossAttnTrace* trace) {
  const ModelConfig& cfg = model.config();
  settings.validate(cfg.n_dec_layers);

  GenerationResult result;
  result.beams_used = settings.beams;

  const auto enc_start = Clock::now();
  EncodedBundle bundle = encode_passages(model, tokenizer, input, settings);
  result.encoder_seconds = seconds_since(enc_start);

  if (trace && settings.trace) {
    trace->n_heads = cfg.n_heads;
    trace->token_to_passage = bundle.token_to_passage;
    trace->gold_rank.reset();
    const int n_used = bundle.token_to_passage.empty() ? 0 : bundle.token_to_passage.back();
    for (int p = 0; p < n_used; ++p) {
      if (input.passages[static_cast<std::size_t>(p)].is_gold) trace->gold_rank = p + 1;
    }
  }

  // Cross K/V projection happens lazily with the first decoder step, so its
  // cost lands on the decoder side of the ledger like it does at inference
  // time in cached implementations.
  CrossSource cross;
  bool cross_ready = false;

  const Tensor self_bias = model.build_decoder_self_bias(settings.max_new_tokens + 1);

  const bool filtering = settings.filter.has_value();
  bool filter_fired = false;
  const int trigger_token = filtering ? settings.filter->trigger_token : 0;
  const int trigger_layer = filtering ? settings.filter->trigger_layer : 0;

  std::vector<DecoderState> states;
  states.push_back(model.make_decoder_state());
  std::vector<Hypothesis> active(1);
  std::vector<int> last_tokens{Tokenizer::kPadId};

  std::vector<Hypothesis> finished;
  std::vector<double> step_seconds;
  std::vector<int> step_exit_layers;

  const int vocab = cfg.vocab_size;
  const int beams = settings.beams;

  for (int t = 1; t <= settings.max_new_tokens; ++t) {
    const auto step_start = Clock::now();

    if (!cross_ready) {
      cross = model.make_cross_source(std::move(bundle.states), std::move(bundle.mask),
                                      std::move(bundle.token_to_passage));
      cross_ready = true;
    }

    BeamStepOptions opts;
    opts.step_index = t;
    const bool capture_for_filter = filtering && !filter_fired && t == trigger_token;
    const bool capture_for_trace = trace && settings.trace && settings.trace->wants_token(t);
    if (capture_for_filter || capture_for_trace) {
      opts.capture_layers.assign(static_cast<std::size_t>(cfg.n_dec_layers), 0);
      if (capture_for_filter) {
        const int from = settings.filter->mean_over_layers ? 1 : trigger_layer;
        for (int l = from; l <= trigger_layer; ++l) {
          opts.capture_layers[static_cast<std::size_t>(l - 1)] = 1;
        }
      }
      if (capture_for_trace) {
        for (int l = 1; l <= cfg.n_dec_layers; ++l) {
          if (settings.trace->wants_layer(l)) {
            opts.capture_layers[static_cast<std::size_t>(l - 1)] = 1;
          }
        }
      }
    }
    if (settings.exit) {
      opts.exit = &*settings.exit;
      // The trigger layer must be reached on the trigger step; exits below it
      // are deferred for that one step.
      opts.exit_min_layer = capture_for_filter ? trigger_layer : 1;
    }

    BeamStepResult step =
        model.step_beams(states, last_tokens, cross, self_bias, opts);
    step_exit_layers.push_back(step.exit.layer);

    // Trace recording, beam-averaged.
    if (capture_for_trace) {
      std::vector<TraceEntry> entries = aggregate_captures(
          step.captured, t, cross.orig_index, FilterConfig::BeamAggregate::Mean);
      for (TraceEntry& e : entries) {
        if (!settings.trace->wants_layer(e.layer)) continue;
        const std::size_t entry_bytes =
            e.probs.numel() * sizeof(float) + e.cols.size() * sizeof(int);
        if (trace->bytes() + entry_bytes > settings.trace->max_bytes) {
          throw_data("trace memory budget exceeded at token " + std::to_string(t) + ", layer " +
                     std::to_string(e.layer) + "; raise the budget or subsample layers/tokens");
        }
        trace->entries.push_back(std::move(e));
      }
    }

    // Candidate expansion.
    const bool allow_eos = !settings.suppress_eos && t > settings.min_new_tokens;
    struct Candidate {
      double score;
      int beam;
      int token;
    };
    std::vector<Candidate> candidates;
    candidates.reserve(active.size() * static_cast<std::size_t>(vocab));
    for (std::size_t b = 0; b < active.size(); ++b) {
      const std::vector<double> logp = log_softmax(step.logits[b]);
      for (int vtok = 0; vtok < vocab; ++vtok) {
        if (vtok == Tokenizer::kEosId && !allow_eos) continue;
        candidates.push_back({active[b].sum_logp + logp[static_cast<std::size_t>(vtok)],
                              static_cast<int>(b), vtok});
      }
    }
    const std::size_t want = std::min(candidates.size(), static_cast<std::size_t>(2 * beams));
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(want),
                      candidates.end(), [](const Candidate& a, const Candidate& b) {
                        if (a.score != b.score) return a.score > b.score;
                        if (a.beam != b.beam) return a.beam < b.beam;
                        return a.token < b.token;
                      });

    std::vector<Hypothesis> next_active;
    std::vector<DecoderState> next_states;
    std::vector<int> next_tokens;
    for (std::size_t c = 0; c < want && static_cast<int>(next_active.size()) < beams; ++c) {
      const Candidate& cand = candidates[c];
      Hypothesis hyp = active[static_cast<std::size_t>(cand.beam)];
      hyp.tokens.push_back(cand.token);
      hyp.sum_logp = cand.score;
      if (cand.token == Tokenizer::kEosId) {
        if (static_cast<int>(finished.size()) < beams) finished.push_back(std::move(hyp));
        continue;
      }
      next_active.push_back(std::move(hyp));
      next_states.push_back(states[static_cast<std::size_t>(cand.beam)]);
      next_tokens.push_back(cand.token);
    }

    // Token filtering fires once, after the trigger step completes; all
    // subsequent steps see only the kept source positions.
    if (capture_for_filter) {
      const FilterConfig& fc = *settings.filter;
      CrossAttnTrace filter_trace;
      filter_trace.n_heads = cfg.n_heads;
      filter_trace.entries =
          aggregate_captures(step.captured, t, cross.orig_index, fc.beam_aggregate);
      const Matrix* values_ptr = nullptr;
      if (fc.value_norm) {
        values_ptr = &cross.v[static_cast<std::size_t>(trigger_layer - 1)];
      }
      const SalienceScores scores =
          score_tokens(filter_trace, t, trigger_layer, fc, values_ptr);
      const std::vector<int> keep = select_top(scores, fc.p_percent);
      std::vector<int> surviving;
      surviving.reserve(keep.size());
      for (int idx : keep) surviving.push_back(cross.orig_index[static_cast<std::size_t>(idx)]);
      prune_cross_source(cross, keep);
      result.surviving_token_indices = std::move(surviving);
      filter_fired = true;
    }

    step_seconds.push_back(seconds_since(step_start));

    active = std::move(next_active);
    states = std::move(next_states);
    last_tokens = std::move(next_tokens);

    if (static_cast<int>(finished.size()) >= beams || active.empty()) break;
  }

  // Winner: best length-normalized score among finished hypotheses, falling
  // back to still-active ones when nothing finished.
  const Hypothesis* best = nullptr;
  for (const Hypothesis& h : finished) {
    if (!best || h.normalized_score() > best->normalized_score()) best = &h;
  }
  if (!best) {
    for (const Hypothesis& h : active) {
      if (!best || h.normalized_score() > best->normalized_score()) best = &h;
    }
  }
  if (!best) throw_internal("generate: no hypothesis produced");

  result.token_ids = best->tokens;
  result.text = tokenizer.decode(result.token_ids);
  const std::size_t n_tokens = result.token_ids.size();
  result.per_token_decoder_seconds.assign(step_seconds.begin(),
                                          step_seconds.begin() + static_cast<std::ptrdiff_t>(n_tokens));
  result.exit_layer_per_token.assign(step_exit_layers.begin(),
                                     step_exit_layers.begin() + static_cast<std::ptrdiff_t>(n_tokens));
  return result;
}

std::vector<DecoderShareRecord> profile_decoder_share(
    const Model& model, const Tokenizer& tokenizer, const FidInput& input,
    const DecodeSettings& settings, const std::vector<int>& token_budgets, int repeats,
    int warmup) {
  if (token_budgets.empty()) throw_usage("profile: token budget list is empty");
  if (repeats < 1) throw_usage("profile: repeats must be >= 1");

  std::vector<DecoderShareRecord> records;
  for (int budget : token_budgets) {
    if (budget < 1) throw_usage("profile: token budgets must be >= 1");
    DecodeSettings s = settings;
    s.suppress_eos = true;
    s.max_new_tokens = budget;
    s.min_new_tokens = 0;
    s.trace.reset();

    for (int w = 0; w < warmup; ++w) {
      (void)generate(model, tokenizer, input, s);
    }
    std::vector<double> shares;
    shares.reserve(static_cast<std::size_t>(repeats));
    for (int r = 0; r < repeats; ++r) {
      const GenerationResult res = generate(model, tokenizer, input, s);
      double dec = 0.0;
      for (double d : res.per_token_decoder_seconds) dec += d;
      shares.push_back(dec / (res.encoder_seconds + dec));
    }
    std::sort(shares.begin(), shares.end());
    const double median = shares.size() % 2 == 1
                              ? shares[shares.size() / 2]
                              : 0.5 * (shares[shares.size() / 2 - 1] + shares[shares.size() / 2]);

    const int n = s.n_passages == 0 ? static_cast<int>(input.passages.size()) : s.n_passages;
    records.push_back({budget, n, median});
  }
  return records;
}

}  // namespace fidkit
