// fidkit: desk-scale Fusion-in-Decoder inference and benchmarking tool.
//
// Subcommands: make-toy-model, generate, profile, analyze, sweep, score.
// Flags can be supplied via FIDKIT_* environment variables (one per flag,
// e.g. FIDKIT_LOG_LEVEL); explicit flags win.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fidkit/analysis.hpp"
#include "fidkit/dataset.hpp"
#include "fidkit/errors.hpp"
#include "fidkit/log.hpp"
#include "fidkit/manifest.hpp"
#include "fidkit/metrics.hpp"
#include "fidkit/model.hpp"
#include "fidkit/runtime.hpp"
#include "fidkit/sweep.hpp"
#include "fidkit/tokenizer.hpp"
#include "fidkit/toy_model.hpp"
#include "fidkit/version.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int exit_code_for(fidkit::Error::Kind kind) {
  switch (kind) {
    case fidkit::Error::Kind::Usage: return 2;
    case fidkit::Error::Kind::Io: return 3;
    case fidkit::Error::Kind::Data: return 4;
    case fidkit::Error::Kind::Internal: return 1;
  }
  return 1;
}

struct ModelPaths {
  std::string weights;
  std::string config;
  std::string vocab;
};

ModelPaths resolve_model_dir(const std::string& model_dir, const std::string& vocab_override) {
  ModelPaths p;
  p.weights = (fs::path(model_dir) / "model.fidw").string();
  p.config = (fs::path(model_dir) / "model.json").string();
  p.vocab = vocab_override.empty() ? (fs::path(model_dir) / "vocab.txt").string()
                                   : vocab_override;
  return p;
}

struct LoadedModel {
  fidkit::Model model;
  fidkit::Tokenizer tokenizer;
  ModelPaths paths;
};

LoadedModel load_model(const std::string& model_dir, const std::string& vocab_override) {
  const ModelPaths paths = resolve_model_dir(model_dir, vocab_override);
  const fidkit::ModelConfig config = fidkit::ModelConfig::load(paths.config);
  fidkit::ModelWeights weights = fidkit::load_weights(paths.weights, config);
  fidkit::Tokenizer tokenizer = fidkit::Tokenizer::load(paths.vocab);
  return {fidkit::Model(std::move(weights)), std::move(tokenizer), paths};
}

void ensure_out_dir(const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fidkit::throw_io("cannot create output directory '" + out_dir + "': " + ec.message());
}

void write_manifest(const std::string& out_dir, const std::string& command,
                    const json& settings, const std::string& weight_file,
                    const std::string& dataset_file, const std::string& started_at) {
  fidkit::RunManifest m;
  m.command = command;
  m.settings_json = settings.dump();
  m.weight_file = weight_file;
  if (!weight_file.empty()) m.weight_sha256 = fidkit::sha256_file(weight_file);
  m.dataset_file = dataset_file;
  if (!dataset_file.empty()) m.dataset_sha256 = fidkit::sha256_file(dataset_file);
  m.started_at = started_at;
  m.finished_at = fidkit::iso8601_utc_now();
  m.tool_version = fidkit::kVersion;
  m.write(out_dir);
}

// Decode flags shared by generate/profile/analyze/sweep.
struct DecodeFlags {
  int n_passages = 0;
  int beams = 4;
  int max_new_tokens = 300;
  int min_new_tokens = 0;
  int max_passage_tokens = 235;

  double filter_p = 0.0;  // 0 = filtering off
  int filter_token = 1;
  int filter_layer = 1;
  bool filter_value_norm = false;
  bool filter_mean_layers = false;
  std::string filter_beam_agg = "mean";

  double exit_threshold = -1.0;  // < 0 = early exit off
  double exit_coef = 0.9;
  int exit_decay = 4;

  void add_common(CLI::App* cmd) {
    cmd->add_option("--passages", n_passages, "Passages per query (0 = all available)");
    cmd->add_option("--beams", beams, "Beam count")->check(CLI::PositiveNumber);
    cmd->add_option("--max-new-tokens", max_new_tokens, "Generation length cap")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--min-new-tokens", min_new_tokens, "Minimum answer length (EOS masked below)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--max-passage-tokens", max_passage_tokens,
                    "Per-passage token truncation length")
        ->check(CLI::PositiveNumber);
  }

  void add_filter(CLI::App* cmd) {
    cmd->add_option("--filter-p", filter_p,
                    "Token filtering: keep top p percent of input tokens, in (0, 100]");
    cmd->add_option("--filter-token", filter_token, "Token filtering trigger token index (t*)");
    cmd->add_option("--filter-layer", filter_layer, "Token filtering trigger decoder layer (l*)");
    cmd->add_flag("--filter-value-norm", filter_value_norm,
                  "Scale salience scores by L2 norms of the value rows");
    cmd->add_flag("--filter-mean-layers", filter_mean_layers,
                  "Average attention over layers 1..l* before head-mean");
    cmd->add_option("--filter-beam-agg", filter_beam_agg,
                    "Beam aggregation for salience scores: mean|min")
        ->check(CLI::IsMember({"mean", "min"}));
  }

  void add_exit(CLI::App* cmd) {
    cmd->add_option("--exit-threshold", exit_threshold,
                    "Early exit base confidence threshold in [0, 1]; unset disables early exit");
    cmd->add_option("--exit-coef", exit_coef, "Early exit threshold coefficient in (0, 1]");
    cmd->add_option("--exit-decay", exit_decay, "Early exit threshold decay (positive integer)");
  }

  fidkit::DecodeSettings to_settings(bool filter_requested, bool exit_requested) const {
    fidkit::DecodeSettings s;
    s.n_passages = n_passages;
    s.beams = beams;
    s.max_new_tokens = max_new_tokens;
    s.min_new_tokens = min_new_tokens;
    s.max_tokens_per_passage = max_passage_tokens;
    if (filter_requested) {
      fidkit::FilterConfig fc;
      fc.p_percent = filter_p;
      fc.trigger_token = filter_token;
      fc.trigger_layer = filter_layer;
      fc.value_norm = filter_value_norm;
      fc.mean_over_layers = filter_mean_layers;
      fc.beam_aggregate = filter_beam_agg == "min" ? fidkit::FilterConfig::BeamAggregate::Min
                                                   : fidkit::FilterConfig::BeamAggregate::Mean;
      s.filter = fc;
    }
    if (exit_requested) {
      fidkit::ExitConfig ec;
      ec.base_threshold = exit_threshold;
      ec.threshold_coef = exit_coef;
      ec.threshold_decay = exit_decay;
      s.exit = ec;
    }
    return s;
  }
};

// ---------------------------------------------------------------------------

int cmd_make_toy_model(const fidkit::ModelConfig& config, std::uint64_t seed, bool untied,
                       const std::string& out_dir) {
  const std::string started = fidkit::iso8601_utc_now();
  ensure_out_dir(out_dir);
  config.validate();

  const std::string weights_path = (fs::path(out_dir) / "model.fidw").string();
  fidkit::write_toy_model(config, seed, weights_path, untied);
  fidkit::ModelConfig cfg = config;
  cfg.tied_lm_head = !untied;
  cfg.save((fs::path(out_dir) / "model.json").string());
  fidkit::write_toy_vocab(config.vocab_size, (fs::path(out_dir) / "vocab.txt").string());

  json settings = json::parse(cfg.to_json());
  settings["seed"] = seed;
  write_manifest(out_dir, "make-toy-model", settings, weights_path, "", started);
  fidkit::log_info("wrote toy model", json{{"out", out_dir}, {"seed", seed}}.dump());
  return 0;
}

int cmd_generate(const std::string& model_dir, const std::string& vocab, const std::string& data,
                 const std::string& out_dir, const DecodeFlags& flags, bool filter_on,
                 bool exit_on, bool gold_first) {
  const std::string started = fidkit::iso8601_utc_now();
  LoadedModel lm = load_model(model_dir, vocab);
  const fidkit::DecodeSettings settings = flags.to_settings(filter_on, exit_on);
  settings.validate(lm.model.config().n_dec_layers);
  const std::vector<fidkit::FidInput> dataset = fidkit::load_dataset(data, gold_first);

  ensure_out_dir(out_dir);
  const std::string results_path = (fs::path(out_dir) / "results.jsonl").string();
  std::ofstream(results_path, std::ios::trunc);  // start fresh

  for (std::size_t q = 0; q < dataset.size(); ++q) {
    const fidkit::GenerationResult result =
        fidkit::generate(lm.model, lm.tokenizer, dataset[q], settings);
    fidkit::append_jsonl(results_path, fidkit::generation_result_to_json(result));
    fidkit::log_info("generated",
                     json{{"query", q}, {"tokens", result.token_ids.size()}}.dump());
  }

  write_manifest(out_dir, "generate", json::parse(fidkit::settings_to_json(settings)),
                 lm.paths.weights, data, started);
  return 0;
}

int cmd_profile(const std::string& model_dir, const std::string& vocab, const std::string& data,
                const std::string& out_dir, const DecodeFlags& flags,
                std::vector<int> passage_counts, std::vector<int> budgets, int repeats,
                int warmup, std::size_t query_index) {
  const std::string started = fidkit::iso8601_utc_now();
  LoadedModel lm = load_model(model_dir, vocab);
  const std::vector<fidkit::FidInput> dataset = fidkit::load_dataset(data);
  if (query_index >= dataset.size()) {
    fidkit::throw_usage("--query-index out of range (dataset has " +
                        std::to_string(dataset.size()) + " queries)");
  }
  if (budgets.empty()) fidkit::throw_usage("--budgets must not be empty");
  if (passage_counts.empty()) passage_counts.push_back(flags.n_passages);

  ensure_out_dir(out_dir);
  const std::string profile_path = (fs::path(out_dir) / "profile.jsonl").string();
  std::ofstream(profile_path, std::ios::trunc);

  for (int np : passage_counts) {
    fidkit::DecodeSettings settings = flags.to_settings(false, false);
    settings.n_passages = np;
    const auto records = fidkit::profile_decoder_share(lm.model, lm.tokenizer,
                                                       dataset[query_index], settings, budgets,
                                                       repeats, warmup);
    for (const auto& r : records) {
      fidkit::append_jsonl(profile_path, json{{"tokens", r.tokens},
                                              {"n_passages", r.n_passages},
                                              {"decoder_share", r.decoder_share}}
                                             .dump());
      fidkit::log_info("profiled", json{{"tokens", r.tokens},
                                        {"n_passages", r.n_passages},
                                        {"decoder_share", r.decoder_share}}
                                       .dump());
    }
  }

  json settings_json = json::parse(fidkit::settings_to_json(flags.to_settings(false, false)));
  settings_json["budgets"] = budgets;
  settings_json["passage_counts"] = passage_counts;
  settings_json["repeats"] = repeats;
  settings_json["warmup"] = warmup;
  write_manifest(out_dir, "profile", settings_json, lm.paths.weights, data, started);
  return 0;
}

int cmd_analyze(const std::string& model_dir, const std::string& vocab, const std::string& data,
                const std::string& out_dir, const DecodeFlags& flags,
                std::vector<double> p_values, const std::string& layers_arg, int dist_layer,
                std::size_t max_queries, bool save_traces) {
  const std::string started = fidkit::iso8601_utc_now();
  LoadedModel lm = load_model(model_dir, vocab);
  const int n_layers = lm.model.config().n_dec_layers;

  fidkit::TraceRequest request;
  if (layers_arg != "all") {
    std::stringstream ss(layers_arg);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (!part.empty()) request.layers.push_back(std::stoi(part));
    }
    for (int l : request.layers) {
      if (l < 1 || l > n_layers) {
        fidkit::throw_usage("--layers entry " + std::to_string(l) + " outside [1, " +
                            std::to_string(n_layers) + "]");
      }
    }
  }

  // Gold passage moves to rank 1 for analysis runs.
  std::vector<fidkit::FidInput> dataset = fidkit::load_dataset(data, /*gold_first=*/true);
  if (max_queries > 0 && dataset.size() > max_queries) dataset.resize(max_queries);
  ensure_out_dir(out_dir);

  fidkit::DecodeSettings settings = flags.to_settings(false, false);
  settings.trace = request;

  // Mean over queries of per-(layer, token) gold ratios and per-(passage,
  // token) shares, one curve per requested p.
  struct GoldAccum {
    std::map<std::pair<int, int>, std::pair<double, int>> cells;  // (l,t) -> (sum, n)
  };
  struct DistAccum {
    std::map<std::pair<int, int>, std::pair<double, int>> cells;  // (rank,t) -> (sum, n)
  };
  std::map<double, GoldAccum> gold_acc;
  std::map<double, DistAccum> dist_acc;

  std::size_t analyzed = 0;
  for (std::size_t q = 0; q < dataset.size(); ++q) {
    bool has_gold = false;
    for (const auto& p : dataset[q].passages) has_gold |= p.is_gold;
    if (!has_gold) {
      fidkit::log_warn("skipping query without gold passage", json{{"query", q}}.dump());
      continue;
    }
    fidkit::CrossAttnTrace trace;
    (void)fidkit::generate(lm.model, lm.tokenizer, dataset[q], settings, &trace);
    if (!trace.gold_rank) continue;
    if (save_traces) {
      fidkit::save_trace((fs::path(out_dir) / ("trace_q" + std::to_string(q) + ".fidw")).string(),
                         trace);
    }
    for (double p : p_values) {
      const fidkit::GoldRatioCurve curve = fidkit::gold_ratio(trace, p, *trace.gold_rank);
      for (const auto& pt : curve.points) {
        auto& cell = gold_acc[p].cells[{pt.layer, pt.token_index}];
        cell.first += pt.value;
        cell.second += 1;
      }
      const fidkit::PassageDistribution dist =
          fidkit::passage_distribution(trace, p, dist_layer);
      for (const auto& pt : dist.points) {
        auto& cell = dist_acc[p].cells[{pt.passage_rank, pt.token_index}];
        cell.first += pt.value;
        cell.second += 1;
      }
    }
    ++analyzed;
  }
  if (analyzed == 0) fidkit::throw_data("analyze: no query with a gold passage");

  std::vector<fidkit::GoldRatioCurve> gold_curves;
  std::vector<fidkit::PassageDistribution> distributions;
  for (double p : p_values) {
    fidkit::GoldRatioCurve curve;
    curve.p_percent = p;
    curve.gold_rank = 1;
    for (const auto& [key, cell] : gold_acc[p].cells) {
      curve.points.push_back({key.first, key.second, cell.first / cell.second});
    }
    gold_curves.push_back(std::move(curve));

    fidkit::PassageDistribution dist;
    dist.p_percent = p;
    dist.layer = dist_layer;
    for (const auto& [key, cell] : dist_acc[p].cells) {
      dist.points.push_back({key.first, key.second, cell.first / cell.second});
      dist.n_passages = std::max(dist.n_passages, key.first);
    }
    distributions.push_back(std::move(dist));
  }

  const auto written = fidkit::emit_analysis(gold_curves, distributions, out_dir);
  for (const auto& f : written) fidkit::log_info("wrote", json{{"file", f}}.dump());

  json settings_json = json::parse(fidkit::settings_to_json(settings));
  settings_json["p"] = p_values;
  settings_json["layers"] = layers_arg;
  settings_json["dist_layer"] = dist_layer;
  settings_json["queries_analyzed"] = analyzed;
  write_manifest(out_dir, "analyze", settings_json, lm.paths.weights, data, started);
  return 0;
}

int cmd_sweep(const std::string& model_dir, const std::string& vocab, const std::string& data,
              const std::string& grid_path, const std::string& out_dir, const DecodeFlags& flags,
              const std::string& method_name, int repeats, int warmup, int jobs,
              int n_intervals) {
  const std::string started = fidkit::iso8601_utc_now();
  LoadedModel lm = load_model(model_dir, vocab);
  const int n_layers = lm.model.config().n_dec_layers;
  const fidkit::SweepMethod method = fidkit::sweep_method_from_string(method_name);

  const fidkit::SweepGrid grid =
      grid_path.empty() ? fidkit::SweepGrid::defaults(n_layers)
                        : fidkit::SweepGrid::from_json_file(grid_path, n_layers);
  const std::vector<fidkit::FidInput> dataset = fidkit::load_dataset(data);
  const std::vector<fidkit::DecodeSettings> combos =
      fidkit::enumerate_grid(grid, method, flags.to_settings(false, false));

  ensure_out_dir(out_dir);
  fidkit::SweepOptions options;
  options.repeats = repeats;
  options.warmup = warmup;
  options.jobs = jobs;
  options.results_path = (fs::path(out_dir) / "points.jsonl").string();
  options.progress = [&](std::size_t finished, std::size_t total) {
    fidkit::log_info("sweep progress",
                     json{{"done", finished}, {"total", total}}.dump());
  };

  const std::vector<fidkit::SweepPoint> points =
      fidkit::run_sweep(lm.model, lm.tokenizer, dataset, combos, options);

  const fidkit::MaxCurve curve = fidkit::build_max_curve(points, n_intervals);
  fidkit::write_curve_csv(curve, (fs::path(out_dir) / "curve.csv").string());

  const std::string best_path = (fs::path(out_dir) / "best_settings.jsonl").string();
  std::ofstream(best_path, std::ios::trunc);
  for (const fidkit::DecodeSettings& s : fidkit::best_settings_per_interval(curve)) {
    fidkit::append_jsonl(best_path, fidkit::settings_to_json(s));
  }

  json settings_json = json::parse(fidkit::settings_to_json(flags.to_settings(false, false)));
  settings_json["method"] = method_name;
  settings_json["grid"] = grid_path;
  settings_json["repeats"] = repeats;
  settings_json["combinations"] = combos.size();
  settings_json["intervals"] = n_intervals;
  write_manifest(out_dir, "sweep", settings_json, lm.paths.weights, data, started);
  return 0;
}

int cmd_score(const std::string& pred_path, const std::string& ref_path,
              const std::string& out_dir) {
  const std::string started = fidkit::iso8601_utc_now();
  auto read_texts = [](const std::string& path) {
    std::ifstream in(path);
    if (!in) fidkit::throw_io("cannot open '" + path + "'");
    std::vector<std::string> texts;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& e) {
        fidkit::throw_data(path + ":" + std::to_string(line_no) + ": malformed JSON: " +
                           e.what());
      }
      if (j.contains("text")) {
        texts.push_back(j.at("text").get<std::string>());
      } else if (j.contains("answer")) {
        texts.push_back(j.at("answer").get<std::string>());
      } else {
        fidkit::throw_data(path + ":" + std::to_string(line_no) +
                           ": expected a 'text' or 'answer' field");
      }
    }
    return texts;
  };

  const std::vector<std::string> pred = read_texts(pred_path);
  const std::vector<std::string> ref = read_texts(ref_path);
  if (pred.size() != ref.size()) {
    fidkit::throw_data("score: '" + pred_path + "' has " + std::to_string(pred.size()) +
                       " rows, '" + ref_path + "' has " + std::to_string(ref.size()));
  }
  if (pred.empty()) fidkit::throw_data("score: no rows to score");

  double rouge_sum = 0.0, f1_sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const fidkit::ScorePair s = fidkit::score_pair(pred[i], ref[i]);
    rouge_sum += s.rouge_l;
    f1_sum += s.f1;
  }
  const json result = {{"n", pred.size()},
                       {"rouge_l", rouge_sum / pred.size()},
                       {"f1", f1_sum / pred.size()}};
  std::cout << result.dump(2) << "\n";

  if (!out_dir.empty()) {
    ensure_out_dir(out_dir);
    std::ofstream out((fs::path(out_dir) / "scores.json").string(), std::ios::trunc);
    out << result.dump(2) << "\n";
    write_manifest(out_dir, "score", json{{"pred", pred_path}, {"ref", ref_path}}, "", pred_path,
                   started);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fusion-in-Decoder inference engine with cross-attention token filtering, "
               "confidence-based decoder early exit, and a latency/quality sweep harness"};
  app.require_subcommand(1);

  std::string log_level = "info";
  app.add_option("--log-level", log_level, "Log level: debug|info|warn|error")
      ->envname("FIDKIT_LOG_LEVEL");

  // --- make-toy-model ------------------------------------------------------
  auto* mk = app.add_subcommand("make-toy-model", "Write seeded random weights, config and vocab");
  fidkit::ModelConfig toy_cfg;
  toy_cfg.d_model = 64;
  toy_cfg.n_heads = 4;
  toy_cfg.n_enc_layers = 4;
  toy_cfg.n_dec_layers = 4;
  toy_cfg.d_ff = 128;
  toy_cfg.d_kv = 16;
  toy_cfg.vocab_size = 512;
  toy_cfg.rel_pos_buckets = 32;
  std::uint64_t seed = 0;
  bool tied = false;
  std::string mk_out;
  mk->add_option("--d-model", toy_cfg.d_model, "Model width")->check(CLI::PositiveNumber);
  mk->add_option("--heads", toy_cfg.n_heads, "Attention heads")->check(CLI::PositiveNumber);
  mk->add_option("--enc-layers", toy_cfg.n_enc_layers, "Encoder layers")->check(CLI::PositiveNumber);
  mk->add_option("--dec-layers", toy_cfg.n_dec_layers, "Decoder layers")->check(CLI::PositiveNumber);
  mk->add_option("--d-ff", toy_cfg.d_ff, "Feed-forward width")->check(CLI::PositiveNumber);
  mk->add_option("--d-kv", toy_cfg.d_kv, "Per-head key/value width")->check(CLI::PositiveNumber);
  mk->add_option("--vocab-size", toy_cfg.vocab_size, "Vocabulary size")->check(CLI::PositiveNumber);
  mk->add_option("--buckets", toy_cfg.rel_pos_buckets, "Relative position buckets")
      ->check(CLI::PositiveNumber);
  mk->add_option("--seed", seed, "RNG seed");
  mk->add_flag("--tied-head", tied,
               "Tie the LM head to the embedding instead of emitting lm_head");
  mk->add_option("--out", mk_out, "Output directory")->required();

  // --- generate --------------------------------------------------------------
  auto* gen = app.add_subcommand("generate", "Run generation over a JSONL dataset");
  std::string gen_model, gen_vocab, gen_data, gen_out;
  bool gen_gold_first = false;
  DecodeFlags gen_flags;
  gen->add_option("--model", gen_model, "Model directory (model.fidw/model.json/vocab.txt)")
      ->required();
  gen->add_option("--vocab", gen_vocab, "Vocabulary file override");
  gen->add_option("--data", gen_data, "JSONL dataset")->required();
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_flag("--gold-first", gen_gold_first, "Move the gold passage to rank 1 at ingestion");
  gen_flags.add_common(gen);
  gen_flags.add_filter(gen);
  gen_flags.add_exit(gen);

  // --- profile ---------------------------------------------------------------
  auto* prof = app.add_subcommand("profile", "Measure the decoder's share of end-to-end latency");
  std::string prof_model, prof_vocab, prof_data, prof_out;
  std::vector<int> prof_passages, prof_budgets{1, 15, 50, 150, 300};
  int prof_repeats = 5, prof_warmup = 2;
  std::size_t prof_query = 0;
  DecodeFlags prof_flags;
  prof->add_option("--model", prof_model, "Model directory")->required();
  prof->add_option("--vocab", prof_vocab, "Vocabulary file override");
  prof->add_option("--data", prof_data, "JSONL dataset")->required();
  prof->add_option("--out", prof_out, "Output directory")->required();
  prof->add_option("--passage-counts", prof_passages, "Passage counts to profile")->delimiter(',');
  prof->add_option("--budgets", prof_budgets, "Forced generation lengths")->delimiter(',');
  prof->add_option("--repeats", prof_repeats, "Timed repeats per configuration")
      ->check(CLI::PositiveNumber);
  prof->add_option("--warmup", prof_warmup, "Untimed runs per configuration")
      ->check(CLI::NonNegativeNumber);
  prof->add_option("--query-index", prof_query, "Dataset row to profile");
  prof_flags.add_common(prof);

  // --- analyze ----------------------------------------------------------------
  auto* ana = app.add_subcommand("analyze",
                                 "Cross-attention diagnostics: gold-passage ratio and "
                                 "per-passage share of the top-p tokens");
  std::string ana_model, ana_vocab, ana_data, ana_out, ana_layers = "all";
  std::vector<double> ana_p{10, 30, 50};
  int ana_dist_layer = 2;
  std::size_t ana_max_queries = 0;
  bool ana_save_traces = false;
  DecodeFlags ana_flags;
  ana->add_option("--model", ana_model, "Model directory")->required();
  ana->add_option("--vocab", ana_vocab, "Vocabulary file override");
  ana->add_option("--data", ana_data, "JSONL dataset")->required();
  ana->add_option("--out", ana_out, "Output directory")->required();
  ana->add_option("--p", ana_p, "Top-p percentages to analyze")->delimiter(',');
  ana->add_option("--layers", ana_layers, "Decoder layers to trace: 'all' or comma list");
  ana->add_option("--dist-layer", ana_dist_layer,
                  "Layer for the per-passage distribution")
      ->check(CLI::PositiveNumber);
  ana->add_option("--max-queries", ana_max_queries, "Cap on analyzed queries (0 = all)");
  ana->add_flag("--save-traces", ana_save_traces, "Spill raw traces next to the CSVs");
  ana_flags.add_common(ana);

  // --- sweep ------------------------------------------------------------------
  auto* sw = app.add_subcommand("sweep", "Grid search and Max Curve construction");
  std::string sw_model, sw_vocab, sw_data, sw_grid, sw_out, sw_method = "combined";
  int sw_repeats = 3, sw_warmup = 2, sw_jobs = 1, sw_intervals = 30;
  DecodeFlags sw_flags;
  sw->add_option("--model", sw_model, "Model directory")->required();
  sw->add_option("--vocab", sw_vocab, "Vocabulary file override");
  sw->add_option("--data", sw_data, "JSONL development set")->required();
  sw->add_option("--grid", sw_grid, "Grid JSON (omitted fields use built-in defaults)");
  sw->add_option("--out", sw_out, "Output directory")->required();
  sw->add_option("--method", sw_method, "baseline|filter|exit|combined");
  sw->add_option("--repeats", sw_repeats, "Timing repeats per query (median aggregated)")
      ->check(CLI::PositiveNumber);
  sw->add_option("--warmup", sw_warmup, "Untimed runs per combination")
      ->check(CLI::NonNegativeNumber);
  sw->add_option("--jobs", sw_jobs, "Threads for metric evaluation (timing stays serial)")
      ->envname("FIDKIT_JOBS")
      ->check(CLI::PositiveNumber);
  sw->add_option("--intervals", sw_intervals, "Max Curve interval count")
      ->check(CLI::PositiveNumber);
  sw_flags.add_common(sw);
  sw_flags.add_filter(sw);
  sw_flags.add_exit(sw);

  // --- score ------------------------------------------------------------------
  auto* sc = app.add_subcommand("score", "Mean ROUGE-L / F1 between two JSONL files");
  std::string sc_pred, sc_ref, sc_out;
  sc->add_option("--pred", sc_pred, "Predictions JSONL ('text' or 'answer' per line)")
      ->required();
  sc->add_option("--ref", sc_ref, "References JSONL")->required();
  sc->add_option("--out", sc_out, "Optional output directory for scores.json");

  CLI11_PARSE(app, argc, argv);

  try {
    fidkit::set_log_level(fidkit::log_level_from_string(log_level));

    if (mk->parsed()) return cmd_make_toy_model(toy_cfg, seed, !tied, mk_out);
    if (gen->parsed()) {
      const bool filter_on = gen->count("--filter-p") > 0;
      const bool exit_on = gen->count("--exit-threshold") > 0;
      return cmd_generate(gen_model, gen_vocab, gen_data, gen_out, gen_flags, filter_on, exit_on,
                          gen_gold_first);
    }
    if (prof->parsed()) {
      return cmd_profile(prof_model, prof_vocab, prof_data, prof_out, prof_flags, prof_passages,
                         prof_budgets, prof_repeats, prof_warmup, prof_query);
    }
    if (ana->parsed()) {
      return cmd_analyze(ana_model, ana_vocab, ana_data, ana_out, ana_flags, ana_p, ana_layers,
                         ana_dist_layer, ana_max_queries, ana_save_traces);
    }
    if (sw->parsed()) {
      return cmd_sweep(sw_model, sw_vocab, sw_data, sw_grid, sw_out, sw_flags, sw_method,
                       sw_repeats, sw_warmup, sw_jobs, sw_intervals);
    }
    if (sc->parsed()) return cmd_score(sc_pred, sc_ref, sc_out);
  } catch (const fidkit::Error& e) {
    fidkit::log_error(e.what());
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    fidkit::log_error(e.what());
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
