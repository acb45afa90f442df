#include "fidkit/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <thread>

#include "fidkit/errors.hpp"
#include "json.hpp"

namespace fidkit {

using nlohmann::json;

SweepMethod sweep_method_from_string(const std::string& name) {
  if (name == "baseline") return SweepMethod::Baseline;
  if (name == "filter") return SweepMethod::Filter;
  if (name == "exit") return SweepMethod::Exit;
  if (name == "combined") return SweepMethod::Combined;
  throw_usage("unknown sweep method '" + name + "' (expected baseline|filter|exit|combined)");
}

std::string to_string(SweepMethod method) {
  switch (method) {
    case SweepMethod::Baseline: return "baseline";
    case SweepMethod::Filter: return "filter";
    case SweepMethod::Exit: return "exit";
    case SweepMethod::Combined: return "combined";
  }
  return "?";
}

SweepGrid SweepGrid::defaults(int n_dec_layers) {
  SweepGrid g;
  g.n_passages = {5, 10, 25, 50, 100};
  g.p_percent = {10, 30, 50};
  for (int t = 1; t <= 20; ++t) g.trigger_token.push_back(t);
  for (int l = 1; l <= n_dec_layers; ++l) g.trigger_layer.push_back(l);
  g.base_threshold = {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  g.threshold_coef = {0.5, 0.7, 0.9};
  g.threshold_decay = {3, 4, 5};
  return g;
}

SweepGrid SweepGrid::from_json_file(const std::string& path, int n_dec_layers) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open grid config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw_data("'" + path + "': malformed grid JSON: " + e.what());
  }
  SweepGrid g = defaults(n_dec_layers);
  auto read = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  read("n_passages", g.n_passages);
  read("p_percent", g.p_percent);
  read("trigger_token", g.trigger_token);
  read("trigger_layer", g.trigger_layer);
  read("base_threshold", g.base_threshold);
  read("threshold_coef", g.threshold_coef);
  read("threshold_decay", g.threshold_decay);
  return g;
}

std::string settings_to_json(const DecodeSettings& s) {
  json j = {
      {"n_passages", s.n_passages},
      {"beams", s.beams},
      {"max_new_tokens", s.max_new_tokens},
      {"min_new_tokens", s.min_new_tokens},
      {"max_tokens_per_passage", s.max_tokens_per_passage},
      {"filter", nullptr},
      {"exit", nullptr},
  };
  if (s.filter) {
    j["filter"] = {
        {"p_percent", s.filter->p_percent},
        {"trigger_token", s.filter->trigger_token},
        {"trigger_layer", s.filter->trigger_layer},
        {"value_norm", s.filter->value_norm},
        {"mean_over_layers", s.filter->mean_over_layers},
        {"beam_aggregate",
         s.filter->beam_aggregate == FilterConfig::BeamAggregate::Mean ? "mean" : "min"},
    };
  }
  if (s.exit) {
    j["exit"] = {
        {"base_threshold", s.exit->base_threshold},
        {"threshold_coef", s.exit->threshold_coef},
        {"threshold_decay", s.exit->threshold_decay},
    };
  }
  return j.dump();
}

DecodeSettings settings_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw_data(std::string("malformed settings JSON: ") + e.what());
  }
  DecodeSettings s;
  s.n_passages = j.value("n_passages", 0);
  s.beams = j.value("beams", 4);
  s.max_new_tokens = j.value("max_new_tokens", 300);
  s.min_new_tokens = j.value("min_new_tokens", 0);
  s.max_tokens_per_passage = j.value("max_tokens_per_passage", 235);
  if (j.contains("filter") && !j.at("filter").is_null()) {
    const json& f = j.at("filter");
    FilterConfig fc;
    fc.p_percent = f.value("p_percent", 100.0);
    fc.trigger_token = f.value("trigger_token", 1);
    fc.trigger_layer = f.value("trigger_layer", 1);
    fc.value_norm = f.value("value_norm", false);
    fc.mean_over_layers = f.value("mean_over_layers", false);
    fc.beam_aggregate = f.value("beam_aggregate", std::string("mean")) == "min"
                            ? FilterConfig::BeamAggregate::Min
                            : FilterConfig::BeamAggregate::Mean;
    s.filter = fc;
  }
  if (j.contains("exit") && !j.at("exit").is_null()) {
    const json& e = j.at("exit");
    ExitConfig ec;
    ec.base_threshold = e.value("base_threshold", 1.0);
    ec.threshold_coef = e.value("threshold_coef", 1.0);
    ec.threshold_decay = e.value("threshold_decay", 4);
    s.exit = ec;
  }
  return s;
}

std::vector<DecodeSettings> enumerate_grid(const SweepGrid& grid, SweepMethod method,
                                           const DecodeSettings& base) {
  const bool with_filter = method == SweepMethod::Filter || method == SweepMethod::Combined;
  const bool with_exit = method == SweepMethod::Exit || method == SweepMethod::Combined;

  std::vector<FilterConfig> filters;
  if (with_filter) {
    for (double p : grid.p_percent) {
      for (int tt : grid.trigger_token) {
        for (int tl : grid.trigger_layer) {
          FilterConfig fc;
          fc.p_percent = p;
          fc.trigger_token = tt;
          fc.trigger_layer = tl;
          filters.push_back(fc);
        }
      }
    }
  } else {
    filters.emplace_back();  // placeholder, unused
  }

  std::vector<ExitConfig> exits;
  if (with_exit) {
    for (double bt : grid.base_threshold) {
      for (double coef : grid.threshold_coef) {
        for (int decay : grid.threshold_decay) {
          ExitConfig ec;
          ec.base_threshold = bt;
          ec.threshold_coef = coef;
          ec.threshold_decay = decay;
          exits.push_back(ec);
        }
      }
    }
  } else {
    exits.emplace_back();
  }

  std::vector<DecodeSettings> combos;
  for (int np : grid.n_passages) {
    for (std::size_t fi = 0; fi < filters.size(); ++fi) {
      for (std::size_t ei = 0; ei < exits.size(); ++ei) {
        DecodeSettings s = base;
        s.n_passages = np;
        s.filter.reset();
        s.exit.reset();
        if (with_filter) s.filter = filters[fi];
        if (with_exit) s.exit = exits[ei];
        combos.push_back(std::move(s));
      }
    }
  }
  return combos;
}

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  const int n_workers = std::min<int>(jobs, static_cast<int>(n));
  workers.reserve(static_cast<std::size_t>(n_workers));
  for (int w = 0; w < n_workers; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& th : workers) th.join();
}

json point_to_json(const SweepPoint& point) {
  json j;
  j["settings"] = json::parse(settings_to_json(point.settings));
  if (point.failed) {
    j["error"] = point.error;
    return j;
  }
  j["latency_seconds"] = point.latency_seconds;
  j["metric"] = point.metric;
  json pq = json::array();
  for (const PerQueryRecord& r : point.per_query) {
    pq.push_back({{"latency_seconds", r.latency_seconds},
                  {"rouge_l", r.rouge_l},
                  {"f1", r.f1}});
  }
  j["per_query"] = pq;
  return j;
}

SweepPoint point_from_json(const json& j) {
  SweepPoint p;
  p.settings = settings_from_json(j.at("settings").dump());
  if (j.contains("error")) {
    p.failed = true;
    p.error = j.at("error").get<std::string>();
    return p;
  }
  p.latency_seconds = j.at("latency_seconds").get<double>();
  p.metric = j.at("metric").get<double>();
  if (j.contains("per_query")) {
    for (const json& r : j.at("per_query")) {
      p.per_query.push_back({r.value("latency_seconds", 0.0), r.value("rouge_l", 0.0),
                             r.value("f1", 0.0)});
    }
  }
  return p;
}

}  // namespace

std::vector<SweepPoint> run_sweep(const Model& model, const Tokenizer& tokenizer,
                                  const std::vector<FidInput>& dataset,
                                  const std::vector<DecodeSettings>& combos,
                                  const SweepOptions& options) {
  if (dataset.empty()) throw_data("run_sweep: dataset is empty");
  if (combos.empty()) throw_data("run_sweep: no grid combinations");
  if (options.repeats < 1) throw_usage("run_sweep: repeats must be >= 1");

  // Previously persisted results keyed by canonical settings JSON.
  std::map<std::string, SweepPoint> done;
  if (!options.results_path.empty()) {
    std::ifstream in(options.results_path);
    std::string line;
    while (in && std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        SweepPoint p = point_from_json(json::parse(line));
        if (!p.failed) done.emplace(settings_to_json(p.settings), std::move(p));
      } catch (const std::exception&) {
        // Torn tail line from an interrupted run; rerun that combination.
      }
    }
  }

  std::vector<SweepPoint> points;
  points.reserve(combos.size());
  std::size_t completed = 0;
  for (const DecodeSettings& settings : combos) {
    const std::string key = settings_to_json(settings);
    auto prior = done.find(key);
    if (prior != done.end()) {
      points.push_back(prior->second);
      if (options.progress) options.progress(++completed, combos.size());
      continue;
    }

    SweepPoint point;
    point.settings = settings;
    try {
      for (int w = 0; w < options.warmup; ++w) {
        (void)generate(model, tokenizer, dataset.front(), settings);
      }
      std::vector<std::string> answers(dataset.size());
      point.per_query.resize(dataset.size());
      for (std::size_t q = 0; q < dataset.size(); ++q) {
        std::vector<double> latencies;
        latencies.reserve(static_cast<std::size_t>(options.repeats));
        for (int r = 0; r < options.repeats; ++r) {
          const auto start = std::chrono::steady_clock::now();
          const GenerationResult res = generate(model, tokenizer, dataset[q], settings);
          latencies.push_back(
              std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
          answers[q] = res.text;
        }
        point.per_query[q].latency_seconds = median_of(std::move(latencies));
      }
      parallel_for(dataset.size(), options.jobs, [&](std::size_t q) {
        const std::string ref = dataset[q].reference_answer.value_or("");
        const ScorePair scores = score_pair(answers[q], ref);
        point.per_query[q].rouge_l = scores.rouge_l;
        point.per_query[q].f1 = scores.f1;
      });
      double lat = 0.0, rouge = 0.0;
      for (const PerQueryRecord& r : point.per_query) {
        lat += r.latency_seconds;
        rouge += r.rouge_l;
      }
      point.latency_seconds = lat / static_cast<double>(dataset.size());
      point.metric = rouge / static_cast<double>(dataset.size());
    } catch (const std::exception& e) {
      point.failed = true;
      point.error = e.what();
      point.per_query.clear();
    }

    if (!options.results_path.empty()) {
      append_jsonl(options.results_path, point_to_json(point).dump());
    }
    points.push_back(std::move(point));
    if (options.progress) options.progress(++completed, combos.size());
  }
  return points;
}

namespace {

// Bin index under right-closed intervals: the first bin includes the range
// minimum, every boundary point belongs to the bin it closes.
std::size_t bin_index(double x, double lo, double width, std::size_t n_bins) {
  if (width <= 0.0) return 0;
  const double pos = (x - lo) / width;
  double idx = std::ceil(pos) - 1.0;
  if (idx < 0.0) idx = 0.0;
  if (idx > static_cast<double>(n_bins - 1)) idx = static_cast<double>(n_bins - 1);
  return static_cast<std::size_t>(idx);
}

}  // namespace

MaxCurve build_max_curve(const std::vector<SweepPoint>& points, int n_intervals) {
  if (n_intervals < 1) throw_usage("build_max_curve: interval count must be >= 1");
  std::vector<const SweepPoint*> ok;
  for (const SweepPoint& p : points) {
    if (!p.failed) ok.push_back(&p);
  }
  if (ok.empty()) throw_data("build_max_curve: no successful sweep points");

  MaxCurve curve;
  curve.latency_min = ok.front()->latency_seconds;
  curve.latency_max = ok.front()->latency_seconds;
  for (const SweepPoint* p : ok) {
    curve.latency_min = std::min(curve.latency_min, p->latency_seconds);
    curve.latency_max = std::max(curve.latency_max, p->latency_seconds);
  }

  const auto n_bins = static_cast<std::size_t>(n_intervals);
  const double width = (curve.latency_max - curve.latency_min) / static_cast<double>(n_bins);
  curve.intervals.resize(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i) {
    curve.intervals[i].lo = curve.latency_min + width * static_cast<double>(i);
    curve.intervals[i].hi = curve.latency_min + width * static_cast<double>(i + 1);
  }

  for (const SweepPoint* p : ok) {
    CurveInterval& bin =
        curve.intervals[bin_index(p->latency_seconds, curve.latency_min, width, n_bins)];
    const bool better =
        !bin.rep || p->metric > bin.rep->metric ||
        (p->metric == bin.rep->metric && p->latency_seconds < bin.rep->latency);
    if (better) bin.rep = CurveRep{p->settings, p->latency_seconds, p->metric};
  }

  double running = -std::numeric_limits<double>::infinity();
  for (CurveInterval& bin : curve.intervals) {
    if (bin.rep) running = std::max(running, bin.rep->metric);
    bin.smoothed = running;
  }
  return curve;
}

std::vector<DecodeSettings> best_settings_per_interval(const MaxCurve& curve) {
  std::vector<DecodeSettings> out;
  for (const CurveInterval& bin : curve.intervals) {
    if (bin.rep) out.push_back(bin.rep->settings);
  }
  return out;
}

std::optional<double> latency_saving_at_drop(const MaxCurve& baseline, const MaxCurve& method,
                                             double drop) {
  const CurveRep* peak = nullptr;
  for (const CurveInterval& bin : baseline.intervals) {
    if (!bin.rep) continue;
    if (!peak || bin.rep->metric > peak->metric ||
        (bin.rep->metric == peak->metric && bin.rep->latency < peak->latency)) {
      peak = &*bin.rep;
    }
  }
  if (!peak) throw_data("latency_saving_at_drop: baseline curve is empty");

  const double bar = (1.0 - drop) * peak->metric;
  std::optional<double> best_latency;
  for (const CurveInterval& bin : method.intervals) {
    if (!bin.rep || bin.rep->metric < bar) continue;
    if (!best_latency || bin.rep->latency < *best_latency) best_latency = bin.rep->latency;
  }
  if (!best_latency) return std::nullopt;
  return 1.0 - *best_latency / peak->latency;
}

void write_curve_csv(const MaxCurve& curve, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw_io("cannot write '" + path + "'");
  out << "interval_index,latency,metric,settings\n";
  for (std::size_t i = 0; i < curve.intervals.size(); ++i) {
    const CurveInterval& bin = curve.intervals[i];
    if (!bin.rep) continue;
    std::string settings = settings_to_json(bin.rep->settings);
    std::string escaped = "\"";
    for (char c : settings) {
      if (c == '"') escaped += "\"\"";
      else escaped += c;
    }
    escaped += "\"";
    out << i << "," << bin.rep->latency << "," << bin.rep->metric << "," << escaped << "\n";
  }
}

}  // namespace fidkit
