#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fidkit/dataset.hpp"
#include "fidkit/metrics.hpp"
#include "fidkit/runtime.hpp"

namespace fidkit {

enum class SweepMethod { Baseline, Filter, Exit, Combined };

SweepMethod sweep_method_from_string(const std::string& name);
std::string to_string(SweepMethod method);

// Hyperparameter lists for the grid. Empty trigger_layer means "1..L",
// resolved when the model is known.
struct SweepGrid {
  std::vector<int> n_passages;
  std::vector<double> p_percent;
  std::vector<int> trigger_token;
  std::vector<int> trigger_layer;
  std::vector<double> base_threshold;
  std::vector<double> threshold_coef;
  std::vector<int> threshold_decay;

  static SweepGrid defaults(int n_dec_layers);
  static SweepGrid from_json_file(const std::string& path, int n_dec_layers);
};

std::string settings_to_json(const DecodeSettings& settings);
DecodeSettings settings_from_json(const std::string& text);

// Exhaustive enumeration of grid combinations for one method; `base` supplies
// beams and token bounds.
std::vector<DecodeSettings> enumerate_grid(const SweepGrid& grid, SweepMethod method,
                                           const DecodeSettings& base);

struct PerQueryRecord {
  double latency_seconds = 0.0;
  double rouge_l = 0.0;
  double f1 = 0.0;
};

struct SweepPoint {
  DecodeSettings settings;
  double latency_seconds = 0.0;  // mean over queries of per-query medians
  double metric = 0.0;           // mean ROUGE-L
  std::vector<PerQueryRecord> per_query;
  bool failed = false;
  std::string error;
};

struct SweepOptions {
  int repeats = 3;  // timing repeats per query, median-aggregated
  int warmup = 2;   // untimed runs per combination
  int jobs = 1;     // threads for metric evaluation; timing stays serialized
  // Results are appended here as they complete; existing entries are reused
  // so interrupted sweeps resume. Empty = no persistence.
  std::string results_path;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

std::vector<SweepPoint> run_sweep(const Model& model, const Tokenizer& tokenizer,
                                  const std::vector<FidInput>& dataset,
                                  const std::vector<DecodeSettings>& combos,
                                  const SweepOptions& options);

struct CurveRep {
  DecodeSettings settings;
  double latency = 0.0;
  double metric = 0.0;
};

struct CurveInterval {
  double lo = 0.0;
  double hi = 0.0;
  std::optional<CurveRep> rep;   // per-bin metric argmax, tie -> lower latency
  double smoothed = 0.0;         // running maximum of representative metrics
};

struct MaxCurve {
  double latency_min = 0.0;
  double latency_max = 0.0;
  std::vector<CurveInterval> intervals;
};

// Equal-width latency bins between the observed min and max; a point on a
// boundary belongs to the bin it closes (first bin includes the minimum).
MaxCurve build_max_curve(const std::vector<SweepPoint>& points, int n_intervals = 30);

std::vector<DecodeSettings> best_settings_per_interval(const MaxCurve& curve);

// Smallest representative latency on `method` whose metric is at least
// (1 - drop) of the baseline peak metric, reported as a saving relative to
// the baseline peak's latency. nullopt when nothing qualifies.
std::optional<double> latency_saving_at_drop(const MaxCurve& baseline, const MaxCurve& method,
                                             double drop = 0.02);

void write_curve_csv(const MaxCurve& curve, const std::string& path);

}  // namespace fidkit
