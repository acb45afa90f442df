#pragma once

#include <string>
#include <vector>

#include "fidkit/filtering.hpp"
#include "fidkit/trace.hpp"

namespace fidkit {

// Fraction of top-p% scored tokens that originate from the gold passage, per
// (decoder layer, generated-token index).
struct GoldRatioPoint {
  int layer = 0;
  int token_index = 0;
  double value = 0.0;
};
struct GoldRatioCurve {
  double p_percent = 0.0;
  int gold_rank = 0;
  std::vector<GoldRatioPoint> points;
};

// Fraction of top-p% scored tokens drawn from each passage at a fixed layer.
struct PassageSharePoint {
  int passage_rank = 0;
  int token_index = 0;
  double value = 0.0;
};
struct PassageDistribution {
  double p_percent = 0.0;
  int layer = 0;
  int n_passages = 0;
  std::vector<PassageSharePoint> points;
};

// Selection reuses score_tokens/select_top so the diagnostics measure exactly
// what filtering would keep. Throws when the trace carries no gold rank.
GoldRatioCurve gold_ratio(const CrossAttnTrace& trace, double p_percent, int gold_rank);

PassageDistribution passage_distribution(const CrossAttnTrace& trace, double p_percent,
                                         int layer);

// Writes gold_ratio_p{P}.csv (layer,token_index,value) and
// passage_distribution_p{P}_l{L}.csv (passage_rank,token_index,value) files.
// Returns the paths written.
std::vector<std::string> emit_analysis(const std::vector<GoldRatioCurve>& gold_curves,
                                       const std::vector<PassageDistribution>& distributions,
                                       const std::string& out_dir);

// Optional on-disk spill; the container format doubles as the trace format.
void save_trace(const std::string& path, const CrossAttnTrace& trace);
CrossAttnTrace load_trace(const std::string& path);

}  // namespace fidkit
