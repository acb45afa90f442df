#include "fidkit/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fidkit/container.hpp"
#include "fidkit/errors.hpp"

namespace fidkit {

namespace {

// Shared walk: selects top-p tokens for one trace entry and reports how many
// of them landed in each passage.
std::vector<std::size_t> selected_per_passage(const CrossAttnTrace& trace, const TraceEntry& e,
                                              double p_percent, int n_passages,
                                              std::size_t* n_selected) {
  FilterConfig cfg;  // plain head-mean scoring
  const SalienceScores scores = score_tokens(trace, e.t, e.layer, cfg);
  const std::vector<int> top = select_top(scores, p_percent);
  std::vector<std::size_t> counts(static_cast<std::size_t>(n_passages) + 1, 0);
  for (int col : top) {
    const int orig = e.cols[static_cast<std::size_t>(col)];
    const int rank = trace.token_to_passage[static_cast<std::size_t>(orig)];
    if (rank >= 1 && rank <= n_passages) ++counts[static_cast<std::size_t>(rank)];
  }
  *n_selected = top.size();
  return counts;
}

int passage_count(const CrossAttnTrace& trace) {
  int n = 0;
  for (int r : trace.token_to_passage) n = std::max(n, r);
  return n;
}

}  // namespace

GoldRatioCurve gold_ratio(const CrossAttnTrace& trace, double p_percent, int gold_rank) {
  if (gold_rank < 1) throw_data("gold_ratio: missing gold passage rank");
  const int n_passages = passage_count(trace);
  if (gold_rank > n_passages) {
    throw_data("gold_ratio: gold rank " + std::to_string(gold_rank) + " exceeds passage count " +
               std::to_string(n_passages));
  }
  GoldRatioCurve curve;
  curve.p_percent = p_percent;
  curve.gold_rank = gold_rank;
  for (const TraceEntry& e : trace.entries) {
    std::size_t n_selected = 0;
    const auto counts = selected_per_passage(trace, e, p_percent, n_passages, &n_selected);
    const double ratio =
        n_selected == 0 ? 0.0
                        : static_cast<double>(counts[static_cast<std::size_t>(gold_rank)]) /
                              static_cast<double>(n_selected);
    curve.points.push_back({e.layer, e.t, ratio});
  }
  return curve;
}

PassageDistribution passage_distribution(const CrossAttnTrace& trace, double p_percent,
                                         int layer) {
  const int n_passages = passage_count(trace);
  PassageDistribution dist;
  dist.p_percent = p_percent;
  dist.layer = layer;
  dist.n_passages = n_passages;
  for (const TraceEntry& e : trace.entries) {
    if (e.layer != layer) continue;
    std::size_t n_selected = 0;
    const auto counts = selected_per_passage(trace, e, p_percent, n_passages, &n_selected);
    for (int rank = 1; rank <= n_passages; ++rank) {
      const double share =
          n_selected == 0 ? 0.0
                          : static_cast<double>(counts[static_cast<std::size_t>(rank)]) /
                                static_cast<double>(n_selected);
      dist.points.push_back({rank, e.t, share});
    }
  }
  return dist;
}

std::vector<std::string> emit_analysis(const std::vector<GoldRatioCurve>& gold_curves,
                                       const std::vector<PassageDistribution>& distributions,
                                       const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw_io("cannot create output directory '" + out_dir + "': " + ec.message());

  std::vector<std::string> written;
  auto open = [&](const std::string& name) {
    const std::string path = (std::filesystem::path(out_dir) / name).string();
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw_io("cannot write '" + path + "'");
    written.push_back(path);
    return out;
  };
  auto p_tag = [](double p) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", p);
    return std::string(buf);
  };

  for (const GoldRatioCurve& curve : gold_curves) {
    std::ofstream out = open("gold_ratio_p" + p_tag(curve.p_percent) + ".csv");
    out << "layer,token_index,value\n";
    for (const auto& pt : curve.points) {
      out << pt.layer << "," << pt.token_index << "," << pt.value << "\n";
    }
  }
  for (const PassageDistribution& dist : distributions) {
    std::ofstream out = open("passage_distribution_p" + p_tag(dist.p_percent) + "_l" +
                             std::to_string(dist.layer) + ".csv");
    out << "passage_rank,token_index,value\n";
    for (const auto& pt : dist.points) {
      out << pt.passage_rank << "," << pt.token_index << "," << pt.value << "\n";
    }
  }
  return written;
}

namespace {

std::string entry_key(const TraceEntry& e, const char* field) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "trace.t%06d.l%03d.%s", e.t, e.layer, field);
  return buf;
}

}  // namespace

void save_trace(const std::string& path, const CrossAttnTrace& trace) {
  TensorMap tensors;
  Tensor meta({3});
  meta.data[0] = static_cast<float>(trace.n_heads);
  meta.data[1] = trace.gold_rank ? static_cast<float>(*trace.gold_rank) : 0.0f;
  meta.data[2] = static_cast<float>(trace.entries.size());
  tensors.emplace("trace.meta", std::move(meta));

  Tensor t2p({trace.token_to_passage.size()});
  for (std::size_t i = 0; i < trace.token_to_passage.size(); ++i) {
    t2p.data[i] = static_cast<float>(trace.token_to_passage[i]);
  }
  tensors.emplace("trace.token_to_passage", std::move(t2p));

  for (const TraceEntry& e : trace.entries) {
    Tensor probs({e.probs.n_rows, e.probs.n_cols});
    probs.data = e.probs.data;
    tensors.emplace(entry_key(e, "probs"), std::move(probs));
    Tensor cols({e.cols.size()});
    for (std::size_t i = 0; i < e.cols.size(); ++i) cols.data[i] = static_cast<float>(e.cols[i]);
    tensors.emplace(entry_key(e, "cols"), std::move(cols));
  }
  save_container(path, tensors);
}

CrossAttnTrace load_trace(const std::string& path) {
  const TensorMap tensors = load_container(path);
  CrossAttnTrace trace;
  auto meta = tensors.find("trace.meta");
  if (meta == tensors.end()) throw_data("'" + path + "' is not a trace container");
  trace.n_heads = static_cast<int>(meta->second.data.at(0));
  const int gold = static_cast<int>(meta->second.data.at(1));
  if (gold > 0) trace.gold_rank = gold;

  auto t2p = tensors.find("trace.token_to_passage");
  if (t2p == tensors.end()) throw_data("'" + path + "': missing passage map");
  trace.token_to_passage.reserve(t2p->second.numel());
  for (float v : t2p->second.data) trace.token_to_passage.push_back(static_cast<int>(v));

  for (const auto& [name, tensor] : tensors) {
    int t = 0, layer = 0;
    char field[16] = {};
    if (std::sscanf(name.c_str(), "trace.t%d.l%d.%15s", &t, &layer, field) != 3) continue;
    if (std::string_view(field) != "probs") continue;
    TraceEntry e;
    e.t = t;
    e.layer = layer;
    e.probs.n_rows = tensor.shape.at(0);
    e.probs.n_cols = tensor.shape.at(1);
    e.probs.data = tensor.data;
    auto cols = tensors.find(entry_key(e, "cols"));
    if (cols == tensors.end()) throw_data("'" + path + "': trace entry missing column map");
    e.cols.reserve(cols->second.numel());
    for (float v : cols->second.data) e.cols.push_back(static_cast<int>(v));
    trace.entries.push_back(std::move(e));
  }
  return trace;
}

}  // namespace fidkit
