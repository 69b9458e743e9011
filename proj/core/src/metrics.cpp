#include "driftwatch/metrics.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace driftwatch {

using nlohmann::json;

MetricReport from_counts(const MetricCounts& c) {
  MetricReport r;
  r.counts = c;
  auto ratio = [](std::uint64_t num, std::uint64_t den, double& out, bool& defined) {
    if (den == 0) {
      out = 0.0;
      defined = false;
    } else {
      out = static_cast<double>(num) / static_cast<double>(den);
      defined = true;
    }
  };
  ratio(c.tp, c.tp + c.fp, r.precision, r.precision_defined);
  ratio(c.tp, c.tp + c.fn, r.recall, r.recall_defined);
  ratio(c.tp + c.tn, c.tp + c.fp + c.fn + c.tn, r.accuracy, r.accuracy_defined);
  double pr = r.precision + r.recall;
  if (pr == 0.0) {
    r.f1 = 0.0;
    r.f1_defined = false;
  } else {
    r.f1 = 2.0 * r.precision * r.recall / pr;
    r.f1_defined = true;
  }
  return r;
}

std::string MetricReport::text_table() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%-10s %8s %8s %8s %8s %6s %6s %6s %6s\n"
                "%-10s %8.4f %8.4f %8.4f %8.4f %6llu %6llu %6llu %6llu\n",
                "", "prec", "recall", "acc", "f1", "tp", "fp", "fn", "tn", "score", precision,
                recall, accuracy, f1, static_cast<unsigned long long>(counts.tp),
                static_cast<unsigned long long>(counts.fp),
                static_cast<unsigned long long>(counts.fn),
                static_cast<unsigned long long>(counts.tn));
  return buf;
}

std::string MetricReport::json() const {
  nlohmann::json j = {
      {"precision", precision},
      {"recall", recall},
      {"accuracy", accuracy},
      {"f1", f1},
      {"tp", counts.tp},
      {"fp", counts.fp},
      {"fn", counts.fn},
      {"tn", counts.tn},
      {"precision_defined", precision_defined},
      {"recall_defined", recall_defined},
      {"accuracy_defined", accuracy_defined},
      {"f1_defined", f1_defined},
  };
  return j.dump();
}

GroundTruth load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw EvalError("labels: cannot open " + path.string());
  GroundTruth truth;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("label"))
      throw EvalError("labels: bad line " + std::to_string(line_no));
    bool attack = j["label"].get<std::string>() == "attack";
    if (j.contains("window_index"))
      truth.windows[j["window_index"].get<std::int64_t>()] = attack;
    else if (j.contains("node_uuid"))
      truth.nodes[j["node_uuid"].get<std::string>()] = attack;
    else
      throw EvalError("labels: line " + std::to_string(line_no) +
                      " has neither window_index nor node_uuid");
  }
  return truth;
}

namespace {

template <typename Key>
MetricReport score_units(const std::set<Key>& predicted, const std::map<Key, bool>& labels,
                         const char* what) {
  std::vector<Key> unknown;
  for (const auto& p : predicted)
    if (!labels.count(p)) unknown.push_back(p);
  if (!unknown.empty()) {
    std::ostringstream msg;
    msg << "eval: predicted " << what << " absent from labels:";
    for (const auto& u : unknown) msg << ' ' << u;
    throw EvalError(msg.str());
  }
  MetricCounts c;
  for (const auto& [unit, attack] : labels) {
    bool flagged = predicted.count(unit) != 0;
    if (attack && flagged) ++c.tp;
    else if (attack && !flagged) ++c.fn;
    else if (!attack && flagged) ++c.fp;
    else ++c.tn;
  }
  return from_counts(c);
}

}  // namespace

MetricReport score_windows(const std::set<std::int64_t>& predicted, const GroundTruth& truth) {
  return score_units(predicted, truth.windows, "windows");
}

MetricReport score_nodes(const std::set<std::string>& predicted, const GroundTruth& truth) {
  return score_units(predicted, truth.nodes, "nodes");
}

MetricReport score_graphs(const std::set<std::int64_t>& predicted_windows,
                          const GroundTruth& truth, int windows_per_graph) {
  if (windows_per_graph <= 0) throw EvalError("eval: windows_per_graph must be positive");
  std::map<std::int64_t, bool> graph_labels;
  for (const auto& [w, attack] : truth.windows) {
    auto g = w / windows_per_graph;
    graph_labels[g] = graph_labels[g] || attack;
  }
  std::set<std::int64_t> predicted_graphs;
  for (auto w : predicted_windows) {
    if (!truth.windows.count(w))
      throw EvalError("eval: predicted windows absent from labels: " + std::to_string(w));
    predicted_graphs.insert(w / windows_per_graph);
  }
  return score_units(predicted_graphs, graph_labels, "graphs");
}

}  // namespace driftwatch
