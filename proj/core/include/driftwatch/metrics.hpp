#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace driftwatch {

struct MetricCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct MetricReport {
  MetricCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double accuracy = 0.0;
  double f1 = 0.0;
  // false when the corresponding denominator was zero (value reported as 0)
  bool precision_defined = true;
  bool recall_defined = true;
  bool accuracy_defined = true;
  bool f1_defined = true;

  std::string text_table() const;
  std::string json() const;
};

MetricReport from_counts(const MetricCounts& counts);

enum class EvalLevel { Window, Graph, Node };

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GroundTruth {
  std::map<std::int64_t, bool> windows;  // index -> is attack
  std::map<std::string, bool> nodes;     // uuid -> is attack
};

GroundTruth load_labels(const std::filesystem::path& path);

// Scores a prediction set against labels. Predicted units absent from the
// labels raise EvalError listing the offending ids.
MetricReport score_windows(const std::set<std::int64_t>& predicted, const GroundTruth& truth);
MetricReport score_nodes(const std::set<std::string>& predicted, const GroundTruth& truth);
// Graph level: consecutive groups of `windows_per_graph` windows; a graph is
// predicted/labeled positive when any member window is.
MetricReport score_graphs(const std::set<std::int64_t>& predicted_windows,
                          const GroundTruth& truth, int windows_per_graph);

}  // namespace driftwatch
