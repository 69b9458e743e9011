#pragma once

#include "driftwatch/config.hpp"
#include "driftwatch/investigation.hpp"
#include "driftwatch/model.hpp"
#include "driftwatch/rehearsal.hpp"
#include "driftwatch/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace driftwatch {

struct PhaseTimings {
  double preprocess_ms = 0.0;
  double detect_ms = 0.0;
  double investigate_ms = 0.0;
  double update_ms = 0.0;
};

struct Alert {
  std::int64_t window_index = 0;
  std::vector<std::int64_t> window_ids;    // correlated malicious windows, sorted
  std::vector<EntityId> malicious_nodes;   // sorted
  std::size_t path_count = 0;
  ScenarioGraph scenario;
};

struct WindowReport {
  std::int64_t window_index = 0;
  std::size_t raw_events = 0;
  std::size_t rejected = 0;            // outside the window bounds
  std::size_t whitelist_dropped = 0;
  std::size_t cpr_merged = 0;
  std::size_t events = 0;              // post-filter
  double mean_rl = 0.0;
  double sigma = 0.0;
  std::vector<EntityId> anomalous;     // sorted
  std::vector<EntityId> suspicious;    // sorted
  std::vector<EntityId> rehearsal;     // sorted
  std::vector<EntityId> malicious;     // sorted
  std::vector<EntityId> discarded;     // suspicious \ malicious
  std::optional<Alert> alert;
  bool trained = false;
  bool train_aborted = false;          // non-finite gradient diagnostic
  std::size_t pool_size = 0;
  PhaseTimings timings;
};

// One streaming detection run: preprocess -> detect -> investigate -> update,
// looped per window. Single logical writer; all mutation goes through
// advance_window.
class Engine {
 public:
  explicit Engine(RuntimeConfig cfg);

  EntityStore& entities() { return store_; }
  const EntityStore& entities() const { return store_; }
  const RuntimeConfig& config() const { return cfg_; }

  // Raw events must fall inside window `index` relative to the stream origin
  // (the first window sets the origin from cfg alignment at origin_ns()).
  // Out-of-window events are rejected and counted, never silently dropped.
  WindowReport advance_window(std::int64_t index, std::vector<Event> raw_events);

  std::int64_t next_window() const { return next_window_; }
  std::int64_t origin_ns() const { return origin_ns_; }
  void set_origin_ns(std::int64_t ns);  // before the first window only

  const TemporalModel& model() const { return model_; }
  TemporalModel& model() { return model_; }
  const RehearsalPool& pool() const { return pool_; }
  const std::vector<MiniGraph>& mini_graphs() const { return mini_graphs_; }
  const std::map<std::int64_t, WindowRecord>& history() const { return history_; }

  friend class CheckpointCodec;

 private:
  struct EntityStash;

  std::vector<PseudoNeighbor> pseudo_neighbors(const Event& e, const FlowIndex& index) const;

  RuntimeConfig cfg_;
  EntityStore store_;
  TemporalModel model_;
  RehearsalPool pool_;
  std::vector<MiniGraph> mini_graphs_;
  std::map<std::int64_t, WindowRecord> history_;
  std::int64_t next_window_ = 0;
  std::int64_t origin_ns_ = 0;
  bool origin_set_ = false;
};

}  // namespace driftwatch
