#include "driftwatch/pipeline.hpp"

#include "driftwatch/encoding.hpp"
#include "driftwatch/ingest.hpp"
#include "driftwatch/rng.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>
#include <unordered_map>

namespace driftwatch {

namespace {

class PhaseTimer {
 public:
  PhaseTimer() : start_(std::chrono::steady_clock::now()) {}
  double lap_ms() {
    auto now = std::chrono::steady_clock::now();
    double ms = std::chrono::duration<double, std::milli>(now - start_).count();
    start_ = now;
    return ms;
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

struct Engine::EntityStash {
  struct Saved {
    Eigen::VectorXd memory;
    std::int64_t last_update = -1;
    std::vector<NeighborEntry> neighbors;
  };
  std::unordered_map<EntityId, Saved> saved;

  void capture(const EntityStore& store, EntityId id) {
    if (saved.count(id)) return;
    const auto& rec = store.rec(id);
    saved.emplace(id, Saved{rec.memory, rec.last_update, rec.neighbors});
  }

  void restore(EntityStore& store) const {
    for (const auto& [id, s] : saved) {
      auto& rec = store.rec(id);
      rec.memory = s.memory;
      rec.last_update = s.last_update;
      rec.neighbors = s.neighbors;
    }
  }
};

Engine::Engine(RuntimeConfig cfg)
    : cfg_(std::move(cfg)), model_(TemporalModel::from_config(cfg_)) {
  cfg_.validate();
}

void Engine::set_origin_ns(std::int64_t ns) {
  if (next_window_ != 0)
    throw std::logic_error("origin can only be set before the first window");
  origin_ns_ = ns;
  origin_set_ = true;
}

std::vector<PseudoNeighbor> Engine::pseudo_neighbors(const Event& e,
                                                     const FlowIndex& index) const {
  std::vector<PseudoNeighbor> out;
  if (cfg_.ablate_pseudo_edges || pool_.size() == 0) return out;
  for (const auto& pe : propose_pseudo_edges(e, pool_, index, cfg_.k_hop, cfg_.pseudo_cap))
    out.push_back({pe.subject, encode_event(pe, store_, cfg_)});
  return out;
}

WindowReport Engine::advance_window(std::int64_t index, std::vector<Event> raw_events) {
  if (index < next_window_)
    throw std::logic_error("windows must advance monotonically");
  next_window_ = index + 1;

  WindowReport report;
  report.window_index = index;
  report.raw_events = raw_events.size();
  PhaseTimer timer;

  // --- Preprocess -----------------------------------------------------
  const std::int64_t start = origin_ns_ + index * cfg_.window_ns;
  const std::int64_t end = start + cfg_.window_ns;

  std::sort(raw_events.begin(), raw_events.end(), event_order_lt);
  std::vector<Event> in_window;
  in_window.reserve(raw_events.size());
  for (const auto& e : raw_events) {
    if (e.timestamp_ns < start || e.timestamp_ns >= end)
      ++report.rejected;
    else
      in_window.push_back(e);
  }

  Whitelist wl{cfg_.whitelist};
  std::size_t before = in_window.size();
  auto filtered = whitelist_filter(std::move(in_window), wl, store_);
  report.whitelist_dropped = before - filtered.size();
  before = filtered.size();
  auto reduced = cpr_reduce(std::move(filtered));
  report.cpr_merged = before - reduced.size();

  WindowGraph window;
  window.index = index;
  window.start_ns = start;
  window.end_ns = end;
  window.events = std::move(reduced);
  window.encodings.reserve(window.events.size());
  for (const auto& e : window.events) {
    window.encodings.push_back(encode_event(e, store_, cfg_));
    apply_state_transfer(e, store_, cfg_);
  }
  report.events = window.events.size();
  report.timings.preprocess_ms = timer.lap_ms();

  // --- Detect ---------------------------------------------------------
  FlowIndex flow;
  flow.build(window);
  EntityStash stash;
  window.rl.reserve(window.events.size());
  for (std::size_t k = 0; k < window.events.size(); ++k) {
    const auto& e = window.events[k];
    auto pseudo = pseudo_neighbors(e, flow);
    stash.capture(store_, e.subject);
    stash.capture(store_, e.object);
    window.rl.push_back(model_.score_event(store_, e, window.encodings[k], pseudo));
  }
  double sigma = sigma_threshold(window.rl, cfg_.sigma_stds);
  report.sigma = sigma;
  if (!window.rl.empty()) {
    double sum = 0.0;
    for (double v : window.rl) sum += v;
    report.mean_rl = sum / static_cast<double>(window.rl.size());
  }
  report.anomalous = identify_anomalous_nodes(window, sigma);
  report.timings.detect_ms = timer.lap_ms();

  // --- Investigate ------------------------------------------------------
  std::vector<EntityId> suspicious;
  for (EntityId id : report.anomalous) {
    if (cfg_.ablate_state_transfer || store_.rec(id).ss >= cfg_.gamma)
      suspicious.push_back(id);
  }
  report.suspicious = suspicious;

  auto steiner = build_mini_trees(window, suspicious);
  for (const auto& tree : steiner.trees) merge_mini_graph(mini_graphs_, tree);

  WindowRecord record;
  record.index = index;
  for (std::size_t k = 0; k < window.events.size(); ++k) {
    if (window.rl[k] > sigma) {
      const auto& e = window.events[k];
      record.flagged_events.push_back({e.subject, e.object, e.kind, window.rl[k], index});
    }
  }

  std::map<EntityId, std::vector<WalkPath>> malicious;
  std::size_t path_count = 0;
  if (cfg_.ablate_path_filter) {
    for (EntityId sn : suspicious) malicious.emplace(sn, std::vector<WalkPath>{});
  } else {
    std::vector<WalkPath> all_paths;
    std::vector<std::pair<EntityId, std::pair<std::size_t, std::size_t>>> ranges;
    for (EntityId sn : suspicious) {
      const MiniGraph* mg = nullptr;
      for (const auto& g : mini_graphs_) {
        if (g.contains(sn)) {
          mg = &g;
          break;
        }
      }
      if (!mg) continue;
      auto paths = random_walk_paths(*mg, sn, store_, cfg_.walk_count, cfg_.walk_len,
                                     mix64(cfg_.seed, static_cast<std::uint64_t>(index), sn));
      if (paths.empty()) continue;
      std::size_t lo = all_paths.size();
      for (auto& p : paths) all_paths.push_back(std::move(p));
      ranges.emplace_back(sn, std::pair(lo, all_paths.size()));
    }
    normalize_and_score(all_paths);
    std::map<EntityId, std::vector<WalkPath>> by_node;
    for (const auto& [sn, range] : ranges) {
      std::vector<WalkPath> slice(all_paths.begin() + static_cast<std::ptrdiff_t>(range.first),
                                  all_paths.begin() + static_cast<std::ptrdiff_t>(range.second));
      by_node.emplace(sn, std::move(slice));
    }
    malicious = filter_malicious(by_node, cfg_.delta);
  }

  for (const auto& [sn, paths] : malicious) {
    report.malicious.push_back(sn);
    path_count += paths.size();
    record.path_nodes.insert(sn);
    for (const auto& p : paths) {
      record.malicious_paths.push_back(p.edges);
      for (EntityId id : p.nodes) record.path_nodes.insert(id);
    }
  }
  for (EntityId sn : suspicious)
    if (!malicious.count(sn)) report.discarded.push_back(sn);

  if (!malicious.empty()) {
    std::vector<std::int64_t> correlated{index};
    for (auto it = history_.rbegin(); it != history_.rend(); ++it) {
      const auto& prior = it->second;
      bool intersects = false;
      for (EntityId id : prior.path_nodes) {
        if (record.path_nodes.count(id)) {
          intersects = true;
          break;
        }
      }
      // a prior window correlates when its stored malicious paths touch ours
      if (intersects && prior.alerted) correlated.push_back(prior.index);
    }
    std::sort(correlated.begin(), correlated.end());

    std::vector<const WindowRecord*> records;
    for (std::int64_t w : correlated)
      records.push_back(w == index ? &record : &history_.at(w));

    Alert alert;
    alert.window_index = index;
    alert.window_ids = correlated;
    alert.malicious_nodes = report.malicious;
    alert.path_count = path_count;
    alert.scenario = assemble_scenario(correlated, records, store_);
    report.alert = std::move(alert);
    record.alerted = true;
  }
  history_.emplace(index, std::move(record));
  report.timings.investigate_ms = timer.lap_ms();

  // --- Update -----------------------------------------------------------
  if (!cfg_.ablate_state_transfer) {
    report.rehearsal = update_pool(pool_, report.anomalous, store_, cfg_.gamma, index,
                                   cfg_.pool_capacity);
  }
  bool warmup = index < cfg_.warmup_windows && !window.events.empty();
  if (warmup || !report.rehearsal.empty()) {
    TemporalModel backup = model_;
    stash.restore(store_);
    bool ok = true;
    for (std::size_t k = 0; k < window.events.size(); ++k) {
      const auto& e = window.events[k];
      auto pseudo = pseudo_neighbors(e, flow);
      auto [rl, fine] =
          model_.train_event(store_, e, window.encodings[k], pseudo, cfg_.learn_rate,
                             cfg_.grad_clip);
      if (!fine) {
        ok = false;
        break;
      }
    }
    if (ok) {
      report.trained = true;
    } else {
      // Non-finite gradient: keep the old parameters and replay the pure
      // detection pass so entity state matches an untrained window.
      model_ = backup;
      stash.restore(store_);
      for (std::size_t k = 0; k < window.events.size(); ++k)
        model_.score_event(store_, window.events[k], window.encodings[k], {});
      report.train_aborted = true;
    }
  }
  report.pool_size = pool_.size();
  report.timings.update_ms = timer.lap_ms();
  return report;
}

}  // namespace driftwatch
