#pragma once

#include "driftwatch/config.hpp"
#include "driftwatch/types.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <vector>

namespace driftwatch {

struct MiniEdge {
  EntityId src = kNoEntity;
  EntityId dst = kNoEntity;
  EventKind kind = EventKind::Read;
  double rl = 0.0;
  std::int64_t window = 0;

  auto key() const { return std::tuple(src, dst, kind, window); }
  bool operator<(const MiniEdge& o) const { return key() < o.key(); }
};

// Connected union of per-window investigation trees. Edges keep the rl they
// had in their source window.
struct MiniGraph {
  std::set<EntityId> nodes;
  std::vector<MiniEdge> edges;  // unique by (src, dst, kind, window)

  bool contains(EntityId id) const { return nodes.count(id) != 0; }
  void add_edge(const MiniEdge& e);
  void absorb(const MiniGraph& other);
};

struct SteinerResult {
  std::vector<MiniGraph> trees;           // one per component holding terminals
  std::vector<EntityId> unreachable;      // terminals absent from the window graph
  bool used_exact = false;                // exact solver on every component
};

// Tree(s) spanning the terminal set in the window graph, maximizing total
// edge rl via the transformed weight (max_rl - rl + eps). Components with at
// most `exact_node_limit` nodes are solved exactly; larger ones use the
// shortest-path (Takahashi-Matsuyama) 2-approximation.
SteinerResult build_mini_trees(const WindowGraph& window, std::span<const EntityId> terminals,
                               int exact_node_limit = 8);

// Merges a tree into every mini-graph sharing at least one node, transitively
// coalescing the graphs it bridges; otherwise appends it as a new mini-graph.
// Returns the index of the graph that received the tree.
std::size_t merge_mini_graph(std::vector<MiniGraph>& graphs, const MiniGraph& tree);

struct WalkPath {
  std::vector<EntityId> nodes;  // visited order, starts at the seed node
  std::vector<MiniEdge> edges;
  double volatility = 0.0;
  double periodicity = 0.0;
  double heterogeneity = 0.0;
  double persistence = 0.0;
  double score = 0.0;  // sum of the four min-max normalized features
};

// Population standard deviation of a sequence.
double volatility(std::span<const double> values);

// Strength of the dominant non-DC spectral line: max |X_k| / sum |X_k| over
// k >= 1. Degenerate spectra (fewer than two samples, or no non-DC energy)
// count as fully periodic (1.0).
double spectral_peak_strength(std::span<const double> values);

// 1 / (peak strength + eps): near 1 for strongly periodic sequences, larger
// for erratic ones.
double periodicity_score(std::span<const double> values, double eps = 1e-6);

// Seeded random walks from `seed_node` over the mini-graph, undirected, each
// edge at most once per walk, up to walk_len edges. Walks that cannot leave
// the seed are dropped. Raw features are filled; scores are not.
std::vector<WalkPath> random_walk_paths(const MiniGraph& mg, EntityId seed_node,
                                        const EntityStore& store, int walk_count, int walk_len,
                                        std::uint64_t seed);

// Min-max normalizes the four features across `paths` (degenerate ranges
// normalize to 0) and fills each score with the sum.
void normalize_and_score(std::span<WalkPath> paths);

// Paths scoring strictly above delta, grouped by their seed suspicious node.
// A node with at least one retained path is malicious.
std::map<EntityId, std::vector<WalkPath>> filter_malicious(
    const std::map<EntityId, std::vector<WalkPath>>& paths_by_node, double delta);

struct ScenarioNode {
  EntityId id = kNoEntity;
  std::string name;
  EntityKind kind = EntityKind::Process;
  double ss = 0.0;
};

struct ScenarioGraph {
  std::vector<std::int64_t> window_ids;  // sorted
  std::vector<ScenarioNode> nodes;       // sorted by id
  std::vector<MiniEdge> edges;           // sorted, unique
};

// Per-window records kept for cross-window correlation and scenario assembly.
struct WindowRecord {
  std::int64_t index = 0;
  std::vector<std::vector<MiniEdge>> malicious_paths;  // retained path edges
  std::set<EntityId> path_nodes;                       // nodes on retained paths
  std::vector<MiniEdge> flagged_events;                // rl > sigma of this window
  bool alerted = false;
};

// Union of the malicious paths of the given windows plus each window's
// flagged events incident to a path node.
ScenarioGraph assemble_scenario(std::span<const std::int64_t> window_ids,
                                std::span<const WindowRecord* const> records,
                                const EntityStore& store);

}  // namespace driftwatch
