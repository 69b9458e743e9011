#include "driftwatch/investigation.hpp"

#include "driftwatch/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <unordered_map>
#include <unordered_set>

namespace driftwatch {

namespace {

constexpr double kWeightEps = 1e-9;

struct CollapsedEdge {
  EntityId src = kNoEntity, dst = kNoEntity;  // original event orientation
  EventKind kind = EventKind::Read;
  double rl = 0.0;
};

// Undirected simple graph: one representative (max rl) edge per node pair.
struct PairGraph {
  std::vector<EntityId> nodes;                       // sorted
  std::unordered_map<EntityId, int> index;           // id -> local
  std::vector<CollapsedEdge> edges;
  std::vector<std::vector<int>> adj;                 // local node -> edge indices

  int local(EntityId id) const {
    auto it = index.find(id);
    return it == index.end() ? -1 : it->second;
  }
};

PairGraph collapse(const WindowGraph& window) {
  PairGraph g;
  std::unordered_set<EntityId> node_set;
  std::map<std::pair<EntityId, EntityId>, CollapsedEdge> best;
  for (std::size_t i = 0; i < window.events.size(); ++i) {
    const auto& e = window.events[i];
    node_set.insert(e.subject);
    node_set.insert(e.object);
    if (e.subject == e.object) continue;
    double rl = i < window.rl.size() ? window.rl[i] : 0.0;
    auto key = std::minmax(e.subject, e.object);
    auto [it, inserted] = best.try_emplace(std::pair(key.first, key.second));
    if (inserted || rl > it->second.rl) it->second = {e.subject, e.object, e.kind, rl};
  }
  g.nodes.assign(node_set.begin(), node_set.end());
  std::sort(g.nodes.begin(), g.nodes.end());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) g.index[g.nodes[i]] = static_cast<int>(i);
  g.adj.resize(g.nodes.size());
  for (const auto& [key, edge] : best) {
    int id = static_cast<int>(g.edges.size());
    g.edges.push_back(edge);
    g.adj[g.index.at(edge.src)].push_back(id);
    g.adj[g.index.at(edge.dst)].push_back(id);
  }
  return g;
}

std::vector<int> component_labels(const PairGraph& g) {
  std::vector<int> label(g.nodes.size(), -1);
  int next = 0;
  for (std::size_t start = 0; start < g.nodes.size(); ++start) {
    if (label[start] != -1) continue;
    std::vector<int> stack{static_cast<int>(start)};
    label[start] = next;
    while (!stack.empty()) {
      int cur = stack.back();
      stack.pop_back();
      for (int ei : g.adj[static_cast<std::size_t>(cur)]) {
        const auto& e = g.edges[static_cast<std::size_t>(ei)];
        for (EntityId nid : {e.src, e.dst}) {
          int other = g.local(nid);
          if (label[static_cast<std::size_t>(other)] == -1) {
            label[static_cast<std::size_t>(other)] = next;
            stack.push_back(other);
          }
        }
      }
    }
    ++next;
  }
  return label;
}

struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(int n) : parent(static_cast<std::size_t>(n)) {
    for (int i = 0; i < n; ++i) parent[static_cast<std::size_t>(i)] = i;
  }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[static_cast<std::size_t>(b)] = a;
    return true;
  }
};

double transformed_weight(double rl, double rl_max) { return (rl_max - rl) + kWeightEps; }

MiniGraph tree_from_edges(const PairGraph& g, const std::vector<int>& edge_ids,
                          const std::vector<EntityId>& extra_nodes, std::int64_t window_index) {
  MiniGraph mg;
  for (EntityId id : extra_nodes) mg.nodes.insert(id);
  for (int ei : edge_ids) {
    const auto& e = g.edges[static_cast<std::size_t>(ei)];
    mg.add_edge({e.src, e.dst, e.kind, e.rl, window_index});
  }
  return mg;
}

// Exact minimum Steiner tree over the transformed weights: enumerate vertex
// supersets of the terminals, MST of each induced subgraph. Components are
// small (<= exact limit) so the subset walk is cheap.
std::optional<std::vector<int>> exact_steiner(const PairGraph& g,
                                              const std::vector<int>& comp_nodes,
                                              const std::vector<int>& terminals, double rl_max) {
  std::vector<int> optional_nodes;
  std::unordered_set<int> terminal_set(terminals.begin(), terminals.end());
  for (int n : comp_nodes)
    if (!terminal_set.count(n)) optional_nodes.push_back(n);

  double best_cost = std::numeric_limits<double>::infinity();
  std::optional<std::vector<int>> best;

  std::vector<int> edge_order(g.edges.size());
  for (std::size_t i = 0; i < g.edges.size(); ++i) edge_order[i] = static_cast<int>(i);
  std::sort(edge_order.begin(), edge_order.end(), [&](int a, int b) {
    double wa = transformed_weight(g.edges[static_cast<std::size_t>(a)].rl, rl_max);
    double wb = transformed_weight(g.edges[static_cast<std::size_t>(b)].rl, rl_max);
    if (wa != wb) return wa < wb;
    return a < b;
  });

  const auto subset_count = 1ull << optional_nodes.size();
  for (std::uint64_t mask = 0; mask < subset_count; ++mask) {
    std::unordered_set<int> vertices(terminals.begin(), terminals.end());
    for (std::size_t b = 0; b < optional_nodes.size(); ++b)
      if (mask & (1ull << b)) vertices.insert(optional_nodes[static_cast<std::size_t>(b)]);

    DisjointSet ds(static_cast<int>(g.nodes.size()));
    std::vector<int> chosen;
    double cost = 0.0;
    for (int ei : edge_order) {
      const auto& e = g.edges[static_cast<std::size_t>(ei)];
      int a = g.local(e.src), b = g.local(e.dst);
      if (!vertices.count(a) || !vertices.count(b)) continue;
      if (ds.unite(a, b)) {
        chosen.push_back(ei);
        cost += transformed_weight(e.rl, rl_max);
      }
    }
    // spanning tree over exactly this vertex set?
    if (chosen.size() + 1 != vertices.size()) continue;
    int root = ds.find(terminals[0]);
    bool connected = true;
    for (int v : vertices)
      if (ds.find(v) != root) {
        connected = false;
        break;
      }
    if (!connected) continue;
    if (cost < best_cost) {
      best_cost = cost;
      best = chosen;
    }
  }
  return best;
}

// Shortest-path heuristic: grow the tree from the first terminal by repeatedly
// attaching the closest remaining terminal along a shortest transformed path.
std::vector<int> approx_steiner(const PairGraph& g, const std::vector<int>& terminals,
                                double rl_max) {
  std::unordered_set<int> in_tree{terminals[0]};
  std::unordered_set<int> tree_edges;
  std::unordered_set<int> remaining(terminals.begin() + 1, terminals.end());

  while (!remaining.empty()) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(g.nodes.size(), inf);
    std::vector<int> via_edge(g.nodes.size(), -1);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    for (int v : in_tree) {
      dist[static_cast<std::size_t>(v)] = 0.0;
      heap.push({0.0, v});
    }
    while (!heap.empty()) {
      auto [d, v] = heap.top();
      heap.pop();
      if (d > dist[static_cast<std::size_t>(v)]) continue;
      for (int ei : g.adj[static_cast<std::size_t>(v)]) {
        const auto& e = g.edges[static_cast<std::size_t>(ei)];
        int other = g.local(e.src) == v ? g.local(e.dst) : g.local(e.src);
        double nd = d + transformed_weight(e.rl, rl_max);
        if (nd < dist[static_cast<std::size_t>(other)]) {
          dist[static_cast<std::size_t>(other)] = nd;
          via_edge[static_cast<std::size_t>(other)] = ei;
          heap.push({nd, other});
        }
      }
    }
    int best_terminal = -1;
    double best_dist = inf;
    for (int t : remaining) {
      double d = dist[static_cast<std::size_t>(t)];
      if (d < best_dist || (d == best_dist && (best_terminal == -1 || t < best_terminal))) {
        best_dist = d;
        best_terminal = t;
      }
    }
    if (best_terminal == -1) break;  // disconnected; caller groups by component
    int cur = best_terminal;
    while (!in_tree.count(cur)) {
      int ei = via_edge[static_cast<std::size_t>(cur)];
      tree_edges.insert(ei);
      in_tree.insert(cur);
      const auto& e = g.edges[static_cast<std::size_t>(ei)];
      cur = g.local(e.src) == cur ? g.local(e.dst) : g.local(e.src);
    }
    remaining.erase(best_terminal);
  }
  std::vector<int> out(tree_edges.begin(), tree_edges.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

void MiniGraph::add_edge(const MiniEdge& e) {
  nodes.insert(e.src);
  nodes.insert(e.dst);
  for (auto& existing : edges) {
    if (existing.key() == e.key()) {
      existing.rl = std::max(existing.rl, e.rl);
      return;
    }
  }
  edges.push_back(e);
}

void MiniGraph::absorb(const MiniGraph& other) {
  for (EntityId id : other.nodes) nodes.insert(id);
  for (const auto& e : other.edges) add_edge(e);
}

SteinerResult build_mini_trees(const WindowGraph& window, std::span<const EntityId> terminals,
                               int exact_node_limit) {
  SteinerResult result;
  result.used_exact = true;
  if (terminals.empty()) return result;

  PairGraph g = collapse(window);
  double rl_max = 0.0;
  for (double v : window.rl) rl_max = std::max(rl_max, v);

  std::vector<int> terminal_locals;
  for (EntityId t : terminals) {
    int local = g.local(t);
    if (local < 0)
      result.unreachable.push_back(t);
    else
      terminal_locals.push_back(local);
  }
  if (terminal_locals.empty()) return result;

  auto labels = component_labels(g);
  std::map<int, std::vector<int>> terms_by_comp;
  for (int t : terminal_locals) terms_by_comp[labels[static_cast<std::size_t>(t)]].push_back(t);
  std::map<int, std::vector<int>> nodes_by_comp;
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    nodes_by_comp[labels[i]].push_back(static_cast<int>(i));

  for (auto& [comp, terms] : terms_by_comp) {
    std::sort(terms.begin(), terms.end());
    if (terms.size() == 1) {
      MiniGraph mg;
      mg.nodes.insert(g.nodes[static_cast<std::size_t>(terms[0])]);
      result.trees.push_back(std::move(mg));
      continue;
    }
    const auto& comp_nodes = nodes_by_comp[comp];
    std::vector<int> edge_ids;
    if (static_cast<int>(comp_nodes.size()) <= exact_node_limit) {
      auto exact = exact_steiner(g, comp_nodes, terms, rl_max);
      if (exact) edge_ids = *exact;
    } else {
      result.used_exact = false;
      edge_ids = approx_steiner(g, terms, rl_max);
    }
    std::vector<EntityId> terminal_ids;
    for (int t : terms) terminal_ids.push_back(g.nodes[static_cast<std::size_t>(t)]);
    result.trees.push_back(tree_from_edges(g, edge_ids, terminal_ids, window.index));
  }
  return result;
}

std::size_t merge_mini_graph(std::vector<MiniGraph>& graphs, const MiniGraph& tree) {
  std::vector<std::size_t> hits;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    for (EntityId id : tree.nodes) {
      if (graphs[i].contains(id)) {
        hits.push_back(i);
        break;
      }
    }
  }
  if (hits.empty()) {
    graphs.push_back(tree);
    return graphs.size() - 1;
  }
  std::size_t target = hits.front();
  graphs[target].absorb(tree);
  for (std::size_t k = hits.size(); k-- > 1;) {
    graphs[target].absorb(graphs[hits[k]]);
    graphs.erase(graphs.begin() + static_cast<std::ptrdiff_t>(hits[k]));
  }
  return target;
}

double volatility(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(values.size()));
}

double spectral_peak_strength(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return 1.0;
  double max_mag = 0.0, sum_mag = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double angle = -2.0 * std::numbers::pi * static_cast<double>(k) * static_cast<double>(j) /
                     static_cast<double>(n);
      re += values[j] * std::cos(angle);
      im += values[j] * std::sin(angle);
    }
    double mag = std::hypot(re, im);
    max_mag = std::max(max_mag, mag);
    sum_mag += mag;
  }
  // No non-DC energy (constant sequences): trivially periodic.
  if (sum_mag < 1e-12) return 1.0;
  return max_mag / sum_mag;
}

double periodicity_score(std::span<const double> values, double eps) {
  return 1.0 / (spectral_peak_strength(values) + eps);
}

std::vector<WalkPath> random_walk_paths(const MiniGraph& mg, EntityId seed_node,
                                        const EntityStore& store, int walk_count, int walk_len,
                                        std::uint64_t seed) {
  std::vector<WalkPath> out;
  if (!mg.contains(seed_node)) return out;

  std::unordered_map<EntityId, std::vector<int>> adj;
  for (std::size_t i = 0; i < mg.edges.size(); ++i) {
    adj[mg.edges[i].src].push_back(static_cast<int>(i));
    if (mg.edges[i].dst != mg.edges[i].src) adj[mg.edges[i].dst].push_back(static_cast<int>(i));
  }

  std::mt19937_64 rng(seed);
  for (int w = 0; w < walk_count; ++w) {
    WalkPath path;
    path.nodes.push_back(seed_node);
    std::unordered_set<int> used;
    EntityId cur = seed_node;
    while (static_cast<int>(path.edges.size()) < walk_len) {
      auto it = adj.find(cur);
      if (it == adj.end()) break;
      std::vector<int> candidates;
      for (int ei : it->second)
        if (!used.count(ei)) candidates.push_back(ei);
      if (candidates.empty()) break;
      int pick = candidates[draw_below(rng, candidates.size())];
      used.insert(pick);
      const auto& e = mg.edges[static_cast<std::size_t>(pick)];
      cur = e.src == cur ? e.dst : e.src;
      path.nodes.push_back(cur);
      path.edges.push_back(e);
    }
    if (path.edges.empty()) continue;

    std::vector<double> rls;
    rls.reserve(path.edges.size());
    for (const auto& e : path.edges) rls.push_back(e.rl);
    path.volatility = volatility(rls);
    path.periodicity = periodicity_score(rls);
    std::unordered_set<std::string> names;
    for (EntityId id : path.nodes) names.insert(store.rec(id).attribute);
    path.heterogeneity =
        static_cast<double>(names.size()) / static_cast<double>(path.nodes.size());
    path.persistence = static_cast<double>(path.edges.size());
    out.push_back(std::move(path));
  }
  return out;
}

void normalize_and_score(std::span<WalkPath> paths) {
  if (paths.empty()) return;
  auto normalize = [&](auto getter) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& p : paths) {
      lo = std::min(lo, getter(p));
      hi = std::max(hi, getter(p));
    }
    return [lo, hi](double v) { return hi > lo ? (v - lo) / (hi - lo) : 0.0; };
  };
  auto nv = normalize([](const WalkPath& p) { return p.volatility; });
  auto np = normalize([](const WalkPath& p) { return p.periodicity; });
  auto nh = normalize([](const WalkPath& p) { return p.heterogeneity; });
  auto ns = normalize([](const WalkPath& p) { return p.persistence; });
  for (auto& p : paths)
    p.score = nv(p.volatility) + np(p.periodicity) + nh(p.heterogeneity) + ns(p.persistence);
}

std::map<EntityId, std::vector<WalkPath>> filter_malicious(
    const std::map<EntityId, std::vector<WalkPath>>& paths_by_node, double delta) {
  std::map<EntityId, std::vector<WalkPath>> out;
  for (const auto& [node, paths] : paths_by_node) {
    std::vector<WalkPath> retained;
    for (const auto& p : paths)
      if (p.score > delta) retained.push_back(p);
    if (!retained.empty()) out.emplace(node, std::move(retained));
  }
  return out;
}

ScenarioGraph assemble_scenario(std::span<const std::int64_t> window_ids,
                                std::span<const WindowRecord* const> records,
                                const EntityStore& store) {
  ScenarioGraph out;
  out.window_ids.assign(window_ids.begin(), window_ids.end());
  std::sort(out.window_ids.begin(), out.window_ids.end());

  std::set<EntityId> path_nodes;
  for (const auto* rec : records)
    path_nodes.insert(rec->path_nodes.begin(), rec->path_nodes.end());

  std::map<std::tuple<EntityId, EntityId, EventKind, std::int64_t>, MiniEdge> edges;
  auto put_edge = [&](const MiniEdge& e) {
    auto [it, inserted] = edges.try_emplace(e.key(), e);
    if (!inserted) it->second.rl = std::max(it->second.rl, e.rl);
  };
  for (const auto* rec : records) {
    for (const auto& path : rec->malicious_paths)
      for (const auto& e : path) put_edge(e);
    for (const auto& e : rec->flagged_events)
      if (path_nodes.count(e.src) || path_nodes.count(e.dst)) put_edge(e);
  }

  std::set<EntityId> node_ids(path_nodes);
  for (const auto& [key, e] : edges) {
    node_ids.insert(e.src);
    node_ids.insert(e.dst);
    out.edges.push_back(e);
  }
  for (EntityId id : node_ids) {
    const auto& rec = store.rec(id);
    out.nodes.push_back({id, rec.attribute, rec.kind, rec.ss});
  }
  return out;
}

}  // namespace driftwatch
