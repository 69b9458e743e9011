#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "driftwatch/investigation.hpp"
#include "driftwatch/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

using namespace driftwatch;

namespace {

WindowGraph window_with(std::vector<std::tuple<EntityId, EntityId, double>> edges,
                        std::int64_t index = 0) {
  WindowGraph w;
  w.index = index;
  std::uint64_t seq = 0;
  for (auto [a, b, rl] : edges) {
    Event e;
    e.subject = a;
    e.object = b;
    e.kind = EventKind::Read;
    e.timestamp_ns = static_cast<std::int64_t>(seq);
    e.seq = seq++;
    w.events.push_back(e);
    w.rl.push_back(rl);
  }
  return w;
}

EntityStore named_store(const std::vector<std::string>& names) {
  EntityStore store;
  for (std::size_t i = 0; i < names.size(); ++i)
    store.intern("n" + std::to_string(i), EntityKind::Process, names[i], 4);
  return store;
}

// Brute-force Steiner oracle: enumerate edge subsets, keep subsets that form
// a tree containing all terminals, maximize the rl sum. Independent of the
// library's vertex-subset solver.
struct BruteResult {
  bool found = false;
  double best_rl = 0.0;
  double best_transformed = 0.0;
};

BruteResult brute_force_steiner(const std::vector<std::tuple<EntityId, EntityId, double>>& edges,
                                const std::set<EntityId>& terminals, double rl_max) {
  BruteResult result;
  auto m = edges.size();
  for (std::uint64_t mask = 0; mask < (1ull << m); ++mask) {
    std::set<EntityId> nodes;
    std::map<EntityId, std::vector<EntityId>> adj;
    double rl_sum = 0.0, transformed = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < m; ++i) {
      if (!(mask & (1ull << i))) continue;
      auto [a, b, rl] = edges[i];
      nodes.insert(a);
      nodes.insert(b);
      adj[a].push_back(b);
      adj[b].push_back(a);
      rl_sum += rl;
      transformed += (rl_max - rl) + 1e-9;
      ++count;
    }
    if (count == 0) continue;
    bool has_terminals = true;
    for (EntityId t : terminals)
      if (!nodes.count(t)) has_terminals = false;
    if (!has_terminals) continue;
    if (static_cast<std::size_t>(count) + 1 != nodes.size()) continue;  // not a tree
    // connectivity
    std::set<EntityId> seen{*nodes.begin()};
    std::vector<EntityId> stack{*nodes.begin()};
    while (!stack.empty()) {
      EntityId cur = stack.back();
      stack.pop_back();
      for (EntityId nxt : adj[cur])
        if (seen.insert(nxt).second) stack.push_back(nxt);
    }
    if (seen.size() != nodes.size()) continue;
    if (!result.found || transformed < result.best_transformed) {
      result.found = true;
      result.best_rl = rl_sum;
      result.best_transformed = transformed;
    }
  }
  return result;
}

}  // namespace

TEST_CASE("volatility and spectral features") {
  std::vector<double> constant = {0.7, 0.7, 0.7, 0.7};
  CHECK(volatility(constant) == 0.0);
  CHECK(spectral_peak_strength(constant) == 1.0);  // no non-DC energy

  std::vector<double> alternating = {1, 0, 1, 0, 1, 0, 1, 0};
  CHECK(spectral_peak_strength(alternating) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(periodicity_score(alternating) == doctest::Approx(1.0).epsilon(1e-5));

  std::vector<double> single = {0.4};
  CHECK(spectral_peak_strength(single) == 1.0);
  CHECK(volatility(single) == 0.0);
}

TEST_CASE("periodic sequences score lower periodicity than random ones") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t n = 8 + 2 * draw_below(rng, 5);
    double a = draw_range(rng, 0.5, 2.0);
    double b = draw_range(rng, 0.2, 1.0);
    std::vector<double> periodic, random;
    for (std::size_t i = 0; i < n; ++i) {
      periodic.push_back(a + (i % 2 == 0 ? b : -b));
      random.push_back(draw_range(rng, 0.0, 3.0));
    }
    CHECK(periodicity_score(periodic) < periodicity_score(random));
  }
}

TEST_CASE("single suspicious node yields a node-only tree") {
  auto w = window_with({{1, 2, 0.5}});
  std::vector<EntityId> terminals = {1};
  auto result = build_mini_trees(w, terminals);
  REQUIRE(result.trees.size() == 1);
  CHECK(result.trees[0].nodes == std::set<EntityId>{1});
  CHECK(result.trees[0].edges.empty());
  CHECK(result.unreachable.empty());
}

TEST_CASE("triangle prefers the high-loss detour") {
  auto w = window_with({{1, 2, 5.0}, {2, 3, 4.0}, {1, 3, 1.0}});
  std::vector<EntityId> terminals = {1, 3};
  auto result = build_mini_trees(w, terminals);
  REQUIRE(result.trees.size() == 1);
  const auto& tree = result.trees[0];
  double rl_sum = 0.0;
  for (const auto& e : tree.edges) rl_sum += e.rl;
  CHECK(rl_sum == doctest::Approx(9.0));
  CHECK(tree.nodes == std::set<EntityId>{1, 2, 3});
  CHECK(result.used_exact);
}

TEST_CASE("terminals in separate components produce one tree each") {
  auto w = window_with({{1, 2, 1.0}, {3, 4, 1.0}});
  std::vector<EntityId> terminals = {1, 2, 3};
  auto result = build_mini_trees(w, terminals);
  CHECK(result.trees.size() == 2);
}

TEST_CASE("terminals missing from the window graph are reported") {
  auto w = window_with({{1, 2, 1.0}});
  std::vector<EntityId> terminals = {1, 77};
  auto result = build_mini_trees(w, terminals);
  REQUIRE(result.unreachable.size() == 1);
  CHECK(result.unreachable[0] == 77);
  REQUIRE(result.trees.size() == 1);
}

TEST_CASE("mini trees span terminals, stay acyclic, and match the brute-force oracle") {
  std::mt19937_64 rng(47);
  int exact_hits = 0;
  for (int trial = 0; trial < 100; ++trial) {
    // random sparse graph: <= 8 nodes, <= 10 edges, <= 3 terminals
    int n = 3 + static_cast<int>(draw_below(rng, 6));
    int m = 2 + static_cast<int>(draw_below(rng, 9));
    std::vector<std::tuple<EntityId, EntityId, double>> edges;
    std::set<std::pair<EntityId, EntityId>> used;
    for (int i = 0; i < m; ++i) {
      auto a = static_cast<EntityId>(draw_below(rng, n));
      auto b = static_cast<EntityId>(draw_below(rng, n));
      if (a == b) continue;
      auto key = std::minmax(a, b);
      if (!used.insert(std::pair(key.first, key.second)).second) continue;
      edges.emplace_back(a, b, draw_range(rng, 0.1, 3.0));
    }
    if (edges.empty()) continue;
    double rl_max = 0.0;
    for (auto& [a, b, rl] : edges) rl_max = std::max(rl_max, rl);

    int t_count = 2 + static_cast<int>(draw_below(rng, 2));
    std::set<EntityId> terminals;
    while (static_cast<int>(terminals.size()) < t_count)
      terminals.insert(static_cast<EntityId>(draw_below(rng, n)));

    auto w = window_with(edges);
    std::vector<EntityId> term_vec(terminals.begin(), terminals.end());
    auto result = build_mini_trees(w, term_vec);

    // structural checks on every returned tree
    std::set<EntityId> covered;
    for (const auto& tree : result.trees) {
      CHECK(tree.edges.size() + 1 >= tree.nodes.size());  // connected
      CHECK(tree.edges.size() < std::max<std::size_t>(tree.nodes.size(), 1));  // acyclic
      for (EntityId t : terminals)
        if (tree.contains(t)) covered.insert(t);
    }
    for (EntityId t : result.unreachable) covered.insert(t);
    CHECK(covered.size() == terminals.size());

    // single-component instances: compare against the brute-force optimum
    if (result.trees.size() == 1 && result.unreachable.empty() && result.used_exact) {
      auto brute = brute_force_steiner(edges, terminals, rl_max);
      REQUIRE(brute.found);
      double got_transformed = 0.0, got_rl = 0.0;
      for (const auto& e : result.trees[0].edges) {
        got_transformed += (rl_max - e.rl) + 1e-9;
        got_rl += e.rl;
      }
      CHECK(got_transformed <= brute.best_transformed + 1e-9);  // exact solver is optimal
      CHECK(got_rl == doctest::Approx(brute.best_rl).epsilon(1e-9));
      ++exact_hits;
    }
  }
  CHECK(exact_hits > 20);
}

TEST_CASE("mini graph merge coalesces transitively") {
  std::vector<MiniGraph> graphs;

  MiniGraph t1;
  t1.add_edge({1, 2, EventKind::Read, 1.0, 0});
  merge_mini_graph(graphs, t1);
  REQUIRE(graphs.size() == 1);

  MiniGraph t2;
  t2.add_edge({5, 6, EventKind::Read, 1.0, 1});
  merge_mini_graph(graphs, t2);
  REQUIRE(graphs.size() == 2);  // disjoint: becomes a new mini graph

  MiniGraph t3;
  t3.add_edge({2, 3, EventKind::Write, 2.0, 2});
  merge_mini_graph(graphs, t3);
  REQUIRE(graphs.size() == 2);  // extends the first
  CHECK(graphs[0].contains(3));

  MiniGraph bridge;
  bridge.add_edge({3, 5, EventKind::Fork, 3.0, 3});
  merge_mini_graph(graphs, bridge);
  REQUIRE(graphs.size() == 1);  // bridges both into one
  for (EntityId id : {1u, 2u, 3u, 5u, 6u}) CHECK(graphs[0].contains(id));
}

TEST_CASE("merge agrees with a union-find oracle on random tree sequences") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<MiniGraph> graphs;
    std::map<EntityId, EntityId> parent;
    std::function<EntityId(EntityId)> find = [&](EntityId x) {
      while (parent[x] != x) {
        parent[x] = parent[parent[x]];
        x = parent[x];
      }
      return x;
    };
    for (int step = 0; step < 12; ++step) {
      auto a = static_cast<EntityId>(draw_below(rng, 12));
      auto b = static_cast<EntityId>(draw_below(rng, 12));
      if (a == b) continue;
      MiniGraph t;
      t.add_edge({a, b, EventKind::Read, 1.0, step});
      merge_mini_graph(graphs, t);
      parent.try_emplace(a, a);
      parent.try_emplace(b, b);
      parent[find(a)] = find(b);
    }
    // number of mini graphs equals the number of union-find components
    std::set<EntityId> roots;
    for (auto& [node, p] : parent) roots.insert(find(node));
    CHECK(graphs.size() == roots.size());
  }
}

TEST_CASE("random walks respect seeds, caps, and edge-once traversal") {
  MiniGraph mg;
  mg.add_edge({1, 2, EventKind::Read, 0.5, 0});
  mg.add_edge({2, 3, EventKind::Write, 1.5, 0});
  mg.add_edge({3, 4, EventKind::Read, 0.7, 1});
  mg.add_edge({2, 4, EventKind::Fork, 2.5, 1});
  mg.add_edge({4, 5, EventKind::Exec, 3.0, 1});
  auto store = named_store({"z", "a", "b", "a", "c", "d"});

  auto run = [&](std::uint64_t seed) {
    return random_walk_paths(mg, 1, store, 20, 16, seed);
  };
  auto p1 = run(9);
  auto p2 = run(9);
  auto p3 = run(10);
  REQUIRE(!p1.empty());
  REQUIRE(p1.size() == p2.size());
  for (std::size_t i = 0; i < p1.size(); ++i) {
    CHECK(p1[i].nodes == p2[i].nodes);
    CHECK(p1[i].edges.size() == p2[i].edges.size());
  }
  bool any_diff = p1.size() != p3.size();
  for (std::size_t i = 0; !any_diff && i < p1.size(); ++i) any_diff = p1[i].nodes != p3[i].nodes;
  CHECK(any_diff);

  for (const auto& p : p1) {
    CHECK(p.edges.size() <= 16);
    CHECK(p.nodes.front() == 1);
    std::set<std::tuple<EntityId, EntityId, EventKind, std::int64_t>> seen;
    for (const auto& e : p.edges) CHECK(seen.insert(e.key()).second);  // edge once per walk
    CHECK(p.persistence == doctest::Approx(static_cast<double>(p.edges.size())));
  }
}

TEST_CASE("walks from an isolated node are dropped") {
  MiniGraph mg;
  mg.nodes.insert(42);
  auto store = named_store({});
  CHECK(random_walk_paths(mg, 42, store, 20, 16, 1).empty());
}

TEST_CASE("heterogeneity counts distinct names over path length") {
  // chain n1(a) - n2(b) - n3(a) - n4(c): forced single walk
  MiniGraph mg;
  mg.add_edge({1, 2, EventKind::Read, 1.0, 0});
  mg.add_edge({2, 3, EventKind::Read, 1.0, 0});
  mg.add_edge({3, 4, EventKind::Read, 1.0, 0});
  auto store = named_store({"x", "a", "b", "a", "c"});
  auto paths = random_walk_paths(mg, 1, store, 1, 16, 7);
  REQUIRE(paths.size() == 1);
  CHECK(paths[0].nodes.size() == 4);
  CHECK(paths[0].heterogeneity == doctest::Approx(3.0 / 4.0));
}

TEST_CASE("normalization and the malicious filter") {
  std::vector<WalkPath> paths(3);
  paths[0].volatility = 1.0;
  paths[0].periodicity = 10.0;
  paths[0].heterogeneity = 1.0;
  paths[0].persistence = 8.0;
  paths[1].volatility = 0.5;
  paths[1].periodicity = 5.0;
  paths[1].heterogeneity = 0.5;
  paths[1].persistence = 4.0;
  paths[2].volatility = 0.0;
  paths[2].periodicity = 1.0;
  paths[2].heterogeneity = 0.25;
  paths[2].persistence = 1.0;
  normalize_and_score(paths);
  CHECK(paths[0].score == doctest::Approx(4.0));
  CHECK(paths[2].score == doctest::Approx(0.0));
  CHECK(paths[1].score > 0.0);
  CHECK(paths[1].score < 4.0);

  SUBCASE("degenerate ranges normalize to zero") {
    std::vector<WalkPath> same(2);
    for (auto& p : same) {
      p.volatility = 0.3;
      p.periodicity = 2.0;
      p.heterogeneity = 0.5;
      p.persistence = 3.0;
    }
    normalize_and_score(same);
    CHECK(same[0].score == 0.0);
    CHECK(same[1].score == 0.0);
  }

  SUBCASE("filter keeps only strictly above-threshold paths") {
    std::map<EntityId, std::vector<WalkPath>> by_node;
    WalkPath low, high;
    low.score = 0.65;
    high.score = 0.72;
    by_node[1] = {low, high};
    by_node[2] = {low};
    auto mn = filter_malicious(by_node, 0.7);
    REQUIRE(mn.size() == 1);
    REQUIRE(mn.count(1) == 1);
    CHECK(mn.at(1).size() == 1);
    CHECK(mn.at(1)[0].score == doctest::Approx(0.72));

    CHECK(filter_malicious(by_node, 4.0).empty());  // above the max possible sum
  }
}

TEST_CASE("scenario assembly keeps only path edges and incident flagged events") {
  auto store = named_store({"p0", "p1", "p2", "p3", "p4", "p5"});
  WindowRecord w1;
  w1.index = 1;
  w1.malicious_paths = {{{1, 2, EventKind::Read, 2.0, 1}}};
  w1.path_nodes = {1, 2};
  w1.flagged_events = {
      {2, 3, EventKind::Write, 1.5, 1},  // incident to path node 2: kept
      {4, 5, EventKind::Read, 1.2, 1},   // not incident: dropped
  };
  std::vector<std::int64_t> ids = {1};
  std::vector<const WindowRecord*> recs = {&w1};
  auto scenario = assemble_scenario(ids, recs, store);
  CHECK(scenario.edges.size() == 2);
  std::set<EntityId> nodes;
  for (const auto& n : scenario.nodes) nodes.insert(n.id);
  CHECK(nodes == std::set<EntityId>{1, 2, 3});
}
