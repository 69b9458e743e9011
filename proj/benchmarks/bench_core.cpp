#include "driftwatch/encoding.hpp"
#include "driftwatch/ingest.hpp"
#include "driftwatch/investigation.hpp"
#include "driftwatch/model.hpp"
#include "driftwatch/pipeline.hpp"
#include "driftwatch/rng.hpp"
#include "driftwatch/synth.hpp"

#include <benchmark/benchmark.h>

#include <map>
#include <random>

using namespace driftwatch;

static void BM_FeatureHash(benchmark::State& state) {
  std::string path = "/usr/lib/x86_64-linux-gnu/firefox/browser/omni.ja";
  for (auto _ : state) {
    auto v = feature_hash(path, EntityKind::File, 64);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_FeatureHash);

static void BM_EncodeEvent(benchmark::State& state) {
  RuntimeConfig cfg;
  EntityStore store;
  auto p = store.intern("p", EntityKind::Process, "firefox", cfg.mem_dim);
  auto f = store.intern("f", EntityKind::File, "/home/user/.cache/entry.dat", cfg.mem_dim);
  Event e{p, f, EventKind::Read, 1000, 0};
  for (auto _ : state) {
    auto v = encode_event(e, store, cfg);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_EncodeEvent);

static void BM_CprReduce(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::vector<Event> events;
  for (int i = 0; i < state.range(0); ++i) {
    Event e;
    e.subject = static_cast<EntityId>(draw_below(rng, 16));
    e.object = static_cast<EntityId>(16 + draw_below(rng, 64));
    e.kind = static_cast<EventKind>(draw_below(rng, 8));
    e.timestamp_ns = i;
    e.seq = static_cast<std::uint64_t>(i);
    events.push_back(e);
  }
  for (auto _ : state) {
    auto out = cpr_reduce(events);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CprReduce)->Arg(1000)->Arg(10000);

static void BM_ScoreEvent(benchmark::State& state) {
  RuntimeConfig cfg;
  EntityStore store;
  TemporalModel model = TemporalModel::from_config(cfg);
  auto p = store.intern("p", EntityKind::Process, "nginx", cfg.mem_dim);
  std::vector<Event> events;
  std::vector<Eigen::VectorXd> encs;
  for (int i = 0; i < 16; ++i) {
    auto f = store.intern("f" + std::to_string(i), EntityKind::File,
                          "/srv/data" + std::to_string(i), cfg.mem_dim);
    Event e{p, f, i % 2 ? EventKind::Read : EventKind::Write,
            1'000'000'000LL * (i + 1), static_cast<std::uint64_t>(i)};
    events.push_back(e);
    encs.push_back(encode_event(e, store, cfg));
  }
  std::size_t i = 0;
  for (auto _ : state) {
    auto rl = model.score_event(store, events[i % events.size()], encs[i % events.size()], {});
    benchmark::DoNotOptimize(rl);
    ++i;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ScoreEvent);

static void BM_TrainEvent(benchmark::State& state) {
  RuntimeConfig cfg;
  EntityStore store;
  TemporalModel model = TemporalModel::from_config(cfg);
  auto p = store.intern("p", EntityKind::Process, "nginx", cfg.mem_dim);
  auto f = store.intern("f", EntityKind::File, "/srv/a.dat", cfg.mem_dim);
  Event e{p, f, EventKind::Read, 1'000'000'000, 0};
  auto enc = encode_event(e, store, cfg);
  for (auto _ : state) {
    auto out = model.train_event(store, e, enc, {}, cfg.learn_rate, cfg.grad_clip);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_TrainEvent);

static void BM_SteinerTree(benchmark::State& state) {
  std::mt19937_64 rng(11);
  WindowGraph window;
  int n = static_cast<int>(state.range(0));
  for (int i = 0; i < 4 * n; ++i) {
    Event e;
    e.subject = static_cast<EntityId>(draw_below(rng, static_cast<std::uint64_t>(n)));
    e.object = static_cast<EntityId>(draw_below(rng, static_cast<std::uint64_t>(n)));
    if (e.subject == e.object) continue;
    e.kind = EventKind::Read;
    e.timestamp_ns = i;
    e.seq = static_cast<std::uint64_t>(i);
    window.events.push_back(e);
    window.rl.push_back(draw_range(rng, 0.0, 3.0));
  }
  std::vector<EntityId> terminals = {0, static_cast<EntityId>(n / 2),
                                     static_cast<EntityId>(n - 1)};
  for (auto _ : state) {
    auto result = build_mini_trees(window, terminals);
    benchmark::DoNotOptimize(result);
  }
}
BENCHMARK(BM_SteinerTree)->Arg(64)->Arg(256);

static void BM_RandomWalks(benchmark::State& state) {
  std::mt19937_64 rng(13);
  MiniGraph mg;
  EntityStore store;
  for (int i = 0; i < 64; ++i)
    store.intern("n" + std::to_string(i), EntityKind::Process, "proc" + std::to_string(i % 8), 4);
  for (int i = 0; i < 160; ++i) {
    auto a = static_cast<EntityId>(draw_below(rng, 64));
    auto b = static_cast<EntityId>(draw_below(rng, 64));
    if (a == b) continue;
    mg.add_edge({a, b, EventKind::Read, draw_range(rng, 0.0, 3.0),
                 static_cast<std::int64_t>(i % 10)});
  }
  for (auto _ : state) {
    auto paths = random_walk_paths(mg, 0, store, 20, 16, 99);
    normalize_and_score(paths);
    benchmark::DoNotOptimize(paths);
  }
}
BENCHMARK(BM_RandomWalks);

static void BM_WindowPipeline(benchmark::State& state) {
  ScenarioSpec spec;
  spec.windows = 4;
  spec.drift_window = -1;
  spec.attack_windows.clear();
  auto out = generate(spec);
  for (auto _ : state) {
    state.PauseTiming();
    RuntimeConfig cfg;
    Engine engine(cfg);
    auto parsed = parse_text(out.stream_jsonl, engine.entities(), cfg);
    engine.set_origin_ns(0);
    std::map<std::int64_t, std::vector<Event>> by_window;
    for (const auto& e : parsed.events)
      by_window[window_index_of(e.timestamp_ns, 0, cfg.window_ns)].push_back(e);
    state.ResumeTiming();
    for (auto& [w, events] : by_window) {
      auto report = engine.advance_window(w, std::move(events));
      benchmark::DoNotOptimize(report);
    }
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(out.event_count));
}
BENCHMARK(BM_WindowPipeline)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
