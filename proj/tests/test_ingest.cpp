#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "driftwatch/ingest.hpp"
#include "driftwatch/rng.hpp"

#include <map>
#include <random>
#include <set>
#include <sstream>

using namespace driftwatch;

namespace {

RuntimeConfig cfg() {
  RuntimeConfig c;
  c.validate();
  return c;
}

std::string line(const std::string& su, const std::string& ou, const std::string& sk,
                 const std::string& ok, const std::string& et, std::int64_t ts) {
  std::ostringstream os;
  os << R"({"subject_uuid":")" << su << R"(","object_uuid":")" << ou << R"(","subject_kind":")"
     << sk << R"(","object_kind":")" << ok << R"(","event_type":")" << et
     << R"(","timestamp_ns":)" << ts << R"(,"subject_attr":"sa","object_attr":"oa"})";
  return os.str();
}

// Independent oracle: temporal transitive closure of information flow.
// Processing events in order, reach[dst] accumulates reach[src] plus src.
std::map<EntityId, std::set<EntityId>> flow_closure(const std::vector<Event>& events) {
  std::map<EntityId, std::set<EntityId>> reach;
  for (const auto& e : events) {
    auto [src, dst] = flow_endpoints(e);
    if (src == dst) continue;
    auto& r = reach[dst];
    r.insert(src);
    for (EntityId x : reach[src]) r.insert(x);
  }
  return reach;
}

}  // namespace

TEST_CASE("parse accepts a well-formed read line") {
  EntityStore store;
  auto r = parse_text(line("u1", "u2", "PROCESS", "FILE", "READ", 42), store, cfg());
  REQUIRE(r.events.size() == 1);
  CHECK(r.errors.empty());
  CHECK(r.events[0].kind == EventKind::Read);
  CHECK(r.events[0].timestamp_ns == 42);
  CHECK(store.rec(r.events[0].subject).kind == EntityKind::Process);
  CHECK(store.rec(r.events[0].object).attribute == "oa");
}

TEST_CASE("parse rejects malformed lines without aborting") {
  EntityStore store;
  std::string text = line("u1", "u2", "PROCESS", "FILE", "OPEN", 1) + "\n" +   // bad event type
                     line("u1", "u2", "PROCESS", "FILE", "READ", 2) + "\n" +
                     "{not json\n" +
                     R"({"subject_uuid":"x"})" + "\n" +                         // missing keys
                     line("u1", "u2", "PROCESS", "DEVICE", "READ", 3) + "\n" +  // bad kind
                     line("u1", "u2", "FILE", "FILE", "READ", 4) + "\n" +       // bad subject
                     line("u1", "u2", "PROCESS", "FILE", "PSEUDO", 5) + "\n";   // internal only
  auto r = parse_text(text, store, cfg());
  CHECK(r.events.size() == 1);
  REQUIRE(r.errors.size() == 6);
  CHECK(r.errors[0].code == ParseErrorCode::UnknownEventType);
  CHECK(r.errors[0].line_no == 1);
  CHECK(r.errors[1].code == ParseErrorCode::BadJson);
  CHECK(r.errors[2].code == ParseErrorCode::MissingKey);
  CHECK(r.errors[3].code == ParseErrorCode::UnknownEntityKind);
  CHECK(r.errors[4].code == ParseErrorCode::SubjectNotProcess);
  CHECK(r.errors[5].code == ParseErrorCode::UnknownEventType);
}

TEST_CASE("parse flags non-integer timestamps") {
  EntityStore store;
  std::string bad = R"({"subject_uuid":"a","object_uuid":"b","subject_kind":"PROCESS",)"
                    R"("object_kind":"FILE","event_type":"READ","timestamp_ns":"soon",)"
                    R"("subject_attr":"x","object_attr":"y"})";
  auto r = parse_text(bad, store, cfg());
  CHECK(r.events.empty());
  REQUIRE(r.errors.size() == 1);
  CHECK(r.errors[0].code == ParseErrorCode::BadTimestamp);
}

TEST_CASE("whitelist drops read-only library events") {
  auto c = cfg();
  EntityStore store;
  auto proc = store.intern("p", EntityKind::Process, "app", c.mem_dim);
  auto libc = store.intern("l", EntityKind::File, "/lib/x86_64/libc.so", c.mem_dim);
  auto data = store.intern("d", EntityKind::File, "/home/u/data.txt", c.mem_dim);
  Whitelist wl{c.whitelist};

  std::vector<Event> events = {
      {proc, libc, EventKind::Read, 1, 0},
      {proc, libc, EventKind::Mmap, 2, 1},
      {proc, libc, EventKind::Write, 3, 2},  // writes are never dropped
      {proc, data, EventKind::Read, 4, 3},
  };
  auto kept = whitelist_filter(events, wl, store);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].kind == EventKind::Write);
  CHECK(kept[1].object == data);

  CHECK(whitelist_filter(events, Whitelist{}, store).size() == events.size());
}

TEST_CASE("whitelist matches basenames and suffixes") {
  Whitelist wl{{"libc.so", "libdl"}};
  CHECK(wl.matches("/lib/x86_64-linux-gnu/libc.so"));
  CHECK(wl.matches("/lib/libdl-2.15.so"));
  CHECK(wl.matches("libc.so"));
  CHECK(!wl.matches("/home/user/libconfig.txt"));
}

TEST_CASE("cpr merges the repeated-receive motif to one event") {
  std::vector<Event> events;
  for (int i = 0; i < 198; ++i)
    events.push_back({1, 2, EventKind::Recvfrom, i, static_cast<std::uint64_t>(i)});
  auto reduced = cpr_reduce(events);
  REQUIRE(reduced.size() == 1);
  CHECK(reduced[0].timestamp_ns == 0);  // earliest kept
}

TEST_CASE("cpr keeps alternating-direction events") {
  std::vector<Event> events = {
      {1, 2, EventKind::Read, 1, 0},
      {1, 2, EventKind::Write, 2, 1},
      {1, 2, EventKind::Read, 3, 2},
  };
  CHECK(cpr_reduce(events).size() == 3);
}

TEST_CASE("cpr output is shorter, ordered, and idempotent") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Event> events;
    int n = 2 + static_cast<int>(draw_below(rng, 20));
    for (int i = 0; i < n; ++i) {
      Event e;
      e.subject = static_cast<EntityId>(draw_below(rng, 4));
      e.object = static_cast<EntityId>(4 + draw_below(rng, 4));
      e.kind = static_cast<EventKind>(draw_below(rng, 8));
      e.timestamp_ns = i;
      e.seq = static_cast<std::uint64_t>(i);
      events.push_back(e);
    }
    auto once = cpr_reduce(events);
    CHECK(once.size() <= events.size());
    for (std::size_t i = 1; i < once.size(); ++i)
      CHECK(event_order_lt(once[i - 1], once[i]));
    auto twice = cpr_reduce(once);
    REQUIRE(twice.size() == once.size());
    for (std::size_t i = 0; i < once.size(); ++i) CHECK(twice[i].seq == once[i].seq);
  }
}

TEST_CASE("cpr preserves temporal information-flow reachability") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Event> events;
    int n = 1 + static_cast<int>(draw_below(rng, 12));
    for (int i = 0; i < n; ++i) {
      Event e;
      e.subject = static_cast<EntityId>(draw_below(rng, 3));
      e.object = static_cast<EntityId>(3 + draw_below(rng, 3));
      e.kind = static_cast<EventKind>(draw_below(rng, 8));
      e.timestamp_ns = i;
      e.seq = static_cast<std::uint64_t>(i);
      events.push_back(e);
    }
    auto reduced = cpr_reduce(events);
    CHECK(flow_closure(events) == flow_closure(reduced));
  }
}
