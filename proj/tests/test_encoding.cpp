#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "driftwatch/encoding.hpp"
#include "driftwatch/rng.hpp"

#include <cmath>
#include <random>

using namespace driftwatch;

namespace {

RuntimeConfig default_cfg() {
  RuntimeConfig cfg;
  cfg.validate();
  return cfg;
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

}  // namespace

TEST_CASE("relation encoding is one-hot by declaration order") {
  auto read = relation_encode(EventKind::Read);
  CHECK(read[2] == 1.0);
  CHECK(read.sum() == doctest::Approx(1.0));

  auto pseudo = relation_encode(EventKind::Pseudo);
  CHECK(pseudo[8] == 1.0);

  for (int k = 0; k < kRelationDim; ++k) {
    auto v = relation_encode(static_cast<EventKind>(k));
    CHECK(v.sum() == doctest::Approx(1.0));
    CHECK(v[k] == 1.0);
  }
}

TEST_CASE("feature hash basics") {
  CHECK(feature_hash("", EntityKind::File, 64).norm() == 0.0);
  CHECK(feature_hash("", EntityKind::Process, 64).norm() == 0.0);

  auto a = feature_hash("/usr/local/share", EntityKind::File, 64);
  auto b = feature_hash("/usr/local/share", EntityKind::File, 64);
  CHECK((a - b).norm() == 0.0);
  CHECK(a.norm() == doctest::Approx(1.0));
}

TEST_CASE("hierarchical hashing keeps shared prefixes close") {
  auto share = feature_hash("/usr/local/share", EntityKind::File, 64);
  auto lib = feature_hash("/usr/local/lib", EntityKind::File, 64);
  auto shells = feature_hash("/usr/ports/shells", EntityKind::File, 64);
  CHECK(cosine(share, lib) > cosine(share, shells));
}

TEST_CASE("initial suspicion per kind") {
  CHECK(initial_suspicion(EntityKind::Socket) == 1.0);
  CHECK(initial_suspicion(EntityKind::Process) == 0.0);
  CHECK(initial_suspicion(EntityKind::File) == 0.0);
}

TEST_CASE("state transfer rule") {
  auto cfg = default_cfg();
  EntityStore store;
  auto proc = store.intern("p1", EntityKind::Process, "nginx", cfg.mem_dim);
  auto sock = store.intern("s1", EntityKind::Socket, "1.2.3.4:80", cfg.mem_dim);
  auto file = store.intern("f1", EntityKind::File, "/tmp/x", cfg.mem_dim);

  SUBCASE("recvfrom moves state to the subject") {
    Event e{proc, sock, EventKind::Recvfrom, 10, 0};
    apply_state_transfer(e, store, cfg);
    CHECK(store.rec(proc).ss == doctest::Approx(0.95).epsilon(1e-12));
    CHECK(store.rec(sock).ss == 1.0);
  }

  SUBCASE("benign read is a fixpoint") {
    Event e{proc, file, EventKind::Read, 10, 0};
    apply_state_transfer(e, store, cfg);
    CHECK(store.rec(proc).ss == 0.0);
    CHECK(store.rec(file).ss == 0.0);
  }

  SUBCASE("three-hop chain decays geometrically") {
    auto p2 = store.intern("p2", EntityKind::Process, "a", cfg.mem_dim);
    auto p3 = store.intern("p3", EntityKind::Process, "b", cfg.mem_dim);
    apply_state_transfer({proc, sock, EventKind::Recvfrom, 1, 0}, store, cfg);
    apply_state_transfer({proc, p2, EventKind::Fork, 2, 1}, store, cfg);
    apply_state_transfer({p2, p3, EventKind::Fork, 3, 2}, store, cfg);
    CHECK(store.rec(p3).ss == doctest::Approx(0.857375).epsilon(1e-12));
  }

  SUBCASE("sendto moves no state: socket suspicion must not wash out") {
    store.rec(proc).ss = 0.8;
    Event e{proc, sock, EventKind::Sendto, 10, 0};
    apply_state_transfer(e, store, cfg);
    CHECK(store.rec(sock).ss == 1.0);
    CHECK(store.rec(proc).ss == 0.8);
  }

  SUBCASE("literal rule can lower an already-suspicious receiver") {
    store.rec(proc).ss = 1.0;
    Event e{proc, file, EventKind::Read, 10, 0};
    apply_state_transfer(e, store, cfg);
    CHECK(store.rec(proc).ss == doctest::Approx(0.95));
  }

  SUBCASE("strict-max variant never lowers") {
    auto strict = cfg;
    strict.transfer_mode = TransferMode::StrictMax;
    store.rec(proc).ss = 1.0;
    Event e{proc, file, EventKind::Read, 10, 0};
    apply_state_transfer(e, store, strict);
    CHECK(store.rec(proc).ss == 1.0);
  }
}

TEST_CASE("suspicion stays in [0,1] and transfer is monotone over random sequences") {
  auto cfg = default_cfg();
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    EntityStore store;
    std::vector<EntityId> ids;
    for (int i = 0; i < 6; ++i) {
      auto kind = static_cast<EntityKind>(draw_below(rng, 3));
      ids.push_back(store.intern("e" + std::to_string(trial) + "_" + std::to_string(i), kind,
                                 "attr", cfg.mem_dim));
    }
    EntityStore raised = store;
    std::size_t bump = draw_below(rng, ids.size());
    raised.rec(ids[bump]).ss = std::min(1.0, raised.rec(ids[bump]).ss + 0.3);

    for (int step = 0; step < 40; ++step) {
      EntityId subj = ids[draw_below(rng, ids.size())];
      if (store.rec(subj).kind != EntityKind::Process) continue;
      EntityId obj = ids[draw_below(rng, ids.size())];
      if (subj == obj) continue;
      auto kind = static_cast<EventKind>(draw_below(rng, 8));
      Event e{subj, obj, kind, step, static_cast<std::uint64_t>(step)};
      apply_state_transfer(e, store, cfg);
      apply_state_transfer(e, raised, cfg);
      for (EntityId id : ids) {
        CHECK(store.rec(id).ss >= 0.0);
        CHECK(store.rec(id).ss <= 1.0);
        // monotone: raising one input never lowers any output
        CHECK(raised.rec(id).ss >= store.rec(id).ss - 1e-12);
      }
    }
  }
}

TEST_CASE("event encoding layout") {
  auto cfg = default_cfg();
  EntityStore store;
  auto proc = store.intern("p1", EntityKind::Process, "firefox", cfg.mem_dim);
  auto file = store.intern("f1", EntityKind::File, "/etc/hosts", cfg.mem_dim);

  Event read{proc, file, EventKind::Read, 5, 0};
  Event write{proc, file, EventKind::Write, 5, 0};
  auto er = encode_event(read, store, cfg);
  auto ew = encode_event(write, store, cfg);

  CHECK(er.size() == 139);  // 2*64 + 2 + 9
  CHECK(cfg.encoding_dim() == 139);
  // events differing only in kind differ only in the trailing relation slots
  CHECK((er.segment(0, 130) - ew.segment(0, 130)).norm() == 0.0);
  CHECK((er.segment(130, 9) - ew.segment(130, 9)).norm() > 0.0);
  CHECK(er.allFinite());
}

TEST_CASE("encoding uses pre-transfer suspicion values") {
  auto cfg = default_cfg();
  EntityStore store;
  auto proc = store.intern("p1", EntityKind::Process, "nginx", cfg.mem_dim);
  auto sock = store.intern("s1", EntityKind::Socket, "9.9.9.9:443", cfg.mem_dim);
  auto file = store.intern("f1", EntityKind::File, "/tmp/drop", cfg.mem_dim);

  // Reference order: encode first, transfer after. The first event's encoding
  // must carry the subject's pre-event suspicion (0), while the second event
  // sees the raised value.
  Event recv{proc, sock, EventKind::Recvfrom, 1, 0};
  auto enc_recv = encode_event(recv, store, cfg);
  apply_state_transfer(recv, store, cfg);
  Event write{proc, file, EventKind::Write, 2, 1};
  auto enc_write = encode_event(write, store, cfg);
  apply_state_transfer(write, store, cfg);

  int df = cfg.hash_dim;
  CHECK(enc_recv[df] == 0.0);                                // subject ss before the event
  CHECK(enc_write[df] == doctest::Approx(0.95));             // raised by the first event
  CHECK(enc_recv[2 * df + 1] == 1.0);                        // socket object ss
  CHECK(store.rec(file).ss == doctest::Approx(0.95 * 0.95));
}
