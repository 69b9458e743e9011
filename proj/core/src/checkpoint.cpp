#include "driftwatch/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace driftwatch {

namespace {

constexpr char kMagic[8] = {'D', 'W', 'C', 'H', 'K', 'P', '0', '1'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void i64(std::int64_t v) { bytes(&v, 8); }
  void f64(double v) { bytes(&v, 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void doubles(const double* p, std::size_t n) {
    u32(static_cast<std::uint32_t>(n));
    bytes(p, n * sizeof(double));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in_) throw CheckpointError("checkpoint: truncated file");
  }
  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, 4);
    return v;
  }
  std::int64_t i64() {
    std::int64_t v;
    bytes(&v, 8);
    return v;
  }
  double f64() {
    double v;
    bytes(&v, 8);
    return v;
  }
  std::string str() {
    auto n = u32();
    std::string s(n, '\0');
    if (n) bytes(s.data(), n);
    return s;
  }
  Eigen::VectorXd vec() {
    auto n = u32();
    Eigen::VectorXd v(n);
    if (n) bytes(v.data(), n * sizeof(double));
    return v;
  }

 private:
  std::istream& in_;
};

void write_edge(Writer& w, const MiniEdge& e) {
  w.u32(e.src);
  w.u32(e.dst);
  w.u8(static_cast<std::uint8_t>(e.kind));
  w.f64(e.rl);
  w.i64(e.window);
}

MiniEdge read_edge(Reader& r) {
  MiniEdge e;
  e.src = r.u32();
  e.dst = r.u32();
  e.kind = static_cast<EventKind>(r.u8());
  e.rl = r.f64();
  e.window = r.i64();
  return e;
}

}  // namespace

class CheckpointCodec {
 public:
  static void save(const Engine& engine, std::ostream& out) {
    Writer w(out);
    w.bytes(kMagic, sizeof(kMagic));
    w.u32(kVersion);

    const auto& dims = engine.model_.dims();
    w.u32(static_cast<std::uint32_t>(dims.mem));
    w.u32(static_cast<std::uint32_t>(dims.emb));
    w.u32(static_cast<std::uint32_t>(dims.time));
    w.u32(static_cast<std::uint32_t>(dims.enc));
    w.u32(static_cast<std::uint32_t>(dims.nbr_cap));
    w.u8(engine.model_.attention_softmax() ? 1 : 0);

    w.i64(engine.next_window_);
    w.i64(engine.origin_ns_);
    w.u8(engine.origin_set_ ? 1 : 0);

    auto params = engine.model_.param_refs();
    w.u32(static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) {
      w.str(p.name);
      w.u32(static_cast<std::uint32_t>(p.rows));
      w.u32(static_cast<std::uint32_t>(p.cols));
      w.bytes(p.data, static_cast<std::size_t>(p.size()) * sizeof(double));
    }

    const auto& records = engine.store_.records();
    w.u32(static_cast<std::uint32_t>(records.size()));
    for (const auto& rec : records) {
      w.str(rec.uuid);
      w.u8(static_cast<std::uint8_t>(rec.kind));
      w.str(rec.attribute);
      w.f64(rec.ss);
      w.i64(rec.last_update);
      w.doubles(rec.memory.data(), static_cast<std::size_t>(rec.memory.size()));
      w.u32(static_cast<std::uint32_t>(rec.neighbors.size()));
      for (const auto& nb : rec.neighbors) {
        w.u32(nb.peer);
        w.i64(nb.event_ns);
        w.doubles(nb.encoding.data(), static_cast<std::size_t>(nb.encoding.size()));
      }
    }

    const auto& members = engine.pool_.members();
    w.u32(static_cast<std::uint32_t>(members.size()));
    for (const auto& m : members) {
      w.u32(m.id);
      w.i64(m.window);
    }

    w.u32(static_cast<std::uint32_t>(engine.mini_graphs_.size()));
    for (const auto& mg : engine.mini_graphs_) {
      w.u32(static_cast<std::uint32_t>(mg.nodes.size()));
      for (EntityId id : mg.nodes) w.u32(id);
      w.u32(static_cast<std::uint32_t>(mg.edges.size()));
      for (const auto& e : mg.edges) write_edge(w, e);
    }

    w.u32(static_cast<std::uint32_t>(engine.history_.size()));
    for (const auto& [index, rec] : engine.history_) {
      w.i64(index);
      w.u8(rec.alerted ? 1 : 0);
      w.u32(static_cast<std::uint32_t>(rec.path_nodes.size()));
      for (EntityId id : rec.path_nodes) w.u32(id);
      w.u32(static_cast<std::uint32_t>(rec.malicious_paths.size()));
      for (const auto& path : rec.malicious_paths) {
        w.u32(static_cast<std::uint32_t>(path.size()));
        for (const auto& e : path) write_edge(w, e);
      }
      w.u32(static_cast<std::uint32_t>(rec.flagged_events.size()));
      for (const auto& e : rec.flagged_events) write_edge(w, e);
    }
  }

  static Engine load(std::istream& in, const RuntimeConfig& cfg) {
    Reader r(in);
    char magic[8];
    r.bytes(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
      throw CheckpointError("checkpoint: bad magic");
    auto version = r.u32();
    if (version != kVersion)
      throw CheckpointError("checkpoint: unsupported schema version " + std::to_string(version));

    Engine engine(cfg);
    ModelDims dims;
    dims.mem = static_cast<int>(r.u32());
    dims.emb = static_cast<int>(r.u32());
    dims.time = static_cast<int>(r.u32());
    dims.enc = static_cast<int>(r.u32());
    dims.nbr_cap = static_cast<int>(r.u32());
    bool softmax = r.u8() != 0;
    if (!(dims == engine.model_.dims()) || softmax != engine.model_.attention_softmax())
      throw CheckpointError("checkpoint: model shape mismatch against runtime config");

    engine.next_window_ = r.i64();
    engine.origin_ns_ = r.i64();
    engine.origin_set_ = r.u8() != 0;

    auto params = engine.model_.param_refs();
    auto count = r.u32();
    if (count != params.size()) throw CheckpointError("checkpoint: parameter count mismatch");
    for (auto& p : params) {
      auto name = r.str();
      auto rows = r.u32();
      auto cols = r.u32();
      if (name != p.name || rows != static_cast<std::uint32_t>(p.rows) ||
          cols != static_cast<std::uint32_t>(p.cols))
        throw CheckpointError("checkpoint: tensor mismatch for " + name);
      r.bytes(p.data, static_cast<std::size_t>(p.size()) * sizeof(double));
    }

    auto entity_count = r.u32();
    auto& records = engine.store_.records();
    for (std::uint32_t i = 0; i < entity_count; ++i) {
      auto uuid = r.str();
      auto kind = static_cast<EntityKind>(r.u8());
      auto attr = r.str();
      EntityId id = engine.store_.intern(uuid, kind, attr, dims.mem);
      auto& rec = records[id];
      rec.ss = r.f64();
      rec.last_update = r.i64();
      rec.memory = r.vec();
      auto nb_count = r.u32();
      rec.neighbors.clear();
      for (std::uint32_t k = 0; k < nb_count; ++k) {
        NeighborEntry nb;
        nb.peer = r.u32();
        nb.event_ns = r.i64();
        nb.encoding = r.vec();
        rec.neighbors.push_back(std::move(nb));
      }
    }

    auto pool_count = r.u32();
    std::vector<RehearsalPool::Member> members;
    for (std::uint32_t i = 0; i < pool_count; ++i) {
      RehearsalPool::Member m;
      m.id = r.u32();
      m.window = r.i64();
      members.push_back(m);
    }
    engine.pool_.assign(std::move(members));

    auto mg_count = r.u32();
    for (std::uint32_t i = 0; i < mg_count; ++i) {
      MiniGraph mg;
      auto node_count = r.u32();
      for (std::uint32_t k = 0; k < node_count; ++k) mg.nodes.insert(r.u32());
      auto edge_count = r.u32();
      for (std::uint32_t k = 0; k < edge_count; ++k) mg.edges.push_back(read_edge(r));
      engine.mini_graphs_.push_back(std::move(mg));
    }

    auto hist_count = r.u32();
    for (std::uint32_t i = 0; i < hist_count; ++i) {
      WindowRecord rec;
      rec.index = r.i64();
      rec.alerted = r.u8() != 0;
      auto node_count = r.u32();
      for (std::uint32_t k = 0; k < node_count; ++k) rec.path_nodes.insert(r.u32());
      auto path_count = r.u32();
      for (std::uint32_t k = 0; k < path_count; ++k) {
        auto edge_count = r.u32();
        std::vector<MiniEdge> path;
        for (std::uint32_t j = 0; j < edge_count; ++j) path.push_back(read_edge(r));
        rec.malicious_paths.push_back(std::move(path));
      }
      auto flagged_count = r.u32();
      for (std::uint32_t k = 0; k < flagged_count; ++k)
        rec.flagged_events.push_back(read_edge(r));
      engine.history_.emplace(rec.index, std::move(rec));
    }
    return engine;
  }
};

void save_checkpoint(const Engine& engine, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("checkpoint: cannot open " + path.string() + " for writing");
  CheckpointCodec::save(engine, out);
  if (!out) throw CheckpointError("checkpoint: write failed for " + path.string());
}

Engine load_checkpoint(const std::filesystem::path& path, const RuntimeConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path.string());
  return CheckpointCodec::load(in, cfg);
}

CheckpointInfo inspect_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path.string());
  Reader r(in);
  char magic[8];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError("checkpoint: bad magic");
  CheckpointInfo info;
  info.version = r.u32();
  if (info.version != kVersion)
    throw CheckpointError("checkpoint: unsupported schema version " +
                          std::to_string(info.version));
  info.dims.mem = static_cast<int>(r.u32());
  info.dims.emb = static_cast<int>(r.u32());
  info.dims.time = static_cast<int>(r.u32());
  info.dims.enc = static_cast<int>(r.u32());
  info.dims.nbr_cap = static_cast<int>(r.u32());
  r.u8();  // attention flag
  info.next_window = r.i64();
  r.i64();
  r.u8();
  auto param_count = r.u32();
  for (std::uint32_t i = 0; i < param_count; ++i) {
    r.str();
    auto rows = r.u32();
    auto cols = r.u32();
    std::vector<double> skip(static_cast<std::size_t>(rows) * cols);
    if (!skip.empty()) r.bytes(skip.data(), skip.size() * sizeof(double));
  }
  info.entity_count = r.u32();
  return info;
}

}  // namespace driftwatch
