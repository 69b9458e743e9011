#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace driftwatch {

using EntityId = std::uint32_t;
inline constexpr EntityId kNoEntity = 0xffffffffu;

inline constexpr int kRelationDim = 9;

enum class EntityKind : std::uint8_t { Process = 0, File = 1, Socket = 2 };

// The first eight kinds come from audit logs; Pseudo edges are synthesized
// internally for rehearsal replay and never parsed from input.
enum class EventKind : std::uint8_t {
  Fork = 0,
  Clone = 1,
  Read = 2,
  Write = 3,
  Mmap = 4,
  Exec = 5,
  Sendto = 6,
  Recvfrom = 7,
  Pseudo = 8,
};

std::string_view to_string(EntityKind kind);
std::string_view to_string(EventKind kind);
std::optional<EntityKind> parse_entity_kind(std::string_view text);
std::optional<EventKind> parse_event_kind(std::string_view text);

// Direction of information flow for an event, per transfer semantics:
// Recvfrom/Read/Mmap/Exec flow object->subject, the rest subject->object.
enum class FlowDir : std::uint8_t { ObjectToSubject, SubjectToObject };
FlowDir flow_direction(EventKind kind);

struct Event {
  EntityId subject = kNoEntity;
  EntityId object = kNoEntity;
  EventKind kind = EventKind::Read;
  std::int64_t timestamp_ns = 0;
  // Input sequence number; ties on timestamp_ns are ordered by seq so that
  // replays of the same stream are deterministic.
  std::uint64_t seq = 0;
};

inline bool event_order_lt(const Event& a, const Event& b) {
  if (a.timestamp_ns != b.timestamp_ns) return a.timestamp_ns < b.timestamp_ns;
  return a.seq < b.seq;
}

// Flow endpoints (source, destination) of an event per its direction.
std::pair<EntityId, EntityId> flow_endpoints(const Event& e);

struct NeighborEntry {
  EntityId peer = kNoEntity;
  std::int64_t event_ns = 0;
  Eigen::VectorXd encoding;  // encoding of the most recent event on this dyad
};

struct EntityRecord {
  std::string uuid;
  EntityKind kind = EntityKind::Process;
  std::string attribute;
  double ss = 0.0;                 // suspicion score in [0,1]
  Eigen::VectorXd memory;          // model memory vector, mem_dim
  std::int64_t last_update = -1;   // ns of last real event, -1 = never
  // Most recent distinct neighbors, newest first, capped at neighbor_cap.
  std::vector<NeighborEntry> neighbors;
};

double initial_suspicion(EntityKind kind);

class EntityStore {
 public:
  // Returns the id for uuid, creating a record (with initial suspicion and
  // zero memory) on first sight. The first registration of a uuid pins its
  // kind and attribute.
  EntityId intern(std::string_view uuid, EntityKind kind, std::string_view attribute, int mem_dim);

  std::optional<EntityId> find(std::string_view uuid) const;

  EntityRecord& rec(EntityId id) { return records_[id]; }
  const EntityRecord& rec(EntityId id) const { return records_[id]; }

  std::size_t size() const { return records_.size(); }
  const std::vector<EntityRecord>& records() const { return records_; }
  std::vector<EntityRecord>& records() { return records_; }

 private:
  std::vector<EntityRecord> records_;
  std::unordered_map<std::string, EntityId> by_uuid_;
};

struct WindowGraph {
  std::int64_t index = 0;
  std::int64_t start_ns = 0;
  std::int64_t end_ns = 0;
  std::vector<Event> events;                // post-filter, sorted by (ts, seq)
  std::vector<Eigen::VectorXd> encodings;   // aligned with events; pre-transfer suspicion
  std::vector<double> rl;                   // aligned with events; filled by detection
};

}  // namespace driftwatch
