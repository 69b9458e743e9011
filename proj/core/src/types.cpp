#include "driftwatch/types.hpp"

namespace driftwatch {

std::string_view to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::Process: return "PROCESS";
    case EntityKind::File: return "FILE";
    case EntityKind::Socket: return "SOCKET";
  }
  return "?";
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Fork: return "FORK";
    case EventKind::Clone: return "CLONE";
    case EventKind::Read: return "READ";
    case EventKind::Write: return "WRITE";
    case EventKind::Mmap: return "MMAP";
    case EventKind::Exec: return "EXEC";
    case EventKind::Sendto: return "SENDTO";
    case EventKind::Recvfrom: return "RECVFROM";
    case EventKind::Pseudo: return "PSEUDO";
  }
  return "?";
}

std::optional<EntityKind> parse_entity_kind(std::string_view text) {
  if (text == "PROCESS") return EntityKind::Process;
  if (text == "FILE") return EntityKind::File;
  if (text == "SOCKET") return EntityKind::Socket;
  return std::nullopt;
}

std::optional<EventKind> parse_event_kind(std::string_view text) {
  if (text == "FORK") return EventKind::Fork;
  if (text == "CLONE") return EventKind::Clone;
  if (text == "READ") return EventKind::Read;
  if (text == "WRITE") return EventKind::Write;
  if (text == "MMAP") return EventKind::Mmap;
  if (text == "EXEC") return EventKind::Exec;
  if (text == "SENDTO") return EventKind::Sendto;
  if (text == "RECVFROM") return EventKind::Recvfrom;
  // PSEUDO is internal-only and never accepted from input.
  return std::nullopt;
}

FlowDir flow_direction(EventKind kind) {
  switch (kind) {
    case EventKind::Recvfrom:
    case EventKind::Read:
    case EventKind::Mmap:
    case EventKind::Exec:
      return FlowDir::ObjectToSubject;
    default:
      return FlowDir::SubjectToObject;
  }
}

std::pair<EntityId, EntityId> flow_endpoints(const Event& e) {
  if (flow_direction(e.kind) == FlowDir::ObjectToSubject) return {e.object, e.subject};
  return {e.subject, e.object};
}

double initial_suspicion(EntityKind kind) {
  return kind == EntityKind::Socket ? 1.0 : 0.0;
}

EntityId EntityStore::intern(std::string_view uuid, EntityKind kind, std::string_view attribute,
                             int mem_dim) {
  auto it = by_uuid_.find(std::string(uuid));
  if (it != by_uuid_.end()) return it->second;
  EntityRecord rec;
  rec.uuid = std::string(uuid);
  rec.kind = kind;
  rec.attribute = std::string(attribute);
  rec.ss = initial_suspicion(kind);
  rec.memory = Eigen::VectorXd::Zero(mem_dim);
  auto id = static_cast<EntityId>(records_.size());
  by_uuid_.emplace(rec.uuid, id);
  records_.push_back(std::move(rec));
  return id;
}

std::optional<EntityId> EntityStore::find(std::string_view uuid) const {
  auto it = by_uuid_.find(std::string(uuid));
  if (it == by_uuid_.end()) return std::nullopt;
  return it->second;
}

}  // namespace driftwatch
