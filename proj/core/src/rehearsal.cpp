#include "driftwatch/rehearsal.hpp"

#include <algorithm>
#include <deque>

namespace driftwatch {

std::size_t RehearsalPool::merge(std::span<const EntityId> ids, std::int64_t window,
                                 std::size_t capacity) {
  std::size_t inserted = 0;
  for (EntityId id : ids) {
    if (present_.count(id)) continue;
    members_.push_back({id, window});
    present_.insert(id);
    ++inserted;
  }
  if (capacity > 0 && members_.size() > capacity) {
    std::size_t excess = members_.size() - capacity;
    for (std::size_t i = 0; i < excess; ++i) present_.erase(members_[i].id);
    members_.erase(members_.begin(), members_.begin() + static_cast<std::ptrdiff_t>(excess));
  }
  return inserted;
}

void RehearsalPool::assign(std::vector<Member> members) {
  members_ = std::move(members);
  present_.clear();
  for (const auto& m : members_) present_.insert(m.id);
}

std::vector<EntityId> update_pool(RehearsalPool& pool, std::span<const EntityId> anomalous,
                                  const EntityStore& store, double gamma, std::int64_t window,
                                  std::size_t capacity) {
  std::vector<EntityId> rehearsal;
  for (EntityId id : anomalous)
    if (store.rec(id).ss < gamma) rehearsal.push_back(id);
  pool.merge(rehearsal, window, capacity);
  return rehearsal;
}

void FlowIndex::build(const WindowGraph& window) {
  fwd_.clear();
  bwd_.clear();
  for (const auto& e : window.events) {
    auto [src, dst] = flow_endpoints(e);
    if (src == dst) continue;
    fwd_[src].push_back(dst);
    bwd_[dst].push_back(src);
  }
}

std::vector<EntityId> FlowIndex::reachable(EntityId from, int k, bool forward) const {
  const auto& adj = forward ? fwd_ : bwd_;
  std::vector<EntityId> out;
  std::unordered_map<EntityId, int> depth;
  std::deque<EntityId> queue;
  depth[from] = 0;
  queue.push_back(from);
  while (!queue.empty()) {
    EntityId cur = queue.front();
    queue.pop_front();
    int d = depth[cur];
    if (d >= k) continue;
    auto it = adj.find(cur);
    if (it == adj.end()) continue;
    for (EntityId next : it->second) {
      if (depth.count(next)) continue;
      depth[next] = d + 1;
      out.push_back(next);
      queue.push_back(next);
    }
  }
  return out;
}

std::vector<EntityId> FlowIndex::reachable_pool_members(EntityId node, int k,
                                                        const RehearsalPool& pool) const {
  std::unordered_set<EntityId> hits;
  for (EntityId id : reachable(node, k, true))
    if (pool.contains(id)) hits.insert(id);
  for (EntityId id : reachable(node, k, false))
    if (pool.contains(id)) hits.insert(id);
  // newest insertion first
  std::vector<EntityId> out;
  const auto& members = pool.members();
  for (auto it = members.rbegin(); it != members.rend(); ++it)
    if (hits.count(it->id)) out.push_back(it->id);
  return out;
}

std::vector<Event> propose_pseudo_edges(const Event& e, const RehearsalPool& pool,
                                        const FlowIndex& index, int k_hop, int p_max) {
  std::vector<Event> out;
  if (pool.size() == 0 || p_max <= 0) return out;
  EntityId endpoints[2] = {e.subject, e.object};
  int endpoint_count = e.subject == e.object ? 1 : 2;
  for (int i = 0; i < endpoint_count; ++i) {
    EntityId u = endpoints[i];
    int emitted = 0;
    for (EntityId member : index.reachable_pool_members(u, k_hop, pool)) {
      if (member == e.subject || member == e.object) continue;
      Event pe;
      pe.subject = member;  // replay flows from the rehearsal node
      pe.object = u;
      pe.kind = EventKind::Pseudo;
      pe.timestamp_ns = e.timestamp_ns;
      pe.seq = e.seq;
      out.push_back(pe);
      if (++emitted >= p_max) break;
    }
  }
  return out;
}

}  // namespace driftwatch
