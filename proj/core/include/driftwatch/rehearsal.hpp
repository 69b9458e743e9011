#pragma once

#include "driftwatch/types.hpp"

#include <cstdint>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace driftwatch {

// Pool of rehearsal nodes: anomalous-but-not-suspicious entities kept for
// scene replay. Insertion order is preserved; optional FIFO capacity.
class RehearsalPool {
 public:
  struct Member {
    EntityId id = kNoEntity;
    std::int64_t window = 0;  // insertion window index
  };

  // Inserts ids not already present; evicts oldest members beyond capacity
  // (capacity 0 = unbounded). Returns the number inserted.
  std::size_t merge(std::span<const EntityId> ids, std::int64_t window, std::size_t capacity);

  bool contains(EntityId id) const { return present_.count(id) != 0; }
  std::size_t size() const { return members_.size(); }
  const std::vector<Member>& members() const { return members_; }
  void assign(std::vector<Member> members);  // checkpoint restore

 private:
  std::vector<Member> members_;  // insertion order, oldest first
  std::unordered_set<EntityId> present_;
};

// Selects this window's rehearsal nodes from the anomalous set (ss < gamma)
// and merges them into the pool. Suspicious members are never inserted.
std::vector<EntityId> update_pool(RehearsalPool& pool, std::span<const EntityId> anomalous,
                                  const EntityStore& store, double gamma, std::int64_t window,
                                  std::size_t capacity);

// Directed information-flow adjacency over one window's events, for bounded
// reachability queries between pool members and event endpoints.
class FlowIndex {
 public:
  void build(const WindowGraph& window);

  // Nodes within k directed hops of `from`, following flow direction
  // (forward=true) or against it. Excludes `from` itself.
  std::vector<EntityId> reachable(EntityId from, int k, bool forward) const;

  // True if some pool member reaches `node` or `node` reaches a pool member
  // within k hops; reachable members are appended newest-insertion-first.
  std::vector<EntityId> reachable_pool_members(EntityId node, int k,
                                               const RehearsalPool& pool) const;

 private:
  std::unordered_map<EntityId, std::vector<EntityId>> fwd_, bwd_;
};

// Pseudo events for one real event: for each endpoint with pool members
// reachable within k_hop flow hops (either orientation), up to p_max edges
// pool-member -> endpoint, most recently inserted members first. Returned
// edges are embedding-time-only and are never appended to the window.
std::vector<Event> propose_pseudo_edges(const Event& e, const RehearsalPool& pool,
                                        const FlowIndex& index, int k_hop, int p_max);

}  // namespace driftwatch
