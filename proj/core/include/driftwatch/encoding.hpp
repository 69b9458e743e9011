#pragma once

#include "driftwatch/config.hpp"
#include "driftwatch/types.hpp"

#include <Eigen/Dense>

#include <string_view>

namespace driftwatch {

// One-hot over the nine event kinds, indexed by declaration order.
Eigen::VectorXd relation_encode(EventKind kind);

// Hierarchical signed feature hash of an entity attribute.
// Tokens: path components for files, dot/port-split tokens for sockets, the
// whole name for processes. Each token prefix is hashed into one of `dim`
// signed buckets with level weight 0.5^level; the result is L2-normalized
// unless all-zero.
Eigen::VectorXd feature_hash(std::string_view attribute, EntityKind kind, int dim);

// Receiving endpoint of a transfer, per event kind. Sendto and Pseudo move
// no state: outbound traffic must not decay an external socket's suspicion.
enum class TransferTarget : std::uint8_t { Subject, Object, None };
TransferTarget transfer_target(EventKind kind);

// Applies the suspicion transfer rule for one event: the receiving endpoint
// gets beta * max(O.ss, S.ss) (Literal) or the max of that and its current
// value (StrictMax).
void apply_state_transfer(const Event& e, EntityStore& store, const RuntimeConfig& cfg);

// Concatenated event encoding FE(subject) | ss(subject) | FE(object) |
// ss(object) | relation one-hot; length 2*hash_dim + 2 + 9. Uses the suspicion
// values as they are at call time (callers encode before transferring state).
// With ablate_state_transfer the two ss slots are zero.
Eigen::VectorXd encode_event(const Event& e, const EntityStore& store, const RuntimeConfig& cfg);

}  // namespace driftwatch
