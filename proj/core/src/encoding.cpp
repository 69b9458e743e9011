#include "driftwatch/encoding.hpp"

#include "driftwatch/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace driftwatch {

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = 14695981039346656037ull ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::vector<std::string_view> tokenize(std::string_view attr, EntityKind kind) {
  std::vector<std::string_view> tokens;
  auto split_on = [&](std::string_view seps) {
    std::size_t start = 0;
    for (std::size_t i = 0; i <= attr.size(); ++i) {
      if (i == attr.size() || seps.find(attr[i]) != std::string_view::npos) {
        if (i > start) tokens.push_back(attr.substr(start, i - start));
        start = i + 1;
      }
    }
  };
  switch (kind) {
    case EntityKind::File:
      split_on("/");
      break;
    case EntityKind::Socket:
      split_on(".:->");
      break;
    case EntityKind::Process:
      if (!attr.empty()) tokens.push_back(attr);
      break;
  }
  return tokens;
}

}  // namespace

Eigen::VectorXd relation_encode(EventKind kind) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(kRelationDim);
  v[static_cast<int>(kind)] = 1.0;
  return v;
}

Eigen::VectorXd feature_hash(std::string_view attribute, EntityKind kind, int dim) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
  auto tokens = tokenize(attribute, kind);
  std::uint64_t kind_salt = mix64(0x6b696e64u, static_cast<std::uint64_t>(kind));
  std::string prefix;
  double weight = 1.0;
  for (std::size_t level = 0; level < tokens.size(); ++level) {
    if (level > 0) prefix += '\x1f';
    prefix.append(tokens[level]);
    std::uint64_t bucket_hash = fnv1a(prefix, kind_salt);
    std::uint64_t sign_hash = fnv1a(prefix, kind_salt ^ 0x5349474eull);
    int bucket = static_cast<int>(bucket_hash % static_cast<std::uint64_t>(dim));
    double sign = (sign_hash & 1u) ? 1.0 : -1.0;
    v[bucket] += sign * weight;
    weight *= 0.5;
  }
  double norm = v.norm();
  if (norm > 0.0) v /= norm;
  return v;
}

TransferTarget transfer_target(EventKind kind) {
  switch (kind) {
    case EventKind::Recvfrom:
    case EventKind::Read:
    case EventKind::Mmap:
    case EventKind::Exec:
      return TransferTarget::Subject;
    case EventKind::Write:
    case EventKind::Fork:
    case EventKind::Clone:
      return TransferTarget::Object;
    default:
      return TransferTarget::None;
  }
}

void apply_state_transfer(const Event& e, EntityStore& store, const RuntimeConfig& cfg) {
  if (cfg.ablate_state_transfer) return;
  // Only the four transfer rows move state. Sendto in particular must not:
  // with the literal beta*max rule it would bleed an external socket's
  // suspicion away through routine outbound traffic.
  auto target = transfer_target(e.kind);
  if (target == TransferTarget::None) return;
  auto& subj = store.rec(e.subject);
  auto& obj = store.rec(e.object);
  double transferred = cfg.decay_beta * std::max(obj.ss, subj.ss);
  auto& receiver = target == TransferTarget::Subject ? subj : obj;
  if (cfg.transfer_mode == TransferMode::StrictMax)
    receiver.ss = std::max(receiver.ss, transferred);
  else
    receiver.ss = transferred;
}

Eigen::VectorXd encode_event(const Event& e, const EntityStore& store, const RuntimeConfig& cfg) {
  const auto& subj = store.rec(e.subject);
  const auto& obj = store.rec(e.object);
  const int df = cfg.hash_dim;
  Eigen::VectorXd out(cfg.encoding_dim());
  out.segment(0, df) = feature_hash(subj.attribute, subj.kind, df);
  out[df] = cfg.ablate_state_transfer ? 0.0 : subj.ss;
  out.segment(df + 1, df) = feature_hash(obj.attribute, obj.kind, df);
  out[2 * df + 1] = cfg.ablate_state_transfer ? 0.0 : obj.ss;
  out.segment(2 * df + 2, kRelationDim) = relation_encode(e.kind);
  return out;
}

}  // namespace driftwatch
