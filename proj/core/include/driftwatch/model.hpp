#pragma once

#include "driftwatch/config.hpp"
#include "driftwatch/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace driftwatch {

// A rehearsal partner injected into the subject's neighborhood at embedding
// time. `encoding` is the encoding of the pseudo event that proposed it.
struct PseudoNeighbor {
  EntityId partner = kNoEntity;
  Eigen::VectorXd encoding;
};

struct ModelDims {
  int mem = 32;
  int emb = 32;
  int time = 8;
  int enc = 139;
  int nbr_cap = 16;  // most recent distinct neighbors kept per entity
  int msg() const { return 2 * mem + time + enc; }
  int nbr() const { return mem + enc + time; }    // neighbor feature tuple
  int query() const { return mem + time; }        // subject-side query input
  int hidden() const { return emb; }              // decoder hidden layer
  bool operator==(const ModelDims&) const = default;
};

// Edge-type reconstructor over per-entity memories:
//   message  m = [s_subj, s_obj, time_enc(dt), event_enc]
//   memory   s' = gru(m, s), applied to both endpoints of each real event
//   embed    z = sum over neighbors of attention(query(subj), neighbor tuple)
//   decode   logits = mlp(z), rl = cross-entropy against the observed kind
// Gradients are computed analytically with one-step truncation: memories from
// earlier events are treated as constants.
class TemporalModel {
 public:
  TemporalModel(const ModelDims& dims, bool attention_softmax, std::uint64_t seed);
  static TemporalModel from_config(const RuntimeConfig& cfg);

  struct GruTrace {
    Eigen::VectorXd x, h, r, z, n, uh_c, h_new;
  };

  struct NeighborTrace {
    EntityId peer = kNoEntity;
    bool is_object = false;  // routes gradient into the object's gru step
    double time_scalar = 0.0;
    Eigen::VectorXd v;    // time encoding
    Eigen::VectorXd u;    // [s_peer, dyad encoding, v]
    Eigen::VectorXd k, val;
  };

  struct Trace {
    EntityId subject = kNoEntity, object = kNoEntity;
    std::int64_t t = 0;
    int observed = 0;  // relation index
    double subj_time_scalar = 0.0, obj_time_scalar = 0.0;
    Eigen::VectorXd v_subj, v_obj;
    GruTrace gru_subj, gru_obj;
    bool self_event = false;
    std::vector<NeighborTrace> neighbors;
    Eigen::VectorXd attn_logits, alpha;
    Eigen::VectorXd query_in, q, z, g, logits, probs;
    double rl = 0.0;
  };

  // Pure forward pass; does not touch the store.
  Trace forward(const EntityStore& store, const Event& e, const Eigen::VectorXd& enc,
                std::span<const PseudoNeighbor> pseudo) const;

  // Applies a trace's memory updates and neighbor-ring insertions.
  void commit(EntityStore& store, const Event& e, const Eigen::VectorXd& enc,
              const Trace& trace) const;

  struct Gradients;
  Gradients backward(const Trace& trace) const;

  // Gradient-norm clip followed by a plain descent step. Returns false and
  // leaves parameters untouched when any gradient is non-finite.
  bool apply_step(const Gradients& grads, double lr, double clip);

  // forward + commit; returns the reconstruction loss.
  double score_event(EntityStore& store, const Event& e, const Eigen::VectorXd& enc,
                     std::span<const PseudoNeighbor> pseudo);

  // forward + backward + commit + step. Returns {rl, ok}; ok=false means a
  // non-finite gradient: nothing was committed or stepped.
  std::pair<double, bool> train_event(EntityStore& store, const Event& e,
                                      const Eigen::VectorXd& enc,
                                      std::span<const PseudoNeighbor> pseudo, double lr,
                                      double clip);

  const ModelDims& dims() const { return dims_; }
  bool attention_softmax() const { return attention_softmax_; }

  struct ParamRef {
    std::string name;
    double* data = nullptr;
    Eigen::Index rows = 0, cols = 0;
    Eigen::Index size() const { return rows * cols; }
  };
  struct ConstParamRef {
    std::string name;
    const double* data = nullptr;
    Eigen::Index rows = 0, cols = 0;
    Eigen::Index size() const { return rows * cols; }
  };

  // Stable-order views over the parameter tensors; used by the checkpoint
  // codec and the gradient tests. grad_refs returns the same names/order.
  std::vector<ParamRef> param_refs();
  std::vector<ConstParamRef> param_refs() const;
  static std::vector<ParamRef> grad_refs(Gradients& grads);

  bool same_params(const TemporalModel& other) const;

  Eigen::VectorXd time_encode(double scalar) const { return wt_ * scalar + bt_; }
  static double time_scalar(std::int64_t dt_ns);

  struct Gradients {
    Eigen::MatrixXd wt, wr, wz, wn, ur, uz, un, wq, wk, wv, w1, w2;
    Eigen::VectorXd bt, br, bz, bn, cr, cz, cn, b1, b2;
    double squared_norm() const;
    bool finite() const;
  };

 private:
  Eigen::VectorXd gru_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& h,
                              GruTrace& tr) const;
  void gru_backward(const GruTrace& tr, const Eigen::VectorXd& dh_new, Gradients& g,
                    Eigen::VectorXd& dx) const;

  ModelDims dims_;
  bool attention_softmax_ = true;

  // time encoder
  Eigen::MatrixXd wt_;  // time x 1
  Eigen::VectorXd bt_;
  // gru (input weights x=msg, hidden weights h=mem, input/hidden biases)
  Eigen::MatrixXd wr_, wz_, wn_, ur_, uz_, un_;
  Eigen::VectorXd br_, bz_, bn_, cr_, cz_, cn_;
  // attention
  Eigen::MatrixXd wq_, wk_, wv_;
  // decoder
  Eigen::MatrixXd w1_, w2_;
  Eigen::VectorXd b1_, b2_;
};

// mean + stds * population standard deviation; 0 for an empty span.
double sigma_threshold(std::span<const double> rl, double stds);

// Sorted unique endpoints of events whose rl strictly exceeds sigma.
std::vector<EntityId> identify_anomalous_nodes(const WindowGraph& window, double sigma);

}  // namespace driftwatch
