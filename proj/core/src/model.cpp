#include "driftwatch/model.hpp"

#include "driftwatch/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

namespace driftwatch {

namespace {

// Uniform(-sqrt(3/cols), +sqrt(3/cols)), i.e. unit-variance fan-in scaling.
// The bound keeps the initial reconstruction losses spread out, so novel
// inputs stand out from the first windows instead of collapsing onto the
// uniform loss.
Eigen::MatrixXd init_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  double bound = std::sqrt(3.0 / static_cast<double>(cols));
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = draw_range(rng, -bound, bound);
  return m;
}

Eigen::VectorXd sigmoid(const Eigen::VectorXd& v) {
  return v.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
}

}  // namespace

double TemporalModel::time_scalar(std::int64_t dt_ns) {
  double secs = static_cast<double>(std::max<std::int64_t>(dt_ns, 0)) * 1e-9;
  // log-compressed and scaled to roughly [0,1] over second..day gaps, so the
  // time feature stays commensurate with the unit-scale memory and encoding
  // inputs instead of dominating them.
  return std::log1p(secs) / 2.0;
}

TemporalModel::TemporalModel(const ModelDims& dims, bool attention_softmax, std::uint64_t seed)
    : dims_(dims), attention_softmax_(attention_softmax) {
  std::mt19937_64 rng(mix64(seed, 0x6d6f64656cull));
  const int m = dims_.mem, x = dims_.msg(), d = dims_.emb, h = dims_.hidden(), t = dims_.time;
  wt_ = init_matrix(t, 1, rng);
  bt_ = Eigen::VectorXd::Zero(t);
  wr_ = init_matrix(m, x, rng);
  wz_ = init_matrix(m, x, rng);
  wn_ = init_matrix(m, x, rng);
  ur_ = init_matrix(m, m, rng);
  uz_ = init_matrix(m, m, rng);
  un_ = init_matrix(m, m, rng);
  br_ = Eigen::VectorXd::Zero(m);
  bz_ = Eigen::VectorXd::Zero(m);
  bn_ = Eigen::VectorXd::Zero(m);
  cr_ = Eigen::VectorXd::Zero(m);
  cz_ = Eigen::VectorXd::Zero(m);
  cn_ = Eigen::VectorXd::Zero(m);
  wq_ = init_matrix(d, dims_.query(), rng);
  wk_ = init_matrix(d, dims_.nbr(), rng);
  wv_ = init_matrix(d, dims_.nbr(), rng);
  w1_ = init_matrix(h, d, rng);
  b1_ = Eigen::VectorXd::Zero(h);
  w2_ = init_matrix(kRelationDim, h, rng);
  b2_ = Eigen::VectorXd::Zero(kRelationDim);
}

TemporalModel TemporalModel::from_config(const RuntimeConfig& cfg) {
  ModelDims dims;
  dims.mem = cfg.mem_dim;
  dims.emb = cfg.emb_dim;
  dims.time = cfg.time_dim;
  dims.enc = cfg.encoding_dim();
  dims.nbr_cap = cfg.neighbor_cap;
  return TemporalModel(dims, cfg.attention_softmax, cfg.seed);
}

Eigen::VectorXd TemporalModel::gru_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& h,
                                           GruTrace& tr) const {
  tr.x = x;
  tr.h = h;
  tr.r = sigmoid(wr_ * x + br_ + ur_ * h + cr_);
  tr.z = sigmoid(wz_ * x + bz_ + uz_ * h + cz_);
  tr.uh_c = un_ * h + cn_;
  tr.n = (wn_ * x + bn_ + tr.r.cwiseProduct(tr.uh_c)).array().tanh();
  tr.h_new = (Eigen::VectorXd::Ones(h.size()) - tr.z).cwiseProduct(tr.n) + tr.z.cwiseProduct(h);
  return tr.h_new;
}

void TemporalModel::gru_backward(const GruTrace& tr, const Eigen::VectorXd& dh_new, Gradients& g,
                                 Eigen::VectorXd& dx) const {
  Eigen::VectorXd dz_gate = dh_new.cwiseProduct(tr.h - tr.n);
  Eigen::VectorXd dn = dh_new.cwiseProduct(Eigen::VectorXd::Ones(tr.z.size()) - tr.z);
  Eigen::VectorXd dpre_n = dn.cwiseProduct(
      (Eigen::VectorXd::Ones(tr.n.size()) - tr.n.cwiseProduct(tr.n)));
  Eigen::VectorXd dr = dpre_n.cwiseProduct(tr.uh_c);
  Eigen::VectorXd duh_c = dpre_n.cwiseProduct(tr.r);
  Eigen::VectorXd dpre_z =
      dz_gate.cwiseProduct(tr.z.cwiseProduct(Eigen::VectorXd::Ones(tr.z.size()) - tr.z));
  Eigen::VectorXd dpre_r =
      dr.cwiseProduct(tr.r.cwiseProduct(Eigen::VectorXd::Ones(tr.r.size()) - tr.r));

  g.wn.noalias() += dpre_n * tr.x.transpose();
  g.bn += dpre_n;
  g.un.noalias() += duh_c * tr.h.transpose();
  g.cn += duh_c;
  g.wz.noalias() += dpre_z * tr.x.transpose();
  g.bz += dpre_z;
  g.uz.noalias() += dpre_z * tr.h.transpose();
  g.cz += dpre_z;
  g.wr.noalias() += dpre_r * tr.x.transpose();
  g.br += dpre_r;
  g.ur.noalias() += dpre_r * tr.h.transpose();
  g.cr += dpre_r;

  dx = wn_.transpose() * dpre_n + wz_.transpose() * dpre_z + wr_.transpose() * dpre_r;
}

TemporalModel::Trace TemporalModel::forward(const EntityStore& store, const Event& e,
                                            const Eigen::VectorXd& enc,
                                            std::span<const PseudoNeighbor> pseudo) const {
  Trace tr;
  tr.subject = e.subject;
  tr.object = e.object;
  tr.t = e.timestamp_ns;
  tr.observed = static_cast<int>(e.kind);
  tr.self_event = e.subject == e.object;

  const auto& subj = store.rec(e.subject);
  const auto& obj = store.rec(e.object);

  auto dt_of = [&](const EntityRecord& rec) {
    return rec.last_update < 0 ? 0.0 : time_scalar(e.timestamp_ns - rec.last_update);
  };
  tr.subj_time_scalar = dt_of(subj);
  tr.obj_time_scalar = dt_of(obj);
  tr.v_subj = time_encode(tr.subj_time_scalar);
  tr.v_obj = time_encode(tr.obj_time_scalar);

  // Messages: [own memory, peer memory, time encoding, event encoding].
  Eigen::VectorXd m_subj(dims_.msg()), m_obj(dims_.msg());
  m_subj << subj.memory, obj.memory, tr.v_subj, enc;
  Eigen::VectorXd s_subj_new = gru_forward(m_subj, subj.memory, tr.gru_subj);
  Eigen::VectorXd s_obj_new;
  if (tr.self_event) {
    s_obj_new = s_subj_new;
  } else {
    m_obj << obj.memory, subj.memory, tr.v_obj, enc;
    s_obj_new = gru_forward(m_obj, obj.memory, tr.gru_obj);
  }

  // Neighborhood of the subject: the current object first (with the current
  // event's encoding), then the stored ring without it, then pseudo partners.
  auto make_neighbor = [&](EntityId peer, const Eigen::VectorXd& mem, const Eigen::VectorXd& nenc,
                           double time_sc, bool is_object) {
    NeighborTrace n;
    n.peer = peer;
    n.is_object = is_object;
    n.time_scalar = time_sc;
    n.v = time_encode(time_sc);
    n.u.resize(dims_.nbr());
    n.u << mem, nenc, n.v;
    n.k = wk_ * n.u;
    n.val = wv_ * n.u;
    return n;
  };

  tr.neighbors.push_back(make_neighbor(e.object, s_obj_new, enc, tr.obj_time_scalar, true));
  int real_count = 1;
  for (const auto& entry : subj.neighbors) {
    if (entry.peer == e.object) continue;
    if (real_count >= dims_.nbr_cap) break;
    const auto& peer = store.rec(entry.peer);
    double sc = time_scalar(e.timestamp_ns - entry.event_ns);
    tr.neighbors.push_back(make_neighbor(entry.peer, peer.memory, entry.encoding, sc, false));
    ++real_count;
  }
  for (const auto& ps : pseudo) {
    const auto& partner = store.rec(ps.partner);
    double sc = partner.last_update < 0
                    ? 0.0
                    : time_scalar(e.timestamp_ns - partner.last_update);
    tr.neighbors.push_back(make_neighbor(ps.partner, partner.memory, ps.encoding, sc, false));
  }

  tr.query_in.resize(dims_.query());
  tr.query_in << s_subj_new, tr.v_subj;
  tr.q = wq_ * tr.query_in;

  const auto n_count = static_cast<Eigen::Index>(tr.neighbors.size());
  tr.attn_logits.resize(n_count);
  double scale = 1.0 / std::sqrt(static_cast<double>(dims_.emb));
  for (Eigen::Index i = 0; i < n_count; ++i)
    tr.attn_logits[i] = tr.q.dot(tr.neighbors[i].k) * scale;

  tr.alpha.resize(n_count);
  if (attention_softmax_) {
    double mx = tr.attn_logits.maxCoeff();
    double denom = 0.0;
    for (Eigen::Index i = 0; i < n_count; ++i) {
      tr.alpha[i] = std::exp(tr.attn_logits[i] - mx);
      denom += tr.alpha[i];
    }
    tr.alpha /= denom;
  } else {
    tr.alpha.setOnes();
  }

  tr.z = Eigen::VectorXd::Zero(dims_.emb);
  for (Eigen::Index i = 0; i < n_count; ++i) tr.z += tr.alpha[i] * tr.neighbors[i].val;

  tr.g = (w1_ * tr.z + b1_).array().tanh();
  tr.logits = w2_ * tr.g + b2_;

  double mx = tr.logits.maxCoeff();
  double lse = std::log((tr.logits.array() - mx).exp().sum()) + mx;
  tr.probs = (tr.logits.array() - lse).exp();
  tr.rl = lse - tr.logits[tr.observed];
  return tr;
}

void TemporalModel::commit(EntityStore& store, const Event& e, const Eigen::VectorXd& enc,
                           const Trace& trace) const {
  auto push_neighbor = [&](EntityRecord& rec, EntityId peer) {
    auto& ring = rec.neighbors;
    for (std::size_t i = 0; i < ring.size(); ++i) {
      if (ring[i].peer == peer) {
        ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(i));
        break;
      }
    }
    NeighborEntry entry;
    entry.peer = peer;
    entry.event_ns = e.timestamp_ns;
    entry.encoding = enc;
    ring.insert(ring.begin(), std::move(entry));
    if (ring.size() > static_cast<std::size_t>(dims_.nbr_cap)) ring.resize(dims_.nbr_cap);
  };

  auto& subj = store.rec(e.subject);
  subj.memory = trace.gru_subj.h_new;
  subj.last_update = e.timestamp_ns;
  push_neighbor(subj, e.object);
  if (!trace.self_event) {
    auto& obj = store.rec(e.object);
    obj.memory = trace.gru_obj.h_new;
    obj.last_update = e.timestamp_ns;
    push_neighbor(obj, e.subject);
  }
}

TemporalModel::Gradients TemporalModel::backward(const Trace& tr) const {
  Gradients g;
  const int m = dims_.mem, x = dims_.msg(), d = dims_.emb, h = dims_.hidden(), t = dims_.time;
  g.wt = Eigen::MatrixXd::Zero(t, 1);
  g.bt = Eigen::VectorXd::Zero(t);
  g.wr = Eigen::MatrixXd::Zero(m, x);
  g.wz = Eigen::MatrixXd::Zero(m, x);
  g.wn = Eigen::MatrixXd::Zero(m, x);
  g.ur = Eigen::MatrixXd::Zero(m, m);
  g.uz = Eigen::MatrixXd::Zero(m, m);
  g.un = Eigen::MatrixXd::Zero(m, m);
  g.br = Eigen::VectorXd::Zero(m);
  g.bz = Eigen::VectorXd::Zero(m);
  g.bn = Eigen::VectorXd::Zero(m);
  g.cr = Eigen::VectorXd::Zero(m);
  g.cz = Eigen::VectorXd::Zero(m);
  g.cn = Eigen::VectorXd::Zero(m);
  g.wq = Eigen::MatrixXd::Zero(d, dims_.query());
  g.wk = Eigen::MatrixXd::Zero(d, dims_.nbr());
  g.wv = Eigen::MatrixXd::Zero(d, dims_.nbr());
  g.w1 = Eigen::MatrixXd::Zero(h, d);
  g.b1 = Eigen::VectorXd::Zero(h);
  g.w2 = Eigen::MatrixXd::Zero(kRelationDim, h);
  g.b2 = Eigen::VectorXd::Zero(kRelationDim);

  auto accumulate_time = [&](const Eigen::VectorXd& dv, double scalar) {
    g.wt.col(0) += dv * scalar;
    g.bt += dv;
  };

  // decoder
  Eigen::VectorXd dlogits = tr.probs;
  dlogits[tr.observed] -= 1.0;
  g.w2.noalias() += dlogits * tr.g.transpose();
  g.b2 += dlogits;
  Eigen::VectorXd dg = w2_.transpose() * dlogits;
  Eigen::VectorXd dpre1 =
      dg.cwiseProduct(Eigen::VectorXd::Ones(tr.g.size()) - tr.g.cwiseProduct(tr.g));
  g.w1.noalias() += dpre1 * tr.z.transpose();
  g.b1 += dpre1;
  Eigen::VectorXd dz = w1_.transpose() * dpre1;

  // attention
  const auto n_count = static_cast<Eigen::Index>(tr.neighbors.size());
  Eigen::VectorXd ds_subj_new = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd ds_obj_new = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd dq = Eigen::VectorXd::Zero(d);
  double scale = 1.0 / std::sqrt(static_cast<double>(dims_.emb));

  Eigen::VectorXd dalpha(n_count);
  for (Eigen::Index i = 0; i < n_count; ++i) dalpha[i] = tr.neighbors[i].val.dot(dz);

  Eigen::VectorXd dc = Eigen::VectorXd::Zero(n_count);
  if (attention_softmax_) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n_count; ++i) s += tr.alpha[i] * dalpha[i];
    for (Eigen::Index i = 0; i < n_count; ++i) dc[i] = tr.alpha[i] * (dalpha[i] - s);
  }

  for (Eigen::Index i = 0; i < n_count; ++i) {
    const auto& nb = tr.neighbors[i];
    Eigen::VectorXd dval = tr.alpha[i] * dz;
    Eigen::VectorXd du = wv_.transpose() * dval;
    g.wv.noalias() += dval * nb.u.transpose();
    if (attention_softmax_) {
      Eigen::VectorXd dk = dc[i] * tr.q * scale;
      dq += dc[i] * nb.k * scale;
      g.wk.noalias() += dk * nb.u.transpose();
      du += wk_.transpose() * dk;
    }
    if (nb.is_object) ds_obj_new += du.segment(0, m);
    accumulate_time(du.segment(m + dims_.enc, t), nb.time_scalar);
  }

  g.wq.noalias() += dq * tr.query_in.transpose();
  Eigen::VectorXd dquery = wq_.transpose() * dq;
  ds_subj_new += dquery.segment(0, m);
  accumulate_time(dquery.segment(m, t), tr.subj_time_scalar);

  // memory updates (one-step truncation: pre-event memories are constants)
  if (tr.self_event) ds_subj_new += ds_obj_new;
  Eigen::VectorXd dx_subj;
  gru_backward(tr.gru_subj, ds_subj_new, g, dx_subj);
  accumulate_time(dx_subj.segment(2 * m, t), tr.subj_time_scalar);
  if (!tr.self_event) {
    Eigen::VectorXd dx_obj;
    gru_backward(tr.gru_obj, ds_obj_new, g, dx_obj);
    accumulate_time(dx_obj.segment(2 * m, t), tr.obj_time_scalar);
  }
  return g;
}

double TemporalModel::Gradients::squared_norm() const {
  double s = 0.0;
  for (const auto* mvec :
       {&wt, &wr, &wz, &wn, &ur, &uz, &un, &wq, &wk, &wv, &w1, &w2})
    s += mvec->squaredNorm();
  for (const auto* v : {&bt, &br, &bz, &bn, &cr, &cz, &cn, &b1, &b2}) s += v->squaredNorm();
  return s;
}

bool TemporalModel::Gradients::finite() const {
  for (const auto* mvec :
       {&wt, &wr, &wz, &wn, &ur, &uz, &un, &wq, &wk, &wv, &w1, &w2})
    if (!mvec->allFinite()) return false;
  for (const auto* v : {&bt, &br, &bz, &bn, &cr, &cz, &cn, &b1, &b2})
    if (!v->allFinite()) return false;
  return true;
}

bool TemporalModel::apply_step(const Gradients& g, double lr, double clip) {
  if (!g.finite()) return false;
  double norm = std::sqrt(g.squared_norm());
  double factor = (clip > 0.0 && norm > clip) ? clip / norm : 1.0;
  double step = lr * factor;
  wt_ -= step * g.wt;
  bt_ -= step * g.bt;
  wr_ -= step * g.wr;
  wz_ -= step * g.wz;
  wn_ -= step * g.wn;
  ur_ -= step * g.ur;
  uz_ -= step * g.uz;
  un_ -= step * g.un;
  br_ -= step * g.br;
  bz_ -= step * g.bz;
  bn_ -= step * g.bn;
  cr_ -= step * g.cr;
  cz_ -= step * g.cz;
  cn_ -= step * g.cn;
  wq_ -= step * g.wq;
  wk_ -= step * g.wk;
  wv_ -= step * g.wv;
  w1_ -= step * g.w1;
  b1_ -= step * g.b1;
  w2_ -= step * g.w2;
  b2_ -= step * g.b2;
  return true;
}

double TemporalModel::score_event(EntityStore& store, const Event& e, const Eigen::VectorXd& enc,
                                  std::span<const PseudoNeighbor> pseudo) {
  Trace tr = forward(store, e, enc, pseudo);
  commit(store, e, enc, tr);
  return tr.rl;
}

std::pair<double, bool> TemporalModel::train_event(EntityStore& store, const Event& e,
                                                   const Eigen::VectorXd& enc,
                                                   std::span<const PseudoNeighbor> pseudo,
                                                   double lr, double clip) {
  Trace tr = forward(store, e, enc, pseudo);
  Gradients g = backward(tr);
  if (!g.finite()) return {tr.rl, false};
  commit(store, e, enc, tr);
  apply_step(g, lr, clip);
  return {tr.rl, true};
}

std::vector<TemporalModel::ParamRef> TemporalModel::param_refs() {
  std::vector<ParamRef> out;
  auto add_m = [&](const char* name, Eigen::MatrixXd& m) {
    out.push_back({name, m.data(), m.rows(), m.cols()});
  };
  auto add_v = [&](const char* name, Eigen::VectorXd& v) {
    out.push_back({name, v.data(), v.rows(), 1});
  };
  add_m("time.w", wt_);
  add_v("time.b", bt_);
  add_m("gru.wr", wr_);
  add_m("gru.wz", wz_);
  add_m("gru.wn", wn_);
  add_m("gru.ur", ur_);
  add_m("gru.uz", uz_);
  add_m("gru.un", un_);
  add_v("gru.br", br_);
  add_v("gru.bz", bz_);
  add_v("gru.bn", bn_);
  add_v("gru.cr", cr_);
  add_v("gru.cz", cz_);
  add_v("gru.cn", cn_);
  add_m("attn.wq", wq_);
  add_m("attn.wk", wk_);
  add_m("attn.wv", wv_);
  add_m("dec.w1", w1_);
  add_v("dec.b1", b1_);
  add_m("dec.w2", w2_);
  add_v("dec.b2", b2_);
  return out;
}

std::vector<TemporalModel::ConstParamRef> TemporalModel::param_refs() const {
  std::vector<ConstParamRef> out;
  for (const auto& ref : const_cast<TemporalModel*>(this)->param_refs())
    out.push_back({ref.name, ref.data, ref.rows, ref.cols});
  return out;
}

std::vector<TemporalModel::ParamRef> TemporalModel::grad_refs(Gradients& g) {
  std::vector<ParamRef> out;
  auto add_m = [&](const char* name, Eigen::MatrixXd& m) {
    out.push_back({name, m.data(), m.rows(), m.cols()});
  };
  auto add_v = [&](const char* name, Eigen::VectorXd& v) {
    out.push_back({name, v.data(), v.rows(), 1});
  };
  add_m("time.w", g.wt);
  add_v("time.b", g.bt);
  add_m("gru.wr", g.wr);
  add_m("gru.wz", g.wz);
  add_m("gru.wn", g.wn);
  add_m("gru.ur", g.ur);
  add_m("gru.uz", g.uz);
  add_m("gru.un", g.un);
  add_v("gru.br", g.br);
  add_v("gru.bz", g.bz);
  add_v("gru.bn", g.bn);
  add_v("gru.cr", g.cr);
  add_v("gru.cz", g.cz);
  add_v("gru.cn", g.cn);
  add_m("attn.wq", g.wq);
  add_m("attn.wk", g.wk);
  add_m("attn.wv", g.wv);
  add_m("dec.w1", g.w1);
  add_v("dec.b1", g.b1);
  add_m("dec.w2", g.w2);
  add_v("dec.b2", g.b2);
  return out;
}

bool TemporalModel::same_params(const TemporalModel& other) const {
  auto a = param_refs();
  auto b = other.param_refs();
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size()) return false;
    // bitwise so NaN-poisoned parameters still compare equal to themselves
    if (std::memcmp(a[i].data, b[i].data,
                    static_cast<std::size_t>(a[i].size()) * sizeof(double)) != 0)
      return false;
  }
  return true;
}

double sigma_threshold(std::span<const double> rl, double stds) {
  if (rl.empty()) return 0.0;
  double mean = 0.0;
  for (double v : rl) mean += v;
  mean /= static_cast<double>(rl.size());
  double var = 0.0;
  for (double v : rl) var += (v - mean) * (v - mean);
  var /= static_cast<double>(rl.size());
  return mean + stds * std::sqrt(var);
}

std::vector<EntityId> identify_anomalous_nodes(const WindowGraph& window, double sigma) {
  std::set<EntityId> ids;
  for (std::size_t i = 0; i < window.events.size(); ++i) {
    if (i < window.rl.size() && window.rl[i] > sigma) {
      ids.insert(window.events[i].subject);
      ids.insert(window.events[i].object);
    }
  }
  return {ids.begin(), ids.end()};
}

}  // namespace driftwatch
