#include "hinclus/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "hinclus/errors.hpp"

namespace hinclus {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// KL primitives (the smoothing contract shared with module constraints)
// ---------------------------------------------------------------------------

double kl_div(std::span<const double> p, std::span<const double> q, double eps) {
  if (p.size() != q.size())
    throw std::invalid_argument("kl_div: length mismatch");
  double s = 0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0) continue;  // 0 ln(0/x) = 0
    double qi = std::max(q[i], eps);
    s += p[i] * std::log(p[i] / qi);
  }
  return s;
}

double kl_between_columns(const SparseJoint& m, int col_a, int col_b, double eps) {
  double ma = m.col_marg[static_cast<size_t>(col_a)];
  double mb = m.col_marg[static_cast<size_t>(col_b)];
  std::int64_t ka = m.col_ptr[static_cast<size_t>(col_a)];
  const std::int64_t ea = m.col_ptr[static_cast<size_t>(col_a) + 1];
  std::int64_t kb = m.col_ptr[static_cast<size_t>(col_b)];
  const std::int64_t eb = m.col_ptr[static_cast<size_t>(col_b) + 1];
  double s = 0;
  while (ka < ea) {
    int row = m.row_ind[static_cast<size_t>(ka)];
    while (kb < eb && m.row_ind[static_cast<size_t>(kb)] < row) ++kb;
    double p = m.val_csc[static_cast<size_t>(ka)] / ma;
    double q = (kb < eb && m.row_ind[static_cast<size_t>(kb)] == row)
                   ? m.val_csc[static_cast<size_t>(kb)] / mb
                   : 0.0;
    s += p * std::log(p / std::max(q, eps));
    ++ka;
  }
  return s;
}

double kl_between_rows(const SparseJoint& m, int row_a, int row_b, double eps) {
  double ma = m.row_marg[static_cast<size_t>(row_a)];
  double mb = m.row_marg[static_cast<size_t>(row_b)];
  std::int64_t ka = m.row_ptr[static_cast<size_t>(row_a)];
  const std::int64_t ea = m.row_ptr[static_cast<size_t>(row_a) + 1];
  std::int64_t kb = m.row_ptr[static_cast<size_t>(row_b)];
  const std::int64_t eb = m.row_ptr[static_cast<size_t>(row_b) + 1];
  double s = 0;
  while (ka < ea) {
    int col = m.col_ind[static_cast<size_t>(ka)];
    while (kb < eb && m.col_ind[static_cast<size_t>(kb)] < col) ++kb;
    double p = m.val[static_cast<size_t>(ka)] / ma;
    double q = (kb < eb && m.col_ind[static_cast<size_t>(kb)] == col)
                   ? m.val[static_cast<size_t>(kb)] / mb
                   : 0.0;
    s += p * std::log(p / std::max(q, eps));
    ++ka;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Edge model (Eqs. of the variational q and its caches)
// ---------------------------------------------------------------------------

EdgeModel build_edge_model(const SparseJoint& joint,
                           std::span<const int> row_labels_global,
                           std::span<const int> col_labels_global, int k_rows,
                           int k_cols, double eps) {
  EdgeModel m;
  m.Kr = k_rows;
  m.Kc = k_cols;
  m.eps = eps;
  m.ln_eps = std::log(eps);

  m.row_labels.resize(static_cast<size_t>(joint.rows));
  for (int i = 0; i < joint.rows; ++i)
    m.row_labels[static_cast<size_t>(i)] =
        row_labels_global[static_cast<size_t>(joint.row_ids[static_cast<size_t>(i)])];
  m.col_labels.resize(static_cast<size_t>(joint.cols));
  for (int j = 0; j < joint.cols; ++j)
    m.col_labels[static_cast<size_t>(j)] =
        col_labels_global[static_cast<size_t>(joint.col_ids[static_cast<size_t>(j)])];

  // q(row-cluster, col-cluster) = sum of member cell mass
  m.q_joint.assign(static_cast<size_t>(k_rows) * static_cast<size_t>(k_cols), 0.0);
  for (int i = 0; i < joint.rows; ++i) {
    int k = m.row_labels[static_cast<size_t>(i)];
    for (std::int64_t z = joint.row_ptr[static_cast<size_t>(i)];
         z < joint.row_ptr[static_cast<size_t>(i) + 1]; ++z) {
      int c = m.col_labels[static_cast<size_t>(joint.col_ind[static_cast<size_t>(z)])];
      m.q_joint[static_cast<size_t>(k) * k_cols + c] += joint.val[static_cast<size_t>(z)];
    }
  }
  m.q_row_mass.assign(static_cast<size_t>(k_rows), 0.0);
  m.q_col_mass.assign(static_cast<size_t>(k_cols), 0.0);
  for (int k = 0; k < k_rows; ++k)
    for (int c = 0; c < k_cols; ++c) {
      double v = m.q(k, c);
      m.q_row_mass[static_cast<size_t>(k)] += v;
      m.q_col_mass[static_cast<size_t>(c)] += v;
    }

  m.row_cond.resize(static_cast<size_t>(joint.rows));
  m.ln_row_cond.resize(static_cast<size_t>(joint.rows));
  m.ln_row_marg.resize(static_cast<size_t>(joint.rows));
  for (int i = 0; i < joint.rows; ++i) {
    double mass = m.q_row_mass[static_cast<size_t>(m.row_labels[static_cast<size_t>(i)])];
    double cond = joint.row_marg[static_cast<size_t>(i)] / mass;
    m.row_cond[static_cast<size_t>(i)] = cond;
    m.ln_row_cond[static_cast<size_t>(i)] = std::log(cond);
    m.ln_row_marg[static_cast<size_t>(i)] =
        std::log(joint.row_marg[static_cast<size_t>(i)]);
  }
  m.col_cond.resize(static_cast<size_t>(joint.cols));
  m.ln_col_cond.resize(static_cast<size_t>(joint.cols));
  m.ln_col_marg.resize(static_cast<size_t>(joint.cols));
  for (int j = 0; j < joint.cols; ++j) {
    double mass = m.q_col_mass[static_cast<size_t>(m.col_labels[static_cast<size_t>(j)])];
    double cond = joint.col_marg[static_cast<size_t>(j)] / mass;
    m.col_cond[static_cast<size_t>(j)] = cond;
    m.ln_col_cond[static_cast<size_t>(j)] = std::log(cond);
    m.ln_col_marg[static_cast<size_t>(j)] =
        std::log(joint.col_marg[static_cast<size_t>(j)]);
  }

  size_t cells = m.q_joint.size();
  m.row_factor.assign(cells, 0.0);
  m.ln_row_factor.assign(cells, 0.0);
  m.col_factor.assign(cells, 0.0);
  m.ln_col_factor.assign(cells, 0.0);
  for (int k = 0; k < k_rows; ++k)
    for (int c = 0; c < k_cols; ++c) {
      size_t idx = static_cast<size_t>(k) * k_cols + c;
      double v = m.q_joint[idx];
      if (v > 0) {
        m.row_factor[idx] = v / m.q_row_mass[static_cast<size_t>(k)];
        m.ln_row_factor[idx] = std::log(m.row_factor[idx]);
        m.col_factor[idx] = v / m.q_col_mass[static_cast<size_t>(c)];
        m.ln_col_factor[idx] = std::log(m.col_factor[idx]);
      }
    }

  m.ln_val.resize(joint.val.size());
  for (size_t z = 0; z < joint.val.size(); ++z) m.ln_val[z] = std::log(joint.val[z]);
  m.ln_val_csc.resize(joint.val_csc.size());
  for (size_t z = 0; z < joint.val_csc.size(); ++z)
    m.ln_val_csc[z] = std::log(joint.val_csc[z]);
  return m;
}

namespace {

int ee_index(const Hin& hin, int t, int s) {
  for (size_t i = 0; i < hin.p_ee.size(); ++i)
    if (hin.p_ee[i].t == t && hin.p_ee[i].s == s) return static_cast<int>(i);
  throw std::out_of_range("unknown entity edge");
}

}  // namespace

const EdgeModel& model_of(const ClusterState& state, const Hin& hin,
                          const EdgeId& edge) {
  switch (edge.kind) {
    case EdgeId::Kind::DocWord:
      return state.m_dw;
    case EdgeId::Kind::DocEntity:
      return state.m_de[static_cast<size_t>(edge.t)];
    case EdgeId::Kind::EntityEntity:
      return state.m_ee[static_cast<size_t>(ee_index(hin, edge.t, edge.s))];
  }
  throw std::out_of_range("model_of: unknown edge");
}

void update_model_q(const Hin& hin, ClusterState& state, const EdgeId& edge) {
  double eps = state.m_dw.eps > 0 ? state.m_dw.eps : kDefaultEpsilon;
  switch (edge.kind) {
    case EdgeId::Kind::DocWord:
      state.m_dw = build_edge_model(hin.p_dw, state.labels_doc, state.labels_word,
                                    state.K_d, state.K_w, eps);
      return;
    case EdgeId::Kind::DocEntity:
      state.m_de[static_cast<size_t>(edge.t)] = build_edge_model(
          hin.p_de[static_cast<size_t>(edge.t)], state.labels_doc,
          state.labels_ent[static_cast<size_t>(edge.t)], state.K_d,
          state.K_e[static_cast<size_t>(edge.t)], eps);
      return;
    case EdgeId::Kind::EntityEntity: {
      int idx = ee_index(hin, edge.t, edge.s);
      const Hin::EntityEdge& e = hin.p_ee[static_cast<size_t>(idx)];
      state.m_ee[static_cast<size_t>(idx)] = build_edge_model(
          e.joint, state.labels_ent[static_cast<size_t>(e.t)],
          state.labels_ent[static_cast<size_t>(e.s)],
          state.K_e[static_cast<size_t>(e.t)], state.K_e[static_cast<size_t>(e.s)],
          eps);
      return;
    }
  }
}

std::vector<double> node_conditional(const SparseJoint& joint, bool row_side,
                                     int compact_index) {
  if (row_side) {
    std::vector<double> out(static_cast<size_t>(joint.cols), 0.0);
    double mass = joint.row_marg[static_cast<size_t>(compact_index)];
    for (std::int64_t z = joint.row_ptr[static_cast<size_t>(compact_index)];
         z < joint.row_ptr[static_cast<size_t>(compact_index) + 1]; ++z)
      out[static_cast<size_t>(joint.col_ind[static_cast<size_t>(z)])] =
          joint.val[static_cast<size_t>(z)] / mass;
    return out;
  }
  std::vector<double> out(static_cast<size_t>(joint.rows), 0.0);
  double mass = joint.col_marg[static_cast<size_t>(compact_index)];
  for (std::int64_t z = joint.col_ptr[static_cast<size_t>(compact_index)];
       z < joint.col_ptr[static_cast<size_t>(compact_index) + 1]; ++z)
    out[static_cast<size_t>(joint.row_ind[static_cast<size_t>(z)])] =
        joint.val_csc[static_cast<size_t>(z)] / mass;
  return out;
}

std::vector<double> centroid_conditional(const SparseJoint& joint,
                                         const EdgeModel& model, bool row_side,
                                         int cluster) {
  if (row_side) {
    // p(col j | row-cluster) = p(j | col-cluster(j)) p(col-cluster(j) | row-cluster)
    std::vector<double> out(static_cast<size_t>(joint.cols), 0.0);
    for (int j = 0; j < joint.cols; ++j) {
      int c = model.col_labels[static_cast<size_t>(j)];
      out[static_cast<size_t>(j)] =
          model.col_cond[static_cast<size_t>(j)] *
          model.row_factor[static_cast<size_t>(cluster) * model.Kc + c];
    }
    return out;
  }
  std::vector<double> out(static_cast<size_t>(joint.rows), 0.0);
  for (int i = 0; i < joint.rows; ++i) {
    int k = model.row_labels[static_cast<size_t>(i)];
    out[static_cast<size_t>(i)] =
        model.row_cond[static_cast<size_t>(i)] *
        model.col_factor[static_cast<size_t>(k) * model.Kc + cluster];
  }
  return out;
}

double row_assign_score(const SparseJoint& joint, const EdgeModel& model, int i,
                        int k) {
  const double ln_ri = model.ln_row_marg[static_cast<size_t>(i)];
  const double ri = joint.row_marg[static_cast<size_t>(i)];
  const size_t base = static_cast<size_t>(k) * model.Kc;
  double s = 0;
  for (std::int64_t z = joint.row_ptr[static_cast<size_t>(i)];
       z < joint.row_ptr[static_cast<size_t>(i) + 1]; ++z) {
    int j = joint.col_ind[static_cast<size_t>(z)];
    int c = model.col_labels[static_cast<size_t>(j)];
    double cent = model.col_cond[static_cast<size_t>(j)] * model.row_factor[base + c];
    double ln_cent = cent >= model.eps
                         ? model.ln_col_cond[static_cast<size_t>(j)] +
                               model.ln_row_factor[base + c]
                         : model.ln_eps;
    s += joint.val[static_cast<size_t>(z)] / ri *
         (model.ln_val[static_cast<size_t>(z)] - ln_ri - ln_cent);
  }
  return s;
}

double col_assign_score(const SparseJoint& joint, const EdgeModel& model, int j,
                        int k) {
  const double ln_cj = model.ln_col_marg[static_cast<size_t>(j)];
  const double cj = joint.col_marg[static_cast<size_t>(j)];
  double s = 0;
  for (std::int64_t z = joint.col_ptr[static_cast<size_t>(j)];
       z < joint.col_ptr[static_cast<size_t>(j) + 1]; ++z) {
    int i = joint.row_ind[static_cast<size_t>(z)];
    int rk = model.row_labels[static_cast<size_t>(i)];
    size_t idx = static_cast<size_t>(rk) * model.Kc + k;
    double cent = model.row_cond[static_cast<size_t>(i)] * model.col_factor[idx];
    double ln_cent = cent >= model.eps
                         ? model.ln_row_cond[static_cast<size_t>(i)] +
                               model.ln_col_factor[idx]
                         : model.ln_eps;
    s += joint.val_csc[static_cast<size_t>(z)] / cj *
         (model.ln_val_csc[static_cast<size_t>(z)] - ln_cj - ln_cent);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Label updates
// ---------------------------------------------------------------------------

namespace {

// scores[g * K + k] accumulated over all edges keyed by document rows
std::vector<double> doc_score_matrix(const Hin& hin, const ClusterState& state) {
  const int M = hin.num_docs();
  const int K = state.K_d;
  std::vector<double> scores(static_cast<size_t>(M) * static_cast<size_t>(K), 0.0);
  auto add_edge = [&](const SparseJoint& joint, const EdgeModel& model) {
    for (int i = 0; i < joint.rows; ++i) {
      int g = joint.row_ids[static_cast<size_t>(i)];
      for (int k = 0; k < K; ++k)
        scores[static_cast<size_t>(g) * K + k] += row_assign_score(joint, model, i, k);
    }
  };
  add_edge(hin.p_dw, state.m_dw);
  for (int t = 0; t < hin.num_types(); ++t)
    add_edge(hin.p_de[static_cast<size_t>(t)], state.m_de[static_cast<size_t>(t)]);
  return scores;
}

std::vector<int> argmin_rows(const std::vector<double>& scores, int n, int K) {
  std::vector<int> labels(static_cast<size_t>(n), 0);
  for (int g = 0; g < n; ++g) {
    const double* row = scores.data() + static_cast<size_t>(g) * K;
    int best = 0;
    for (int k = 1; k < K; ++k)
      if (row[k] < row[best]) best = k;  // ties keep the smaller index
    labels[static_cast<size_t>(g)] = best;
  }
  return labels;
}

// Data side of the ICM objective for one entity of type t: KL to the
// doc-edge centroid plus KL terms over every entity-entity edge touching t.
double entity_data_score(const Hin& hin, const ClusterState& state, int t, int i,
                         int k) {
  double s = 0;
  const SparseJoint& de = hin.p_de[static_cast<size_t>(t)];
  int compact = de.col_of[static_cast<size_t>(i)];
  if (compact >= 0)
    s += col_assign_score(de, state.m_de[static_cast<size_t>(t)], compact, k);
  for (size_t e = 0; e < hin.p_ee.size(); ++e) {
    const Hin::EntityEdge& edge = hin.p_ee[e];
    if (edge.t == t) {
      int r = edge.joint.row_of[static_cast<size_t>(i)];
      if (r >= 0) s += row_assign_score(edge.joint, state.m_ee[e], r, k);
    }
    if (edge.s == t) {
      int c = edge.joint.col_of[static_cast<size_t>(i)];
      if (c >= 0) s += col_assign_score(edge.joint, state.m_ee[e], c, k);
    }
  }
  return s;
}

struct EntityLinks {
  struct Link {
    int other = -1;
    double kl = 0;  // the pair's canonical KL(p(D|e_a) || p(D|e_b)), a < b
    bool is_must = true;
  };
  std::vector<std::vector<Link>> adj;  // per entity of the type
  double d_max = 0;
};

// Each pair enters both endpoints' lists with its canonical (a -> b) cost, so
// every ICM flip changes the objective's penalty sum by exactly what the
// entity sees.
EntityLinks build_entity_links(const Hin& hin, const ConstraintSet& cs, int t,
                               double eps) {
  EntityLinks links;
  links.adj.resize(static_cast<size_t>(hin.num_entities(t)));
  const SparseJoint& de = hin.p_de[static_cast<size_t>(t)];
  auto kl_pair = [&](const ConstraintPair& p) {
    int ca = de.col_of[static_cast<size_t>(p.a)];
    int cb = de.col_of[static_cast<size_t>(p.b)];
    if (ca < 0 || cb < 0)
      throw IntegrityError("constrained entity missing from the doc edge");
    return kl_between_columns(de, ca, cb, eps);
  };
  for (const ConstraintPair& p : cs.must[static_cast<size_t>(t)]) {
    double kl = kl_pair(p);
    links.adj[static_cast<size_t>(p.a)].push_back({p.b, kl, true});
    links.adj[static_cast<size_t>(p.b)].push_back({p.a, kl, true});
  }
  for (const ConstraintPair& p : cs.cannot[static_cast<size_t>(t)]) {
    double kl = kl_pair(p);
    links.adj[static_cast<size_t>(p.a)].push_back({p.b, kl, false});
    links.adj[static_cast<size_t>(p.b)].push_back({p.a, kl, false});
  }
  if (cs.d_max_valid[static_cast<size_t>(t)]) {
    links.d_max = cs.d_max[static_cast<size_t>(t)];
  } else {
    double best = 0;
    for (const ConstraintPair& p : cs.cannot[static_cast<size_t>(t)])
      best = std::max(best, kl_pair(p));
    links.d_max = best;
  }
  return links;
}

}  // namespace

std::vector<int> update_doc_labels(const Hin& hin, const ClusterState& state) {
  return argmin_rows(doc_score_matrix(hin, state), hin.num_docs(), state.K_d);
}

std::vector<int> update_word_labels(const Hin& hin, const ClusterState& state) {
  const int N = hin.num_words();
  const int K = state.K_w;
  std::vector<double> scores(static_cast<size_t>(N) * static_cast<size_t>(K), 0.0);
  for (int j = 0; j < hin.p_dw.cols; ++j) {
    int g = hin.p_dw.col_ids[static_cast<size_t>(j)];
    for (int k = 0; k < K; ++k)
      scores[static_cast<size_t>(g) * K + k] +=
          col_assign_score(hin.p_dw, state.m_dw, j, k);
  }
  return argmin_rows(scores, N, K);
}

std::vector<int> update_entity_labels_icm(const Hin& hin, const ClusterState& state,
                                          const ConstraintSet& cs, int t,
                                          int max_sweeps) {
  const int V = hin.num_entities(t);
  const int K = state.K_e[static_cast<size_t>(t)];
  double eps = state.m_de[static_cast<size_t>(t)].eps;
  EntityLinks links = build_entity_links(hin, cs, t, eps);
  double w_must = cs.w_must;
  double w_cannot = cs.w_cannot;

  // KL data terms depend only on the frozen q models, so they are constant
  // across ICM sweeps.
  std::vector<double> data(static_cast<size_t>(V) * static_cast<size_t>(K));
  for (int i = 0; i < V; ++i)
    for (int k = 0; k < K; ++k)
      data[static_cast<size_t>(i) * K + k] = entity_data_score(hin, state, t, i, k);

  std::vector<int> labels = state.labels_ent[static_cast<size_t>(t)];
  std::vector<double> must_at(static_cast<size_t>(K));
  std::vector<double> cannot_at(static_cast<size_t>(K));
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool changed = false;
    for (int i = 0; i < V; ++i) {
      std::fill(must_at.begin(), must_at.end(), 0.0);
      std::fill(cannot_at.begin(), cannot_at.end(), 0.0);
      double must_total = 0;
      for (const EntityLinks::Link& link : links.adj[static_cast<size_t>(i)]) {
        int lo = labels[static_cast<size_t>(link.other)];
        if (link.is_must) {
          double c = w_must * link.kl;
          must_total += c;
          must_at[static_cast<size_t>(lo)] += c;
        } else {
          cannot_at[static_cast<size_t>(lo)] += w_cannot * (links.d_max - link.kl);
        }
      }
      int best = 0;
      double best_score = kInf;
      for (int k = 0; k < K; ++k) {
        double s = data[static_cast<size_t>(i) * K + k] + must_total -
                   must_at[static_cast<size_t>(k)] + cannot_at[static_cast<size_t>(k)];
        if (s < best_score) {
          best_score = s;
          best = k;
        }
      }
      if (labels[static_cast<size_t>(i)] != best) {
        labels[static_cast<size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return labels;
}

// ---------------------------------------------------------------------------
// Objectives
// ---------------------------------------------------------------------------

double objective_hinc(const Hin& hin, const ClusterState& state) {
  double total = 0;
  auto add_edge = [&](const SparseJoint& joint, const EdgeModel& model,
                      std::span<const int> row_labels_global) {
    for (int i = 0; i < joint.rows; ++i) {
      int g = joint.row_ids[static_cast<size_t>(i)];
      total += joint.row_marg[static_cast<size_t>(i)] *
               row_assign_score(joint, model, i,
                                row_labels_global[static_cast<size_t>(g)]);
    }
  };
  add_edge(hin.p_dw, state.m_dw, state.labels_doc);
  for (int t = 0; t < hin.num_types(); ++t)
    add_edge(hin.p_de[static_cast<size_t>(t)], state.m_de[static_cast<size_t>(t)],
             state.labels_doc);
  for (size_t e = 0; e < hin.p_ee.size(); ++e)
    add_edge(hin.p_ee[e].joint, state.m_ee[e],
             state.labels_ent[static_cast<size_t>(hin.p_ee[e].t)]);
  return total;
}

double must_cost(const Hin& hin, const ClusterState& state, int t,
                 ConstraintPair pair, double w, double eps) {
  const auto& labels = state.labels_ent[static_cast<size_t>(t)];
  if (labels[static_cast<size_t>(pair.a)] == labels[static_cast<size_t>(pair.b)])
    return 0.0;
  const SparseJoint& de = hin.p_de[static_cast<size_t>(t)];
  return w * kl_between_columns(de, de.col_of[static_cast<size_t>(pair.a)],
                                de.col_of[static_cast<size_t>(pair.b)], eps);
}

double cannot_cost(const Hin& hin, const ClusterState& state, int t,
                   ConstraintPair pair, double d_max, double w, double eps) {
  const auto& labels = state.labels_ent[static_cast<size_t>(t)];
  if (labels[static_cast<size_t>(pair.a)] != labels[static_cast<size_t>(pair.b)])
    return 0.0;
  const SparseJoint& de = hin.p_de[static_cast<size_t>(t)];
  return w * (d_max - kl_between_columns(de, de.col_of[static_cast<size_t>(pair.a)],
                                         de.col_of[static_cast<size_t>(pair.b)], eps));
}

double objective_chinc(const Hin& hin, const ClusterState& state,
                       const ConstraintSet& cs, double eps) {
  double total = objective_hinc(hin, state);
  for (int t = 0; t < cs.num_types(); ++t) {
    for (const ConstraintPair& p : cs.must[static_cast<size_t>(t)])
      total += must_cost(hin, state, t, p, cs.w_must, eps);
    if (cs.cannot[static_cast<size_t>(t)].empty()) continue;
    double d_max;
    if (cs.d_max_valid[static_cast<size_t>(t)]) {
      d_max = cs.d_max[static_cast<size_t>(t)];
    } else {
      ConstraintSet scratch = cs;
      d_max = compute_d_max(hin, scratch, t, eps).value;
    }
    for (const ConstraintPair& p : cs.cannot[static_cast<size_t>(t)])
      total += cannot_cost(hin, state, t, p, d_max, cs.w_cannot, eps);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

namespace {

// Reseeds each empty cluster with the node farthest (max KL) from its own
// current centroid, drawn from clusters that keep at least one member.
void repair_empty_clusters(std::vector<int>& labels, int K,
                           const std::vector<double>& own_score) {
  const int n = static_cast<int>(labels.size());
  std::vector<int> sizes(static_cast<size_t>(K), 0);
  for (int l : labels) sizes[static_cast<size_t>(l)] += 1;
  std::vector<double> score = own_score;
  for (int k = 0; k < K; ++k) {
    if (sizes[static_cast<size_t>(k)] > 0) continue;
    int best = -1;
    double best_score = -kInf;
    for (int g = 0; g < n; ++g) {
      if (sizes[static_cast<size_t>(labels[static_cast<size_t>(g)])] < 2) continue;
      if (score[static_cast<size_t>(g)] > best_score) {
        best_score = score[static_cast<size_t>(g)];
        best = g;
      }
    }
    if (best < 0) break;  // nothing left to move
    sizes[static_cast<size_t>(labels[static_cast<size_t>(best)])] -= 1;
    labels[static_cast<size_t>(best)] = k;
    sizes[static_cast<size_t>(k)] = 1;
    score[static_cast<size_t>(best)] = -kInf;
  }
}

std::vector<double> own_scores_from_matrix(const std::vector<double>& scores,
                                           const std::vector<int>& labels, int K) {
  std::vector<double> own(labels.size());
  for (size_t g = 0; g < labels.size(); ++g)
    own[g] = scores[g * static_cast<size_t>(K) +
                    static_cast<size_t>(labels[g])];
  return own;
}

}  // namespace

RunResult run_chinc(const Hin& hin, const ConstraintSet& cs,
                    const OptimizerConfig& config) {
  const int M = hin.num_docs();
  const int N = hin.num_words();
  const int T = hin.num_types();

  if (config.k_docs < 1)
    throw std::invalid_argument("run_chinc: k_docs must be >= 1");
  if (config.k_docs > M)
    throw std::invalid_argument("run_chinc: k_docs exceeds the number of documents");
  int K_w = config.k_words > 0 ? config.k_words : std::min(2 * config.k_docs, N);
  if (K_w > N)
    throw std::invalid_argument("run_chinc: k_words exceeds the number of words");
  std::vector<int> K_e(static_cast<size_t>(T));
  if (!config.k_entities.empty() &&
      config.k_entities.size() != static_cast<size_t>(T))
    throw std::invalid_argument("run_chinc: k_entities must have one entry per type");
  for (int t = 0; t < T; ++t) {
    int v = hin.num_entities(t);
    int k = config.k_entities.empty() ? std::min(std::max(T, 1), v)
                                      : config.k_entities[static_cast<size_t>(t)];
    if (k < 1 || k > v)
      throw std::invalid_argument("run_chinc: infeasible entity cluster count for type " +
                                  hin.type_names[static_cast<size_t>(t)]);
    K_e[static_cast<size_t>(t)] = k;
  }

  // Effective constraints: weight overrides applied, d_max caches filled.
  ConstraintSet ecs = cs.num_types() == 0 ? ConstraintSet::empty_for(hin) : cs;
  if (ecs.num_types() != T)
    throw std::invalid_argument("run_chinc: constraint set does not match the network");
  if (config.w_must) ecs.w_must = *config.w_must;
  if (config.w_cannot) ecs.w_cannot = *config.w_cannot;
  for (int t = 0; t < T; ++t)
    if (!ecs.d_max_valid[static_cast<size_t>(t)])
      compute_d_max(hin, ecs, t, config.epsilon);

  RunResult result;
  ClusterState& state = result.state;
  state.K_d = config.k_docs;
  state.K_w = K_w;
  state.K_e = K_e;

  // Uniform random labels; draw order is documents, words, then each type.
  std::mt19937_64 rng(config.seed);
  auto draw = [&rng](int n, int K) {
    std::vector<int> labels(static_cast<size_t>(n));
    std::uniform_int_distribution<int> d(0, K - 1);
    for (int i = 0; i < n; ++i) labels[static_cast<size_t>(i)] = d(rng);
    return labels;
  };
  state.labels_doc = draw(M, state.K_d);
  state.labels_word = draw(N, state.K_w);
  state.labels_ent.resize(static_cast<size_t>(T));
  for (int t = 0; t < T; ++t)
    state.labels_ent[static_cast<size_t>(t)] =
        draw(hin.num_entities(t), K_e[static_cast<size_t>(t)]);

  state.m_dw.eps = config.epsilon;
  state.m_de.resize(static_cast<size_t>(T));
  state.m_ee.resize(hin.p_ee.size());
  auto refresh_all = [&] {
    for (const EdgeId& e : edge_list(hin)) update_model_q(hin, state, e);
  };
  refresh_all();

  auto record = [&](const char* step) {
    if (config.record_steps)
      result.step_trace.emplace_back(step,
                                     objective_chinc(hin, state, ecs, config.epsilon));
  };

  auto doc_step = [&] {
    std::vector<double> scores = doc_score_matrix(hin, state);
    state.labels_doc = argmin_rows(scores, M, state.K_d);
    repair_empty_clusters(state.labels_doc, state.K_d,
                          own_scores_from_matrix(scores, state.labels_doc, state.K_d));
    record("D-label");
    update_model_q(hin, state, {EdgeId::Kind::DocWord, -1, -1});
    for (int t = 0; t < T; ++t)
      update_model_q(hin, state, {EdgeId::Kind::DocEntity, t, -1});
    record("D-model");
  };

  double j_prev = objective_chinc(hin, state, ecs, config.epsilon);
  record("init");

  for (int iter = 1; iter <= config.max_iter; ++iter) {
    doc_step();

    for (int t = 0; t < T; ++t) {
      // No empty-cluster repair on entity sides: reseeding a constrained
      // entity severs its must-links and breaks the monotone descent, and
      // ICM may legitimately prefer fewer effective entity clusters.
      state.labels_ent[static_cast<size_t>(t)] =
          update_entity_labels_icm(hin, state, ecs, t, config.icm_max_sweeps);
      record("E-label");
      update_model_q(hin, state, {EdgeId::Kind::DocEntity, t, -1});
      for (const Hin::EntityEdge& e : hin.p_ee)
        if (e.t == t || e.s == t)
          update_model_q(hin, state, {EdgeId::Kind::EntityEntity, e.t, e.s});
      record("E-model");
    }

    doc_step();

    {
      const int K = state.K_w;
      std::vector<double> scores(static_cast<size_t>(N) * static_cast<size_t>(K), 0.0);
      for (int j = 0; j < hin.p_dw.cols; ++j) {
        int g = hin.p_dw.col_ids[static_cast<size_t>(j)];
        for (int k = 0; k < K; ++k)
          scores[static_cast<size_t>(g) * K + k] +=
              col_assign_score(hin.p_dw, state.m_dw, j, k);
      }
      state.labels_word = argmin_rows(scores, N, K);
      repair_empty_clusters(state.labels_word, K,
                            own_scores_from_matrix(scores, state.labels_word, K));
      record("W-label");
      update_model_q(hin, state, {EdgeId::Kind::DocWord, -1, -1});
      record("W-model");
    }

    double j_cur = objective_chinc(hin, state, ecs, config.epsilon);
    result.trace.push_back(j_cur);
    result.iterations = iter;
    double delta = std::abs(j_prev - j_cur) / std::max(j_prev, config.epsilon);
    j_prev = j_cur;
    if (delta <= config.max_delta) {
      result.converged = true;
      break;
    }
  }
  return result;
}

RunResult run_itcc(const Hin& hin, const OptimizerConfig& config) {
  if (hin.num_types() != 0)
    throw std::invalid_argument("run_itcc: network must contain only the doc-word edge");
  return run_chinc(hin, ConstraintSet{}, config);
}

// ---------------------------------------------------------------------------
// Invariant checks
// ---------------------------------------------------------------------------

namespace {

void validate_model(const SparseJoint& joint, const EdgeModel& model,
                    std::span<const int> rows_global, std::span<const int> cols_global,
                    const std::string& name, double tol) {
  double sum = 0;
  for (double v : model.q_joint) {
    if (v < 0) throw IntegrityError("model " + name + ": negative q entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > tol)
    throw IntegrityError("model " + name + ": q sums to " + std::to_string(sum));

  std::vector<double> mass(static_cast<size_t>(model.Kr), 0.0);
  for (int i = 0; i < joint.rows; ++i) {
    int g = joint.row_ids[static_cast<size_t>(i)];
    int l = rows_global[static_cast<size_t>(g)];
    if (l < 0 || l >= model.Kr)
      throw IntegrityError("model " + name + ": row label out of range");
    mass[static_cast<size_t>(model.row_labels[static_cast<size_t>(i)])] +=
        joint.row_marg[static_cast<size_t>(i)];
  }
  for (int k = 0; k < model.Kr; ++k)
    if (std::abs(mass[static_cast<size_t>(k)] - model.q_row_mass[static_cast<size_t>(k)]) > tol)
      throw IntegrityError("model " + name + ": row cluster mass mismatch");

  std::vector<double> cmass(static_cast<size_t>(model.Kc), 0.0);
  for (int j = 0; j < joint.cols; ++j)
    cmass[static_cast<size_t>(model.col_labels[static_cast<size_t>(j)])] +=
        joint.col_marg[static_cast<size_t>(j)];
  for (int c = 0; c < model.Kc; ++c)
    if (std::abs(cmass[static_cast<size_t>(c)] - model.q_col_mass[static_cast<size_t>(c)]) > tol)
      throw IntegrityError("model " + name + ": column cluster mass mismatch");
}

}  // namespace

void validate_state(const Hin& hin, const ClusterState& state, double tol) {
  auto check_labels = [](std::span<const int> labels, int K, const char* side) {
    for (int l : labels)
      if (l < 0 || l >= K)
        throw IntegrityError(std::string("label out of range on ") + side);
  };
  check_labels(state.labels_doc, state.K_d, "documents");
  check_labels(state.labels_word, state.K_w, "words");
  for (int t = 0; t < hin.num_types(); ++t)
    check_labels(state.labels_ent[static_cast<size_t>(t)],
                 state.K_e[static_cast<size_t>(t)], "entities");

  validate_model(hin.p_dw, state.m_dw, state.labels_doc, state.labels_word,
                 "doc~word", tol);
  for (int t = 0; t < hin.num_types(); ++t)
    validate_model(hin.p_de[static_cast<size_t>(t)],
                   state.m_de[static_cast<size_t>(t)], state.labels_doc,
                   state.labels_ent[static_cast<size_t>(t)],
                   edge_name(hin, {EdgeId::Kind::DocEntity, t, -1}), tol);
  for (size_t e = 0; e < hin.p_ee.size(); ++e)
    validate_model(hin.p_ee[e].joint, state.m_ee[e],
                   state.labels_ent[static_cast<size_t>(hin.p_ee[e].t)],
                   state.labels_ent[static_cast<size_t>(hin.p_ee[e].s)],
                   edge_name(hin,
                             {EdgeId::Kind::EntityEntity, hin.p_ee[e].t, hin.p_ee[e].s}),
                   tol);
}

}  // namespace hinclus
