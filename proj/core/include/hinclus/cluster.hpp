#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hinclus/constraints.hpp"
#include "hinclus/hin.hpp"
#include "hinclus/kl.hpp"

namespace hinclus {

struct OptimizerConfig {
  int k_docs = 0;               // required, >= 1
  int k_words = 0;              // 0: min(2 * k_docs, N)
  std::vector<int> k_entities;  // empty: min(T, V_t) per type

  int max_iter = 20;
  double max_delta = 1e-6;  // relative objective change
  int icm_max_sweeps = 10;
  std::uint64_t seed = 0;
  double epsilon = 1e-10;  // centroid floor inside KL

  std::optional<double> w_must, w_cannot;  // override the ConstraintSet weights

  bool record_steps = false;  // objective after every label/model step
};

/// Cluster-level variational model q for one edge, frozen at the last model
/// update. Node indices are the owning SparseJoint's compact indices.
struct EdgeModel {
  int Kr = 0, Kc = 0;
  double eps = 1e-10, ln_eps = 0.0;
  std::vector<int> row_labels, col_labels;  // label snapshot per compact node
  std::vector<double> q_joint;              // Kr x Kc, row-major; sums to 1
  std::vector<double> q_row_mass, q_col_mass;

  // p(node | cluster(node)) = p(node)/mass(label(node)), per compact node
  std::vector<double> row_cond, ln_row_cond;
  std::vector<double> col_cond, ln_col_cond;
  // row_factor(k,c) = q(k,c)/q_row_mass(k): p(col-cluster c | row-cluster k)
  std::vector<double> row_factor, ln_row_factor;
  // col_factor(k,c) = q(k,c)/q_col_mass(c): p(row-cluster k | col-cluster c)
  std::vector<double> col_factor, ln_col_factor;
  // log caches over the joint's nonzeros and marginals
  std::vector<double> ln_val, ln_val_csc, ln_row_marg, ln_col_marg;

  double q(int k, int c) const { return q_joint[static_cast<size_t>(k) * Kc + c]; }
};

/// Labels for every node set plus the per-edge variational models.
struct ClusterState {
  int K_d = 0, K_w = 0;
  std::vector<int> K_e;
  std::vector<int> labels_doc, labels_word;
  std::vector<std::vector<int>> labels_ent;
  EdgeModel m_dw;
  std::vector<EdgeModel> m_de;
  std::vector<EdgeModel> m_ee;  // aligned with hin.p_ee
};

EdgeModel build_edge_model(const SparseJoint& joint,
                           std::span<const int> row_labels_global,
                           std::span<const int> col_labels_global, int k_rows,
                           int k_cols, double eps);

/// Rebuilds the q model of one edge from the state's current labels.
void update_model_q(const Hin& hin, ClusterState& state, const EdgeId& edge);

const EdgeModel& model_of(const ClusterState& state, const Hin& hin,
                          const EdgeId& edge);

/// p(opposite side | node): the node's normalized row (or column), dense over
/// the joint's compact opposite index space.
std::vector<double> node_conditional(const SparseJoint& joint, bool row_side,
                                     int compact_index);

/// p(opposite side | cluster) via the q factorization
/// p(w_i | d-hat) = p(w_i | w-hat_{l_i}) p(w-hat_{l_i} | d-hat).
std::vector<double> centroid_conditional(const SparseJoint& joint,
                                         const EdgeModel& model, bool row_side,
                                         int cluster);

/// KL(p(cols | row i) || p(cols | row-cluster k)) with the centroid floored
/// at the model's epsilon.
double row_assign_score(const SparseJoint& joint, const EdgeModel& model, int i,
                        int k);
double col_assign_score(const SparseJoint& joint, const EdgeModel& model, int j,
                        int k);

/// Per-document argmin of the summed KL terms over the doc-word and
/// doc-entity edges; ties go to the smaller cluster. Pure: no repair.
std::vector<int> update_doc_labels(const Hin& hin, const ClusterState& state);

/// Per-word argmin over the doc-word edge.
std::vector<int> update_word_labels(const Hin& hin, const ClusterState& state);

/// Iterated conditional modes over the entities of type t: ascending-index
/// sweeps, each entity taking the argmin of its KL terms plus violated
/// must/cannot penalties with all other labels held at their live values,
/// until no label changes or max_sweeps. cs must carry a valid d_max for t.
std::vector<int> update_entity_labels_icm(const Hin& hin, const ClusterState& state,
                                          const ConstraintSet& cs, int t,
                                          int max_sweeps = 10);

/// The unconstrained objective: per-edge KL terms in the row-wise
/// decomposition, each stored matrix counted once.
double objective_hinc(const Hin& hin, const ClusterState& state);

/// Must-link cost: w * KL(p(D|e_a) || p(D|e_b)) when labels differ, else 0.
double must_cost(const Hin& hin, const ClusterState& state, int t,
                 ConstraintPair pair, double w, double eps = kDefaultEpsilon);

/// Cannot-link cost: w * (d_max - KL(p(D|e_a) || p(D|e_b))) when labels are
/// equal, else 0.
double cannot_cost(const Hin& hin, const ClusterState& state, int t,
                   ConstraintPair pair, double d_max, double w,
                   double eps = kDefaultEpsilon);

/// Full constrained objective: objective_hinc plus every must/cannot pair
/// counted once. Uses the ConstraintSet's weights and d_max caches
/// (computing d_max on the fly where the cache is cold).
double objective_chinc(const Hin& hin, const ClusterState& state,
                       const ConstraintSet& cs, double eps = kDefaultEpsilon);

struct RunResult {
  ClusterState state;
  std::vector<double> trace;  // end-of-iteration objective values
  int iterations = 0;
  bool converged = false;
  std::vector<std::pair<std::string, double>> step_trace;  // record_steps only
};

/// Alternating optimization: seeded random init, then per iteration
/// doc labels+model, per-type entity ICM+model, doc labels+model,
/// word labels+model, objective delta check. Empty document/word clusters
/// are reseeded with the node farthest from its current centroid after each
/// label step; entity sides are left to ICM and the constraints.
RunResult run_chinc(const Hin& hin, const ConstraintSet& cs,
                    const OptimizerConfig& config);

/// run_chinc restricted to the document-word edge with no constraints.
/// Requires a network with no entity types.
RunResult run_itcc(const Hin& hin, const OptimizerConfig& config);

/// Checks the ClusterState invariants (q sums, mass consistency, label
/// ranges); throws IntegrityError on violation.
void validate_state(const Hin& hin, const ClusterState& state, double tol = 1e-9);

}  // namespace hinclus
