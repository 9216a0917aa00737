#pragma once

#include <span>

#include "hinclus/sparse.hpp"

namespace hinclus {

inline constexpr double kDefaultEpsilon = 1e-10;

/// KL divergence sum_i p_i ln(p_i / q_i) in nats, with 0 ln(0/x) = 0 and q_i
/// floored at eps whenever p_i > 0. Throws std::invalid_argument on length
/// mismatch. Inputs are expected to be distributions (callers validate).
double kl_div(std::span<const double> p, std::span<const double> q,
              double eps = kDefaultEpsilon);

/// KL between the row-conditionals of two columns of a joint matrix,
/// KL(p(rows | col_a) || p(rows | col_b)), under the same smoothing.
double kl_between_columns(const SparseJoint& m, int col_a, int col_b,
                          double eps = kDefaultEpsilon);

/// Same, between two rows: KL(p(cols | row_a) || p(cols | row_b)).
double kl_between_rows(const SparseJoint& m, int row_a, int row_b,
                       double eps = kDefaultEpsilon);

}  // namespace hinclus
