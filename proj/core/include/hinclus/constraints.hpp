#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hinclus/filters.hpp"
#include "hinclus/hin.hpp"

namespace hinclus {

/// Unordered entity pair, stored with a < b (local indices within a type).
struct ConstraintPair {
  int a = -1, b = -1;
  auto operator<=>(const ConstraintPair&) const = default;
};

/// Per-entity-type must-link and cannot-link pairs with shared weights.
struct ConstraintSet {
  std::vector<std::string> type_names;  // aligned with the Hin's types
  std::vector<std::vector<ConstraintPair>> must;
  std::vector<std::vector<ConstraintPair>> cannot;
  double w_must = 0.0;
  double w_cannot = 0.0;
  std::vector<double> d_max;        // per-type cache, see compute_d_max
  std::vector<bool> d_max_valid;

  std::size_t total_pairs() const;
  int num_types() const { return static_cast<int>(type_names.size()); }
  static ConstraintSet empty_for(const Hin& hin);
};

/// Builds entity constraints from sub-types: within each top type, equal
/// sub-types yield a must-link and different sub-types a cannot-link. An
/// entity's sub-type is the one its typed mentions select most often (ties by
/// name); entities with an empty sub-type participate in no constraint.
/// Default weights are 1 / sum_t V_t.
ConstraintSet generate_constraints(std::span<const TypedMention> typed_mentions,
                                   const Hin& hin);

/// Uniform sample without replacement of min(n, total) pairs across both
/// kinds, preserving kind labels. Deterministic given the seed. The d_max
/// cache is invalidated.
ConstraintSet sample_constraints(const ConstraintSet& cs, std::size_t n,
                                 std::uint64_t seed);

struct DMaxResult {
  double value = 0.0;
  bool from_pairs = false;  // false flags the no-cannot-pairs case
};

/// D^t_max: the maximum KL(p(D|e_a) || p(D|e_b)) over the cannot pairs of
/// type t, in each pair's stored (a, b) orientation — the same orientation all
/// cannot costs use, so d_max - KL(pair) never goes negative. Caches the
/// value in cs.d_max[t]; returns 0 flagged when t has no cannot pairs.
DMaxResult compute_d_max(const Hin& hin, ConstraintSet& cs, int t,
                         double eps = 1e-10);

void write_constraints_tsv(const ConstraintSet& cs, const std::filesystem::path& path);
ConstraintSet read_constraints_tsv(const std::filesystem::path& path, const Hin& hin);

}  // namespace hinclus
