#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace hinclus {

/// Sparse joint probability matrix over one bipartite edge of the network.
///
/// Rows and columns live in compact per-matrix index spaces: only nodes with
/// nonzero marginal are present, so no stored row or column is all-zero.
/// row_ids / col_ids map compact indices back to the owning node set's global
/// indices (ascending), and row_of / col_of invert the mapping (-1 = absent).
struct SparseJoint {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_ids, col_ids;
  std::vector<int> row_of, col_of;

  // CSR
  std::vector<std::int64_t> row_ptr;
  std::vector<int> col_ind;
  std::vector<double> val;
  // CSC mirror (col_ptr over compact cols, row indices ascending per column)
  std::vector<std::int64_t> col_ptr;
  std::vector<int> row_ind;
  std::vector<double> val_csc;

  std::vector<double> row_marg, col_marg;

  std::int64_t nnz() const { return static_cast<std::int64_t>(val.size()); }
  double total() const;

  bool operator==(const SparseJoint&) const = default;
};

/// Accumulates (global row, global col) -> count, then normalizes into a
/// SparseJoint whose entries sum to 1.
class CooBuilder {
 public:
  void add(int row, int col, double count);
  bool empty() const { return cells_.empty(); }

  /// n_rows / n_cols are the global node-set sizes; absent rows/cols are
  /// compacted away.
  SparseJoint build(int n_rows, int n_cols) const;

 private:
  std::map<std::pair<int, int>, double> cells_;
};

}  // namespace hinclus
