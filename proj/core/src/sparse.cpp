#include "hinclus/sparse.hpp"

#include <stdexcept>

namespace hinclus {

double SparseJoint::total() const {
  double s = 0;
  for (double v : val) s += v;
  return s;
}

void CooBuilder::add(int row, int col, double count) {
  if (count <= 0) return;
  cells_[{row, col}] += count;
}

SparseJoint CooBuilder::build(int n_rows, int n_cols) const {
  SparseJoint m;
  if (cells_.empty()) return m;

  double total = 0;
  std::vector<bool> row_seen(static_cast<size_t>(n_rows), false);
  std::vector<bool> col_seen(static_cast<size_t>(n_cols), false);
  for (const auto& [rc, v] : cells_) {
    if (rc.first < 0 || rc.first >= n_rows || rc.second < 0 || rc.second >= n_cols)
      throw std::out_of_range("CooBuilder: cell outside the declared shape");
    row_seen[static_cast<size_t>(rc.first)] = true;
    col_seen[static_cast<size_t>(rc.second)] = true;
    total += v;
  }

  m.row_of.assign(static_cast<size_t>(n_rows), -1);
  m.col_of.assign(static_cast<size_t>(n_cols), -1);
  for (int r = 0; r < n_rows; ++r)
    if (row_seen[static_cast<size_t>(r)]) {
      m.row_of[static_cast<size_t>(r)] = static_cast<int>(m.row_ids.size());
      m.row_ids.push_back(r);
    }
  for (int c = 0; c < n_cols; ++c)
    if (col_seen[static_cast<size_t>(c)]) {
      m.col_of[static_cast<size_t>(c)] = static_cast<int>(m.col_ids.size());
      m.col_ids.push_back(c);
    }
  m.rows = static_cast<int>(m.row_ids.size());
  m.cols = static_cast<int>(m.col_ids.size());

  // cells_ is ordered by (row, col), which is exactly CSR order.
  m.row_ptr.assign(static_cast<size_t>(m.rows) + 1, 0);
  m.row_marg.assign(static_cast<size_t>(m.rows), 0.0);
  m.col_marg.assign(static_cast<size_t>(m.cols), 0.0);
  for (const auto& [rc, v] : cells_) {
    int r = m.row_of[static_cast<size_t>(rc.first)];
    int c = m.col_of[static_cast<size_t>(rc.second)];
    double p = v / total;
    m.row_ptr[static_cast<size_t>(r) + 1] += 1;
    m.col_ind.push_back(c);
    m.val.push_back(p);
    m.row_marg[static_cast<size_t>(r)] += p;
    m.col_marg[static_cast<size_t>(c)] += p;
  }
  for (int r = 0; r < m.rows; ++r)
    m.row_ptr[static_cast<size_t>(r) + 1] += m.row_ptr[static_cast<size_t>(r)];

  // CSC mirror.
  m.col_ptr.assign(static_cast<size_t>(m.cols) + 1, 0);
  for (int c : m.col_ind) m.col_ptr[static_cast<size_t>(c) + 1] += 1;
  for (int c = 0; c < m.cols; ++c)
    m.col_ptr[static_cast<size_t>(c) + 1] += m.col_ptr[static_cast<size_t>(c)];
  m.row_ind.assign(m.val.size(), 0);
  m.val_csc.assign(m.val.size(), 0.0);
  std::vector<std::int64_t> cursor(m.col_ptr.begin(), m.col_ptr.end() - 1);
  for (int r = 0; r < m.rows; ++r) {
    for (std::int64_t k = m.row_ptr[static_cast<size_t>(r)];
         k < m.row_ptr[static_cast<size_t>(r) + 1]; ++k) {
      int c = m.col_ind[static_cast<size_t>(k)];
      std::int64_t slot = cursor[static_cast<size_t>(c)]++;
      m.row_ind[static_cast<size_t>(slot)] = r;
      m.val_csc[static_cast<size_t>(slot)] = m.val[static_cast<size_t>(k)];
    }
  }
  return m;
}

}  // namespace hinclus
