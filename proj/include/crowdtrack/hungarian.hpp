#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace crowdtrack {

/// Dense rows x cols cost table. Entries are finite non-negative costs or
/// forbidden; a forbidden entry never appears in a solution.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double at(std::size_t r, std::size_t c) const { return cost_[r * cols_ + c]; }
  bool allowed(std::size_t r, std::size_t c) const { return allowed_[r * cols_ + c] != 0; }

  void set(std::size_t r, std::size_t c, double cost);
  void forbid(std::size_t r, std::size_t c);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> cost_;
  std::vector<unsigned char> allowed_;
};

struct Assignment {
  /// (row, col) pairs sorted by row.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double total_cost = 0.0;
};

/// Minimum-cost assignment among maximum-cardinality feasible assignments.
///
/// Among equal-cost optima the lexicographically smallest row-sorted pair list
/// is returned, so results do not depend on solver internals.
Assignment hungarian(const CostMatrix& costs);

}  // namespace crowdtrack
