#include "crowdtrack/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crowdtrack/error.hpp"

namespace crowdtrack {

CostMatrix::CostMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), cost_(rows * cols, fill), allowed_(rows * cols, 1) {
  if (!std::isfinite(fill) || fill < 0.0) throw Error("cost fill must be finite and non-negative");
}

void CostMatrix::set(std::size_t r, std::size_t c, double cost) {
  if (!std::isfinite(cost) || cost < 0.0) throw Error("cost entries must be finite and non-negative");
  cost_[r * cols_ + c] = cost;
  allowed_[r * cols_ + c] = 1;
}

void CostMatrix::forbid(std::size_t r, std::size_t c) {
  cost_[r * cols_ + c] = 0.0;
  allowed_[r * cols_ + c] = 0;
}

namespace {

// Two-level cost: the number of non-real (forbidden or padding) cells used
// dominates, the real cost breaks ties. Potentials live in the same ordered
// group, so cardinality is maximized exactly, without big-M constants.
struct LexCost {
  long long penalty = 0;
  double cost = 0.0;

  friend LexCost operator+(LexCost a, LexCost b) { return {a.penalty + b.penalty, a.cost + b.cost}; }
  friend LexCost operator-(LexCost a, LexCost b) { return {a.penalty - b.penalty, a.cost - b.cost}; }
  friend bool operator<(LexCost a, LexCost b) {
    return a.penalty != b.penalty ? a.penalty < b.penalty : a.cost < b.cost;
  }
};

constexpr LexCost kInfinite{std::numeric_limits<long long>::max() / 4, 0.0};

struct SquareSolution {
  std::vector<int> row_to_col;
  std::vector<LexCost> u;  // 1-based row potentials
  std::vector<LexCost> v;  // 1-based column potentials
};

// Square Kuhn-Munkres with potentials (O(n^3)).
SquareSolution solve_square(const std::vector<LexCost>& a, int n) {
  std::vector<LexCost> u(n + 1), v(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<LexCost> minv(n + 1, kInfinite);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      LexCost delta = kInfinite;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const LexCost cur = a[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] = u[p[j]] + delta;
          v[j] = v[j] - delta;
        } else {
          minv[j] = minv[j] - delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return {std::move(row_to_col), std::move(u), std::move(v)};
}

struct SubSolution {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::size_t cardinality = 0;
  double cost = 0.0;
  // tight[r * cols + c]: zero reduced cost under the optimal potentials.
  // Every optimal assignment uses tight cells only.
  std::vector<char> tight;
};

// Optimal assignment restricted to the given rows and columns.
SubSolution solve_subset(const CostMatrix& m, const std::vector<std::size_t>& rows,
                         const std::vector<std::size_t>& cols, bool want_tight = false) {
  SubSolution out;
  const int n = static_cast<int>(std::max(rows.size(), cols.size()));
  if (n == 0 || rows.empty() || cols.empty()) return out;
  std::vector<LexCost> a(static_cast<std::size_t>(n) * n, LexCost{1, 0.0});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (m.allowed(rows[r], cols[c])) a[r * n + c] = LexCost{0, m.at(rows[r], cols[c])};
    }
  }
  const SquareSolution sq = solve_square(a, n);
  const std::vector<int>& row_to_col = sq.row_to_col;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const int c = row_to_col[r];
    if (c < 0 || static_cast<std::size_t>(c) >= cols.size()) continue;
    if (!m.allowed(rows[r], cols[c])) continue;
    out.pairs.emplace_back(rows[r], cols[c]);
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  out.cardinality = out.pairs.size();
  for (const auto& [r, c] : out.pairs) out.cost += m.at(r, c);
  if (want_tight) {
    double scale = 1.0;
    for (std::size_t k = 0; k < a.size(); ++k) scale = std::max(scale, std::abs(a[k].cost));
    const double tol = 1e-9 * scale * n;
    out.tight.assign(rows.size() * cols.size(), 0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t c = 0; c < cols.size(); ++c) {
        const LexCost red = a[r * n + c] - sq.u[r + 1] - sq.v[c + 1];
        out.tight[r * cols.size() + c] = red.penalty == 0 && std::abs(red.cost) <= tol;
      }
    }
  }
  return out;
}

bool same_optimum(std::size_t card_a, double cost_a, std::size_t card_b, double cost_b) {
  if (card_a != card_b) return false;
  const double tol = 1e-9 * std::max(1.0, std::abs(cost_b));
  return std::abs(cost_a - cost_b) <= tol;
}

}  // namespace

Assignment hungarian(const CostMatrix& costs) {
  std::vector<std::size_t> all_rows(costs.rows());
  std::vector<std::size_t> all_cols(costs.cols());
  for (std::size_t r = 0; r < costs.rows(); ++r) all_rows[r] = r;
  for (std::size_t c = 0; c < costs.cols(); ++c) all_cols[c] = c;

  const SubSolution best = solve_subset(costs, all_rows, all_cols, true);
  std::vector<long> current(costs.rows(), -1);
  for (const auto& [r, c] : best.pairs) current[r] = static_cast<long>(c);

  // Lexicographic refinement: fix rows in order, each to the smallest column
  // (assigned beats unassigned) that still admits a global optimum.
  std::vector<char> col_used(costs.cols(), 0);
  std::size_t fixed_card = 0;
  double fixed_cost = 0.0;
  for (std::size_t r = 0; r < costs.rows(); ++r) {
    const long limit = current[r] < 0 ? static_cast<long>(costs.cols()) : current[r];
    for (long c = 0; c < limit; ++c) {
      if (col_used[c] || !costs.allowed(r, c) || !best.tight[r * costs.cols() + c]) continue;
      std::vector<std::size_t> rest_rows(all_rows.begin() + static_cast<long>(r) + 1, all_rows.end());
      std::vector<std::size_t> rest_cols;
      for (std::size_t k = 0; k < costs.cols(); ++k) {
        if (!col_used[k] && static_cast<long>(k) != c) rest_cols.push_back(k);
      }
      const SubSolution rest = solve_subset(costs, rest_rows, rest_cols);
      if (same_optimum(fixed_card + 1 + rest.cardinality, fixed_cost + costs.at(r, c) + rest.cost,
                       best.cardinality, best.cost)) {
        current[r] = c;
        for (std::size_t k = r + 1; k < costs.rows(); ++k) current[k] = -1;
        for (const auto& [rr, cc] : rest.pairs) current[rr] = static_cast<long>(cc);
        break;
      }
    }
    if (current[r] >= 0) {
      col_used[current[r]] = 1;
      ++fixed_card;
      fixed_cost += costs.at(r, static_cast<std::size_t>(current[r]));
    }
  }

  Assignment out;
  for (std::size_t r = 0; r < costs.rows(); ++r) {
    if (current[r] >= 0) {
      out.pairs.emplace_back(r, static_cast<std::size_t>(current[r]));
      out.total_cost += costs.at(r, static_cast<std::size_t>(current[r]));
    }
  }
  return out;
}

}  // namespace crowdtrack
