#include "ccrn/simplex.hpp"

#include <cmath>
#include <limits>

#include "ccrn/errors.hpp"

namespace ccrn {

std::string_view to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
  }
  return "?";
}

namespace {

// Tableau with m constraint rows and one objective row; column `rhs` holds the right-hand sides.
// The objective row stores reduced costs of a minimization: entering columns have cost < 0.
struct Tableau {
  std::size_t m, cols;
  std::vector<double> t;
  std::vector<std::size_t> basis;

  double& at(std::size_t r, std::size_t c) { return t[r * (cols + 1) + c]; }
  double at(std::size_t r, std::size_t c) const { return t[r * (cols + 1) + c]; }
  double& rhs(std::size_t r) { return at(r, cols); }

  void pivot(std::size_t pr, std::size_t pc) {
    const double p = at(pr, pc);
    for (std::size_t c = 0; c <= cols; ++c) at(pr, c) /= p;
    for (std::size_t r = 0; r <= m; ++r) {
      if (r == pr) continue;
      const double f = at(r, pc);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c <= cols; ++c) at(r, c) -= f * at(pr, c);
      at(r, pc) = 0.0;
    }
    basis[pr] = pc;
  }

  // Runs Bland's rule on columns [0, usable). Returns false when unbounded.
  bool run(std::size_t usable, double tol) {
    for (std::size_t iter = 0; iter < 10000; ++iter) {
      std::size_t enter = usable;
      for (std::size_t c = 0; c < usable; ++c)
        if (at(m, c) < -tol) {
          enter = c;
          break;
        }
      if (enter == usable) return true;
      std::size_t leave = m;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < m; ++r) {
        const double a = at(r, enter);
        if (a <= tol) continue;
        const double ratio = rhs(r) / a;
        if (ratio < best - tol || (std::abs(ratio - best) <= tol && leave < m && basis[r] < basis[leave])) {
          best = ratio;
          leave = r;
        }
      }
      if (leave == m) return false;
      pivot(leave, enter);
    }
    throw std::logic_error("simplex iteration limit reached");
  }
};

}  // namespace

LpResult maximize(const std::vector<double>& c, const std::vector<std::vector<double>>& A,
                  const std::vector<double>& b, double tol) {
  const std::size_t n = c.size(), m = A.size();
  if (b.size() != m) throw DomainError("simplex: row count mismatch");
  for (const auto& row : A)
    if (row.size() != n) throw DomainError("simplex: column count mismatch");

  // Columns: n structural, m slacks, m artificials (only used for rows with b < 0).
  Tableau tab{m, n + 2 * m, {}, std::vector<std::size_t>(m)};
  tab.t.assign((m + 1) * (tab.cols + 1), 0.0);
  bool need_phase1 = false;
  for (std::size_t r = 0; r < m; ++r) {
    const double sign = b[r] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) tab.at(r, j) = sign * A[r][j];
    tab.at(r, n + r) = sign;
    tab.rhs(r) = sign * b[r];
    if (sign > 0.0) {
      tab.basis[r] = n + r;
    } else {
      tab.at(r, n + m + r) = 1.0;
      tab.basis[r] = n + m + r;
      need_phase1 = true;
    }
  }

  if (need_phase1) {
    // Minimize the sum of artificials: objective row = -(sum of artificial rows).
    for (std::size_t r = 0; r < m; ++r) {
      if (tab.basis[r] < n + m) continue;
      for (std::size_t col = 0; col < n + m; ++col) tab.at(m, col) -= tab.at(r, col);
      tab.at(m, tab.cols) -= tab.rhs(r);
    }
    tab.run(n + m, tol);
    if (-tab.at(m, tab.cols) > 1e3 * tol) return {LpStatus::Infeasible, 0.0, {}};
    // Drive remaining (zero-level) artificials out of the basis where possible.
    for (std::size_t r = 0; r < m; ++r) {
      if (tab.basis[r] < n + m) continue;
      for (std::size_t col = 0; col < n + m; ++col)
        if (std::abs(tab.at(r, col)) > tol) {
          tab.pivot(r, col);
          break;
        }
    }
  }

  // Phase 2 objective: minimize -c.x.
  for (std::size_t col = 0; col <= tab.cols; ++col) tab.at(m, col) = 0.0;
  for (std::size_t j = 0; j < n; ++j) tab.at(m, j) = -c[j];
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t bc = tab.basis[r];
    const double f = tab.at(m, bc);
    if (f == 0.0) continue;
    for (std::size_t col = 0; col <= tab.cols; ++col) tab.at(m, col) -= f * tab.at(r, col);
  }
  if (!tab.run(n + m, tol)) return {LpStatus::Unbounded, std::numeric_limits<double>::infinity(), {}};

  LpResult res{LpStatus::Optimal, 0.0, std::vector<double>(n, 0.0)};
  for (std::size_t r = 0; r < m; ++r)
    if (tab.basis[r] < n) res.x[tab.basis[r]] = tab.rhs(r);
  for (std::size_t j = 0; j < n; ++j) res.value += c[j] * res.x[j];
  return res;
}

}  // namespace ccrn
