#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace ccrn {

enum class LpStatus { Optimal, Infeasible, Unbounded };

std::string_view to_string(LpStatus s);

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  double value = 0.0;
  std::vector<double> x;
};

/// Dense two-phase simplex for
///
///   maximize c.x  subject to  A x <= b,  x >= 0
///
/// with Bland's pivoting rule, so it never cycles. `b` may have negative entries. Meant for the
/// handful-of-variables programs of the rate regions, not for anything large.
LpResult maximize(const std::vector<double>& c, const std::vector<std::vector<double>>& A,
                  const std::vector<double>& b, double tol = 1e-11);

}  // namespace ccrn
