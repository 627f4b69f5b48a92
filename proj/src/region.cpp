#include "ccrn/region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ccrn/errors.hpp"
#include "ccrn/simplex.hpp"

namespace ccrn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::array<double, 5> point(const RatePair& r, const AuxVars& a) { return {r.R1, r.R2, a.G, a.S, a.U}; }

// LP over (R2, G, S, U) with R1 fixed, maximizing R2 (or just feasibility when R2 is fixed too).
LpResult solve_slice(const LinearRegion& region, double R1, const double* fixed_R2) {
  std::vector<std::vector<double>> A;
  std::vector<double> b;
  for (const auto& row : region.rows) {
    double rhs = row.rhs - row.coef[0] * R1;
    if (fixed_R2) {
      rhs -= row.coef[1] * *fixed_R2;
      A.push_back({row.coef[2], row.coef[3], row.coef[4]});
    } else {
      A.push_back({row.coef[1], row.coef[2], row.coef[3], row.coef[4]});
    }
    b.push_back(rhs);
  }
  const std::vector<double> c = fixed_R2 ? std::vector<double>{0, 0, 0} : std::vector<double>{1, 0, 0, 0};
  return maximize(c, A, b);
}

void check_r1(const RegionCoefficients& k, double R1) {
  if (!(R1 >= 0.0)) throw DomainError("R1 must be nonnegative");
  if (R1 * k.c1 > 1.0 + 1e-12) throw DomainError("R1 = " + std::to_string(R1) + " exceeds B = " + std::to_string(1.0 / k.c1));
}

struct Line {
  double alpha, beta;  // R2 <= alpha + beta * X
  double at(double x) const { return alpha + beta * x; }
};

// max over X in [0, hi] of min_i lines[i](X): the optimum of a concave piecewise-linear
// function sits at an endpoint or at a crossing of two lines.
std::pair<double, double> maximize_min(const std::vector<Line>& lines, double hi) {
  std::vector<double> xs{0.0, hi};
  for (std::size_t i = 0; i < lines.size(); ++i)
    for (std::size_t j = i + 1; j < lines.size(); ++j) {
      const double db = lines[i].beta - lines[j].beta;
      if (db == 0.0) continue;
      const double x = (lines[j].alpha - lines[i].alpha) / db;
      if (x > 0.0 && x < hi) xs.push_back(x);
    }
  std::sort(xs.begin(), xs.end());
  double best = kNegInf, best_x = 0.0;
  for (double x : xs) {
    double v = std::numeric_limits<double>::infinity();
    for (const auto& l : lines) v = std::min(v, l.at(x));
    if (v > best + 1e-15) {
      best = v;
      best_x = x;
    }
  }
  return {best, best_x};
}

}  // namespace

double LinearInequality::slack(const std::array<double, 5>& x) const {
  double lhs = 0.0;
  for (std::size_t i = 0; i < 5; ++i) lhs += coef[i] * x[i];
  return rhs - lhs;
}

bool LinearRegion::contains(const RatePair& r, const AuxVars& aux, double tol) const {
  const auto x = point(r, aux);
  if (std::any_of(x.begin(), x.end(), [&](double v) { return v < -tol; })) return false;
  return std::all_of(rows.begin(), rows.end(), [&](const LinearInequality& row) { return row.slack(x) >= -tol; });
}

bool LinearRegion::projects_onto(const RatePair& r, double tol) const {
  if (r.R1 < -tol || r.R2 < -tol) return false;
  // Loosen every row by tol so boundary points are accepted.
  LinearRegion loose = *this;
  for (auto& row : loose.rows) row.rhs += tol;
  return solve_slice(loose, r.R1, &r.R2).status == LpStatus::Optimal;
}

double LinearRegion::max_r2(double R1) const {
  const LpResult res = solve_slice(*this, R1, nullptr);
  if (res.status == LpStatus::Infeasible) return kNegInf;
  if (res.status == LpStatus::Unbounded) return std::numeric_limits<double>::infinity();
  return res.value;
}

RegionCoefficients region_coefficients(const ErasureModel& m) {
  check_region_preconditions(m);
  const double e1_3 = eps(m, 1, {3}), e1_4 = eps(m, 1, {4}), e1_23 = eps(m, 1, {2, 3});
  const double e1_34 = eps(m, 1, {3, 4}), e1_234 = eps(m, 1, {2, 3, 4});
  const double e2_3 = eps(m, 2, {3}), e2_4 = eps(m, 2, {4}), e2_34 = eps(m, 2, {3, 4});

  RegionCoefficients k{};
  k.d0 = 1.0 / (1.0 - e1_23);
  k.c1 = (e1_3 - e1_23) / ((1.0 - e2_3) * (1.0 - e1_23)) + k.d0;
  k.c2 = (e1_34 - e1_234) / ((1.0 - e1_234) * (1.0 - e2_34)) + k.d0;
  k.e4 = 1.0 / (1.0 - e2_4);
  k.e34 = 1.0 / (1.0 - e2_34);
  k.a = (1.0 - e1_3) / (1.0 - e2_3);
  k.b = (1.0 - e1_34) / (1.0 - e2_34);
  k.c = (1.0 - e1_4) / (1.0 - e2_4);
  k.K = (e1_34 - e1_234) / ((1.0 - e1_34) * (1.0 - e1_234));
  k.E3 = e2_3 - e2_34;
  k.E4 = e2_4 - e2_34;
  k.P = (1.0 - e2_4) * (1.0 - e1_34) / (1.0 - e1_4);
  k.W = (1.0 - e1_4) * (1.0 - e2_34) / ((1.0 - e2_4) * (1.0 - e1_34));
  k.V = k.E3 * k.E4 / ((1.0 - e1_34) * (1.0 - e2_4) * (1.0 - e2_34));
  k.one_minus_e2_34 = 1.0 - e2_34;
  return k;
}

LinearRegion outer_bound_region(const ErasureModel& model) {
  const auto k = region_coefficients(model);
  LinearRegion r;
  r.rows.push_back({{k.d0, k.e4, 1.0, 1.0, 1.0}, 1.0, "total time"});
  r.rows.push_back({{k.c1, k.e34, 1.0 - k.a, 1.0 - k.a, 1.0}, 1.0, "node 3"});
  r.rows.push_back({{k.c2, k.e4, 1.0 - k.b, 1.0 - k.c, 1.0 - k.c}, 1.0, "node 4"});
  return r;
}

LinearRegion inner_bound_region(const ErasureModel& model, InnerOptions options) {
  const auto k = region_coefficients(model);
  LinearRegion r;
  r.rows.push_back({{k.c1, k.e34, 1.0 - k.a, 1.0 - k.a, 1.0}, 1.0, "node 3"});
  r.rows.push_back({{k.c2, k.e4, 1.0 - k.b, 1.0 - k.c, 1.0 - k.c}, 1.0, "node 4"});
  r.rows.push_back({{-k.E3 * k.K, 0.0, k.E3, k.one_minus_e2_34, 0.0}, 0.0, "G/S budget"});
  r.rows.push_back({{0.0, 0.0, 0.0, -(k.P - k.E3), k.E3}, 0.0, "U vs S"});
  r.rows.push_back({{-k.K, 0.0, 1.0, k.W, k.W}, 0.0, "node-1 relay budget"});
  r.rows.push_back({{0.0, -k.V, 0.0, 1.0, 0.0}, 0.0, "coding partners"});
  if (options.impose_total_time) r.rows.push_back({{k.d0, k.e4, 1.0, 1.0, 1.0}, 1.0, "total time"});
  return r;
}

double r1_upper_bound(const ErasureModel& model) { return 1.0 / region_coefficients(model).c1; }

RegionSolution outer_bound_solve(const ErasureModel& model, double R1, OuterForm form) {
  const auto k = region_coefficients(model);
  check_r1(k, R1);
  const CaseLabel label = classify_case(model);

  const double m = label == CaseLabel::Case2 ? k.b : k.c;
  const double hi = label == CaseLabel::Case1 ? 0.0 : k.K * R1;
  std::vector<Line> lines{
      {(1.0 - k.c1 * R1) / k.e34, -(1.0 - k.a) / k.e34},
      {(1.0 - k.c2 * R1) / k.e4, -(1.0 - m) / k.e4},
  };
  if (form == OuterForm::Full) lines.push_back({(1.0 - k.d0 * R1) / k.e4, -1.0 / k.e4});

  const auto [r2, x] = maximize_min(lines, hi);
  if (r2 < -1e-12) throw DomainError("R1 = " + std::to_string(R1) + " is outside the outer bound");
  RegionSolution sol{std::max(r2, 0.0), {}};
  if (label == CaseLabel::Case2) sol.aux.G = x;
  if (label == CaseLabel::Case3) sol.aux.S = x;
  return sol;
}

double outer_bound_max_r2_lp(const ErasureModel& model, double R1) {
  const auto k = region_coefficients(model);
  check_r1(k, R1);
  return outer_bound_region(model).max_r2(R1);
}

RegionSolution inner_bound_solve(const ErasureModel& model, double R1, InnerOptions options) {
  if (classify_case(model) != CaseLabel::Case3)
    throw DomainError("the inner bound is defined for Case 3 models; Cases 1 and 2 reach the outer bound");
  check_r1(region_coefficients(model), R1);
  const LpResult res = solve_slice(inner_bound_region(model, options), R1, nullptr);
  if (res.status != LpStatus::Optimal) throw DomainError("inner bound is infeasible at R1 = " + std::to_string(R1));
  return {res.value, {res.x[1], res.x[2], res.x[3]}};
}

Alg1Limits alg1_limits(const ErasureModel& m, const RatePair& r) {
  const auto k = region_coefficients(m);
  const double e1_3 = eps(m, 1, {3}), e1_23 = eps(m, 1, {2, 3});
  const double e1_34 = eps(m, 1, {3, 4}), e1_234 = eps(m, 1, {2, 3, 4});
  const double e2_3 = eps(m, 2, {3}), e2_4 = eps(m, 2, {4});
  const double x1 = (e1_34 - e1_234) / (1.0 - e1_234);  // Step-1 share left only at node 2
  const double y = (e1_3 - e1_23) / (1.0 - e1_23);       // Step-1 share reaching 2 but not 3

  Alg1Limits l{};
  l.T1 = r.R1 * k.d0;
  l.T2 = r.R1 * x1 * k.e34;
  l.T3 = r.R2 * k.e34;
  l.M = r.R1 * x1 * k.E3 * k.e34;
  l.q1_2_n3n4 = r.R1 * x1;
  l.q1_2_n34 = r.R1 * (y - x1);
  l.q2_3n4 = r.R2 * k.E4 * k.e34;
  l.T4 = std::max((r.R1 * y + r.R1 * x1 * (k.E3 * k.e34 - 1.0)) / (1.0 - e2_3), l.q2_3n4 / (1.0 - e2_4));
  return l;
}

double t_hat(const ErasureModel& model, const RatePair& r) {
  const auto k = region_coefficients(model);
  return std::max(k.c1 * r.R1 + k.e34 * r.R2, k.c2 * r.R1 + k.e4 * r.R2);
}

namespace {

AuxVars alg2_aux(const RegionCoefficients& k, double R1, const MixParams& p, bool* out_of_envelope) {
  AuxVars aux;
  const double bracket = k.P - k.E3;
  aux.G = p.g * k.K * R1;
  aux.S = p.s * k.K * R1 * k.E3 * k.e34;
  aux.U = p.u * p.s * k.K * R1 * k.e34 * bracket;
  if (out_of_envelope) *out_of_envelope = aux.U < 0.0;
  return aux;
}

double alg2_r2(const RegionCoefficients& k, double R1, const AuxVars& x) {
  const double node3 = (1.0 - k.c1 * R1 - (1.0 - k.a) * (x.G + x.S) - x.U) / k.e34;
  const double node4 = (1.0 - k.c2 * R1 - (1.0 - k.b) * x.G - (1.0 - k.c) * (x.S + x.U)) / k.e4;
  return std::min(node3, node4);
}

}  // namespace

Alg2Point alg2_parametric_point(const ErasureModel& model, double R1, const MixParams& params) {
  params.validate();
  const auto k = region_coefficients(model);
  check_r1(k, R1);
  Alg2Point pt;
  pt.aux = alg2_aux(k, R1, params, &pt.u_out_of_envelope);
  pt.R2 = alg2_r2(k, R1, pt.aux);
  return pt;
}

MixParams alg2_params_for(const ErasureModel& model, double R1, const AuxVars& aux) {
  const auto k = region_coefficients(model);
  MixParams p;
  const double scale = k.K * R1;
  if (scale <= 0.0) return p;
  p.g = aux.G / scale;
  if (k.E3 > 0.0) p.s = aux.S / (scale * k.E3 * k.e34);
  const double u_unit = p.s * scale * k.e34 * (k.P - k.E3);
  if (u_unit > 0.0) p.u = std::clamp(aux.U / u_unit, 0.0, 1.0);
  // Undo rounding that pushes the split a hair past 1.
  if (p.g + p.s > 1.0) {
    const double t = p.g + p.s;
    p.g /= t;
    p.s /= t;
  }
  return p;
}

double alg2_t_hat(const ErasureModel& model, const RatePair& r, const MixParams& params) {
  params.validate();
  const auto k = region_coefficients(model);
  const AuxVars x = alg2_aux(k, r.R1, params, nullptr);
  const double spent = x.G + x.S + x.U;
  return std::max(k.c1 * r.R1 + k.e34 * r.R2 + spent - k.a * (x.G + x.S),
                  k.c2 * r.R1 + k.e4 * r.R2 + spent - k.b * x.G - k.c * (x.S + x.U));
}

GridMax alg2_grid_max(const ErasureModel& model, double R1, int steps) {
  if (steps < 1) throw DomainError("grid needs at least one step");
  const auto k = region_coefficients(model);
  check_r1(k, R1);
  GridMax best{kNegInf, {}, {}};
  for (int i = 0; i <= steps; ++i)
    for (int j = 0; i + j <= steps; ++j)
      for (int l = 0; l <= steps; ++l) {
        const MixParams p{double(i) / steps, double(j) / steps, double(l) / steps};
        const AuxVars x = alg2_aux(k, R1, p, nullptr);
        const double r2 = alg2_r2(k, R1, x);
        if (r2 > best.R2) best = {r2, p, x};
      }
  return best;
}

bool region_membership(const ErasureModel& model, const RatePair& rates, RegionKind which) {
  if (which == RegionKind::Inner && classify_case(model) == CaseLabel::Case3)
    return inner_bound_region(model).projects_onto(rates);
  return outer_bound_region(model).projects_onto(rates);
}

}  // namespace ccrn
