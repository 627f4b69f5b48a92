#pragma once

#include <array>
#include <string>
#include <vector>

#include "ccrn/algorithms.hpp"
#include "ccrn/erasure_model.hpp"

namespace ccrn {

struct RatePair {
  double R1 = 0.0;
  double R2 = 0.0;
};

struct AuxVars {
  double G = 0.0;
  double S = 0.0;
  double U = 0.0;
};

/// sum coef[i] * x[i] <= rhs over x = (R1, R2, G, S, U).
struct LinearInequality {
  std::array<double, 5> coef{};
  double rhs = 0.0;
  std::string label;

  double slack(const std::array<double, 5>& x) const;
};

/// Polyhedron over (R1, R2, G, S, U), all variables nonnegative.
struct LinearRegion {
  std::vector<LinearInequality> rows;

  bool contains(const RatePair& r, const AuxVars& aux, double tol = 1e-12) const;
  /// Whether some nonnegative (G, S, U) puts (R1, R2, G, S, U) inside.
  bool projects_onto(const RatePair& r, double tol = 1e-9) const;
  /// Largest R2 for this R1 over all nonnegative (G, S, U); negative infinity when infeasible.
  double max_r2(double R1) const;
};

/// Every coefficient the region formulas use, evaluated once per model.
struct RegionCoefficients {
  double d0;   // 1/(1-e1_23)
  double c1;   // R1 coefficient of the node-3 inequality
  double c2;   // R1 coefficient of the node-4 inequality
  double e4;   // 1/(1-e2_4)
  double e34;  // 1/(1-e2_34)
  double a;    // (1-e1_3)/(1-e2_3)
  double b;    // (1-e1_34)/(1-e2_34)
  double c;    // (1-e1_4)/(1-e2_4)
  double K;    // (e1_34-e1_234)/((1-e1_34)(1-e1_234)), the per-R1 cap on G and S
  double E3;   // e2_3 - e2_34
  double E4;   // e2_4 - e2_34
  double P;    // (1-e2_4)(1-e1_34)/(1-e1_4)
  double W;    // (1-e1_4)(1-e2_34)/((1-e2_4)(1-e1_34))
  double V;    // E3 E4/((1-e1_34)(1-e2_4)(1-e2_34))
  double one_minus_e2_34;
};

/// Throws PreconditionError when the model violates the region preconditions.
RegionCoefficients region_coefficients(const ErasureModel& model);

/// The three outer-bound inequalities plus nonnegativity.
LinearRegion outer_bound_region(const ErasureModel& model);

struct InnerOptions {
  /// Also impose the outer bound's total-time inequality, which the inner-bound system omits.
  bool impose_total_time = false;
};

/// The six inner-bound inequalities (meaningful for Case-3 models).
LinearRegion inner_bound_region(const ErasureModel& model, InnerOptions options = {});

/// Upper bound B on R1: the reciprocal of c1.
double r1_upper_bound(const ErasureModel& model);

enum class OuterForm {
  /// Exact projection of the three outer-bound inequalities.
  Full,
  /// Two-line case form that drops the total-time inequality (for Case 3 it can exceed Full).
  CaseTwoLine,
};

struct RegionSolution {
  double R2 = 0.0;
  AuxVars aux;
};

/// Largest R2 of the outer bound at R1, by 1-D piecewise-linear maximization over the single
/// auxiliary variable that matters in the model's case (G in Case 2, S in Case 3, none in
/// Case 1). Throws DomainError when R1 > B.
RegionSolution outer_bound_solve(const ErasureModel& model, double R1, OuterForm form = OuterForm::Full);
inline double outer_bound_max_r2(const ErasureModel& model, double R1, OuterForm form = OuterForm::Full) {
  return outer_bound_solve(model, R1, form).R2;
}
/// Same quantity from the generic LP over (R2, G, S, U).
double outer_bound_max_r2_lp(const ErasureModel& model, double R1);

/// Largest R2 of the inner bound at R1 (LP over R2, G, S, U). Throws DomainError for models
/// that are not Case 3, where inner and outer bounds coincide.
RegionSolution inner_bound_solve(const ErasureModel& model, double R1, InnerOptions options = {});
inline double inner_bound_max_r2(const ErasureModel& model, double R1, InnerOptions options = {}) {
  return inner_bound_solve(model, R1, options).R2;
}

/// Limits of T_i/n for Algorithm 1 and the associated queue and event limits, all per slot
/// budget n at rates R.
struct Alg1Limits {
  double T1, T2, T3, T4;
  double M;           // Step-2 packets heard by 4 but not 3
  double q1_2_n3n4;   // after Step 1
  double q1_2_n34;    // after Step 1
  double q2_3n4;      // after Step 3
  double total() const { return T1 + T2 + T3 + T4; }
};

Alg1Limits alg1_limits(const ErasureModel& model, const RatePair& rates);

/// Expected normalized completion time of Algorithm 1 (two-branch max form).
double t_hat(const ErasureModel& model, const RatePair& rates);

struct Alg2Point {
  AuxVars aux;
  /// Largest R2 meeting both rate inequalities at aux; negative when R1 alone is infeasible.
  double R2 = 0.0;
  /// The U relation's bracket is negative, so U < 0 for s, u > 0.
  bool u_out_of_envelope = false;
};

/// Auxiliary variables produced by Algorithm 2 with parameters `params` at primary rate R1, and
/// the largest secondary rate the two rate inequalities allow at them.
Alg2Point alg2_parametric_point(const ErasureModel& model, double R1, const MixParams& params);

/// Parameters whose relations reproduce `aux` (inverse of the G, S, U relations).
MixParams alg2_params_for(const ErasureModel& model, double R1, const AuxVars& aux);

/// Expected normalized completion time of Algorithm 2 at rates R with parameters `params`.
double alg2_t_hat(const ErasureModel& model, const RatePair& rates, const MixParams& params);

struct GridMax {
  double R2 = 0.0;
  MixParams params;
  AuxVars aux;
};

/// Max of alg2_parametric_point over a (g, s, u) grid with `steps` intervals per axis.
GridMax alg2_grid_max(const ErasureModel& model, double R1, int steps);

enum class RegionKind { Outer, Inner };

/// Whether some auxiliary variables certify the rate pair. For Case 1 and 2 models the inner
/// region is the outer one.
bool region_membership(const ErasureModel& model, const RatePair& rates, RegionKind which);

}  // namespace ccrn
