// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "ccrn/errors.hpp"
#include "ccrn/experiments.hpp"
#include "ccrn/region.hpp"

using namespace ccrn;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s  %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void info(const std::string& name, const std::string& detail) {
  std::printf("INFO  %s: %s\n", name.c_str(), detail.c_str());
  std::fflush(stdout);
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool in(double x, double lo, double hi) { return x >= lo && x <= hi; }

ErasureModel random_model(Rng& rng) {
  for (;;) {
    ErasureModel m = ErasureModel::independent(0, 0, 0, 0, 0);
    if (rng.uniform() < 0.5) {
      std::array<double, 8> p;
      std::array<double, 4> q;
      double sp = 0, sq = 0;
      for (auto& x : p) sp += (x = -std::log(1 - rng.uniform()));
      for (auto& x : q) sq += (x = -std::log(1 - rng.uniform()));
      for (auto& x : p) x /= sp;
      for (auto& x : q) x /= sq;
      m = ErasureModel::joint(p, q);
    } else {
      m = ErasureModel::independent(0.9 * rng.uniform(), 0.9 * rng.uniform(), 0.9 * rng.uniform(), 0.9 * rng.uniform(),
                                    0.9 * rng.uniform());
    }
    try {
      check_region_preconditions(m);
      return m;
    } catch (const PreconditionError&) {
    }
  }
}

ErasureModel random_model_of(Rng& rng, CaseLabel label) {
  for (;;) {
    auto m = random_model(rng);
    if (classify_case(m) == label) return m;
  }
}

// Joint model with a Case-2 classification and an interior optimal g.
ErasureModel case2_model() {
  ErasureModel::Node1Pmf p{5, 3, 3, 5, 9, 8, 8, 7};
  ErasureModel::Node2Pmf q{8, 1, 2, 7};
  for (auto& x : p) x /= 48;
  for (auto& x : q) x /= 18;
  return ErasureModel::joint(p, q);
}

// --- deviation study ---------------------------------------------------------------------------

void deviation() {
  const auto t0 = std::chrono::steady_clock::now();
  GridSpec grid;
  const auto res = deviation_study_parallel(grid);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto& s = res.summary;
  report(in(s.all.frac_below, 0.70, 0.80), "deviation/overall",
         fmt("%zu models, %zu cells, fraction D < 0.05 = %.4f (want [0.70, 0.80]), max D = %.4f, %.1f s", s.models,
             s.all.cells, s.all.frac_below, s.all.max_D, secs));

  for (const auto& [threshold, st] : s.restricted) {
    const bool rem = st.remainder_max_D.has_value();
    const std::string detail =
        fmt("e14, e24 <= %.1f: %zu cells, fraction D <= 0.05 = %.4f (want >= 0.99), remainder %zu cells, max D %s "
            "(want [0.05, 0.095])",
            threshold, st.cells, st.frac_below, st.remainder_cells,
            rem ? fmt("%.4f", *st.remainder_max_D).c_str() : "n/a");
    const bool ok = st.frac_below >= 0.99 && rem && in(*st.remainder_max_D, 0.05, 0.095);
    if (threshold == 0.5)
      report(ok, "deviation/restricted", detail);
    else
      info("deviation/restricted", detail + (ok ? " [criterion met at this threshold]" : ""));
  }
  info("deviation/full-outer", fmt("with the total-time line kept in the outer bound: fraction D < 0.05 = %.4f, max D = %.4f",
                                   s.all_alt.frac_below, s.all_alt.max_D));
}

// --- completion-time law -----------------------------------------------------------------------

// Rate pair on the ray through (B/2, outer R2 at B/2), scaled so that T-hat equals `scale`.
RatePair alg1_point(const ErasureModel& m, double scale) {
  const double R1 = 0.5 * r1_upper_bound(m);
  const RatePair dir{R1, outer_bound_max_r2(m, R1)};
  const double t = t_hat(m, dir);
  return {scale * dir.R1 / t, scale * dir.R2 / t};
}

void completion_law() {
  const std::vector<std::pair<std::string, ErasureModel>> models{
      {"symmetric 0.5", ErasureModel::independent(0.5, 0.5, 0.5, 0.5, 0.5)},
      {"(0.3,0.4,0.4,0.2,0.2)", ErasureModel::independent(0.3, 0.4, 0.4, 0.2, 0.2)},
      {"(0.2,0.9,0.1,0.1,0.5)", ErasureModel::independent(0.2, 0.9, 0.1, 0.1, 0.5)},
      {"(0.1,0.3,0.6,0.2,0.7)", ErasureModel::independent(0.1, 0.3, 0.6, 0.2, 0.7)},
      {"joint case 2", case2_model()},
  };
  const std::uint64_t n = 200000;
  double worst = 0;
  std::string lines;
  bool decoded = true;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto& [name, m] = models[i];
    const RunSpec spec{m, alg1_point(m, 0.9)};
    const auto row = convergence_point_parallel(spec, n, 20, 1000 + i);
    const double err = std::abs(row.mean_t_over_n - row.t_hat) / row.t_hat;
    worst = std::max(worst, err);
    decoded = decoded && row.all_decoded;
    lines += fmt(" %s T/n=%.4f That=%.4f;", name.c_str(), row.mean_t_over_n, row.t_hat);
  }
  report(worst <= 0.02 && decoded, "completion/0.9-boundary", fmt("max rel error %.4f (want <= 0.02);", worst) + lines);

  const RunSpec sym{ErasureModel::independent(0.5, 0.5, 0.5, 0.5, 0.5), {0.3, 0.3}};
  const auto row = convergence_point_parallel(sym, n, 20, 77);
  const double err = std::abs(row.mean_t_over_n - 1.0571) / 1.0571;
  report(err <= 0.02 && std::abs(row.t_hat - 1.0571) < 1e-4, "completion/symmetric-0.3",
         fmt("mean T/n = %.4f, That = %.4f, reference 1.0571, rel error %.4f (want <= 0.02)", row.mean_t_over_n,
             row.t_hat, err));
}

// --- capacity ----------------------------------------------------------------------------------

void capacity() {
  const std::uint64_t n = 100000;
  const std::size_t seeds = 100;

  {
    const auto m = ErasureModel::independent(0.3, 0.4, 0.4, 0.2, 0.2);
    const bool case1 = classify_case(m) == CaseLabel::Case1;
    const double R1 = 0.5 * r1_upper_bound(m);
    const RatePair b{R1, outer_bound_max_r2(m, R1)};
    const RunSpec in_spec{m, {0.95 * b.R1, 0.95 * b.R2}};
    const RunSpec out_spec{m, {1.05 * b.R1, 1.05 * b.R2}};
    const double lo = deadline_success_rate(in_spec, n, seeds, 11);
    const double hi = deadline_success_rate(out_spec, n, seeds, 12);
    report(case1 && lo >= 0.95 && hi <= 0.05, "capacity/case1-alg1",
           fmt("boundary (%.4f, %.4f), That there %.6f; met at 0.95x = %.2f (want >= 0.95), at 1.05x = %.2f (want <= 0.05)",
               b.R1, b.R2, t_hat(m, b), lo, hi));
  }
  {
    const auto m = case2_model();
    const bool case2 = classify_case(m) == CaseLabel::Case2;
    const double R1 = 0.5 * r1_upper_bound(m);
    const auto sol = outer_bound_solve(m, R1);
    MixParams p = alg2_params_for(m, R1, sol.aux);
    const RatePair b{R1, sol.R2};
    const RunSpec in_spec{m, {0.95 * b.R1, 0.95 * b.R2}, "alg2", p};
    const RunSpec out_spec{m, {1.05 * b.R1, 1.05 * b.R2}, "alg2", p};
    const double lo = deadline_success_rate(in_spec, n, seeds, 21);
    const double hi = deadline_success_rate(out_spec, n, seeds, 22);
    report(case2 && lo >= 0.95 && hi <= 0.05, "capacity/case2-alg2",
           fmt("g = %.4f, boundary (%.4f, %.4f), That there %.6f; met at 0.95x = %.2f (want >= 0.95), at 1.05x = %.2f "
               "(want <= 0.05)",
               p.g, b.R1, b.R2, alg2_t_hat(m, b, p), lo, hi));
  }
}

// --- decoding ----------------------------------------------------------------------------------

void decoding() {
  for (const std::string alg : {"alg1", "alg2"}) {
    Rng rng(alg == "alg1" ? 5 : 6);
    std::size_t runs = 0, ok = 0, errors = 0;
    std::string first_error;
    while (runs < 1000) {
      const auto m = random_model(rng);
      const double R1 = rng.uniform() * r1_upper_bound(m);
      const double r2max = region_membership(m, {R1, 0}, RegionKind::Inner)
                               ? (classify_case(m) == CaseLabel::Case3 ? inner_bound_max_r2(m, R1) : outer_bound_max_r2(m, R1))
                               : 0.0;
      RunSpec spec{m, {R1, rng.uniform() * r2max}, alg};
      if (alg == "alg2") {
        const double g = rng.uniform(), s = (1 - g) * rng.uniform();
        spec.params = {g, s, rng.uniform()};
      }
      const std::uint64_t n = 50 + static_cast<std::uint64_t>(rng.uniform() * 2000);
      ++runs;
      try {
        const auto [k1, k2] = packet_counts(spec.rates, n);
        SimConfig cfg;
        cfg.model = m;
        cfg.k1 = k1;
        cfg.k2 = k2;
        cfg.payload_len = 16;
        cfg.seed = runs;
        cfg.check_invariants = true;
        auto policy = make_policy(alg, spec.params);
        const SimResult r = run_loop(cfg, *policy);
        if (r.completed && r.all_decoded()) ++ok;
      } catch (const std::exception& e) {
        ++errors;
        if (first_error.empty()) first_error = e.what();
      }
    }
    report(ok == runs && errors == 0, "decoding/" + alg,
           fmt("%zu runs, %zu byte-exact at both receivers, %zu errors%s", runs, ok, errors,
               first_error.empty() ? "" : (" (first: " + first_error + ")").c_str()));
  }
}

// --- region consistency ------------------------------------------------------------------------

void region() {
  {
    Rng rng(101);
    double worst = 0;
    for (CaseLabel label : {CaseLabel::Case1, CaseLabel::Case2, CaseLabel::Case3})
      for (int t = 0; t < 1000; ++t) {
        const auto m = random_model_of(rng, label);
        const double R1 = rng.uniform() * r1_upper_bound(m);
        worst = std::max(worst, std::abs(outer_bound_max_r2(m, R1) - outer_bound_max_r2_lp(m, R1)));
      }
    report(worst <= 1e-9, "region/a closed-form vs LP", fmt("3 x 1000 models, max |diff| = %.3g (want <= 1e-9)", worst));
  }
  {
    Rng rng(102);
    int violations = 0;
    double worst = -1e9;
    for (int t = 0; t < 1000; ++t) {
      const auto m = random_model_of(rng, CaseLabel::Case3);
      const double R1 = rng.uniform() * r1_upper_bound(m);
      const double d = inner_bound_max_r2(m, R1) - outer_bound_max_r2(m, R1);
      worst = std::max(worst, d);
      if (d > 1e-9) ++violations;
    }
    report(violations == 0, "region/b inner <= outer",
           fmt("1000 Case-3 pairs, %d violations, max (inner - outer) = %.3g", violations, worst));
  }
  {
    Rng rng(103);
    double worst = 0;
    int partner_violations = 0;
    for (int t = 0; t < 50; ++t) {
      const auto m = random_model_of(rng, CaseLabel::Case3);
      const auto k = region_coefficients(m);
      const double R1 = (0.1 + 0.8 * rng.uniform()) * r1_upper_bound(m);
      const auto grid = alg2_grid_max(m, R1, 60);
      worst = std::max(worst, std::abs(grid.R2 - inner_bound_max_r2(m, R1)));
      if (grid.aux.S > k.V * grid.R2 + 1e-12) ++partner_violations;
    }
    report(worst <= 1e-3, "region/c parametric grid vs LP",
           fmt("50 Case-3 models, 61-point axes, max |diff| = %.3g (want <= 1e-3); grid optimum exceeds S <= V R2 in %d",
               worst, partner_violations));
  }
  {
    Rng rng(104);
    double worst = 0;
    for (int t = 0; t < 10000; ++t) {
      const auto m = random_model(rng);
      const RatePair r{rng.uniform(), rng.uniform()};
      worst = std::max(worst, std::abs(alg1_limits(m, r).total() - t_hat(m, r)));
    }
    report(worst <= 1e-12, "region/d completion-time identity",
           fmt("10000 models, max |sum of phase limits - max form| = %.3g (want <= 1e-12)", worst));
  }
}

// --- phase limits ------------------------------------------------------------------------------

void phase_limits() {
  const RunSpec spec{ErasureModel::independent(0.5, 0.5, 0.5, 0.5, 0.5), {0.3, 0.3}};
  const std::uint64_t n = 200000;
  const std::size_t seeds = 10;
  std::vector<TauEntry> mean;
  for (std::size_t i = 0; i < seeds; ++i) {
    const auto run = simulate(spec, n, replicate_seed(2024, n, i));
    const auto entries = tau_accounting(run, spec.rates, spec.model, n);
    if (mean.empty()) {
      mean = entries;
      for (auto& e : mean) e.empirical = 0;
    }
    for (std::size_t j = 0; j < entries.size(); ++j) mean[j].empirical += entries[j].empirical / seeds;
  }
  double worst = 0;
  std::string detail;
  for (auto& e : mean) {
    e.rel_error = std::abs(e.empirical - e.predicted) / std::abs(e.predicted);
    worst = std::max(worst, e.rel_error);
    detail += fmt(" %s %.5f/%.5f;", e.name.c_str(), e.empirical, e.predicted);
  }
  report(worst <= 0.03, "phase-limits/symmetric-0.5",
         fmt("n = 2e5, mean of %zu seeds, max rel error %.4f (want <= 0.03);", seeds, worst) + detail);
}

}  // namespace

int main() {
  region();
  decoding();
  phase_limits();
  completion_law();
  capacity();
  deviation();
  std::printf("%s: %d criteria failed\n", failures ? "FAILED" : "OK", failures);
  return failures ? 1 : 0;
}
