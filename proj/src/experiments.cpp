#include "ccrn/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <omp.h>

#include "ccrn/errors.hpp"

namespace ccrn {

// ---------------------------------------------------------------------------------------------
// deviation study

void GridSpec::validate() const {
  if (values.empty()) throw ConfigError("grid needs at least one probability value");
  for (const auto& v : values) {
    const Rational r = parse_rational(v);
    if (r <= 0 || r >= 1) throw ConfigError("grid probability " + v + " is outside (0,1)");
  }
  if (!(r1_lo > 0.0 && r1_hi < 1.0 && r1_lo <= r1_hi)) throw ConfigError("R1 fractions must satisfy 0 < lo <= hi < 1");
  if (!(r1_step > 0.0)) throw ConfigError("R1 step must be positive");
  if (!(bin_width > 0.0 && hist_max > 0.0)) throw ConfigError("histogram bin width and range must be positive");
}

namespace {

constexpr double kThresholdD = 0.05;

struct Combo {
  std::array<std::size_t, 5> idx;
};

std::vector<Combo> enumerate(std::size_t n) {
  std::vector<Combo> out;
  std::array<std::size_t, 5> i{};
  for (i[0] = 0; i[0] < n; ++i[0])
    for (i[1] = 0; i[1] < n; ++i[1])
      for (i[2] = 0; i[2] < n; ++i[2])
        for (i[3] = 0; i[3] < n; ++i[3])
          for (i[4] = 0; i[4] < n; ++i[4]) out.push_back({i});
  return out;
}

std::vector<double> r1_points(const GridSpec& g, double B) {
  std::vector<double> pts;
  if (g.step_rule == R1Step::FractionOfB) {
    const auto count = static_cast<std::size_t>(std::llround((g.r1_hi - g.r1_lo) / g.r1_step)) + 1;
    for (std::size_t i = 0; i < count; ++i) pts.push_back((g.r1_lo + g.r1_step * double(i)) * B);
  } else {
    for (std::size_t i = 0;; ++i) {
      const double r1 = g.r1_lo * B + g.r1_step * double(i);
      if (r1 > g.r1_hi * B + 1e-12) break;
      pts.push_back(r1);
    }
  }
  return pts;
}

double deviation(double outer, double inner) { return outer > 0.0 ? (outer - inner) / outer : 0.0; }

// Cells of one grid model; empty unless the model is a Case-3 model with e1_3 >= e2_3.
std::vector<DeviationRecord> study_model(const GridSpec& g, const std::vector<Rational>& exact,
                                         const std::vector<double>& approx, const Combo& c) {
  const auto& i = c.idx;
  const ErasureModel m = ErasureModel::independent_exact(exact[i[0]], exact[i[1]], exact[i[2]], exact[i[3]], exact[i[4]]);
  try {
    if (classify_case(m) != CaseLabel::Case3) return {};
  } catch (const PreconditionError&) {
    return {};
  }
  const OuterForm alt = g.outer == OuterForm::Full ? OuterForm::CaseTwoLine : OuterForm::Full;
  const double B = r1_upper_bound(m);
  std::vector<DeviationRecord> out;
  for (double R1 : r1_points(g, B)) {
    DeviationRecord r{};
    r.e12 = approx[i[0]];
    r.e13 = approx[i[1]];
    r.e14 = approx[i[2]];
    r.e23 = approx[i[3]];
    r.e24 = approx[i[4]];
    r.B = B;
    r.R1 = R1;
    r.R1_frac = R1 / B;
    r.outer_R2 = outer_bound_max_r2(m, R1, g.outer);
    r.outer_R2_alt = outer_bound_max_r2(m, R1, alt);
    r.inner_R2 = inner_bound_max_r2(m, R1, g.inner);
    r.D = deviation(r.outer_R2, r.inner_R2);
    out.push_back(r);
  }
  return out;
}

DeviationResult study(const GridSpec& grid, int jobs, bool parallel) {
  grid.validate();
  std::vector<Rational> exact;
  std::vector<double> approx;
  for (const auto& v : grid.values) {
    exact.push_back(parse_rational(v));
    approx.push_back(exact.back().convert_to<double>());
  }
  const std::vector<Combo> combos = enumerate(grid.values.size());
  std::vector<std::vector<DeviationRecord>> per_model(combos.size());
  const long long count = static_cast<long long>(combos.size());

  if (parallel) {
    const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 16) num_threads(threads)
    for (long long k = 0; k < count; ++k) per_model[k] = study_model(grid, exact, approx, combos[k]);
  } else {
    for (long long k = 0; k < count; ++k) per_model[k] = study_model(grid, exact, approx, combos[k]);
  }

  DeviationResult res;
  std::size_t models = 0;
  for (auto& cells : per_model) {
    if (cells.empty()) continue;
    ++models;
    res.records.insert(res.records.end(), cells.begin(), cells.end());
  }
  res.summary = summarize(grid, res.records, models);
  return res;
}

DeviationStats stats(const std::vector<DeviationRecord>& records, std::optional<double> threshold, bool alt) {
  DeviationStats s;
  std::size_t good = 0;
  for (const auto& r : records) {
    if (threshold && !(r.e14 <= *threshold + 1e-9 && r.e24 <= *threshold + 1e-9)) continue;
    const double D = alt ? deviation(r.outer_R2_alt, r.inner_R2) : r.D;
    ++s.cells;
    s.max_D = std::max(s.max_D, D);
    // Overall share counts D below 0.05; the restricted share counts D of at most 0.05.
    const bool ok = threshold ? D <= kThresholdD : D < kThresholdD;
    if (ok) ++good;
    if (D > kThresholdD) {
      ++s.remainder_cells;
      s.remainder_min_D = std::min(s.remainder_min_D.value_or(D), D);
      s.remainder_max_D = std::max(s.remainder_max_D.value_or(D), D);
    }
  }
  s.frac_below = s.cells ? double(good) / double(s.cells) : 0.0;
  return s;
}

nlohmann::ordered_json stats_json(const DeviationStats& s) {
  nlohmann::ordered_json j;
  j["cells"] = s.cells;
  j["frac_below_0_05"] = s.frac_below;
  j["max_D"] = s.max_D;
  j["remainder_cells"] = s.remainder_cells;
  j["remainder_min_D"] = s.remainder_min_D ? nlohmann::ordered_json(*s.remainder_min_D) : nlohmann::ordered_json();
  j["remainder_max_D"] = s.remainder_max_D ? nlohmann::ordered_json(*s.remainder_max_D) : nlohmann::ordered_json();
  return j;
}

std::string_view outer_form_name(OuterForm f) { return f == OuterForm::Full ? "full" : "case_two_line"; }

}  // namespace

DeviationSummary summarize(const GridSpec& grid, const std::vector<DeviationRecord>& records, std::size_t models) {
  DeviationSummary s;
  s.models = models;
  s.all = stats(records, std::nullopt, false);
  s.all_alt = stats(records, std::nullopt, true);
  for (double t : grid.restricted_thresholds) {
    s.restricted.emplace_back(t, stats(records, t, false));
    s.restricted_alt.emplace_back(t, stats(records, t, true));
  }
  const auto bins = static_cast<std::size_t>(std::llround(grid.hist_max / grid.bin_width));
  s.histogram.assign(bins + 1, 0);
  for (const auto& r : records) {
    const double D = std::max(r.D, 0.0);
    const auto b = D >= grid.hist_max ? bins : std::min(bins - 1, static_cast<std::size_t>(D / grid.bin_width));
    ++s.histogram[b];
  }
  return s;
}

DeviationResult deviation_study(const GridSpec& grid) { return study(grid, 1, false); }

DeviationResult deviation_study_parallel(const GridSpec& grid, int jobs) { return study(grid, jobs, true); }

void write_deviation_csv(std::ostream& out, const std::vector<DeviationRecord>& records) {
  out << "e12,e13,e14,e23,e24,R1_frac,R1,B,outer_R2,inner_R2,D\n";
  char line[512];
  for (const auto& r : records) {
    std::snprintf(line, sizeof line, "%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%.15g,%.15g,%.15g,%.15g,%.15g\n", r.e12, r.e13,
                  r.e14, r.e23, r.e24, r.R1_frac, r.R1, r.B, r.outer_R2, r.inner_R2, r.D);
    out << line;
  }
}

nlohmann::ordered_json summary_json(const GridSpec& grid, const DeviationSummary& s) {
  nlohmann::ordered_json j = stats_json(s.all);
  j["models"] = s.models;
  j["restricted"] = s.restricted.empty() ? nlohmann::ordered_json() : stats_json(s.restricted.front().second);
  j["restricted"]["threshold"] = grid.restricted_thresholds.empty() ? 0.0 : grid.restricted_thresholds.front();
  auto all_thresholds = nlohmann::ordered_json::array();
  for (const auto& [t, st] : s.restricted) {
    auto e = stats_json(st);
    e["threshold"] = t;
    all_thresholds.push_back(e);
  }
  j["restricted_by_threshold"] = all_thresholds;

  const OuterForm alt = grid.outer == OuterForm::Full ? OuterForm::CaseTwoLine : OuterForm::Full;
  nlohmann::ordered_json other = stats_json(s.all_alt);
  other["outer_form"] = outer_form_name(alt);
  auto alt_thresholds = nlohmann::ordered_json::array();
  for (const auto& [t, st] : s.restricted_alt) {
    auto e = stats_json(st);
    e["threshold"] = t;
    alt_thresholds.push_back(e);
  }
  other["restricted_by_threshold"] = alt_thresholds;
  j["alternate_outer"] = other;

  nlohmann::ordered_json meta;
  meta["outer_form"] = outer_form_name(grid.outer);
  meta["inner_total_time"] = grid.inner.impose_total_time;
  meta["r1_step_rule"] = grid.step_rule == R1Step::FractionOfB ? "fraction_of_B" : "absolute";
  meta["r1_lo"] = grid.r1_lo;
  meta["r1_hi"] = grid.r1_hi;
  meta["r1_step"] = grid.r1_step;
  meta["values"] = grid.values;
  meta["overall_share"] = "D < 0.05";
  meta["restricted_share"] = "D <= 0.05 over cells with e14 <= threshold and e24 <= threshold";
  j["meta"] = meta;

  nlohmann::ordered_json h;
  h["bin_width"] = grid.bin_width;
  h["max"] = grid.hist_max;
  h["counts"] = std::vector<std::size_t>(s.histogram.begin(), s.histogram.end() - 1);
  h["overflow"] = s.histogram.back();
  j["histogram"] = h;
  return j;
}

// ---------------------------------------------------------------------------------------------
// simulation sweeps

std::pair<std::size_t, std::size_t> packet_counts(const RatePair& rates, std::uint64_t n) {
  auto k = [n](double r) { return static_cast<std::size_t>(std::ceil(double(n) * r - 1e-9)); };
  return {k(rates.R1), k(rates.R2)};
}

double predicted_t_hat(const RunSpec& spec) {
  if (spec.algorithm == "alg2") return alg2_t_hat(spec.model, spec.rates, spec.params);
  return t_hat(spec.model, spec.rates);
}

SimResult simulate(const RunSpec& spec, std::uint64_t n, std::uint64_t seed, std::optional<std::uint64_t> deadline) {
  const auto [k1, k2] = packet_counts(spec.rates, n);
  SimConfig cfg;
  cfg.model = spec.model;
  cfg.k1 = k1;
  cfg.k2 = k2;
  cfg.payload_len = spec.payload_len;
  cfg.seed = seed;
  cfg.deadline = deadline;
  auto policy = make_policy(spec.algorithm, spec.params);
  return run_loop(cfg, *policy);
}

std::uint64_t replicate_seed(std::uint64_t base_seed, std::uint64_t n, std::size_t i) {
  return derive_seed(derive_seed(base_seed, n), i);
}

namespace {

ConvergenceRow aggregate(const RunSpec& spec, std::uint64_t n, const std::vector<SimResult>& runs) {
  ConvergenceRow row;
  row.n = n;
  row.seeds = runs.size();
  row.t_hat = predicted_t_hat(spec);
  double sum = 0.0, sum_sq = 0.0;
  std::size_t met = 0;
  for (const auto& r : runs) {
    const double x = double(r.total_slots) / double(n);
    sum += x;
    sum_sq += x * x;
    if (r.completed && r.total_slots <= n) ++met;
    row.all_decoded = row.all_decoded && r.all_decoded();
  }
  const double k = double(runs.size());
  row.mean_t_over_n = sum / k;
  const double var = runs.size() > 1 ? std::max(0.0, (sum_sq - k * row.mean_t_over_n * row.mean_t_over_n) / (k - 1.0)) : 0.0;
  row.stderr_t_over_n = std::sqrt(var / k);
  row.deadline_met_frac = double(met) / k;
  return row;
}

template <typename F>
void for_each_seed(std::size_t seeds, int jobs, bool parallel, F&& body) {
  const long long count = static_cast<long long>(seeds);
  if (!parallel) {
    for (long long i = 0; i < count; ++i) body(static_cast<std::size_t>(i));
    return;
  }
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
  // Exceptions must not escape an OpenMP region; keep the first and rethrow after it.
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(ccrn_seed_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

ConvergenceRow convergence_impl(const RunSpec& spec, std::uint64_t n, std::size_t seeds, std::uint64_t base_seed,
                                int jobs, bool parallel) {
  if (seeds == 0) throw ConfigError("need at least one seed");
  std::vector<SimResult> runs(seeds);
  for_each_seed(seeds, jobs, parallel, [&](std::size_t i) { runs[i] = simulate(spec, n, replicate_seed(base_seed, n, i)); });
  return aggregate(spec, n, runs);
}

}  // namespace

ConvergenceRow convergence_point(const RunSpec& spec, std::uint64_t n, std::size_t seeds, std::uint64_t base_seed) {
  return convergence_impl(spec, n, seeds, base_seed, 1, false);
}

ConvergenceRow convergence_point_parallel(const RunSpec& spec, std::uint64_t n, std::size_t seeds,
                                          std::uint64_t base_seed, int jobs) {
  return convergence_impl(spec, n, seeds, base_seed, jobs, true);
}

std::vector<ConvergenceRow> convergence_sweep(const RunSpec& spec, const std::vector<std::uint64_t>& n_list,
                                              std::size_t seeds, std::uint64_t base_seed, int jobs) {
  std::vector<ConvergenceRow> rows;
  for (std::uint64_t n : n_list) rows.push_back(convergence_point_parallel(spec, n, seeds, base_seed, jobs));
  return rows;
}

double deadline_success_rate(const RunSpec& spec, std::uint64_t n, std::size_t seeds, std::uint64_t base_seed,
                             int jobs) {
  if (seeds == 0) throw ConfigError("need at least one seed");
  std::vector<char> met(seeds, 0);
  for_each_seed(seeds, jobs, true, [&](std::size_t i) {
    met[i] = simulate(spec, n, replicate_seed(base_seed, n, i), n).deadline_met.value_or(false);
  });
  return double(std::count(met.begin(), met.end(), 1)) / double(seeds);
}

std::vector<TauEntry> tau_accounting(const SimResult& run, const RatePair& rates, const ErasureModel& model,
                                     std::uint64_t n) {
  const Alg1Limits l = alg1_limits(model, rates);
  const double dn = double(n);
  std::vector<TauEntry> out;
  auto add = [&](std::string name, double count, double predicted) {
    const double emp = count / dn;
    const double err = predicted != 0.0 ? std::abs(emp - predicted) / std::abs(predicted) : std::abs(emp);
    out.push_back({std::move(name), emp, predicted, err});
  };
  add("T1", double(run.phase("1")), l.T1);
  add("T2", double(run.phase("2")), l.T2);
  add("T3", double(run.phase("3")), l.T3);
  add("T4", double(run.phase("4")), l.T4);
  add("M", double(run.events.count("M") ? run.events.at("M") : 0), l.M);
  add("Q1_2_n3n4 after step 1", double(run.snapshot("before:2", Queue::Q1_2_n3n4)), l.q1_2_n3n4);
  add("Q1_2_n34 after step 1", double(run.snapshot("before:2", Queue::Q1_2_n34)), l.q1_2_n34);
  add("Q2_3n4 after step 3", double(run.snapshot("before:4", Queue::Q2_3n4)), l.q2_3n4);
  add("tau1", double(run.counter("tau1")), l.T1);
  add("tau2", double(run.counter("tau2")), l.T2 + l.T3 + l.T4);
  return out;
}

void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows) {
  out << "n,seeds,mean_T_over_n,stderr,T_hat,deadline_met_frac,all_decoded\n";
  char line[256];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%llu,%zu,%.10g,%.6g,%.10g,%.6g,%d\n", static_cast<unsigned long long>(r.n),
                  r.seeds, r.mean_t_over_n, r.stderr_t_over_n, r.t_hat, r.deadline_met_frac, r.all_decoded ? 1 : 0);
    out << line;
  }
}

nlohmann::ordered_json result_json(const SimResult& r) {
  nlohmann::ordered_json j;
  j["T"] = r.total_slots;
  j["completed"] = r.completed;
  j["deadline_met"] = r.deadline_met ? nlohmann::ordered_json(*r.deadline_met) : nlohmann::ordered_json();
  nlohmann::ordered_json phases;
  for (const auto& [step, slots] : r.phase_durations) phases[step] = slots;
  j["phases"] = phases;
  j["decoded_ok"] = {{"node3", r.decoded_ok[0]}, {"node4", r.decoded_ok[1]}};
  j["recovered_by_xor"] = {{"node3", r.recovered_by_xor[0]}, {"node4", r.recovered_by_xor[1]}};
  j["schedule_counters"] = r.schedule_counters;
  j["events"] = r.events;
  return j;
}

}  // namespace ccrn
