#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccrn/algorithms.hpp"
#include "ccrn/region.hpp"
#include "ccrn/simulator.hpp"

namespace ccrn {

// --- deviation study -------------------------------------------------------------------------

enum class R1Step {
  FractionOfB,  // R1 = f*B for f = lo, lo+step, ..., hi
  Absolute,     // R1 = lo*B, lo*B + step, ... while R1 <= hi*B
};

struct GridSpec {
  /// Per-link erasure probabilities, as decimal strings so the grid is exact.
  std::vector<std::string> values{"0.1", "0.2", "0.3", "0.4", "0.5", "0.6", "0.7", "0.8", "0.9"};
  double r1_lo = 0.1;
  double r1_hi = 0.9;
  double r1_step = 0.05;
  R1Step step_rule = R1Step::FractionOfB;
  /// The study's outer R2. CaseTwoLine drops the total-time inequality.
  OuterForm outer = OuterForm::CaseTwoLine;
  InnerOptions inner;
  /// Restricted subgrid: cells with e14 <= threshold and e24 <= threshold, one summary per entry.
  std::vector<double> restricted_thresholds{0.5, 0.6};
  double bin_width = 0.005;
  double hist_max = 0.10;

  void validate() const;
};

struct DeviationRecord {
  double e12, e13, e14, e23, e24;
  double R1_frac, R1, B;
  double outer_R2, inner_R2, D;
  /// Outer R2 under the other OuterForm, kept for the side-by-side summary.
  double outer_R2_alt;
};

struct DeviationStats {
  std::size_t cells = 0;
  double frac_below = 0.0;     // D < 0.05 (overall) or D <= 0.05 (restricted)
  double max_D = 0.0;
  std::size_t remainder_cells = 0;
  std::optional<double> remainder_min_D, remainder_max_D;
};

struct DeviationSummary {
  std::size_t models = 0;
  DeviationStats all;
  std::vector<std::pair<double, DeviationStats>> restricted;
  /// Same statistics with the other outer form.
  DeviationStats all_alt;
  std::vector<std::pair<double, DeviationStats>> restricted_alt;
  std::vector<std::size_t> histogram;  // bins of bin_width over [0, hist_max), then one overflow bin
};

struct DeviationResult {
  std::vector<DeviationRecord> records;
  DeviationSummary summary;
};

/// Reference implementation: one model at a time.
DeviationResult deviation_study(const GridSpec& grid);
/// Same result, grid models spread over `jobs` OpenMP threads (0: runtime default).
DeviationResult deviation_study_parallel(const GridSpec& grid, int jobs = 0);

DeviationSummary summarize(const GridSpec& grid, const std::vector<DeviationRecord>& records, std::size_t models);

void write_deviation_csv(std::ostream& out, const std::vector<DeviationRecord>& records);
nlohmann::ordered_json summary_json(const GridSpec& grid, const DeviationSummary& s);

// --- simulation sweeps -----------------------------------------------------------------------

struct RunSpec {
  ErasureModel model;
  RatePair rates;
  std::string algorithm = "alg1";
  MixParams params;
  std::size_t payload_len = 8;
};

/// Packet counts ceil(n*R) of a run at slot budget n.
std::pair<std::size_t, std::size_t> packet_counts(const RatePair& rates, std::uint64_t n);

/// Predicted normalized completion time of the run's algorithm.
double predicted_t_hat(const RunSpec& spec);

/// One simulation at budget n with the given seed; no deadline cut-off.
SimResult simulate(const RunSpec& spec, std::uint64_t n, std::uint64_t seed, std::optional<std::uint64_t> deadline = {});

/// Seed of replicate `i` at budget n.
std::uint64_t replicate_seed(std::uint64_t base_seed, std::uint64_t n, std::size_t i);

struct ConvergenceRow {
  std::uint64_t n = 0;
  std::size_t seeds = 0;
  double mean_t_over_n = 0.0;
  double stderr_t_over_n = 0.0;
  double t_hat = 0.0;
  double deadline_met_frac = 0.0;
  bool all_decoded = true;
};

ConvergenceRow convergence_point(const RunSpec& spec, std::uint64_t n, std::size_t seeds, std::uint64_t base_seed);
ConvergenceRow convergence_point_parallel(const RunSpec& spec, std::uint64_t n, std::size_t seeds,
                                          std::uint64_t base_seed, int jobs = 0);

std::vector<ConvergenceRow> convergence_sweep(const RunSpec& spec, const std::vector<std::uint64_t>& n_list,
                                              std::size_t seeds, std::uint64_t base_seed, int jobs = 0);

/// Fraction of seeds whose run finishes within n slots (runs stop at the deadline).
double deadline_success_rate(const RunSpec& spec, std::uint64_t n, std::size_t seeds, std::uint64_t base_seed,
                             int jobs = 0);

struct TauEntry {
  std::string name;
  double empirical;  // per slot budget n
  double predicted;
  double rel_error;
};

/// Algorithm 1 phase durations, Step-2 relay count M, queue sizes after Steps 1 and 3 and the tau
/// counters of one run, each divided by n and set against its limit.
std::vector<TauEntry> tau_accounting(const SimResult& run, const RatePair& rates, const ErasureModel& model,
                                     std::uint64_t n);

void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows);
nlohmann::ordered_json result_json(const SimResult& r);

}  // namespace ccrn
