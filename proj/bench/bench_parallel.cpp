// Serial reference vs OpenMP kernels: wall time and result equality.

#include <chrono>
#include <cstdio>
#include <cstring>

#include <omp.h>

#include "ccrn/experiments.hpp"

using namespace ccrn;

namespace {

template <typename F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool same_records(const std::vector<DeviationRecord>& a, const std::vector<DeviationRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::memcmp(&a[i], &b[i], sizeof(DeviationRecord)) != 0) return false;
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  const bool full = argc > 1 && std::strcmp(argv[1], "--full") == 0;
  const int threads = omp_get_max_threads();
  std::printf("threads: %d\n", threads);

  GridSpec grid;
  if (!full) grid.values = {"0.1", "0.3", "0.5", "0.7", "0.9"};
  DeviationResult serial, parallel;
  const double ts = seconds([&] { serial = deviation_study(grid); });
  const double tp = seconds([&] { parallel = deviation_study_parallel(grid, threads); });
  std::printf("deviation (%zu values, %zu cells): serial %.3fs  parallel %.3fs  speedup %.2fx  identical=%s\n",
              grid.values.size(), serial.records.size(), ts, tp, ts / tp,
              same_records(serial.records, parallel.records) ? "yes" : "NO");

  RunSpec spec{ErasureModel::independent(0.5, 0.5, 0.5, 0.5, 0.5), {0.3, 0.3}, "alg1", {}, 8};
  const std::uint64_t n = full ? 200000 : 50000;
  const std::size_t seeds = 2 * static_cast<std::size_t>(threads);
  ConvergenceRow a, b;
  const double cs = seconds([&] { a = convergence_point(spec, n, seeds, 7); });
  const double cp = seconds([&] { b = convergence_point_parallel(spec, n, seeds, 7, threads); });
  std::printf("seeds (n=%llu, %zu runs): serial %.3fs  parallel %.3fs  speedup %.2fx  identical=%s\n",
              static_cast<unsigned long long>(n), seeds, cs, cp, cs / cp,
              a.mean_t_over_n == b.mean_t_over_n && a.stderr_t_over_n == b.stderr_t_over_n ? "yes" : "NO");
  return 0;
}
