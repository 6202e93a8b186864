// Serial vs OpenMP sweep over the wind-problem method set.
//   expint_bench [T] [jobs]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <omp.h>

#include "expint/harness.hpp"

using namespace expint;

namespace {

template <class F>
double seconds(F&& f) {
  const auto start = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

bool same(const DriftSeries& a, const DriftSeries& b) {
  return a.t == b.t && a.H == b.H && a.K == b.K && a.final_state == b.final_state;
}

}  // namespace

int main(int argc, char** argv) {
  const double T = argc > 1 ? std::atof(argv[1]) : 1e4;
  const int jobs = argc > 2 ? std::atoi(argv[2]) : omp_get_max_threads();

  std::vector<ExperimentConfig> configs;
  for (const char* m : {"EI-T", "EI-O1", "EI-O2", "EI-O3", "EI-O4", "EI-O5"}) {
    ExperimentConfig cfg;
    cfg.method = m;
    cfg.h = 0.5;
    cfg.T = T;
    configs.push_back(cfg);
  }

  std::vector<DriftSeries> serial, parallel;
  const double ts = seconds([&] { serial = run_sweep_serial(configs); });
  const double tp = seconds([&] { parallel = run_sweep(configs, jobs); });

  bool equal = serial.size() == parallel.size();
  for (std::size_t i = 0; equal && i < serial.size(); ++i) equal = same(serial[i], parallel[i]);

  std::printf("runs %zu  T %g  steps/run %zu  threads %d\n", configs.size(), T, serial.front().meta.steps, jobs);
  std::printf("serial   %.3f s\n", ts);
  std::printf("openmp   %.3f s  speedup %.2f\n", tp, ts / tp);
  std::printf("results  %s\n", equal ? "identical" : "DIFFER");
  return equal ? 0 : 1;
}
