// Serial reference vs OpenMP kernels on a long synthetic cycle.

#include <benchmark/benchmark.h>

#include <map>
#include <memory>
#include <vector>

#include "ectm/eval.hpp"
#include "ectm/kernels.hpp"
#include "ectm/model.hpp"

namespace {

using namespace ectm;

struct Fixture {
  CycleData cycle;
  std::vector<double> soc;
  std::size_t degree = 5;
  std::vector<double> a;
  std::vector<double> target;
  LinearParams theta = params_to_linear(default_synth_physical(5), 1.0);

  explicit Fixture(std::size_t n) {
    SynthSpec spec{theta};
    spec.length = n;
    spec.seed = 7;
    cycle = synth_generate(spec);
    soc = soc_profile(cycle).values;
    a.resize((n - 1) * parameter_count(degree));
    target.resize(n - 1);
  }
};

Fixture& fixture(std::size_t n) {
  static std::map<std::size_t, std::unique_ptr<Fixture>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<Fixture>(n);
  return *slot;
}

template <auto Kernel>
void BM_DesignRows(benchmark::State& state) {
  Fixture& f = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    Kernel(f.cycle.samples, f.soc, f.degree, f.a, f.target);
    benchmark::DoNotOptimize(f.a.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(f.target.size()));
}

template <auto Kernel>
void BM_PredictRows(benchmark::State& state) {
  Fixture& f = fixture(static_cast<std::size_t>(state.range(0)));
  kernels::design_rows_serial(f.cycle.samples, f.soc, f.degree, f.a, f.target);
  std::vector<double> out(f.target.size());
  for (auto _ : state) {
    Kernel(f.a, f.theta.theta(), out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(out.size()));
}

template <auto Kernel>
void BM_SumSquaredDiff(benchmark::State& state) {
  Fixture& f = fixture(static_cast<std::size_t>(state.range(0)));
  kernels::design_rows_serial(f.cycle.samples, f.soc, f.degree, f.a, f.target);
  std::vector<double> pred(f.target.size());
  kernels::predict_rows_serial(f.a, f.theta.theta(), pred);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(pred, f.target));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(pred.size()));
}

}  // namespace

BENCHMARK(BM_DesignRows<kernels::design_rows_serial>)->Arg(1 << 14)->Arg(1 << 18);
BENCHMARK(BM_DesignRows<kernels::design_rows_parallel>)->Arg(1 << 14)->Arg(1 << 18);
BENCHMARK(BM_PredictRows<kernels::predict_rows_serial>)->Arg(1 << 14)->Arg(1 << 18);
BENCHMARK(BM_PredictRows<kernels::predict_rows_parallel>)->Arg(1 << 14)->Arg(1 << 18);
BENCHMARK(BM_SumSquaredDiff<kernels::sum_squared_diff_serial>)->Arg(1 << 14)->Arg(1 << 18);
BENCHMARK(BM_SumSquaredDiff<kernels::sum_squared_diff_parallel>)->Arg(1 << 14)->Arg(1 << 18);

BENCHMARK_MAIN();
