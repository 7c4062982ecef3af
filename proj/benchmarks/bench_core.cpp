#include <benchmark/benchmark.h>

#include <vector>

#include "fulllik/dataset.hpp"
#include "fulllik/fit.hpp"
#include "fulllik/likelihood.hpp"
#include "fulllik/objective.hpp"
#include "fulllik/rng.hpp"

using namespace fulllik;

namespace {

std::vector<double> residuals(std::size_t n) {
  Rng rng(7, "bench/residuals");
  std::vector<double> r(n);
  for (auto& v : r) v = rng.normal(0.0, 2.0);
  return r;
}

void BM_NormalNll(benchmark::State& state) {
  const auto r = residuals(4096);
  for (auto _ : state) {
    double s = 0.0;
    for (double x : r) s += normal_nll(x, {1.3});
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(r.size()));
}
BENCHMARK(BM_NormalNll);

void BM_SoftmaxNllGrads(benchmark::State& state) {
  const auto classes = static_cast<std::size_t>(state.range(0));
  const auto z = residuals(classes);
  for (auto _ : state) benchmark::DoNotOptimize(softmax_nll_grads(z, {0.8}, 0));
}
BENCHMARK(BM_SoftmaxNllGrads)->Arg(4)->Arg(100);

void BM_RobustNllGrads(benchmark::State& state) {
  const auto r = residuals(4096);
  robust_log_partition(1.0);  // builds the log Z grid outside the timed loop
  for (auto _ : state) {
    double s = 0.0;
    for (double x : r) s += robust_nll_grads(x, {1.37, 0.9}).d_alpha;
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(r.size()));
}
BENCHMARK(BM_RobustNllGrads);

void BM_LogPartitionLookup(benchmark::State& state) {
  double a = 0.0;
  robust_log_partition(a);
  for (auto _ : state) {
    benchmark::DoNotOptimize(robust_log_partition(a));
    a = a + 0.0137 > 3.0 ? 0.0 : a + 0.0137;
  }
}
BENCHMARK(BM_LogPartitionLookup);

void BM_LogPartitionQuadrature(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(detail::robust_partition_quadrature(1.37));
}
BENCHMARK(BM_LogPartitionQuadrature);

// Full-batch steps of a linear regressor; arg 1 switches sigma to one value per row.
void BM_FitSteps(benchmark::State& state) {
  const Dataset ds = gen_heteroskedastic(2000, 3);
  const bool per_row = state.range(0) != 0;
  FitConfig cfg;
  cfg.steps = 50;
  for (auto _ : state) {
    Model model(Architecture::linear(ds.cols(), 1), InitScheme::glorot_uniform, 3);
    auto lik = LikelihoodSpec::make(Family::normal);
    if (per_row)
      lik.slot("sigma").make_data(ds.rows(), 1.0);
    else
      lik.slot("sigma").make_global(1.0);
    benchmark::DoNotOptimize(fit(model, lik, ds, cfg));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.steps));
}
BENCHMARK(BM_FitSteps)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
