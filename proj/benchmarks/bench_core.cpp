#include <benchmark/benchmark.h>

#include <Eigen/Core>

#include "epivar/data.hpp"
#include "epivar/estimators.hpp"
#include "epivar/kernel.hpp"
#include "epivar/krr.hpp"
#include "epivar/net.hpp"
#include "epivar/rng.hpp"
#include "epivar/stats.hpp"

namespace {

using namespace epivar;

const Dataset& dataset(long n) {
  static Dataset d200 = sample({Family::SinSum, 2}, 200, 1);
  static Dataset d1000 = sample({Family::SinSum, 2}, 1000, 1);
  return n == 200 ? d200 : d1000;
}

void BM_PopulationNtk(benchmark::State& state) {
  Rng rng(3);
  Eigen::VectorXd x(8), y(8);
  for (int i = 0; i < 8; ++i) x[i] = rng.next_normal();
  for (int i = 0; i < 8; ++i) y[i] = rng.next_normal();
  const KernelConfig cfg{int(state.range(0)), 0.0};
  for (auto _ : state)
    benchmark::DoNotOptimize(population_ntk(x, y, cfg));
}
BENCHMARK(BM_PopulationNtk)->Arg(1)->Arg(3);

void BM_NtkGram(benchmark::State& state) {
  const Dataset& data = dataset(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(ntk_gram(data.inputs, {1, 0.0}));
}
BENCHMARK(BM_NtkGram)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_KrrFit(benchmark::State& state) {
  const Dataset& data = dataset(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(KrrModel::fit(data, 1e-3, {1, 0.0}));
}
BENCHMARK(BM_KrrFit)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_DataVarianceIf(benchmark::State& state) {
  const Dataset& data = dataset(state.range(0));
  const KrrModel model = KrrModel::fit(data, 1e-3, {1, 0.0});
  const Eigen::VectorXd x0 = test_point(data);
  for (auto _ : state)
    benchmark::DoNotOptimize(data_variance_if(model, x0));
}
BENCHMARK(BM_DataVarianceIf)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_TrainEpoch(benchmark::State& state) {
  const Dataset& data = dataset(200);
  NetConfig cfg;
  cfg.input_dim = 2;
  cfg.hidden_widths = {int(state.range(0))};
  cfg.learning_rate = 1.0;
  cfg.loss_tol = 0.0;
  cfg.max_epochs = 32;
  for (auto _ : state)
    benchmark::DoNotOptimize(train(cfg, data, 7));
  state.SetItemsProcessed(state.iterations() * cfg.max_epochs);
}
BENCHMARK(BM_TrainEpoch)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_Chi2Quantile(benchmark::State& state) {
  double p = 0.001;
  for (auto _ : state) {
    p += 1e-6;
    benchmark::DoNotOptimize(chi2_quantile(9, p));
  }
}
BENCHMARK(BM_Chi2Quantile);

void BM_NormalDraws(benchmark::State& state) {
  Rng rng(11);
  for (auto _ : state) benchmark::DoNotOptimize(rng.next_normal());
}
BENCHMARK(BM_NormalDraws);

}  // namespace

BENCHMARK_MAIN();
