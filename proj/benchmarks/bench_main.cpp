#include <benchmark/benchmark.h>

#include "bioage/baselines.hpp"
#include "bioage/explain.hpp"
#include "bioage/gbm.hpp"
#include "test_data.hpp"

namespace {

using namespace bioage;

void BM_GbmFit(benchmark::State& state) {
  const auto data = testing::friedman1(static_cast<std::size_t>(state.range(0)), 10, 1.0, 1);
  GbmParams p;
  p.n_trees = 100;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit(MatrixView{data.x, data.n, data.p}, data.y, p));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * p.n_trees);
}
BENCHMARK(BM_GbmFit)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_GbmFitGoss(benchmark::State& state) {
  const auto data = testing::friedman1(5000, 10, 1.0, 1);
  GbmParams p;
  p.n_trees = 100;
  p.goss = GossParams{};
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit(MatrixView{data.x, data.n, data.p}, data.y, p));
  }
}
BENCHMARK(BM_GbmFitGoss)->Unit(benchmark::kMillisecond);

void BM_RfFit(benchmark::State& state) {
  const auto data = testing::friedman1(2000, 10, 1.0, 1);
  ForestParams p;
  p.n_trees = 50;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rf_fit(MatrixView{data.x, data.n, data.p}, data.y, p));
  }
}
BENCHMARK(BM_RfFit)->Unit(benchmark::kMillisecond);

void BM_TreeShapRow(benchmark::State& state) {
  const auto data = testing::friedman1(2000, 10, 1.0, 2);
  GbmParams p;
  p.n_trees = static_cast<int>(state.range(0));
  const auto m = fit(MatrixView{data.x, data.n, data.p}, data.y, p);
  const auto view = shap_view(m);
  std::size_t i = 0;
  for (auto _ : state) {
    std::span<const double> row(data.x.data() + (i % data.n) * data.p, data.p);
    benchmark::DoNotOptimize(tree_shap_row(view, row));
    ++i;
  }
}
BENCHMARK(BM_TreeShapRow)->Arg(50)->Arg(400)->Unit(benchmark::kMicrosecond);

void BM_BruteForceShapRow(benchmark::State& state) {
  const auto data = testing::friedman1(2000, 10, 1.0, 2);
  GbmParams p;
  p.n_trees = 50;
  const auto m = fit(MatrixView{data.x, data.n, data.p}, data.y, p);
  const auto view = shap_view(m);
  std::span<const double> row(data.x.data(), data.p);
  for (auto _ : state) benchmark::DoNotOptimize(brute_force_shap(view, row));
}
BENCHMARK(BM_BruteForceShapRow)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
