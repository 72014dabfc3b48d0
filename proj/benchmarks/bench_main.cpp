#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "corrml/correlation.hpp"
#include "corrml/dataset.hpp"
#include "corrml/mlp.hpp"
#include "corrml/models.hpp"
#include "corrml/normal.hpp"
#include "corrml/rng.hpp"

namespace {

corrml::Dataset bench_data(std::size_t n, std::size_t p, corrml::Task task) {
  corrml::SyntheticConfig cfg;
  cfg.n = n;
  cfg.p = p;
  cfg.signal_weights.assign(p, 1.0);
  cfg.noise_sd = 0.5;
  cfg.nonlinearity = corrml::Nonlinearity::squares;
  cfg.task = task;
  return corrml::gen_synthetic(cfg, 7);
}

void bm_bvn_rect(benchmark::State& state) {
  double rho = static_cast<double>(state.range(0)) / 100.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(corrml::bvn_rect_prob(rho, -0.5, 0.7, -0.3, 1.1));
  }
}
BENCHMARK(bm_bvn_rect)->Arg(0)->Arg(50)->Arg(95);

void bm_phik_2x2(benchmark::State& state) {
  corrml::ContingencyTable t;
  t.counts = {{40, 10}, {10, 40}};
  t.row_labels = {0, 1};
  t.col_labels = {0, 1};
  for (auto _ : state) {
    benchmark::DoNotOptimize(corrml::phik(t));
  }
}
BENCHMARK(bm_phik_2x2);

void bm_phik_4x4(benchmark::State& state) {
  corrml::Rng rng(11);
  corrml::ContingencyTable t;
  t.counts.assign(4, std::vector<std::int64_t>(4, 0));
  for (auto& row : t.counts)
    for (auto& c : row) c = 1 + static_cast<std::int64_t>(rng.next_below(60));
  t.row_labels = {0, 1, 2, 3};
  t.col_labels = {0, 1, 2, 3};
  for (auto _ : state) {
    benchmark::DoNotOptimize(corrml::phik(t));
  }
}
BENCHMARK(bm_phik_4x4);

void bm_pearson(benchmark::State& state) {
  corrml::Rng rng(3);
  std::size_t n = static_cast<std::size_t>(state.range(0));
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.next_normal();
    y[i] = 0.6 * x[i] + rng.next_normal();
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(corrml::pearson(x, y));
  }
}
BENCHMARK(bm_pearson)->Arg(1000)->Arg(100000);

void bm_tree_fit(benchmark::State& state) {
  auto data = bench_data(static_cast<std::size_t>(state.range(0)), 8,
                         corrml::Task::regression());
  corrml::ModelSpec spec;
  spec.family = corrml::ModelFamily::decision_tree;
  for (auto _ : state) {
    benchmark::DoNotOptimize(corrml::train(spec, data, 1));
  }
}
BENCHMARK(bm_tree_fit)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void bm_forest_fit(benchmark::State& state) {
  auto data = bench_data(1000, 8, corrml::Task::regression());
  corrml::ModelSpec spec;
  spec.family = corrml::ModelFamily::random_forest;
  spec.hyper["n_trees"] = static_cast<double>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(corrml::train(spec, data, 1));
  }
}
BENCHMARK(bm_forest_fit)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void bm_mlp_train(benchmark::State& state) {
  auto data = bench_data(400, 8, corrml::Task::classification(2));
  corrml::ModelSpec spec;
  spec.family = corrml::ModelFamily::mlp1;
  spec.hyper["epochs"] = static_cast<double>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(corrml::train(spec, data, 1));
  }
}
BENCHMARK(bm_mlp_train)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
