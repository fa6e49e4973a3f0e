// Serial reference vs OpenMP kernels on synthetic inputs. Run with
// OMP_NUM_THREADS set to compare thread counts.

#include <benchmark/benchmark.h>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "equifair/kernels.hpp"

namespace {

using namespace equifair::kernels;

constexpr std::size_t kGroups = 5;

struct Cohort {
  std::vector<std::uint32_t> group;
  std::vector<std::uint8_t> y, y_hat;
  std::vector<std::uint64_t> keys;
  std::vector<double> scores;
};

Cohort make_cohort(std::size_t n) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Cohort c;
  for (std::size_t i = 0; i < n; ++i) {
    c.group.push_back(static_cast<std::uint32_t>(gen() % kGroups));
    c.y.push_back(u(gen) < 0.2);
    c.scores.push_back(u(gen));
    c.y_hat.push_back(c.scores.back() >= 0.5);
    c.keys.push_back(gen());
  }
  return c;
}

template <auto Fn>
void bm_confusion(benchmark::State& state) {
  const auto c = make_cohort(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Fn(c.group, c.y, c.y_hat, kGroups));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void bm_flip(benchmark::State& state) {
  const auto c = make_cohort(static_cast<std::size_t>(state.range(0)));
  const std::vector<double> p0(kGroups, 0.1), p1(kGroups, 0.8);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(c.group, c.y_hat, c.keys, p0, p1, 11));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void bm_mixture(benchmark::State& state) {
  const auto c = make_cohort(static_cast<std::size_t>(state.range(0)));
  const std::vector<ThresholdMixture> mix(kGroups, {{0.3, 0.25}, {0.5, 0.5}, {0.7, 0.25}});
  for (auto _ : state) benchmark::DoNotOptimize(Fn(c.group, c.scores, c.keys, mix, 11));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void bm_neutralize(benchmark::State& state) {
  const std::size_t rows = static_cast<std::size_t>(state.range(0)), dim = 300;
  std::mt19937_64 gen(3);
  std::normal_distribution<double> z;
  std::vector<double> base(rows * dim);
  for (auto& v : base) v = z(gen);
  std::vector<double> b(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
  std::vector<std::size_t> idx(rows);
  for (std::size_t i = 0; i < rows; ++i) idx[i] = i;
  std::vector<RowStatus> status(rows);
  for (auto _ : state) {
    state.PauseTiming();
    auto data = base;
    state.ResumeTiming();
    Fn(RowMatrix{data, dim}, BasisView{b, dim}, idx, 1e-12, status);
    benchmark::DoNotOptimize(data.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

BENCHMARK(bm_confusion<serial::count_confusion>)->Name("count_confusion/serial")->Arg(1 << 20);
BENCHMARK(bm_confusion<omp::count_confusion>)->Name("count_confusion/omp")->Arg(1 << 20);
BENCHMARK(bm_flip<serial::apply_flip>)->Name("apply_flip/serial")->Arg(1 << 20);
BENCHMARK(bm_flip<omp::apply_flip>)->Name("apply_flip/omp")->Arg(1 << 20);
BENCHMARK(bm_mixture<serial::apply_mixture>)->Name("apply_mixture/serial")->Arg(1 << 20);
BENCHMARK(bm_mixture<omp::apply_mixture>)->Name("apply_mixture/omp")->Arg(1 << 20);
BENCHMARK(bm_neutralize<serial::neutralize_rows>)->Name("neutralize_rows/serial")->Arg(10000);
BENCHMARK(bm_neutralize<omp::neutralize_rows>)->Name("neutralize_rows/omp")->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
