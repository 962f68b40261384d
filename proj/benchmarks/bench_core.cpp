#include <benchmark/benchmark.h>

#include "adp/experiments.hpp"

#include <random>

namespace {

adp::Vector random_vector(adp::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  adp::Vector v(n);
  for (adp::Index i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

void BM_ProxL1(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto n = static_cast<adp::Index>(state.range(0));
  const auto norm = adp::DecomposableNorm::l1(n);
  const adp::Vector u = random_vector(n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(adp::prox(norm, u, 0.3));
}
BENCHMARK(BM_ProxL1)->Arg(64)->Arg(1024);

void BM_ProxNuclear(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto k = static_cast<adp::Index>(state.range(0));
  const auto norm = adp::DecomposableNorm::nuclear(k, k);
  const adp::Vector u = random_vector(k * k, rng);
  for (auto _ : state) benchmark::DoNotOptimize(adp::prox(norm, u, 0.3));
}
BENCHMARK(BM_ProxNuclear)->Arg(8)->Arg(32);

void BM_ProjectL1Ball(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const adp::Vector u = random_vector(static_cast<adp::Index>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(adp::project_l1_ball(u, 1.0));
}
BENCHMARK(BM_ProjectL1Ball)->Arg(64)->Arg(1024);

adp::Problem tv_problem(adp::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto phi = adp::gaussian_operator(n / 2, n, rng);
  const auto d = adp::tv1d_operator(n);
  adp::Vector x0 = adp::Vector::Zero(n);
  x0.tail(n / 2).setOnes();
  const adp::Vector y = phi.apply(x0) + 0.01 * random_vector(n / 2, rng);
  return adp::make_problem(phi, d, adp::DecomposableNorm::l1(n - 1), y, 0.01);
}

void BM_SolveTv1d(benchmark::State& state) {
  const adp::Problem pb = tv_problem(static_cast<adp::Index>(state.range(0)), 4);
  adp::SolverOptions opts;
  opts.tol = 1e-8;
  for (auto _ : state) benchmark::DoNotOptimize(adp::solve_penalized(pb, opts));
}
BENCHMARK(BM_SolveTv1d)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_MinimizeIcFull(benchmark::State& state) {
  const auto n = static_cast<adp::Index>(state.range(0));
  std::mt19937_64 rng(5);
  const auto phi = adp::gaussian_operator(3 * n / 4, n, rng);
  const auto d = adp::LinearOperator::identity(n);
  const auto norm = adp::DecomposableNorm::l1(n);
  adp::Vector u0 = adp::Vector::Zero(n);
  u0.head(n / 8).setOnes();
  const adp::DecompositionModel model = adp::decompose_at(norm, u0);
  for (auto _ : state) benchmark::DoNotOptimize(adp::minimize_ic_full(phi, d, norm, model));
}
BENCHMARK(BM_MinimizeIcFull)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
