#include <benchmark/benchmark.h>

#include <vector>

#include "tlreg/analytic.hpp"
#include "tlreg/estimators.hpp"

using namespace tlreg;

namespace {

Dataset target_data(Index n, Index d, std::uint64_t seed) {
  const TargetSpec t(d, n, 0.05, 1.0);
  Rng rng(seed, 0);
  const Vector beta = sample_beta(t, rng);
  return sample_target_dataset(beta, t, rng);
}

void BM_PseudoinverseApply(benchmark::State& state) {
  const Index n = 128, d = state.range(0);
  Rng rng(1, 0);
  const Matrix z = sample_gaussian_matrix(n, d, Covariance::identity(), rng);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.gaussian();
  for (auto _ : state) benchmark::DoNotOptimize(pseudoinverse_apply(z, v));
}
BENCHMARK(BM_PseudoinverseApply)->Arg(64)->Arg(256)->Arg(512);

void BM_TlFit(benchmark::State& state) {
  const Index d = state.range(0);
  const auto op = build_operator({OperatorKind::circulant_kernel, 2.0 / 75.0, d});
  const auto ds = target_data(64, d, 2);
  Rng rng(3, 0);
  Vector theta(d);
  for (Index i = 0; i < d; ++i) theta(i) = rng.gaussian();
  for (auto _ : state) benchmark::DoNotOptimize(tl_fit(ds, theta, op, 0.1));
}
BENCHMARK(BM_TlFit)->Arg(128)->Arg(256);

void BM_TlFitPath40(benchmark::State& state) {
  const Index d = state.range(0);
  const auto op = build_operator({OperatorKind::circulant_kernel, 2.0 / 75.0, d});
  const auto ds = target_data(64, d, 4);
  Rng rng(5, 0);
  Vector theta(d);
  for (Index i = 0; i < d; ++i) theta(i) = rng.gaussian();
  std::vector<double> alphas;
  for (int i = 0; i < 40; ++i) alphas.push_back(1e-4 * std::pow(1e6, i / 39.0));
  for (auto _ : state) benchmark::DoNotOptimize(tl_fit_path(ds, theta, op, alphas));
}
BENCHMARK(BM_TlFitPath40)->Arg(128)->Arg(256);

void BM_LmmseFit(benchmark::State& state) {
  const Index d = state.range(0), n = 64;
  const TargetSpec t(d, n, 0.05, 1.0);
  const SourceSpec s(128, 0.05);
  const auto op = build_operator({OperatorKind::dct_transpose, 0.0, d});
  const TaskRelation rel(op, 0.1);
  const auto model = lmmse_model(rel, t, s);
  const auto ds = target_data(n, d, 6);
  Rng rng(7, 0);
  Vector theta(d);
  for (Index i = 0; i < d; ++i) theta(i) = rng.gaussian();
  for (auto _ : state) benchmark::DoNotOptimize(lmmse_fit(ds, theta, model));
}
BENCHMARK(BM_LmmseFit)->Arg(256)->Arg(512);

void BM_SolveFixedPoint(benchmark::State& state) {
  const Index d = state.range(0);
  Rng rng(8, 0);
  Matrix a = sample_gaussian_matrix(d, d, Covariance::identity(), rng);
  Matrix w = a * a.transpose() + 0.1 * Matrix::Identity(d, d);
  w = 0.5 * (w + w.transpose());
  for (auto _ : state) benchmark::DoNotOptimize(solve_fixed_point(w, 1.0, 0.3));
}
BENCHMARK(BM_SolveFixedPoint)->Arg(64)->Arg(256);

void BM_TlRiskGeneralAsymptotic(benchmark::State& state) {
  const Index d = state.range(0);
  const auto op = build_operator({OperatorKind::circulant_kernel, 2.0 / 75.0, d});
  const Regime regime = Regime::of(d, 64, 2 * d);
  for (auto _ : state)
    benchmark::DoNotOptimize(tl_risk_general_asymptotic(op, Covariance::identity(), regime, 0.05,
                                                        0.1, 1.0, 0.1, 0.05));
}
BENCHMARK(BM_TlRiskGeneralAsymptotic)->Arg(128)->Arg(256);

void BM_MpStieltjes(benchmark::State& state) {
  double alpha = 1e-3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mp_stieltjes(alpha, 1.7));
    alpha = (alpha > 1e3) ? 1e-3 : alpha * 1.001;
  }
}
BENCHMARK(BM_MpStieltjes);

}  // namespace

BENCHMARK_MAIN();
