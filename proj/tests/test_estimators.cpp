#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "test_support.hpp"
#include "tlreg/estimators.hpp"

using namespace tlreg;

namespace {

OperatorMatrix identity_op(Index d) { return build_operator({OperatorKind::identity, 0.0, d}); }

Dataset make_dataset(Matrix x, Vector y) {
  Dataset ds;
  ds.design = std::move(x);
  ds.responses = std::move(y);
  return ds;
}

}  // namespace

TEST_CASE("mltn_fit basic cases") {
  Vector y(3);
  y << 4, 5, 6;
  CHECK((mltn_fit(make_dataset(Matrix::Identity(3, 3), y)).beta_hat - y).cwiseAbs().maxCoeff() <
        1e-13);

  Matrix row(1, 2);
  row << 1, 0;
  Vector b1(1);
  b1 << 2;
  const auto e = mltn_fit(make_dataset(row, b1));
  CHECK(e.beta_hat(0) == doctest::Approx(2.0));
  CHECK(e.beta_hat(1) == doctest::Approx(0.0));
  CHECK(e.estimator_id == EstimatorId::mltn);
}

TEST_CASE("mltn_fit interpolates a noiseless full-rank system") {
  Rng rng(1, 0);
  const Matrix x = sample_gaussian_matrix(12, 5, Covariance::identity(), rng);
  Vector beta = Vector::LinSpaced(5, -2.0, 2.0);
  const auto e = mltn_fit(make_dataset(x, x * beta));
  CHECK((e.beta_hat - beta).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("tl_fit with no data reduces to pure transfer") {
  const Index d = 4;
  const auto op = build_operator({OperatorKind::dct_transpose, 0.0, d});
  Vector theta = Vector::LinSpaced(d, 1.0, 2.0);
  const auto e = tl_fit(make_dataset(Matrix::Zero(3, d), Vector::Zero(3)), theta, op, 0.5);
  const Vector expected = op.H.transpose() * theta;  // H^-1 for orthonormal H
  CHECK((e.beta_hat - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("tl_fit scalar hand case") {
  Matrix x(1, 1);
  x << 1;
  Vector y(1);
  y << 1;
  Vector theta = Vector::Zero(1);
  const auto e = tl_fit(make_dataset(x, y), theta, identity_op(1), 1.0);
  CHECK(e.beta_hat(0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(*e.alpha == 1.0);
}

TEST_CASE("tl_fit recovers the truth when both terms are consistent") {
  Rng rng(2, 0);
  const Index d = 6;
  const auto op = build_operator({OperatorKind::circulant_kernel, 0.1, d});
  const Matrix x = sample_gaussian_matrix(4, d, Covariance::identity(), rng);
  Vector beta = Vector::LinSpaced(d, -1.0, 1.0);
  const Vector theta = op.H * beta;
  for (const double alpha : {0.01, 1.0, 100.0}) {
    const auto e = tl_fit(make_dataset(x, x * beta), theta, op, alpha);
    CHECK((e.beta_hat - beta).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("tl_fit satisfies the stationarity condition") {
  Rng rng(3, 0);
  for (const auto [n, d] : {std::pair<Index, Index>{12, 5}, {5, 12}}) {
    const auto op = build_operator({OperatorKind::circulant_kernel, 0.08, d});
    const Matrix x = sample_gaussian_matrix(n, d, Covariance::identity(), rng);
    Vector y(n), theta(d);
    for (Index i = 0; i < n; ++i) y(i) = rng.gaussian();
    for (Index i = 0; i < d; ++i) theta(i) = rng.gaussian();
    const double alpha = 0.37;
    const auto e = tl_fit(make_dataset(x, y), theta, op, alpha);
    const double na = static_cast<double>(n) * alpha;
    const Vector grad = x.transpose() * (x * e.beta_hat - y) +
                        na * (op.H.transpose() * (op.H * e.beta_hat - theta));
    CHECK(grad.cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("tl_fit equals ridge_fit for identity operator and zero source") {
  Rng rng(4, 0);
  const Index n = 10, d = 7;
  const Matrix x = sample_gaussian_matrix(n, d, Covariance::identity(), rng);
  Vector y(n);
  for (Index i = 0; i < n; ++i) y(i) = rng.gaussian();
  const auto ds = make_dataset(x, y);
  const auto tl = tl_fit(ds, Vector::Zero(d), identity_op(d), 0.8);
  const auto rg = ridge_fit(ds, 0.8);
  CHECK((tl.beta_hat - rg.beta_hat).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("tl_fit_path matches tl_fit across alphas") {
  Rng rng(5, 0);
  const Index n = 8, d = 10;
  const auto op = build_operator({OperatorKind::circulant_kernel, 0.05, d});
  const Matrix x = sample_gaussian_matrix(n, d, Covariance::identity(), rng);
  Vector y(n), theta(d);
  for (Index i = 0; i < n; ++i) y(i) = rng.gaussian();
  for (Index i = 0; i < d; ++i) theta(i) = rng.gaussian();
  const auto ds = make_dataset(x, y);
  const std::array<double, 3> alphas{0.01, 0.5, 20.0};
  const auto path = tl_fit_path(ds, theta, op, alphas);
  for (std::size_t j = 0; j < alphas.size(); ++j) {
    const auto direct = tl_fit(ds, theta, op, alphas[j]);
    CHECK((path[j] - direct.beta_hat).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("ridge_fit basic cases") {
  CHECK(ridge_fit(make_dataset(Matrix::Zero(2, 3), Vector::Zero(2)), 1.0).beta_hat.norm() == 0.0);

  Matrix x(1, 1);
  x << 1;
  Vector y(1);
  y << 1;
  CHECK(ridge_fit(make_dataset(x, y), 1.0).beta_hat(0) == doctest::Approx(0.5).epsilon(1e-14));

  CHECK_THROWS_AS(ridge_fit(make_dataset(x, y), 0.0), InvalidParameterError);
  CHECK_THROWS_AS(ridge_fit(make_dataset(x, y), -1.0), InvalidParameterError);
}

TEST_CASE("ridge_fit shrinks to zero at huge alpha") {
  Rng rng(6, 0);
  const Index n = 16, d = 4;
  const Matrix x = sample_gaussian_matrix(n, d, Covariance::identity(), rng);
  Vector y(n);
  for (Index i = 0; i < n; ++i) y(i) = rng.gaussian();
  const auto e = ridge_fit(make_dataset(x, y), 1e8);
  CHECK(e.beta_hat.norm() <= 1e-6 * (x.transpose() * y).norm() / static_cast<double>(n));
}

TEST_CASE("ridge_fit_path matches ridge_fit") {
  Rng rng(7, 0);
  const Matrix x = sample_gaussian_matrix(6, 9, Covariance::identity(), rng);
  Vector y(6);
  for (Index i = 0; i < 6; ++i) y(i) = rng.gaussian();
  const auto ds = make_dataset(x, y);
  const std::array<double, 2> alphas{0.3, 3.0};
  const auto path = ridge_fit_path(ds, alphas);
  for (std::size_t j = 0; j < alphas.size(); ++j)
    CHECK((path[j] - ridge_fit(ds, alphas[j]).beta_hat).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("lmmse_fit scalar hand case: noiseless source wins") {
  // d=1, n=1, n_tilde >= 3, b=1, x=1, sigma_eps2=1, H=1, no relation/source noise.
  // Joint covariance [[2,1],[1,1]], gain row [1,1] -> weights [0,1], so the
  // estimate equals theta_hat.
  Matrix x(1, 1);
  x << 1;
  Vector y(1);
  y << 1;
  Vector theta(1);
  theta << 0.7;
  const TargetSpec t(1, 1, 1.0, 1.0);
  const SourceSpec s(4, 0.0);
  const TaskRelation rel(identity_op(1), 0.0);
  const auto e = lmmse_fit(make_dataset(x, y), theta, rel, t, s);
  CHECK(e.beta_hat(0) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("lmmse_fit vanishes with the prior") {
  Rng rng(8, 0);
  const Index d = 6, n = 8;
  const Matrix x = sample_gaussian_matrix(n, d, Covariance::identity(), rng);
  Vector y(n), theta(d);
  for (Index i = 0; i < n; ++i) y(i) = rng.gaussian();
  for (Index i = 0; i < d; ++i) theta(i) = rng.gaussian();
  const TargetSpec t(d, n, 1.0, 1e-12);
  const SourceSpec s(16, 0.0);
  const TaskRelation rel(identity_op(d), 1.0);
  const auto e = lmmse_fit(make_dataset(x, y), theta, rel, t, s);
  CHECK(e.beta_hat.norm() <= 1e-6);
}

TEST_CASE("cross-covariance picks up the overparameterized projection factor") {
  const Index d = 256, nt = 128;
  const TargetSpec t(d, 64, 0.05, 1.0);
  const SourceSpec s(nt, 0.05);
  const auto op = build_operator({OperatorKind::dct_transpose, 0.0, d});
  const TaskRelation rel(op, 0.1);
  const Matrix cross = beta_theta_hat_cross_covariance(rel, t, s);
  const Matrix expected = 0.5 * (1.0 / 256.0) * op.H.transpose();  // (nt/d) * B_d H'
  CHECK((cross - expected).cwiseAbs().maxCoeff() < 1e-15);

  const SourceSpec wide(512, 0.05);
  const Matrix under = beta_theta_hat_cross_covariance(rel, t, wide);
  CHECK((under - 2.0 * expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("theta_hat covariance branches") {
  const Index d = 4;
  const TargetSpec t(d, 8, 0.0, 2.0);
  const TaskRelation rel(identity_op(d), 0.4);
  // underparameterized source: K + (eta/d + xi/(nt-d-1)) I
  const Matrix under = theta_hat_covariance(rel, t, SourceSpec(16, 0.3));
  const double diag_u = 2.0 / 4.0 + 0.4 / 4.0 + 0.3 / 11.0;
  CHECK(under.isApprox(diag_u * Matrix::Identity(d, d), 1e-12));
  // band is infinite
  for (const Index nt : {3, 4, 5})
    CHECK_THROWS_AS(theta_hat_covariance(rel, t, SourceSpec(nt, 0.3)), InfiniteBandError);
  // overparameterized source with identity H: scaled identity again
  const SourceSpec s2(2, 0.3);
  const Matrix over = theta_hat_covariance(rel, t, s2);
  const double k = 2.0 / 4.0;
  const double expect = (2.0 / 4.0) * ((3.0 / 5.0) * k + (2.0 / 15.0) * (4.0 * k - k) +
                                       0.4 / 4.0 + 0.3 / 1.0);
  CHECK(over(0, 0) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(std::abs(over(0, 1)) < 1e-15);
}

TEST_CASE("lmmse_fit rejects the infinite-covariance band") {
  const Index d = 8;
  Matrix x = Matrix::Identity(4, d);
  const TargetSpec t(d, 4, 0.1, 1.0);
  const TaskRelation rel(identity_op(d), 0.0);
  for (const Index nt : {7, 8, 9}) {
    const SourceSpec s(nt, 0.1);
    CHECK_THROWS_AS(lmmse_fit(make_dataset(x, Vector::Zero(4)), Vector::Zero(d), rel, t, s),
                    InfiniteBandError);
  }
}

TEST_CASE("lmmse_fit reports a singular joint covariance") {
  // sigma_eps2 = 0 with a zero design makes the y-block identically zero.
  const Index d = 1, n = 3;
  const TargetSpec t(d, n, 0.0, 1.0);
  const SourceSpec s(4, 0.1);
  const TaskRelation rel(identity_op(d), 0.0);
  try {
    lmmse_fit(make_dataset(Matrix::Zero(n, d), Vector::Zero(n)), Vector::Zero(d), rel, t, s);
    FAIL("expected JointCovarianceSingularError");
  } catch (const JointCovarianceSingularError& e) {
    CHECK(std::abs(e.smallest_eigenvalue) < 1e-12);
  }
}

TEST_CASE("lmmse conditional risk matches sampled fits at a fixed design") {
  const Index d = 8, n = 12, nt = 20;
  const TargetSpec t(d, n, 0.2, 1.0);
  const SourceSpec s(nt, 0.1);
  const auto op = build_operator({OperatorKind::circulant_kernel, 0.1, d});
  const TaskRelation rel(op, 0.3);
  Rng xrng(2300, 0);
  const Matrix x = sample_gaussian_matrix(n, d, Covariance::identity(), xrng);
  const auto model = lmmse_model(rel, t, s);
  const double closed = lmmse_conditional_risk(x, model, t.sigma_x);
  std::vector<double> risks;
  for (int it = 0; it < 4000; ++it) {
    Rng rng(2301, static_cast<std::uint64_t>(it));
    const Vector beta = sample_beta(t, rng);
    const Dataset src = sample_source_dataset(beta, rel, s, d, rng);
    const Vector theta_hat = mltn_fit(src).beta_hat;
    Dataset tgt;
    tgt.design = x;
    tgt.responses = x * beta;
    for (Index i = 0; i < n; ++i) tgt.responses(i) += std::sqrt(0.2) * rng.gaussian();
    risks.push_back(empirical_risk(lmmse_fit(tgt, theta_hat, model).beta_hat, beta, t));
  }
  const auto st = test::stats(risks);
  CHECK(std::abs(st.mean - closed) <= 3.0 * st.std_error);
}

TEST_CASE("optimal_alpha_tl closed form and sentinels") {
  // C_TL = 0.1/10 + 0 = 0.01 -> alpha = 1 / (64 * 0.01)
  const TargetSpec t(10, 64, 1.0, 1.0);
  const SourceSpec s(128, 0.0);
  const TaskRelation rel(identity_op(10), 0.1);
  const auto a = optimal_alpha_tl(t, s, rel);
  REQUIRE(a.is_value());
  CHECK(a.value == doctest::Approx(1.5625).epsilon(1e-14));

  const TargetSpec t2(128, 64, 1.0, 1.0);
  const TaskRelation rel2(identity_op(128), 0.1);
  CHECK(optimal_alpha_tl(t2, s, rel2).kind == TlAlpha::Kind::infinite_band);

  const TaskRelation noiseless(identity_op(10), 0.0);
  CHECK(optimal_alpha_tl(t, s, noiseless).kind == TlAlpha::Kind::pure_transfer);
}

TEST_CASE("optimal_alpha_tl scope for general operators") {
  const Index d = 16;
  const auto circ = build_operator({OperatorKind::circulant_kernel, 0.1, d});
  const TargetSpec t(d, 8, 1.0, 1.0);
  const TaskRelation rel(circ, 0.1);
  CHECK(optimal_alpha_tl(t, SourceSpec(32, 0.1), rel).is_value());  // d <= nt-2
  CHECK_THROWS_AS(optimal_alpha_tl(t, SourceSpec(15, 0.1), rel), ScopeError);
  CHECK_THROWS_AS(optimal_alpha_tl(t, SourceSpec(8, 0.1), rel), ScopeError);
}

TEST_CASE("optimal_alpha_ridge substitutions") {
  CHECK(optimal_alpha_ridge(TargetSpec(64, 64, 1.0, 1.0)) == doctest::Approx(1.0));
  CHECK(optimal_alpha_ridge(TargetSpec(64, 64, 0.0, 1.0)) == 0.0);
  CHECK(optimal_alpha_ridge(TargetSpec(128, 64, 0.5, 2.0)) == doctest::Approx(0.5));
}

TEST_CASE("pure_transfer_fit inverts the operator") {
  const Index d = 5;
  const auto op = build_operator({OperatorKind::circulant_kernel, 0.07, d});
  Vector theta = Vector::LinSpaced(d, 1.0, 3.0);
  const auto e = pure_transfer_fit(theta, op);
  CHECK((op.H * e.beta_hat - theta).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::isinf(*e.alpha));
}

namespace {

// Paired Monte-Carlo risks of the tuned estimators over one trial stream.
struct PairedRun {
  std::vector<double> at_opt;
  std::vector<std::vector<double>> at_grid;  // [grid][trial]
};

PairedRun paired_ridge_run(Index d, Index n, double sigma_eps2, double b,
                           const std::vector<double>& grid, int trials, std::uint64_t seed) {
  PairedRun run;
  run.at_grid.assign(grid.size(), {});
  const TargetSpec t(d, n, sigma_eps2, b);
  const double alpha_opt = optimal_alpha_ridge(t);
  std::vector<double> alphas = grid;
  alphas.push_back(alpha_opt);
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(seed, static_cast<std::uint64_t>(trial));
    const Vector beta = sample_beta(t, rng);
    const Dataset ds = sample_target_dataset(beta, t, rng);
    const auto path = ridge_fit_path(ds, alphas);
    for (std::size_t j = 0; j < grid.size(); ++j)
      run.at_grid[j].push_back(empirical_risk(path[j], beta, t));
    run.at_opt.push_back(empirical_risk(path.back(), beta, t));
  }
  return run;
}

}  // namespace

TEST_CASE("optimal ridge tuning is a grid minimum up to noise") {
  std::vector<double> grid;
  for (int i = 0; i < 15; ++i) grid.push_back(1e-2 * std::pow(1e4, i / 14.0));
  for (const Index d : {16, 64}) {
    const auto run = paired_ridge_run(d, 64, 0.05, 1.0, grid, 200, 901u + d);
    const auto opt = test::stats(run.at_opt);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      std::vector<double> diff(run.at_opt.size());
      for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = run.at_grid[j][i] - run.at_opt[i];
      const auto ds = test::stats(diff);
      CHECK(ds.mean >= -2.0 * ds.std_error - 1e-12);
    }
    CHECK(opt.mean > 0.0);
  }
}

TEST_CASE("LMMSE dominates the tuned transfer estimator") {
  const Index n = 64, nt = 128;
  const double se2 = 0.05, eta2 = 0.1, xi2 = 0.05, b = 1.0;
  for (const Index d : {16, 96, 256}) {
    const auto op = build_operator({OperatorKind::dct_transpose, 0.0, d});
    const TargetSpec t(d, n, se2, b);
    const SourceSpec s(nt, xi2);
    const TaskRelation rel(op, eta2);
    const auto alpha = optimal_alpha_tl(t, s, rel);
    REQUIRE(alpha.is_value());
    const auto model = lmmse_model(rel, t, s);
    std::vector<double> tl_risk, lm_risk;
    for (int trial = 0; trial < 120; ++trial) {
      Rng rng(5000u + static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(trial));
      const Vector beta = sample_beta(t, rng);
      const Dataset src = sample_source_dataset(beta, rel, s, d, rng);
      const Vector theta_hat = mltn_fit(src).beta_hat;
      const Dataset tgt = sample_target_dataset(beta, t, rng);
      tl_risk.push_back(empirical_risk(tl_fit(tgt, theta_hat, op, alpha.value).beta_hat, beta, t));
      lm_risk.push_back(empirical_risk(lmmse_fit(tgt, theta_hat, model).beta_hat, beta, t));
    }
    const auto st = test::stats(tl_risk);
    const auto sl = test::stats(lm_risk);
    CHECK(sl.mean <= st.mean + 2.0 * test::combined_se(st.std_error, sl.std_error));
  }
}
