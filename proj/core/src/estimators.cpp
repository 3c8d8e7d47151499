#include "tlreg/estimators.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

#include "tlreg/analytic.hpp"

namespace tlreg {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string to_string(EstimatorId id) {
  switch (id) {
    case EstimatorId::mltn: return "mltn";
    case EstimatorId::tl: return "tl";
    case EstimatorId::ridge: return "ridge";
    case EstimatorId::lmmse: return "lmmse";
  }
  return "?";
}

EstimatorId estimator_from_string(std::string_view text) {
  if (text == "mltn") return EstimatorId::mltn;
  if (text == "tl") return EstimatorId::tl;
  if (text == "ridge") return EstimatorId::ridge;
  if (text == "lmmse") return EstimatorId::lmmse;
  throw ConfigError("unknown estimator id: " + std::string(text));
}

Estimate mltn_fit(const Dataset& ds) {
  Estimate e;
  e.estimator_id = EstimatorId::mltn;
  e.beta_hat = pseudoinverse_apply(ds.design, ds.responses);
  return e;
}

namespace {

// X'X + n a H'H, with the H'H product skipped for orthonormal kinds.
Matrix tl_normal_matrix(const Matrix& X, const OperatorMatrix& H, double n_alpha) {
  Matrix A = X.transpose() * X;
  if (H.orthonormal())
    A.diagonal().array() += n_alpha;
  else
    A.noalias() += n_alpha * (H.H.transpose() * H.H);
  return A;
}

}  // namespace

Estimate tl_fit(const Dataset& ds, const Vector& theta_hat, const OperatorMatrix& H, double alpha_tl) {
  const Index d = ds.design.cols();
  if (H.dim() != d || theta_hat.size() != d)
    throw ShapeError("tl_fit: operator or theta_hat dimension mismatch");
  if (!(alpha_tl > 0.0)) throw InvalidParameterError("tl_fit: alpha_tl must be > 0");
  const double na = static_cast<double>(ds.design.rows()) * alpha_tl;
  Matrix A = tl_normal_matrix(ds.design, H, na);
  Vector rhs = ds.design.transpose() * ds.responses + na * (H.H.transpose() * theta_hat);
  auto solved = solve_spd(std::move(A), rhs);
  Estimate e;
  e.estimator_id = EstimatorId::tl;
  e.alpha = alpha_tl;
  e.jitter_applied = solved.jitter_applied;
  e.beta_hat = std::move(solved.solution);
  return e;
}

std::vector<Vector> tl_fit_path(const Dataset& ds, const Vector& theta_hat, const OperatorMatrix& H,
                                std::span<const double> alphas) {
  const Index d = ds.design.cols();
  const double n = static_cast<double>(ds.design.rows());
  if (H.dim() != d || theta_hat.size() != d)
    throw ShapeError("tl_fit_path: operator or theta_hat dimension mismatch");
  // Substituting u = H beta turns the system into (Xh'Xh + n a I) u = Xh'y + n a theta_hat
  // with Xh = X H^-1, so one eigendecomposition serves every alpha.
  Matrix Xh;
  if (H.kind == OperatorKind::identity) {
    Xh = ds.design;
  } else if (H.orthonormal()) {
    Xh = ds.design * H.H.transpose();  // H^-1 = H' for orthonormal H
  } else {
    Xh = H.H.transpose().partialPivLu().solve(ds.design.transpose()).transpose();
  }
  const auto eig = sym_eigendecomposition(Xh.transpose() * Xh);
  const Vector rhs0 = eig.eigenvectors.transpose() * (Xh.transpose() * ds.responses);
  const Vector th0 = eig.eigenvectors.transpose() * theta_hat;
  Eigen::PartialPivLU<Matrix> lu;
  if (!H.orthonormal()) lu.compute(H.H);
  std::vector<Vector> out;
  out.reserve(alphas.size());
  for (const double a : alphas) {
    if (!(a > 0.0)) throw InvalidParameterError("tl_fit_path: alpha must be > 0");
    const Eigen::ArrayXd denom = eig.eigenvalues.array().max(0.0) + n * a;
    const Vector z = ((rhs0 + (n * a) * th0).array() / denom).matrix();
    Vector u = eig.eigenvectors * z;
    if (H.kind == OperatorKind::identity)
      out.push_back(std::move(u));
    else if (H.orthonormal())
      out.push_back(H.H.transpose() * u);
    else
      out.push_back(lu.solve(u));
  }
  return out;
}

Estimate ridge_fit(const Dataset& ds, double alpha_ridge) {
  if (!(alpha_ridge > 0.0)) throw InvalidParameterError("ridge_fit: alpha_ridge must be > 0");
  const double na = static_cast<double>(ds.design.rows()) * alpha_ridge;
  Matrix A = ds.design.transpose() * ds.design;
  A.diagonal().array() += na;
  auto solved = solve_spd(std::move(A), ds.design.transpose() * ds.responses);
  Estimate e;
  e.estimator_id = EstimatorId::ridge;
  e.alpha = alpha_ridge;
  e.jitter_applied = solved.jitter_applied;
  e.beta_hat = std::move(solved.solution);
  return e;
}

std::vector<Vector> ridge_fit_path(const Dataset& ds, std::span<const double> alphas) {
  const double n = static_cast<double>(ds.design.rows());
  const auto eig = sym_eigendecomposition(ds.design.transpose() * ds.design);
  const Vector rhs0 = eig.eigenvectors.transpose() * (ds.design.transpose() * ds.responses);
  std::vector<Vector> out;
  out.reserve(alphas.size());
  for (const double a : alphas) {
    if (!(a > 0.0)) throw InvalidParameterError("ridge_fit_path: alpha must be > 0");
    const Eigen::ArrayXd denom = eig.eigenvalues.array().max(0.0) + n * a;
    out.push_back(eig.eigenvectors * (rhs0.array() / denom).matrix());
  }
  return out;
}

Estimate pure_transfer_fit(const Vector& theta_hat, const OperatorMatrix& H) {
  if (H.dim() != theta_hat.size()) throw ShapeError("pure_transfer_fit: dimension mismatch");
  Estimate e;
  e.estimator_id = EstimatorId::tl;
  e.alpha = kInf;
  if (H.orthonormal())
    e.beta_hat = H.H.transpose() * theta_hat;
  else
    e.beta_hat = H.H.partialPivLu().solve(theta_hat);
  return e;
}

Matrix beta_theta_hat_cross_covariance(const TaskRelation& rel, const TargetSpec& t,
                                       const SourceSpec& s) {
  const double bd = t.b / static_cast<double>(t.d);
  const double scale = (t.d <= s.n_tilde)
                           ? 1.0
                           : static_cast<double>(s.n_tilde) / static_cast<double>(t.d);
  return (scale * bd) * rel.H.H.transpose();
}

Matrix theta_hat_covariance(const TaskRelation& rel, const TargetSpec& t, const SourceSpec& s) {
  const Index d = t.d;
  const Index nt = s.n_tilde;
  if (d >= nt - 1 && d <= nt + 1)
    throw InfiniteBandError("theta_hat covariance is infinite for d in {n_tilde-1, n_tilde, n_tilde+1}");
  const double dd = static_cast<double>(d);
  const double nn = static_cast<double>(nt);
  const double bd = t.b / dd;
  Matrix K;
  if (rel.H.orthonormal())
    K = bd * Matrix::Identity(d, d);
  else
    K = bd * (rel.H.H * rel.H.H.transpose());
  if (d <= nt - 2) {
    K.diagonal().array() += rel.sigma_eta2 / dd + s.sigma_xi2 / (nn - dd - 1.0);
    return K;
  }
  const double trace_k = K.trace();
  Matrix cov = ((nn + 1.0) / (dd + 1.0)) * K;
  cov.diagonal().array() +=
      ((dd - nn) / (dd * dd - 1.0)) * (trace_k - K.diagonal().array()) +
      rel.sigma_eta2 / dd + s.sigma_xi2 / (dd - nn - 1.0);
  return (nn / dd) * cov;
}

LmmseModel lmmse_model(const TaskRelation& rel, const TargetSpec& t, const SourceSpec& s) {
  LmmseModel m;
  m.cross = beta_theta_hat_cross_covariance(rel, t, s);
  m.theta_cov = theta_hat_covariance(rel, t, s);
  m.prior_var = t.b / static_cast<double>(t.d);
  m.sigma_eps2 = t.sigma_eps2;
  return m;
}

namespace {

Matrix lmmse_joint(const Matrix& X, const LmmseModel& m) {
  const Index n = X.rows();
  const Index d = X.cols();
  Matrix joint(n + d, n + d);
  joint.topLeftCorner(n, n).noalias() = m.prior_var * (X * X.transpose());
  joint.topLeftCorner(n, n).diagonal().array() += m.sigma_eps2;
  joint.topRightCorner(n, d).noalias() = X * m.cross;
  joint.bottomLeftCorner(d, n) = joint.topRightCorner(n, d).transpose();
  joint.bottomRightCorner(d, d) = m.theta_cov;
  return joint;
}

Eigen::LDLT<Matrix> lmmse_factorize(const Matrix& joint) {
  Eigen::LDLT<Matrix> ldlt(joint);
  const double dmax = ldlt.vectorD().cwiseAbs().maxCoeff();
  const double dmin = ldlt.vectorD().minCoeff();
  if (ldlt.info() != Eigen::Success || !(dmin > 1e-14 * dmax)) {
    const auto eig = sym_eigendecomposition(joint);
    throw JointCovarianceSingularError("lmmse_fit: joint covariance is singular",
                                       eig.eigenvalues(eig.eigenvalues.size() - 1));
  }
  return ldlt;
}

}  // namespace

Estimate lmmse_fit(const Dataset& ds, const Vector& theta_hat, const LmmseModel& model) {
  const Index n = ds.design.rows();
  const Index d = ds.design.cols();
  if (theta_hat.size() != d || model.cross.rows() != d)
    throw ShapeError("lmmse_fit: dimension mismatch");
  const auto ldlt = lmmse_factorize(lmmse_joint(ds.design, model));
  Vector u(n + d);
  u.head(n) = ds.responses;
  u.tail(d) = theta_hat;
  const Vector z = ldlt.solve(u);
  Estimate e;
  e.estimator_id = EstimatorId::lmmse;
  e.beta_hat = model.prior_var * (ds.design.transpose() * z.head(n)) + model.cross * z.tail(d);
  return e;
}

Estimate lmmse_fit(const Dataset& ds, const Vector& theta_hat, const TaskRelation& rel,
                   const TargetSpec& t, const SourceSpec& s) {
  if (rel.dim() != ds.design.cols() || t.d != ds.design.cols())
    throw ShapeError("lmmse_fit: dimension mismatch");
  return lmmse_fit(ds, theta_hat, lmmse_model(rel, t, s));
}

double lmmse_conditional_risk(const Matrix& design, const LmmseModel& model,
                              const Covariance& sigma_x) {
  const Index n = design.rows();
  const Index d = design.cols();
  const auto ldlt = lmmse_factorize(lmmse_joint(design, model));
  Matrix gain(d, n + d);  // E[beta u'] with u = (y, theta_hat)
  gain.leftCols(n) = model.prior_var * design.transpose();
  gain.rightCols(d) = model.cross;
  const Matrix err = model.prior_var * Matrix::Identity(d, d) - gain * ldlt.solve(gain.transpose());
  if (sigma_x.is_identity()) return model.sigma_eps2 + err.trace();
  return model.sigma_eps2 + (sigma_x.matrix() * err).trace();
}

double lmmse_conditional_risk(const Matrix& design, const TaskRelation& rel, const TargetSpec& t,
                              const SourceSpec& s) {
  return lmmse_conditional_risk(design, lmmse_model(rel, t, s), t.sigma_x);
}

TlAlpha optimal_alpha_tl(const TargetSpec& t, const SourceSpec& s, const TaskRelation& rel) {
  const bool orthonormal_case = rel.H.orthonormal() && t.sigma_x.is_identity();
  if (!orthonormal_case && t.d > s.n_tilde - 2)
    throw ScopeError("optimal_alpha_tl: general H requires d <= n_tilde-2; grid-search instead");
  const double c = c_tl(t.d, s.n_tilde, rel.sigma_eta2, s.sigma_xi2, t.b);
  if (std::isinf(c)) return {TlAlpha::Kind::infinite_band, 0.0};
  if (c == 0.0) return {TlAlpha::Kind::pure_transfer, kInf};
  return {TlAlpha::Kind::value, t.sigma_eps2 / (static_cast<double>(t.n) * c)};
}

double optimal_alpha_ridge(const TargetSpec& t) {
  return static_cast<double>(t.d) * t.sigma_eps2 / (static_cast<double>(t.n) * t.b);
}

}  // namespace tlreg
