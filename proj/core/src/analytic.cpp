#include "tlreg/analytic.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace tlreg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sq(double x) { return x * x; }

}  // namespace

double c_tl(Index d, Index n_tilde, double sigma_eta2, double sigma_xi2, double b) {
  const double dd = static_cast<double>(d);
  const double nn = static_cast<double>(n_tilde);
  if (d <= n_tilde - 2)
    return sigma_eta2 / dd + sigma_xi2 / (nn - dd - 1.0);
  if (d >= n_tilde + 2)
    return (1.0 - nn / dd) * (b / dd) + (nn / dd) * (sigma_eta2 / dd + sigma_xi2 / (dd - nn - 1.0));
  return kInf;
}

double source_risk(Index d, Index n_tilde, double sigma_xi2, double theta_energy) {
  const double dd = static_cast<double>(d);
  const double nn = static_cast<double>(n_tilde);
  if (d <= n_tilde - 2)
    return (1.0 + dd / (nn - dd - 1.0)) * sigma_xi2;
  if (d >= n_tilde + 2)
    return (1.0 + nn / (dd - nn - 1.0)) * sigma_xi2 + (1.0 - nn / dd) * theta_energy;
  return kInf;
}

double mltn_risk(Index d, Index n, double sigma_eps2, double b) {
  const double dd = static_cast<double>(d);
  const double nn = static_cast<double>(n);
  if (d <= n - 2)
    return (1.0 + dd / (nn - dd - 1.0)) * sigma_eps2;
  if (d >= n + 2)
    return (1.0 + nn / (dd - nn - 1.0)) * sigma_eps2 + (1.0 - nn / dd) * b;
  return kInf;
}

double mp_stieltjes(double alpha, double gamma) {
  if (!(alpha > 0.0) || !(gamma > 0.0))
    throw InvalidParameterError("mp_stieltjes: alpha and gamma must be > 0");
  const double A = 1.0 - gamma + alpha;
  const double B = 4.0 * gamma * alpha;
  const double root = std::sqrt(A * A + B);
  // -A + root cancels for A >> B; the conjugate form 2/(A + root) does not.
  if (A >= 0.0) return 2.0 / (A + root);
  return (-A + root) / (2.0 * gamma * alpha);
}

double mp_stieltjes_derivative(double alpha, double gamma) {
  const double A = 1.0 - gamma + alpha;
  const double S = std::sqrt(A * A + 4.0 * gamma * alpha);
  const double m = mp_stieltjes(alpha, gamma);
  // d/dalpha of (S - A)/(2 gamma alpha), written to reuse S - A = 2 gamma alpha m.
  const double dm = (((A + 2.0 * gamma) / S - 1.0) * alpha - 2.0 * gamma * alpha * m) /
                    (2.0 * gamma * alpha * alpha);
  return -dm;
}

namespace {

// Large-d limit of d * c_tl(...); +inf on the gamma_src = 1 band.
double noise_limit_for(const Regime& r, double sigma_eta2, double sigma_xi2, double b) {
  const double gs = r.gamma_src;
  if (gs < 1.0)
    return sigma_eta2 + gs * sigma_xi2 / (1.0 - gs);
  if (gs > 1.0)
    return ((gs - 1.0) / gs) * b + (sigma_eta2 + gs * sigma_xi2 / (gs - 1.0)) / gs;
  return kInf;
}

}  // namespace

OrthonormalAsymptotic tl_opt_risk_orthonormal_asymptotic(const Regime& regime, double sigma_eps2,
                                                         double sigma_eta2, double sigma_xi2,
                                                         double b) {
  const double D = noise_limit_for(regime, sigma_eta2, sigma_xi2, b);
  if (std::isinf(D)) return {0.0, kInf};
  if (sigma_eps2 == 0.0) return {0.0, 0.0};
  if (D == 0.0) return {kInf, sigma_eps2};  // perfect source: pure transfer
  const double alpha = sigma_eps2 * regime.gamma_tgt / D;
  const double risk = sigma_eps2 * (1.0 + regime.gamma_tgt * mp_stieltjes(alpha, regime.gamma_tgt));
  return {alpha, risk};
}

double orthonormal_risk_asymptotic_at(double alpha, double gamma_tgt, double sigma_eps2,
                                      double noise_limit) {
  if (std::isinf(noise_limit)) return kInf;
  const double m = mp_stieltjes(alpha, gamma_tgt);
  const double m2 = mp_stieltjes_derivative(alpha, gamma_tgt);
  return sigma_eps2 + alpha * alpha * noise_limit * m2 +
         gamma_tgt * sigma_eps2 * (m - alpha * m2);
}

double ridge_risk_asymptotic_at(double alpha, double gamma_tgt, double sigma_eps2, double b) {
  return orthonormal_risk_asymptotic_at(alpha, gamma_tgt, sigma_eps2, b);
}

namespace {

struct Moments {
  double mean = 0.0;
  double std_error = 0.0;
};

Moments reduce(const std::vector<double>& values) {
  Moments m;
  const auto n = values.size();
  for (const double v : values) m.mean += v;
  m.mean /= static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (const double v : values) ss += sq(v - m.mean);
    m.std_error = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  }
  return m;
}

}  // namespace

EnsembleRisk tl_risk_seminonasymptotic(const TargetSpec& t, const SourceSpec& s,
                                       const TaskRelation& rel, double alpha_tl,
                                       int ensemble_draws, Rng& rng, TlRiskPath path) {
  if (ensemble_draws < 1) throw InvalidParameterError("tl_risk_seminonasymptotic: draws >= 1");
  if (!(alpha_tl > 0.0)) throw InvalidParameterError("tl_risk_seminonasymptotic: alpha must be > 0");
  if (path == TlRiskPath::auto_select)
    path = (rel.H.orthonormal() && t.sigma_x.is_identity()) ? TlRiskPath::orthonormal
                                                            : TlRiskPath::general_h;
  const Index d = t.d;
  const double n = static_cast<double>(t.n);
  const double na = n * alpha_tl;
  const double C = c_tl(d, s.n_tilde, rel.sigma_eta2, s.sigma_xi2, t.b);
  if (path == TlRiskPath::general_h && t.d > s.n_tilde - 2)
    throw ScopeError("tl_risk_seminonasymptotic: general-H path requires d <= n_tilde-2");
  if (std::isinf(C)) return {kInf, 0.0};

  Matrix h_inv_t;  // H^-T, to form X H^-1 = (H^-T X')'
  Matrix g_base;   // (H Sigma_x^-1 H')^-1
  if (path == TlRiskPath::general_h) {
    if (rel.H.kind == OperatorKind::identity && t.sigma_x.is_identity()) {
      // shortcut keeps the draw sequence identical to the orthonormal path
    } else {
      h_inv_t = rel.H.H.transpose().partialPivLu().inverse();
    }
    Matrix hsh;
    if (t.sigma_x.is_identity())
      hsh = rel.H.H * rel.H.H.transpose();
    else
      hsh = rel.H.H * t.sigma_x.matrix().llt().solve(rel.H.H.transpose());
    g_base = hsh.llt().solve(Matrix::Identity(d, d));
  }

  std::vector<double> draws;
  draws.reserve(static_cast<std::size_t>(ensemble_draws));
  for (int it = 0; it < ensemble_draws; ++it) {
    Matrix X = sample_gaussian_matrix(t.n, d, t.sigma_x, rng);
    double sum = 0.0;
    if (path == TlRiskPath::orthonormal) {
      // X_Psi has the same law as X; its eigenvalues carry the whole risk.
      const auto eig = sym_eigendecomposition(X.transpose() * X);
      for (Index k = 0; k < d; ++k) {
        const double lam = std::max(eig.eigenvalues(k), 0.0);
        sum += (sq(na) * C + t.sigma_eps2 * lam) / sq(lam + na);
      }
    } else {
      if (h_inv_t.size() > 0) X = X * h_inv_t.transpose();
      const auto eig = sym_eigendecomposition(X.transpose() * X);
      const Matrix g = eig.eigenvectors.transpose() * g_base * eig.eigenvectors;
      for (Index k = 0; k < d; ++k) {
        const double lam = std::max(eig.eigenvalues(k), 0.0);
        sum += g(k, k) * (sq(na) * C + t.sigma_eps2 * lam) / sq(lam + na);
      }
    }
    draws.push_back(t.sigma_eps2 + sum);
  }
  const auto m = reduce(draws);
  return {m.mean, m.std_error};
}

RidgeOptRisk ridge_opt_risk(const TargetSpec& t, int ensemble_draws, Rng& rng) {
  RidgeOptRisk out;
  const double gamma = static_cast<double>(t.d) / static_cast<double>(t.n);
  if (t.sigma_eps2 == 0.0) {
    out.nonasymptotic = {0.0, 0.0};
    out.asymptotic = 0.0;
    return out;
  }
  const double alpha_opt = static_cast<double>(t.d) * t.sigma_eps2 / (static_cast<double>(t.n) * t.b);
  const double na = static_cast<double>(t.n) * alpha_opt;
  std::vector<double> draws;
  draws.reserve(static_cast<std::size_t>(ensemble_draws));
  for (int it = 0; it < ensemble_draws; ++it) {
    const Matrix X = sample_gaussian_matrix(t.n, t.d, t.sigma_x, rng);
    const auto eig = sym_eigendecomposition(X.transpose() * X);
    double tr = 0.0;
    for (Index k = 0; k < t.d; ++k) tr += 1.0 / (std::max(eig.eigenvalues(k), 0.0) + na);
    draws.push_back(t.sigma_eps2 * (1.0 + tr));
  }
  const auto m = reduce(draws);
  out.nonasymptotic = {m.mean, m.std_error};
  out.asymptotic =
      t.sigma_eps2 * (1.0 + gamma * mp_stieltjes(gamma * t.sigma_eps2 / t.b, gamma));
  return out;
}

EnsembleRisk ridge_risk_semi_at(const TargetSpec& t, double alpha, int ensemble_draws, Rng& rng) {
  if (!(alpha > 0.0)) throw InvalidParameterError("ridge_risk_semi_at: alpha must be > 0");
  const double na = static_cast<double>(t.n) * alpha;
  const double bd = t.b / static_cast<double>(t.d);
  std::vector<double> draws;
  draws.reserve(static_cast<std::size_t>(ensemble_draws));
  for (int it = 0; it < ensemble_draws; ++it) {
    const Matrix X = sample_gaussian_matrix(t.n, t.d, t.sigma_x, rng);
    const auto eig = sym_eigendecomposition(X.transpose() * X);
    double sum = 0.0;
    for (Index k = 0; k < t.d; ++k) {
      const double lam = std::max(eig.eigenvalues(k), 0.0);
      sum += (t.sigma_eps2 * lam + bd * sq(na)) / sq(lam + na);
    }
    draws.push_back(t.sigma_eps2 + sum);
  }
  const auto m = reduce(draws);
  return {m.mean, m.std_error};
}

bool tl_beats_ridge(Index d, Index n_tilde, double sigma_eta2, double sigma_xi2, double b) {
  const auto gap = std::abs(static_cast<long long>(d) - static_cast<long long>(n_tilde));
  if (gap <= 1) return false;
  const double lhs =
      sigma_eta2 + static_cast<double>(d) * sigma_xi2 / (static_cast<double>(gap) - 1.0);
  return lhs < b;
}

namespace {

// g(c) = c * f(c) with f the fixed-point defect; strictly decreasing on (0, 1].
double fixed_point_gap(const Vector& w, double gamma, double alpha, double c) {
  const Index d = w.size();
  double tr = 0.0;
  for (Index i = 0; i < d; ++i) tr += c * w(i) / (c * w(i) + alpha);
  return 1.0 - c - (gamma / static_cast<double>(d)) * tr;
}

double fixed_point_defect(const Vector& w, double gamma, double alpha, double c) {
  const Index d = w.size();
  double tr = 0.0;
  for (Index i = 0; i < d; ++i) tr += w(i) / (c * w(i) + alpha);
  return 1.0 / c - 1.0 - (gamma / static_cast<double>(d)) * tr;
}

}  // namespace

SpectralSolution solve_fixed_point_eigs(const Vector& w_eigs, double gamma_tgt, double alpha) {
  if (!(alpha > 0.0) || !(gamma_tgt > 0.0))
    throw InvalidParameterError("solve_fixed_point: alpha and gamma must be > 0");
  if (w_eigs.size() == 0 || w_eigs.minCoeff() <= 0.0)
    throw NotSpdError("solve_fixed_point: W must be positive definite");
  const Index d = w_eigs.size();
  constexpr int kMaxIterations = 10000;
  int iterations = 0;
  double lo = 1e-12, hi = 1.0;
  // Bisection bracket, then Newton polish on the defect.
  for (int i = 0; i < 200 && iterations < kMaxIterations; ++i, ++iterations) {
    const double mid = 0.5 * (lo + hi);
    if (fixed_point_gap(w_eigs, gamma_tgt, alpha, mid) > 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-12 * hi) break;
  }
  double c = 0.5 * (lo + hi);
  for (int i = 0; i < 60 && iterations < kMaxIterations; ++i, ++iterations) {
    const double f = fixed_point_defect(w_eigs, gamma_tgt, alpha, c);
    double fp = -1.0 / (c * c);
    for (Index k = 0; k < d; ++k)
      fp += (gamma_tgt / static_cast<double>(d)) * sq(w_eigs(k) / (c * w_eigs(k) + alpha));
    const double step = f / fp;
    const double next = c - step;
    if (!(next > 0.0) || !(next <= 1.0)) break;
    c = next;
    if (std::abs(step) < 1e-16 * c) break;
  }
  SpectralSolution sol;
  sol.c = c;
  sol.iterations = iterations;
  sol.residual = std::abs(fixed_point_defect(w_eigs, gamma_tgt, alpha, c));
  if (!(sol.residual <= 1e-10) || !std::isfinite(sol.residual))
    throw FixedPointError("fixed point did not converge (residual " +
                              std::to_string(sol.residual) + " after " +
                              std::to_string(sol.iterations) + " iterations)",
                          sol.residual, sol.iterations);
  double frob = 0.0;  // (gamma/d) ||W (cW + alpha I)^-1||_F^2
  for (Index i = 0; i < d; ++i)
    frob += (gamma_tgt / static_cast<double>(d)) * sq(w_eigs(i) / (c * w_eigs(i) + alpha));
  sol.c_prime = frob / (1.0 / sq(c) - frob);
  return sol;
}

SpectralSolution solve_fixed_point(const Matrix& W, double gamma_tgt, double alpha) {
  const auto eig = sym_eigendecomposition(W);
  return solve_fixed_point_eigs(eig.eigenvalues, gamma_tgt, alpha);
}

GammaTlInf gamma_tl_inf(const OperatorMatrix& H, const Regime& regime, double b,
                        double sigma_eta2, double sigma_xi2, Index d) {
  const double gs = regime.gamma_src;
  const double dd = static_cast<double>(d);
  const Index n_tilde = static_cast<Index>(std::llround(dd / gs));
  GammaTlInf out;
  if (d >= n_tilde - 1 && d <= n_tilde + 1) {
    out.infinite = true;
    return out;
  }
  if (d <= n_tilde - 2) {
    out.value = ((sigma_eta2 + gs * sigma_xi2 / (1.0 - gs)) / dd) * Matrix::Identity(d, d);
    return out;
  }
  const Matrix hht = H.H * H.H.transpose();
  Matrix g = (b / (dd * gs)) * ((sq(gs - 1.0) / gs) * hht);
  g.diagonal().array() += (b / (dd * gs)) * ((gs - 1.0) / gs) *
                          (H.kappa_h - hht.diagonal().array() / dd);
  g.diagonal().array() += (sigma_eta2 + gs * sigma_xi2 / (gs - 1.0)) / (dd * gs);
  out.value = std::move(g);
  return out;
}

double tl_risk_general_asymptotic(const OperatorMatrix& H, const Covariance& sigma_x,
                                  const Regime& regime, double sigma_eps2, double alpha_tl,
                                  double b, double sigma_eta2, double sigma_xi2) {
  if (!(alpha_tl > 0.0))
    throw InvalidParameterError("tl_risk_general_asymptotic: alpha must be > 0");
  const Index d = H.dim();
  const double dd = static_cast<double>(d);
  const double gamma = regime.gamma_tgt;
  const auto gamma_term = gamma_tl_inf(H, regime, b, sigma_eta2, sigma_xi2, d);
  if (gamma_term.infinite) return kInf;

  // Orthonormal H with isotropic features gives W = I exactly; skip the
  // d^3 inversion and eigendecomposition on that path.
  const bool w_identity = H.orthonormal() && sigma_x.is_identity();
  Vector w_eigs;
  Matrix gamma_rot;
  if (w_identity) {
    w_eigs = Vector::Ones(d);
    gamma_rot = gamma_term.value;
  } else {
    Matrix h_inv = H.H.partialPivLu().inverse();
    Matrix w = h_inv.transpose() * sigma_x.materialize(d) * h_inv;
    w = 0.5 * (w + w.transpose());
    const auto eig = sym_eigendecomposition(w);
    w_eigs = eig.eigenvalues;
    gamma_rot = eig.eigenvectors.transpose() * gamma_term.value * eig.eigenvectors;
  }
  const auto sol = solve_fixed_point_eigs(w_eigs, regime.gamma_tgt, alpha_tl);
  const double s = sol.c_prime + 1.0;

  double t1 = 0.0;  // Tr[(1/d) W (cW + aI)^-1]
  for (Index i = 0; i < d; ++i) {
    const double wi = w_eigs(i);
    t1 += wi / (sol.c * wi + alpha_tl) / dd;
  }
  // Tr[(a^2/(g s2) Gamma - (a/d) I) R s W R] expanded so sigma_eps2 = 0 stays finite:
  // risk = s2 (1 + g t1) + s * a^2 * Tr[Gamma R W R] - s2 * s * g * (a/d) * Tr[R W R]
  double tr_gamma_rwr = 0.0, tr_rwr = 0.0;
  for (Index i = 0; i < d; ++i) {
    const double wi = w_eigs(i);
    const double rwr = wi / sq(sol.c * wi + alpha_tl);
    tr_gamma_rwr += gamma_rot(i, i) * rwr;
    tr_rwr += rwr;
  }
  return sigma_eps2 * (1.0 + gamma * t1) + s * sq(alpha_tl) * tr_gamma_rwr -
         sigma_eps2 * s * gamma * (alpha_tl / dd) * tr_rwr;
}

double pure_transfer_risk_asymptotic(const OperatorMatrix& H, const Covariance& sigma_x,
                                     const Regime& regime, double sigma_eps2, double b,
                                     double sigma_eta2, double sigma_xi2) {
  const Index d = H.dim();
  const auto gamma_term = gamma_tl_inf(H, regime, b, sigma_eta2, sigma_xi2, d);
  if (gamma_term.infinite) return kInf;
  if (H.orthonormal() && sigma_x.is_identity())
    return sigma_eps2 + gamma_term.value.trace();
  Matrix h_inv = H.H.partialPivLu().inverse();
  const Matrix w = h_inv.transpose() * sigma_x.materialize(d) * h_inv;
  return sigma_eps2 + (w * gamma_term.value).trace();
}

}  // namespace tlreg
