#pragma once

#include "tlreg/model.hpp"

namespace tlreg {

/// Parameterization levels d/n (target) and d/n_tilde (source).
struct Regime {
  double gamma_tgt;
  double gamma_src;

  static Regime of(Index d, Index n, Index n_tilde) {
    return {static_cast<double>(d) / static_cast<double>(n),
            static_cast<double>(d) / static_cast<double>(n_tilde)};
  }
};

/// Source-inaccuracy constant: per-coordinate variance of theta_hat - H beta
/// (times d) entering the transfer penalty. +inf on the source band.
double c_tl(Index d, Index n_tilde, double sigma_eta2, double sigma_xi2, double b);

/// Test error of the min-norm source solution; +inf on the source band.
double source_risk(Index d, Index n_tilde, double sigma_xi2, double theta_energy);

/// Expected (over the isotropic prior) test error of the min-norm target
/// solution; +inf on the target band.
double mltn_risk(Index d, Index n, double sigma_eps2, double b);

/// Marchenko-Pastur Stieltjes transform m(-alpha; gamma), evaluated with a
/// conjugate rearrangement that is safe when 4*gamma*alpha << (1-gamma+alpha)^2.
double mp_stieltjes(double alpha, double gamma);

/// m2(alpha) = -d/dalpha m(-alpha; gamma), the mean squared resolvent.
double mp_stieltjes_derivative(double alpha, double gamma);

struct OrthonormalAsymptotic {
  double alpha_opt;  // limiting optimal regularization (+inf when noiseless)
  double risk;       // +inf on the gamma_src = 1 band
};

/// Optimally tuned transfer risk in the orthonormal-H isotropic limit.
OrthonormalAsymptotic tl_opt_risk_orthonormal_asymptotic(const Regime& regime, double sigma_eps2,
                                                         double sigma_eta2, double sigma_xi2,
                                                         double b);

/// Asymptotic risk of the orthonormal-case estimator at an arbitrary alpha;
/// noise_limit is the large-d limit of d * c_tl(...). Ridge is the special
/// case noise_limit = b.
double orthonormal_risk_asymptotic_at(double alpha, double gamma_tgt, double sigma_eps2,
                                      double noise_limit);

double ridge_risk_asymptotic_at(double alpha, double gamma_tgt, double sigma_eps2, double b);

struct EnsembleRisk {
  double mean;
  double std_error;
};

enum class TlRiskPath { auto_select, orthonormal, general_h };

/// Finite-n risk from the eigenvalue-sum form, averaged over fresh draws of
/// the design matrix only (no noise sampling). The general-H path is valid
/// for d <= n_tilde-2 and uses the projected weights g_kk.
EnsembleRisk tl_risk_seminonasymptotic(const TargetSpec& t, const SourceSpec& s,
                                       const TaskRelation& rel, double alpha_tl,
                                       int ensemble_draws, Rng& rng,
                                       TlRiskPath path = TlRiskPath::auto_select);

struct RidgeOptRisk {
  EnsembleRisk nonasymptotic;
  double asymptotic;
};

/// Optimally tuned ridge risk, finite-n ensemble form and asymptotic limit.
RidgeOptRisk ridge_opt_risk(const TargetSpec& t, int ensemble_draws, Rng& rng);

/// Finite-n ridge risk at arbitrary alpha (eigenvalue-sum ensemble form).
EnsembleRisk ridge_risk_semi_at(const TargetSpec& t, double alpha, int ensemble_draws, Rng& rng);

/// Strict comparison predicate for optimally tuned transfer vs ridge;
/// always false on the source band.
bool tl_beats_ridge(Index d, Index n_tilde, double sigma_eta2, double sigma_xi2, double b);

struct SpectralSolution {
  double c;        // in (0, 1]
  double c_prime;  // companion ratio entering s = c' + 1
  double residual;
  int iterations;
};

/// Solve 1/c - 1 = (gamma/d) Tr[W (c W + alpha I)^-1] on (0, 1] by bisection
/// with a Newton polish; W must be symmetric positive definite.
SpectralSolution solve_fixed_point(const Matrix& W, double gamma_tgt, double alpha);

/// Same fixed point given the eigenvalues of W.
SpectralSolution solve_fixed_point_eigs(const Vector& w_eigs, double gamma_tgt, double alpha);

struct GammaTlInf {
  Matrix value;
  bool infinite = false;
};

/// Limiting covariance of theta_hat - H beta (three-branch matrix form).
GammaTlInf gamma_tl_inf(const OperatorMatrix& H, const Regime& regime, double b,
                        double sigma_eta2, double sigma_xi2, Index d);

/// Asymptotic transfer risk for general H and Sigma_x at arbitrary alpha > 0;
/// +inf on the source band. Propagates FixedPointError.
double tl_risk_general_asymptotic(const OperatorMatrix& H, const Covariance& sigma_x,
                                  const Regime& regime, double sigma_eps2, double alpha_tl,
                                  double b, double sigma_eta2, double sigma_xi2);

/// alpha -> infinity limit (beta = H^-1 theta_hat): sigma_eps2 + Tr[W Gamma].
double pure_transfer_risk_asymptotic(const OperatorMatrix& H, const Covariance& sigma_x,
                                     const Regime& regime, double sigma_eps2, double b,
                                     double sigma_eta2, double sigma_xi2);

}  // namespace tlreg
