#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tlreg/model.hpp"

namespace tlreg {

enum class EstimatorId { mltn, tl, ridge, lmmse };

std::string to_string(EstimatorId id);
EstimatorId estimator_from_string(std::string_view text);

struct Estimate {
  Vector beta_hat;
  EstimatorId estimator_id;
  std::optional<double> alpha;  // regularization actually used, if any
  bool jitter_applied = false;
};

/// Minimum-l2-norm least squares X+ y (also fits theta_hat = Z+ v).
Estimate mltn_fit(const Dataset& ds);

/// beta = (X'X + n a H'H)^-1 (X'y + n a H' theta_hat), solved as a system.
Estimate tl_fit(const Dataset& ds, const Vector& theta_hat, const OperatorMatrix& H, double alpha_tl);

/// Same solution over a whole alpha path, one eigendecomposition per dataset.
std::vector<Vector> tl_fit_path(const Dataset& ds, const Vector& theta_hat, const OperatorMatrix& H,
                                std::span<const double> alphas);

Estimate ridge_fit(const Dataset& ds, double alpha_ridge);
std::vector<Vector> ridge_fit_path(const Dataset& ds, std::span<const double> alphas);

/// alpha -> infinity limit of the transfer objective: beta = H^-1 theta_hat.
Estimate pure_transfer_fit(const Vector& theta_hat, const OperatorMatrix& H);

/// E[beta theta_hat'] = B_d H' scaled by 1 (d <= n_tilde) or n_tilde/d.
Matrix beta_theta_hat_cross_covariance(const TaskRelation& rel, const TargetSpec& t,
                                       const SourceSpec& s);

/// E[theta_hat theta_hat'] with K = H B_d H'; throws InfiniteBandError for
/// d in {n_tilde-1, n_tilde, n_tilde+1}.
Matrix theta_hat_covariance(const TaskRelation& rel, const TargetSpec& t, const SourceSpec& s);

/// Data-independent second moments of the LMMSE joint vector (y, theta_hat);
/// build once per parameter cell, reuse across trials.
struct LmmseModel {
  Matrix cross;      // E[beta theta_hat']
  Matrix theta_cov;  // E[theta_hat theta_hat']
  double prior_var;  // b/d
  double sigma_eps2;
};

LmmseModel lmmse_model(const TaskRelation& rel, const TargetSpec& t, const SourceSpec& s);

/// Linear MMSE estimate of beta from (y, theta_hat) jointly.
Estimate lmmse_fit(const Dataset& ds, const Vector& theta_hat, const LmmseModel& model);
Estimate lmmse_fit(const Dataset& ds, const Vector& theta_hat, const TaskRelation& rel,
                   const TargetSpec& t, const SourceSpec& s);

/// Exact conditional MSE risk of the LMMSE estimate given the design matrix.
double lmmse_conditional_risk(const Matrix& design, const LmmseModel& model,
                              const Covariance& sigma_x);
double lmmse_conditional_risk(const Matrix& design, const TaskRelation& rel, const TargetSpec& t,
                              const SourceSpec& s);

struct TlAlpha {
  enum class Kind { value, infinite_band, pure_transfer } kind;
  double value = 0.0;  // meaningful for kind == value

  bool is_value() const { return kind == Kind::value; }
};

/// Optimal transfer regularization sigma_eps2 / (n C_TL).
/// Orthonormal H with isotropic Sigma_x: any d outside the source band.
/// General H (or anisotropic Sigma_x): d <= n_tilde-2 only, else ScopeError.
TlAlpha optimal_alpha_tl(const TargetSpec& t, const SourceSpec& s, const TaskRelation& rel);

/// d sigma_eps2 / (n b).
double optimal_alpha_ridge(const TargetSpec& t);

}  // namespace tlreg
