#include "tlreg/model.hpp"

#include <cmath>

namespace tlreg {

TargetSpec::TargetSpec(Index d_, Index n_, double sigma_eps2_, double b_, Covariance sigma_x_)
    : d(d_), n(n_), sigma_eps2(sigma_eps2_), b(b_), sigma_x(std::move(sigma_x_)) {
  if (d < 1 || n < 1) throw InvalidParameterError("TargetSpec: d and n must be >= 1");
  if (sigma_eps2 < 0.0) throw InvalidParameterError("TargetSpec: sigma_eps2 must be >= 0");
  if (!(b > 0.0)) throw InvalidParameterError("TargetSpec: b must be > 0");
  sigma_x.require_dim(d);
}

SourceSpec::SourceSpec(Index n_tilde_, double sigma_xi2_)
    : n_tilde(n_tilde_), sigma_xi2(sigma_xi2_) {
  if (n_tilde < 1) throw InvalidParameterError("SourceSpec: n_tilde must be >= 1");
  if (sigma_xi2 < 0.0) throw InvalidParameterError("SourceSpec: sigma_xi2 must be >= 0");
}

TaskRelation::TaskRelation(OperatorMatrix H_, double sigma_eta2_)
    : H(std::move(H_)), sigma_eta2(sigma_eta2_) {
  if (sigma_eta2 < 0.0) throw InvalidParameterError("TaskRelation: sigma_eta2 must be >= 0");
}

MisspecSpec::MisspecSpec(Index q_, double a_, double rho_, double omega_, bool alt_eta_scaling_)
    : q(q_), a(a_), rho(rho_), omega_beta_all(omega_), alt_eta_scaling(alt_eta_scaling_) {
  if (q < 1) throw InvalidParameterError("MisspecSpec: q must be >= 1");
  if (!(a > 0.0)) throw InvalidParameterError("MisspecSpec: a must be > 0");
  if (rho < 0.0) throw InvalidParameterError("MisspecSpec: rho must be >= 0");
  if (!(omega_beta_all > 0.0)) throw InvalidParameterError("MisspecSpec: omega must be > 0");
}

Vector sample_beta(const TargetSpec& t, Rng& rng) {
  const double sd = std::sqrt(t.b / static_cast<double>(t.d));
  Vector beta(t.d);
  for (Index i = 0; i < t.d; ++i) beta(i) = sd * rng.gaussian();
  return beta;
}

Vector sample_theta(const Vector& beta, const TaskRelation& rel, Rng& rng) {
  const Index d = rel.dim();
  if (beta.size() != d) throw ShapeError("sample_theta: beta length does not match operator");
  Vector theta = rel.H.H * beta;
  if (rel.sigma_eta2 > 0.0) {
    const double sd = std::sqrt(rel.sigma_eta2 / static_cast<double>(d));
    for (Index i = 0; i < d; ++i) theta(i) += sd * rng.gaussian();
  }
  return theta;
}

Dataset sample_source_dataset(const Vector& beta, const TaskRelation& rel, const SourceSpec& s,
                              Index d, Rng& rng) {
  if (rel.dim() != d) throw ShapeError("sample_source_dataset: operator dimension mismatch");
  Dataset ds;
  ds.truth_beta = sample_theta(beta, rel, rng);
  ds.design = sample_gaussian_matrix(s.n_tilde, d, Covariance::identity(), rng);
  ds.responses = ds.design * ds.truth_beta;
  if (s.sigma_xi2 > 0.0) {
    const double sd = std::sqrt(s.sigma_xi2);
    for (Index i = 0; i < s.n_tilde; ++i) ds.responses(i) += sd * rng.gaussian();
  }
  return ds;
}

Dataset sample_target_dataset(const Vector& beta, const TargetSpec& t, Rng& rng) {
  if (beta.size() != t.d) throw ShapeError("sample_target_dataset: beta length mismatch");
  Dataset ds;
  ds.truth_beta = beta;
  ds.design = sample_gaussian_matrix(t.n, t.d, t.sigma_x, rng);
  ds.responses = ds.design * beta;
  if (t.sigma_eps2 > 0.0) {
    const double sd = std::sqrt(t.sigma_eps2);
    for (Index i = 0; i < t.n; ++i) ds.responses(i) += sd * rng.gaussian();
  }
  return ds;
}

EffectiveSpecs misspec_effective(const TargetSpec& t, const TaskRelation& rel, const MisspecSpec& m) {
  if (!t.sigma_x.is_identity())
    throw ReductionError("misspecification reduction requires isotropic Sigma_x");
  const double ratio = 1.0 + static_cast<double>(t.d) / static_cast<double>(t.n);
  const double misspec_energy = m.omega_beta_all * std::pow(ratio, -m.a);
  const double b_ms = misspec_energy / static_cast<double>(m.q);
  const double b_eff = m.omega_beta_all - misspec_energy;
  if (!(b_eff > 0.0))
    throw ReductionError("misspecification leaves no prior energy for beta");
  // Ignored features act as extra response noise; the H_ms term inflates the
  // relation noise by b_ms * rho per coordinate (per-vector energy d*b_ms*rho).
  // alt_eta_scaling instead treats b_ms * rho as per-vector energy.
  const double eta_extra = m.alt_eta_scaling
                               ? b_ms * m.rho
                               : static_cast<double>(t.d) * b_ms * m.rho;
  TargetSpec t_eff(t.d, t.n, t.sigma_eps2 + misspec_energy, b_eff, t.sigma_x);
  TaskRelation rel_eff(rel.H, rel.sigma_eta2 + eta_extra);
  return {std::move(t_eff), std::move(rel_eff), misspec_energy};
}

double empirical_risk(const Vector& beta_hat, const Vector& beta, const TargetSpec& t) {
  if (beta_hat.size() != beta.size() || beta.size() != t.d)
    throw ShapeError("empirical_risk: coefficient length mismatch");
  return t.sigma_eps2 + t.sigma_x.quadratic_form(beta_hat - beta);
}

}  // namespace tlreg
