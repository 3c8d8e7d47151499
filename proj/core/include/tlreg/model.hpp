#pragma once

#include "tlreg/linalg.hpp"
#include "tlreg/operators.hpp"

namespace tlreg {

/// Target data law: rows of X are N(0, Sigma_x), y = X beta + eps,
/// beta ~ N(0, (b/d) I).
struct TargetSpec {
  Index d;
  Index n;
  double sigma_eps2;
  double b;
  Covariance sigma_x;

  TargetSpec(Index d_, Index n_, double sigma_eps2_, double b_,
             Covariance sigma_x_ = Covariance::identity());
};

struct SourceSpec {
  Index n_tilde;
  double sigma_xi2;

  SourceSpec(Index n_tilde_, double sigma_xi2_);
};

/// theta = H beta + eta, eta ~ N(0, (sigma_eta2/d) I).
/// sigma_eta2 is the per-vector energy; per-coordinate variance is sigma_eta2/d.
struct TaskRelation {
  OperatorMatrix H;
  double sigma_eta2;

  TaskRelation(OperatorMatrix H_, double sigma_eta2_);
  Index dim() const { return H.dim(); }
};

struct MisspecSpec {
  Index q;                // ignored features
  double a;               // polynomial decay exponent
  double rho;             // H_ms row Gram scale
  double omega_beta_all;  // total prior energy
  bool alt_eta_scaling = false;  // spread the b_ms*rho term over coordinates

  MisspecSpec(Index q_, double a_, double rho_, double omega_, bool alt_eta_scaling_ = false);
};

struct Dataset {
  Matrix design;
  Vector responses;
  Vector truth_beta;  // generating parameter vector (theta on the source side)
};

Vector sample_beta(const TargetSpec& t, Rng& rng);
Vector sample_theta(const Vector& beta, const TaskRelation& rel, Rng& rng);

/// Z has i.i.d. standard normal entries; v = Z theta + xi. theta is drawn
/// once per call via sample_theta and recorded in truth_beta.
Dataset sample_source_dataset(const Vector& beta, const TaskRelation& rel, const SourceSpec& s,
                              Index d, Rng& rng);

Dataset sample_target_dataset(const Vector& beta, const TargetSpec& t, Rng& rng);

struct EffectiveSpecs {
  TargetSpec target;       // sigma_eps2 and b replaced by effective values
  TaskRelation relation;   // sigma_eta2 replaced by effective value
  double misspec_energy;   // E ||beta_ms||^2 at this (d, n)
};

/// Map a misspecified setting to the equivalent well-specified one.
/// Requires isotropic Sigma_x; throws ReductionError otherwise.
EffectiveSpecs misspec_effective(const TargetSpec& t, const TaskRelation& rel, const MisspecSpec& m);

/// Exact conditional risk sigma_eps2 + (bh - beta)' Sigma_x (bh - beta);
/// no test-set sampling.
double empirical_risk(const Vector& beta_hat, const Vector& beta, const TargetSpec& t);

}  // namespace tlreg
