#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tlreg/analytic.hpp"
#include "tlreg/estimators.hpp"

namespace tlreg {

struct MisspecConfig {
  Index q = 1;
  double a = 1.0;
  double rho = 0.0;
  double omega = 1.0;
  bool alt_eta_scaling = false;
};

enum class AlphaMode { optimal, grid };
enum class AnalyticMode { asymptotic, semi };

/// One sweep: parameterization grid x relation-noise levels x estimators,
/// `trials` Monte-Carlo repetitions per cell with deterministic sub-streams.
struct ExperimentConfig {
  Index n = 0;
  Index n_tilde = 0;
  std::vector<Index> d_grid;  // empty means auto
  double sigma_eps2 = 0.0;
  std::vector<double> sigma_eta2_list;
  double sigma_xi2 = 0.0;
  double b = 1.0;
  std::string operator_spec = "identity";
  std::string sigma_x_spec = "identity";  // identity | diag:<csv> | file:<path>
  std::vector<EstimatorId> estimators;
  int trials = 1;
  int ensemble_draws = 500;
  std::uint64_t base_seed = 0;
  std::optional<MisspecConfig> misspec;
  AlphaMode alpha_mode = AlphaMode::optimal;
  double alpha_grid_lo = 1e-4;
  double alpha_grid_hi = 1e2;
  int alpha_grid_points = 40;
  AnalyticMode analytic_mode = AnalyticMode::asymptotic;
  bool svg_x_log = true;

  /// Line-oriented `key = value` file with an optional [misspec] section.
  /// Unknown keys are hard errors.
  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_string(std::string_view text);

  /// Explicit grid, or geometric spacing over [n/8, 8n] plus the six
  /// integers around both interpolation thresholds.
  std::vector<Index> resolved_d_grid() const;
  Covariance resolve_sigma_x(Index d) const;
  std::vector<double> alpha_grid() const;
  void validate() const;
};

struct RiskPoint {
  Index d = 0;
  double gamma_tgt = 0.0;
  double gamma_src = 0.0;
  EstimatorId estimator = EstimatorId::mltn;
  double sigma_eta2 = 0.0;
  double empirical_mean = 0.0;   // NaN on skipped band cells
  double empirical_stderr = 0.0; // NaN alongside empirical_mean
  double analytic = 0.0;         // +inf on bands, NaN when no formula applies
  std::optional<double> alpha_used;  // +inf marks the pure-transfer limit
};

/// Sub-stream id of one Monte-Carlo trial; pure function of the cell key.
std::uint64_t trial_stream_id(Index d, std::size_t eta_index, EstimatorId est, int trial);
/// Sub-stream id feeding semi-analytic ensemble draws for one cell.
std::uint64_t ensemble_stream_id(Index d, std::size_t eta_index, EstimatorId est);

/// Monte-Carlo sweep; trials within a cell run on `workers` threads but are
/// reduced in ascending trial order, so output does not depend on the
/// schedule. Band LMMSE cells are recorded, never fatal.
std::vector<RiskPoint> run_sweep(const ExperimentConfig& cfg, int workers = 1);

/// Formula-only curves (no sampling); empirical columns are NaN.
std::vector<RiskPoint> run_analytic(const ExperimentConfig& cfg);

enum class Verdict { pass, fail, band, skipped };

struct PointVerdict {
  RiskPoint point;
  Verdict verdict;
  double z;  // |empirical - analytic| / stderr (0 when exact, inf when stderr 0)
};

struct CompareReport {
  int passed = 0;
  int failed = 0;
  int band = 0;
  int skipped = 0;
  std::vector<PointVerdict> verdicts;      // one per comparable point, input order
  std::vector<PointVerdict> worst;         // top offenders by z
  bool ok() const { return failed == 0; }
};

/// PASS iff |empirical - analytic| <= tolerance_sigmas * stderr; band markers
/// (infinite analytic or NaN empirical) are counted separately, and points
/// without an analytic value are skipped.
CompareReport compare(const std::vector<RiskPoint>& points, double tolerance_sigmas);

/// CSV schema:
/// d,gamma_tgt,gamma_src,estimator,sigma_eta2,alpha_used,empirical_mean,empirical_stderr,analytic
/// +inf as `inf`, missing as empty, 17 significant digits, rows sorted by
/// (estimator, sigma_eta2, d).
void emit_csv(const std::vector<RiskPoint>& points, const std::string& path);
std::string csv_to_string(const std::vector<RiskPoint>& points);
std::vector<RiskPoint> parse_csv(const std::string& path);
std::vector<RiskPoint> parse_csv_string(std::string_view text);

/// One SVG per sigma_eta2 group under `out_dir`; returns the files written.
std::vector<std::string> emit_svg(const std::vector<RiskPoint>& points, const std::string& out_dir,
                                  bool x_log = true);

}  // namespace tlreg
