#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <thread>

#include "tlreg/harness.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitCompareFail = 3;

int default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void write_outputs(const std::vector<tlreg::RiskPoint>& points, const std::string& out_dir,
                   const std::string& csv_name, bool x_log) {
  std::filesystem::create_directories(out_dir);
  const auto csv_path = (std::filesystem::path(out_dir) / csv_name).string();
  tlreg::emit_csv(points, csv_path);
  const auto svgs = tlreg::emit_svg(points, out_dir, x_log);
  std::cout << "wrote " << csv_path << '\n';
  for (const auto& p : svgs) std::cout << "wrote " << p << '\n';
}

int run_compare(const std::string& csv_path, double sigmas) {
  const auto points = tlreg::parse_csv(csv_path);
  const auto report = tlreg::compare(points, sigmas);
  std::printf("compare: %d pass, %d fail, %d band, %d skipped (tolerance %.3g sigma)\n",
              report.passed, report.failed, report.band, report.skipped, sigmas);
  if (!report.worst.empty()) {
    std::printf("worst offenders:\n");
    for (const auto& v : report.worst) {
      std::printf("  %s d=%lld eta=%.4g  empirical=%.6g analytic=%.6g z=%.2f [%s]\n",
                  tlreg::to_string(v.point.estimator).c_str(),
                  static_cast<long long>(v.point.d), v.point.sigma_eta2,
                  v.point.empirical_mean, v.point.analytic, v.z,
                  v.verdict == tlreg::Verdict::fail ? "FAIL" : "pass");
    }
  }
  return report.ok() ? 0 : kExitCompareFail;
}

int run_fixed_point(const std::string& w_arg, double gamma, double alpha) {
  tlreg::Matrix w;
  if (w_arg == "identity")
    w = tlreg::Matrix::Identity(1, 1);
  else
    w = tlreg::load_matrix(w_arg);
  const auto sol = tlreg::solve_fixed_point(w, gamma, alpha);
  std::printf("c = %.17g\nc_prime = %.17g\nresidual = %.3g\niterations = %d\n", sol.c,
              sol.c_prime, sol.residual, sol.iterations);
  return 0;
}

int run_operator(const std::string& spec_text, const std::vector<long long>& dims, bool check) {
  std::vector<tlreg::Index> d_list(dims.begin(), dims.end());
  bool all_ok = true;
  for (const auto d : d_list) {
    const auto op = tlreg::build_operator(tlreg::parse_operator_spec(spec_text, d));
    std::printf("d=%lld kappa_H=%.15g min_singular_value=%.6g\n", static_cast<long long>(d),
                op.kappa_h, op.min_singular_value);
    if (std::abs(op.kappa_h - 1.0) > 1e-12) all_ok = false;
  }
  if (check) {
    const auto spec = tlreg::parse_operator_spec(spec_text, d_list.front());
    const auto report = tlreg::resolution_consistency_check(spec, d_list);
    std::printf("resolution consistency: %s\n", report.pass ? "PASS" : "FAIL");
    if (!report.pass || !all_ok) return kExitNumerical;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"transfer-learning linear regression laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir, csv_path, w_arg = "identity", op_spec = "identity";
  double sigmas = 3.0, gamma = 1.0, alpha = 1.0;
  int workers = default_workers();
  bool check = false;
  std::vector<long long> dims;

  auto* sweep = app.add_subcommand("sweep", "Monte-Carlo sweep with analytic overlay");
  sweep->add_option("--config", config_path, "experiment config file")->required();
  sweep->add_option("--out", out_dir, "output directory")->required();
  sweep->add_option("--workers", workers, "worker threads for trials");

  auto* analytic = app.add_subcommand("analytic", "formula-only curves, no sampling");
  analytic->add_option("--config", config_path, "experiment config file")->required();
  analytic->add_option("--out", out_dir, "output directory")->required();

  auto* comp = app.add_subcommand("compare", "verdicts for empirical vs analytic columns");
  comp->add_option("--csv", csv_path, "sweep csv file")->required();
  comp->add_option("--sigmas", sigmas, "tolerance in std-errors")->required();

  auto* fp = app.add_subcommand("fixed-point", "solve the spectral fixed point");
  fp->add_option("--w", w_arg, "matrix file or 'identity'");
  fp->add_option("--gamma", gamma, "target parameterization level")->required();
  fp->add_option("--alpha", alpha, "regularization")->required();

  auto* op = app.add_subcommand("operator", "build a task-relation operator");
  op->add_option("--spec", op_spec, "identity | dct | circ:w=<float>")->required();
  op->add_option("--d", dims, "dimension(s), comma separated")->required()->delimiter(',');
  op->add_flag("--check", check, "verify kappa_H across the dimensions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (sweep->parsed()) {
      const auto cfg = tlreg::ExperimentConfig::from_file(config_path);
      const auto points = tlreg::run_sweep(cfg, workers);
      write_outputs(points, out_dir, "sweep.csv", cfg.svg_x_log);
      return 0;
    }
    if (analytic->parsed()) {
      const auto cfg = tlreg::ExperimentConfig::from_file(config_path);
      const auto points = tlreg::run_analytic(cfg);
      write_outputs(points, out_dir, "analytic.csv", cfg.svg_x_log);
      return 0;
    }
    if (comp->parsed()) return run_compare(csv_path, sigmas);
    if (fp->parsed()) return run_fixed_point(w_arg, gamma, alpha);
    if (op->parsed()) return run_operator(op_spec, dims, check);
  } catch (const tlreg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const tlreg::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const tlreg::InvalidParameterError& e) {
    std::cerr << "invalid parameter: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}
