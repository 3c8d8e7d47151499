#include "tlreg/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

namespace tlreg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(s.substr(start)));
      break;
    }
    out.push_back(trim(s.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& text, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for " + key + ": '" + text + "'");
  }
}

long long parse_int(const std::string& text, const std::string& key) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ConfigError("bad integer value for " + key + ": '" + text + "'");
  return v;
}

bool parse_bool(const std::string& text, const std::string& key) {
  if (text == "true" || text == "1" || text == "on") return true;
  if (text == "false" || text == "0" || text == "off") return false;
  throw ConfigError("bad boolean value for " + key + ": '" + text + "'");
}

}  // namespace

ExperimentConfig ExperimentConfig::from_string(std::string_view text) {
  ExperimentConfig cfg;
  std::set<std::string> required = {"n",          "n_tilde", "sigma_eps2", "sigma_eta2_list",
                                    "sigma_xi2",  "b",       "estimators", "trials",
                                    "base_seed"};
  std::string section;
  MisspecConfig ms;
  bool saw_misspec = false;
  std::size_t pos = 0;
  int lineno = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string line(text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos));
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line == "[misspec]") {
        section = "misspec";
        saw_misspec = true;
        continue;
      }
      throw ConfigError("unknown section at line " + std::to_string(lineno) + ": " + line);
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key = value at line " + std::to_string(lineno) + ": " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("empty key or value at line " + std::to_string(lineno));
    required.erase(key);

    if (section == "misspec") {
      if (key == "q") ms.q = parse_int(value, key);
      else if (key == "a") ms.a = parse_double(value, key);
      else if (key == "rho") ms.rho = parse_double(value, key);
      else if (key == "omega") ms.omega = parse_double(value, key);
      else if (key == "alt_eta_scaling") ms.alt_eta_scaling = parse_bool(value, key);
      else throw ConfigError("unknown [misspec] key: " + key);
      continue;
    }

    if (key == "n") cfg.n = parse_int(value, key);
    else if (key == "n_tilde") cfg.n_tilde = parse_int(value, key);
    else if (key == "d_grid") {
      if (value != "auto") {
        for (const auto& item : split(value, ','))
          cfg.d_grid.push_back(parse_int(item, key));
      }
    } else if (key == "sigma_eps2") cfg.sigma_eps2 = parse_double(value, key);
    else if (key == "sigma_eta2_list") {
      for (const auto& item : split(value, ','))
        cfg.sigma_eta2_list.push_back(parse_double(item, key));
    } else if (key == "sigma_xi2") cfg.sigma_xi2 = parse_double(value, key);
    else if (key == "b") cfg.b = parse_double(value, key);
    else if (key == "operator") cfg.operator_spec = value;
    else if (key == "sigma_x") cfg.sigma_x_spec = value;
    else if (key == "estimators") {
      for (const auto& item : split(value, ','))
        cfg.estimators.push_back(estimator_from_string(item));
    } else if (key == "trials") cfg.trials = static_cast<int>(parse_int(value, key));
    else if (key == "ensemble_draws") cfg.ensemble_draws = static_cast<int>(parse_int(value, key));
    else if (key == "base_seed") cfg.base_seed = static_cast<std::uint64_t>(parse_int(value, key));
    else if (key == "alpha_mode") {
      if (value == "optimal") cfg.alpha_mode = AlphaMode::optimal;
      else if (value.starts_with("grid:")) {
        const auto parts = split(value.substr(5), ',');
        if (parts.size() != 3) throw ConfigError("alpha_mode grid needs lo,hi,points");
        cfg.alpha_mode = AlphaMode::grid;
        cfg.alpha_grid_lo = parse_double(parts[0], key);
        cfg.alpha_grid_hi = parse_double(parts[1], key);
        cfg.alpha_grid_points = static_cast<int>(parse_int(parts[2], key));
      } else throw ConfigError("alpha_mode must be 'optimal' or 'grid:<lo>,<hi>,<points>'");
    } else if (key == "analytic_mode") {
      if (value == "asymptotic") cfg.analytic_mode = AnalyticMode::asymptotic;
      else if (value == "semi") cfg.analytic_mode = AnalyticMode::semi;
      else throw ConfigError("analytic_mode must be 'asymptotic' or 'semi'");
    } else if (key == "svg_x_scale") {
      if (value == "log") cfg.svg_x_log = true;
      else if (value == "linear") cfg.svg_x_log = false;
      else throw ConfigError("svg_x_scale must be 'log' or 'linear'");
    } else {
      throw ConfigError("unknown config key: " + key);
    }
  }
  if (!required.empty())
    throw ConfigError("missing required config key: " + *required.begin());
  if (saw_misspec) cfg.misspec = ms;
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

void ExperimentConfig::validate() const {
  if (n < 1 || n_tilde < 1) throw ConfigError("n and n_tilde must be >= 1");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (ensemble_draws < 1) throw ConfigError("ensemble_draws must be >= 1");
  if (sigma_eps2 < 0 || sigma_xi2 < 0) throw ConfigError("noise variances must be >= 0");
  for (const double v : sigma_eta2_list)
    if (v < 0) throw ConfigError("sigma_eta2 values must be >= 0");
  if (sigma_eta2_list.empty()) throw ConfigError("sigma_eta2_list must be nonempty");
  if (!(b > 0)) throw ConfigError("b must be > 0");
  if (estimators.empty()) throw ConfigError("estimators list must be nonempty");
  for (const Index d : d_grid)
    if (d < 1) throw ConfigError("d_grid entries must be >= 1");
  if (alpha_mode == AlphaMode::grid) {
    if (!(alpha_grid_lo > 0) || !(alpha_grid_hi > alpha_grid_lo) || alpha_grid_points < 2)
      throw ConfigError("alpha grid needs 0 < lo < hi and points >= 2");
  }
  if (misspec) {
    if (misspec->q < 1) throw ConfigError("misspec q must be >= 1");
    if (!(misspec->a > 0)) throw ConfigError("misspec a must be > 0");
    if (misspec->rho < 0) throw ConfigError("misspec rho must be >= 0");
    if (!(misspec->omega > 0)) throw ConfigError("misspec omega must be > 0");
  }
  parse_operator_spec(operator_spec, 1);  // syntax check
}

std::vector<Index> ExperimentConfig::resolved_d_grid() const {
  std::set<Index> grid;
  if (!d_grid.empty()) {
    grid.insert(d_grid.begin(), d_grid.end());
  } else {
    const double lo = std::max<double>(2.0, static_cast<double>(n) / 8.0);
    const double hi = 8.0 * static_cast<double>(n);
    constexpr int kPoints = 12;
    for (int i = 0; i < kPoints; ++i) {
      const double t = static_cast<double>(i) / (kPoints - 1);
      grid.insert(static_cast<Index>(std::llround(lo * std::pow(hi / lo, t))));
    }
    for (const Index v : {n - 1, n, n + 1, n_tilde - 1, n_tilde, n_tilde + 1})
      if (v >= 1) grid.insert(v);
  }
  return {grid.begin(), grid.end()};
}

Covariance ExperimentConfig::resolve_sigma_x(Index d) const {
  if (sigma_x_spec == "identity") return Covariance::identity();
  if (sigma_x_spec.starts_with("diag:")) {
    const auto items = split(sigma_x_spec.substr(5), ',');
    Vector diag(static_cast<Index>(items.size()));
    for (std::size_t i = 0; i < items.size(); ++i)
      diag(static_cast<Index>(i)) = parse_double(items[i], "sigma_x");
    if (diag.size() != d)
      throw ConfigError("sigma_x diag length " + std::to_string(diag.size()) +
                        " does not match d = " + std::to_string(d));
    return Covariance::diagonal(diag);
  }
  if (sigma_x_spec.starts_with("file:")) {
    const Matrix m = load_matrix(sigma_x_spec.substr(5));
    if (m.rows() != d)
      throw ConfigError("sigma_x file is " + std::to_string(m.rows()) + "x" +
                        std::to_string(m.cols()) + " but d = " + std::to_string(d));
    return Covariance::dense(m);
  }
  throw ConfigError("sigma_x must be identity, diag:<csv> or file:<path>");
}

std::vector<double> ExperimentConfig::alpha_grid() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(alpha_grid_points));
  for (int i = 0; i < alpha_grid_points; ++i) {
    const double t = static_cast<double>(i) / (alpha_grid_points - 1);
    out.push_back(alpha_grid_lo * std::pow(alpha_grid_hi / alpha_grid_lo, t));
  }
  return out;
}

namespace {

constexpr std::uint64_t kTrialTag = 0x74726c5f7472696cULL;
constexpr std::uint64_t kEnsembleTag = 0x74726c5f656e7362ULL;

std::uint64_t cell_hash(std::uint64_t tag, Index d, std::size_t eta_index, EstimatorId est) {
  std::uint64_t h = hash_combine(tag, static_cast<std::uint64_t>(d));
  h = hash_combine(h, static_cast<std::uint64_t>(eta_index));
  h = hash_combine(h, static_cast<std::uint64_t>(est));
  return h;
}

}  // namespace

std::uint64_t trial_stream_id(Index d, std::size_t eta_index, EstimatorId est, int trial) {
  return hash_combine(cell_hash(kTrialTag, d, eta_index, est), static_cast<std::uint64_t>(trial));
}

std::uint64_t ensemble_stream_id(Index d, std::size_t eta_index, EstimatorId est) {
  return cell_hash(kEnsembleTag, d, eta_index, est);
}

namespace {

void run_trials_parallel(int trials, int workers, const std::function<void(int)>& body) {
  workers = std::max(1, std::min(workers, trials));
  if (workers == 1) {
    for (int t = 0; t < trials; ++t) body(t);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int t = w; t < trials; t += workers) body(t);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);
}

struct MeanStderr {
  double mean = kNaN;
  double std_error = kNaN;
};

MeanStderr reduce_in_order(const std::vector<double>& values) {
  MeanStderr out;
  const auto n = values.size();
  if (n == 0) return out;
  double sum = 0.0;
  for (const double v : values) sum += v;
  out.mean = sum / static_cast<double>(n);
  if (n == 1) {
    out.std_error = 0.0;
    return out;
  }
  double ss = 0.0;
  for (const double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std_error = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  return out;
}

bool in_source_band(Index d, Index n_tilde) {
  return d >= n_tilde - 1 && d <= n_tilde + 1;
}

// How the transfer estimator is tuned within one cell.
struct TlPolicy {
  enum class Kind { fixed_alpha, pure_transfer, min_norm, grid } kind = Kind::fixed_alpha;
  double alpha = 0.0;
};

TlPolicy resolve_tl_policy(const ExperimentConfig& cfg, const TargetSpec& t, const SourceSpec& s,
                           const TaskRelation& rel) {
  if (cfg.alpha_mode == AlphaMode::grid) return {TlPolicy::Kind::grid, 0.0};
  TlAlpha a;
  try {
    a = optimal_alpha_tl(t, s, rel);
  } catch (const ScopeError&) {
    // No closed-form optimum here; fall back to an empirical grid search.
    return {TlPolicy::Kind::grid, 0.0};
  }
  switch (a.kind) {
    case TlAlpha::Kind::value:
      if (!(a.value > 0.0)) return {TlPolicy::Kind::min_norm, 0.0};  // noiseless target
      return {TlPolicy::Kind::fixed_alpha, a.value};
    case TlAlpha::Kind::pure_transfer:
      return {TlPolicy::Kind::pure_transfer, 0.0};
    case TlAlpha::Kind::infinite_band: {
      // The expected risk is infinite for every alpha here; tune from the
      // nearest dimension outside the band so the empirical spike is visible.
      const Index edge = (t.d <= s.n_tilde) ? std::max<Index>(Index{1}, s.n_tilde - 2)
                                            : s.n_tilde + 2;
      const double c_edge = c_tl(edge, s.n_tilde, rel.sigma_eta2, s.sigma_xi2, t.b);
      const double alpha = t.sigma_eps2 / (static_cast<double>(t.n) * c_edge);
      if (!(alpha > 0.0) || !std::isfinite(alpha)) return {TlPolicy::Kind::pure_transfer, 0.0};
      return {TlPolicy::Kind::fixed_alpha, alpha};
    }
  }
  return {TlPolicy::Kind::grid, 0.0};
}

struct CellContext {
  const ExperimentConfig& cfg;
  Index d;
  std::size_t eta_index;
  const TargetSpec& target;     // effective specs when misspecified
  const SourceSpec& source;
  const TaskRelation& relation;
  const std::vector<double>& alphas;  // grid for grid-mode cells
};

// One Monte-Carlo trial; fills `risks` (and per-alpha `grid_risks` when on a grid).
void run_cell_trial(const CellContext& ctx, EstimatorId est, const TlPolicy& tl_policy,
                    const LmmseModel* lmmse, int trial, std::vector<double>& risks,
                    std::vector<double>& grid_risks) {
  Rng rng(ctx.cfg.base_seed, trial_stream_id(ctx.d, ctx.eta_index, est, trial));
  const Vector beta = sample_beta(ctx.target, rng);
  const Dataset src = sample_source_dataset(beta, ctx.relation, ctx.source, ctx.d, rng);
  const Vector theta_hat = mltn_fit(src).beta_hat;
  const Dataset tgt = sample_target_dataset(beta, ctx.target, rng);

  const auto n_alphas = ctx.alphas.size();
  switch (est) {
    case EstimatorId::mltn:
      risks[trial] = empirical_risk(mltn_fit(tgt).beta_hat, beta, ctx.target);
      return;
    case EstimatorId::lmmse:
      risks[trial] = empirical_risk(lmmse_fit(tgt, theta_hat, *lmmse).beta_hat, beta, ctx.target);
      return;
    case EstimatorId::ridge: {
      if (ctx.cfg.alpha_mode == AlphaMode::grid) {
        const auto path = ridge_fit_path(tgt, ctx.alphas);
        for (std::size_t j = 0; j < n_alphas; ++j)
          grid_risks[trial * n_alphas + j] = empirical_risk(path[j], beta, ctx.target);
        return;
      }
      const double alpha = optimal_alpha_ridge(ctx.target);
      const Vector bh = (alpha > 0.0) ? ridge_fit(tgt, alpha).beta_hat : mltn_fit(tgt).beta_hat;
      risks[trial] = empirical_risk(bh, beta, ctx.target);
      return;
    }
    case EstimatorId::tl: {
      switch (tl_policy.kind) {
        case TlPolicy::Kind::fixed_alpha:
          risks[trial] = empirical_risk(
              tl_fit(tgt, theta_hat, ctx.relation.H, tl_policy.alpha).beta_hat, beta, ctx.target);
          return;
        case TlPolicy::Kind::pure_transfer:
          risks[trial] = empirical_risk(pure_transfer_fit(theta_hat, ctx.relation.H).beta_hat,
                                        beta, ctx.target);
          return;
        case TlPolicy::Kind::min_norm:
          risks[trial] = empirical_risk(mltn_fit(tgt).beta_hat, beta, ctx.target);
          return;
        case TlPolicy::Kind::grid: {
          const auto path = tl_fit_path(tgt, theta_hat, ctx.relation.H, ctx.alphas);
          for (std::size_t j = 0; j < n_alphas; ++j)
            grid_risks[trial * n_alphas + j] = empirical_risk(path[j], beta, ctx.target);
          return;
        }
      }
      return;
    }
  }
}

double attach_analytic(const ExperimentConfig& cfg, const CellContext& ctx, EstimatorId est,
                       const Regime& regime, const std::optional<double>& alpha_used) {
  const TargetSpec& t = ctx.target;
  const SourceSpec& s = ctx.source;
  const TaskRelation& rel = ctx.relation;
  switch (est) {
    case EstimatorId::mltn:
      return mltn_risk(t.d, t.n, t.sigma_eps2, t.b);
    case EstimatorId::ridge: {
      if (!alpha_used || !(*alpha_used > 0.0))
        return mltn_risk(t.d, t.n, t.sigma_eps2, t.b);  // noiseless fallback path
      if (cfg.analytic_mode == AnalyticMode::semi) {
        Rng rng(cfg.base_seed, ensemble_stream_id(ctx.d, ctx.eta_index, est));
        return ridge_risk_semi_at(t, *alpha_used, cfg.ensemble_draws, rng).mean;
      }
      return ridge_risk_asymptotic_at(*alpha_used, regime.gamma_tgt, t.sigma_eps2, t.b);
    }
    case EstimatorId::tl: {
      if (in_source_band(t.d, s.n_tilde)) return kInf;
      if (alpha_used && std::isinf(*alpha_used))
        return pure_transfer_risk_asymptotic(rel.H, t.sigma_x, regime, t.sigma_eps2, t.b,
                                             rel.sigma_eta2, s.sigma_xi2);
      if (alpha_used && !(*alpha_used > 0.0))
        return mltn_risk(t.d, t.n, t.sigma_eps2, t.b);  // min-norm fallback path
      if (!alpha_used) return kNaN;
      if (cfg.analytic_mode == AnalyticMode::semi) {
        const bool orthonormal = rel.H.orthonormal() && t.sigma_x.is_identity();
        if (orthonormal || t.d <= s.n_tilde - 2) {
          Rng rng(cfg.base_seed, ensemble_stream_id(ctx.d, ctx.eta_index, est));
          return tl_risk_seminonasymptotic(t, s, rel, *alpha_used, cfg.ensemble_draws, rng).mean;
        }
        // general H beyond the underparameterized source scope: asymptotic only
      }
      return tl_risk_general_asymptotic(rel.H, t.sigma_x, regime, t.sigma_eps2, *alpha_used, t.b,
                                        rel.sigma_eta2, s.sigma_xi2);
    }
    case EstimatorId::lmmse: {
      if (in_source_band(t.d, s.n_tilde)) return kInf;
      if (cfg.analytic_mode != AnalyticMode::semi) return kNaN;  // no closed form in scope
      Rng rng(cfg.base_seed, ensemble_stream_id(ctx.d, ctx.eta_index, est));
      const auto model = lmmse_model(rel, t, s);
      std::vector<double> draws;
      draws.reserve(static_cast<std::size_t>(cfg.ensemble_draws));
      for (int i = 0; i < cfg.ensemble_draws; ++i) {
        const Matrix x = sample_gaussian_matrix(t.n, t.d, t.sigma_x, rng);
        draws.push_back(lmmse_conditional_risk(x, model, t.sigma_x));
      }
      return reduce_in_order(draws).mean;
    }
  }
  return kNaN;
}

void sort_points(std::vector<RiskPoint>& points) {
  std::stable_sort(points.begin(), points.end(), [](const RiskPoint& a, const RiskPoint& b) {
    const auto ea = to_string(a.estimator);
    const auto eb = to_string(b.estimator);
    if (ea != eb) return ea < eb;
    if (a.sigma_eta2 != b.sigma_eta2) return a.sigma_eta2 < b.sigma_eta2;
    return a.d < b.d;
  });
}

}  // namespace

std::vector<RiskPoint> run_sweep(const ExperimentConfig& cfg, int workers) {
  cfg.validate();
  if (workers < 1) throw ConfigError("workers must be >= 1");
  const auto d_values = cfg.resolved_d_grid();
  const SourceSpec source(cfg.n_tilde, cfg.sigma_xi2);
  const std::vector<double> grid = cfg.alpha_grid();
  const std::vector<double> no_grid;
  std::vector<RiskPoint> points;

  for (const Index d : d_values) {
    const auto op = build_operator(parse_operator_spec(cfg.operator_spec, d));
    const Covariance sigma_x = cfg.resolve_sigma_x(d);
    const TargetSpec base_target(d, cfg.n, cfg.sigma_eps2, cfg.b, sigma_x);
    const Regime regime = Regime::of(d, cfg.n, cfg.n_tilde);
    for (std::size_t eta_index = 0; eta_index < cfg.sigma_eta2_list.size(); ++eta_index) {
      const TaskRelation base_rel(op, cfg.sigma_eta2_list[eta_index]);
      TargetSpec target = base_target;
      TaskRelation relation = base_rel;
      if (cfg.misspec) {
        const MisspecSpec ms(cfg.misspec->q, cfg.misspec->a, cfg.misspec->rho, cfg.misspec->omega,
                             cfg.misspec->alt_eta_scaling);
        auto eff = misspec_effective(base_target, base_rel, ms);
        target = std::move(eff.target);
        relation = std::move(eff.relation);
      }
      for (const EstimatorId est : cfg.estimators) {
        RiskPoint point;
        point.d = d;
        point.gamma_tgt = regime.gamma_tgt;
        point.gamma_src = regime.gamma_src;
        point.estimator = est;
        point.sigma_eta2 = cfg.sigma_eta2_list[eta_index];

        const bool lmmse_band = est == EstimatorId::lmmse && in_source_band(d, cfg.n_tilde);
        if (lmmse_band) {
          point.empirical_mean = kNaN;
          point.empirical_stderr = kNaN;
          point.analytic = kInf;
          points.push_back(point);
          continue;
        }

        TlPolicy tl_policy;
        if (est == EstimatorId::tl) tl_policy = resolve_tl_policy(cfg, target, source, relation);
        const bool on_grid =
            (est == EstimatorId::tl && tl_policy.kind == TlPolicy::Kind::grid) ||
            (est == EstimatorId::ridge && cfg.alpha_mode == AlphaMode::grid);
        const auto& alphas = on_grid ? grid : no_grid;

        std::optional<LmmseModel> lmmse;
        if (est == EstimatorId::lmmse) lmmse = lmmse_model(relation, target, source);

        CellContext ctx{cfg, d, eta_index, target, source, relation, alphas};
        std::vector<double> risks(static_cast<std::size_t>(cfg.trials), kNaN);
        std::vector<double> grid_risks;
        if (on_grid)
          grid_risks.assign(static_cast<std::size_t>(cfg.trials) * alphas.size(), kNaN);
        run_trials_parallel(cfg.trials, workers, [&](int trial) {
          run_cell_trial(ctx, est, tl_policy, lmmse ? &*lmmse : nullptr, trial, risks, grid_risks);
        });

        if (on_grid) {
          // Per-alpha means in ascending trial order, then the best alpha.
          std::size_t best = 0;
          double best_mean = kInf;
          MeanStderr best_ms;
          std::vector<double> column(static_cast<std::size_t>(cfg.trials));
          for (std::size_t j = 0; j < alphas.size(); ++j) {
            for (int t = 0; t < cfg.trials; ++t)
              column[static_cast<std::size_t>(t)] = grid_risks[static_cast<std::size_t>(t) * alphas.size() + j];
            const auto ms = reduce_in_order(column);
            if (ms.mean < best_mean) {
              best_mean = ms.mean;
              best = j;
              best_ms = ms;
            }
          }
          point.empirical_mean = best_ms.mean;
          point.empirical_stderr = best_ms.std_error;
          point.alpha_used = alphas[best];
        } else {
          const auto ms = reduce_in_order(risks);
          point.empirical_mean = ms.mean;
          point.empirical_stderr = ms.std_error;
          if (est == EstimatorId::tl) {
            point.alpha_used = (tl_policy.kind == TlPolicy::Kind::pure_transfer)
                                   ? kInf
                                   : tl_policy.alpha;
          } else if (est == EstimatorId::ridge) {
            point.alpha_used = optimal_alpha_ridge(target);
          }
        }
        point.analytic = attach_analytic(cfg, ctx, est, regime, point.alpha_used);
        points.push_back(point);
      }
    }
  }
  sort_points(points);
  return points;
}

std::vector<RiskPoint> run_analytic(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto d_values = cfg.resolved_d_grid();
  const SourceSpec source(cfg.n_tilde, cfg.sigma_xi2);
  const std::vector<double> grid = cfg.alpha_grid();
  std::vector<RiskPoint> points;
  for (const Index d : d_values) {
    const auto op = build_operator(parse_operator_spec(cfg.operator_spec, d));
    const Covariance sigma_x = cfg.resolve_sigma_x(d);
    const TargetSpec base_target(d, cfg.n, cfg.sigma_eps2, cfg.b, sigma_x);
    const Regime regime = Regime::of(d, cfg.n, cfg.n_tilde);
    for (std::size_t eta_index = 0; eta_index < cfg.sigma_eta2_list.size(); ++eta_index) {
      const TaskRelation base_rel(op, cfg.sigma_eta2_list[eta_index]);
      TargetSpec target = base_target;
      TaskRelation relation = base_rel;
      if (cfg.misspec) {
        const MisspecSpec ms(cfg.misspec->q, cfg.misspec->a, cfg.misspec->rho, cfg.misspec->omega,
                             cfg.misspec->alt_eta_scaling);
        auto eff = misspec_effective(base_target, base_rel, ms);
        target = std::move(eff.target);
        relation = std::move(eff.relation);
      }
      for (const EstimatorId est : cfg.estimators) {
        RiskPoint point;
        point.d = d;
        point.gamma_tgt = regime.gamma_tgt;
        point.gamma_src = regime.gamma_src;
        point.estimator = est;
        point.sigma_eta2 = cfg.sigma_eta2_list[eta_index];
        point.empirical_mean = kNaN;
        point.empirical_stderr = kNaN;

        CellContext ctx{cfg, d, eta_index, target, source, relation, grid};
        if (est == EstimatorId::tl && !in_source_band(d, cfg.n_tilde)) {
          TlPolicy policy = resolve_tl_policy(cfg, target, source, relation);
          if (policy.kind == TlPolicy::Kind::fixed_alpha) {
            point.alpha_used = policy.alpha;
          } else if (policy.kind == TlPolicy::Kind::pure_transfer) {
            point.alpha_used = kInf;
          } else if (policy.kind == TlPolicy::Kind::min_norm) {
            point.alpha_used = 0.0;
          } else {
            // Choose alpha by minimizing the asymptotic formula on the grid.
            double best = kInf;
            for (const double a : grid) {
              const double r = tl_risk_general_asymptotic(relation.H, target.sigma_x, regime,
                                                          target.sigma_eps2, a, target.b,
                                                          relation.sigma_eta2, source.sigma_xi2);
              if (r < best) {
                best = r;
                point.alpha_used = a;
              }
            }
          }
        } else if (est == EstimatorId::ridge) {
          point.alpha_used = optimal_alpha_ridge(target);
        }
        point.analytic = attach_analytic(cfg, ctx, est, regime, point.alpha_used);
        points.push_back(point);
      }
    }
  }
  sort_points(points);
  return points;
}

CompareReport compare(const std::vector<RiskPoint>& points, double tolerance_sigmas) {
  if (!(tolerance_sigmas > 0)) throw InvalidParameterError("tolerance_sigmas must be > 0");
  CompareReport report;
  for (const auto& p : points) {
    PointVerdict v{p, Verdict::skipped, 0.0};
    const bool band_marker = std::isinf(p.analytic) || std::isnan(p.empirical_mean);
    if (band_marker) {
      v.verdict = Verdict::band;
      ++report.band;
    } else if (std::isnan(p.analytic)) {
      v.verdict = Verdict::skipped;
      ++report.skipped;
    } else {
      const double diff = std::abs(p.empirical_mean - p.analytic);
      v.z = (diff == 0.0) ? 0.0
                          : (p.empirical_stderr > 0.0 ? diff / p.empirical_stderr : kInf);
      if (diff <= tolerance_sigmas * p.empirical_stderr || diff == 0.0) {
        v.verdict = Verdict::pass;
        ++report.passed;
      } else {
        v.verdict = Verdict::fail;
        ++report.failed;
      }
    }
    report.verdicts.push_back(v);
  }
  std::vector<PointVerdict> scored;
  for (const auto& v : report.verdicts)
    if (v.verdict == Verdict::pass || v.verdict == Verdict::fail) scored.push_back(v);
  std::sort(scored.begin(), scored.end(),
            [](const PointVerdict& a, const PointVerdict& b) { return a.z > b.z; });
  if (scored.size() > 5) scored.resize(5);
  report.worst = std::move(scored);
  return report;
}

namespace {

std::string fmt_value(double v) {
  if (std::isnan(v)) return {};
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_value(const std::string& field) {
  if (field.empty()) return kNaN;
  if (field == "inf") return kInf;
  if (field == "-inf") return -kInf;
  return std::stod(field);
}

constexpr const char* kCsvHeader =
    "d,gamma_tgt,gamma_src,estimator,sigma_eta2,alpha_used,empirical_mean,empirical_stderr,"
    "analytic";

}  // namespace

std::string csv_to_string(const std::vector<RiskPoint>& points) {
  std::vector<RiskPoint> sorted = points;
  sort_points(sorted);
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& p : sorted) {
    out += std::to_string(p.d);
    out += ',';
    out += fmt_value(p.gamma_tgt);
    out += ',';
    out += fmt_value(p.gamma_src);
    out += ',';
    out += to_string(p.estimator);
    out += ',';
    out += fmt_value(p.sigma_eta2);
    out += ',';
    out += p.alpha_used ? fmt_value(*p.alpha_used) : std::string{};
    out += ',';
    out += fmt_value(p.empirical_mean);
    out += ',';
    out += fmt_value(p.empirical_stderr);
    out += ',';
    out += fmt_value(p.analytic);
    out += '\n';
  }
  return out;
}

void emit_csv(const std::vector<RiskPoint>& points, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write csv: " + path);
  out << csv_to_string(points);
  if (!out) throw IoError("csv write failed: " + path);
}

std::vector<RiskPoint> parse_csv_string(std::string_view text) {
  std::vector<RiskPoint> points;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    const auto eol = text.find('\n', pos);
    std::string line(text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos));
    pos = (eol == std::string_view::npos) ? text.size() : eol + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kCsvHeader) throw IoError("unexpected csv header: " + line);
      header_seen = true;
      continue;
    }
    const auto fields = split(line, ',');
    if (fields.size() != 9) throw IoError("expected 9 csv fields, got " + std::to_string(fields.size()));
    RiskPoint p;
    p.d = parse_int(fields[0], "d");
    p.gamma_tgt = parse_value(fields[1]);
    p.gamma_src = parse_value(fields[2]);
    p.estimator = estimator_from_string(fields[3]);
    p.sigma_eta2 = parse_value(fields[4]);
    if (!fields[5].empty()) p.alpha_used = parse_value(fields[5]);
    p.empirical_mean = parse_value(fields[6]);
    p.empirical_stderr = parse_value(fields[7]);
    p.analytic = parse_value(fields[8]);
    points.push_back(p);
  }
  if (!header_seen) throw IoError("csv is missing its header line");
  return points;
}

std::vector<RiskPoint> parse_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open csv: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv_string(ss.str());
}

}  // namespace tlreg
