#pragma once

#include "invctl/bounds.hpp"
#include "invctl/config.hpp"
#include "invctl/controller.hpp"
#include "invctl/error.hpp"
#include "invctl/interpolant.hpp"
#include "invctl/level_sets.hpp"
#include "invctl/narx_data.hpp"
#include "invctl/noise.hpp"
#include "invctl/plants.hpp"
#include "invctl/properties.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace invctl {

namespace fs = std::filesystem;

// ---- offline pipeline -------------------------------------------------------------

inline std::vector<Trajectory> collect(const RunConfig& cfg) {
  std::vector<Trajectory> trajs;
  if (cfg.plant == "numerical") {
    trajs = collect_numerical_dataset(cfg.seed, cfg.pairing, cfg.inputs_per_state);
  } else {
    trajs = collect_pendulum_dataset(PendulumPlant{}, cfg.trajectory_length);
  }
  if (cfg.noisy) trajs = add_noise(trajs, cfg.noise());
  return trajs;
}

inline NarxDataset dataset_from(const RunConfig& cfg, const std::vector<Trajectory>& trajs) {
  return build_dataset(trajs, cfg.order, cfg.delay, cfg.noisy);
}

/// Per-column population standard deviation (1 where a column is constant).
inline std::vector<double> column_scales(const PointMatrix& X) {
  std::vector<double> out;
  for (Eigen::Index k = 0; k < X.cols(); ++k) {
    const double mean = X.col(k).mean();
    const double var = (X.col(k).array() - mean).square().mean();
    out.push_back(var > 0.0 ? std::sqrt(var) : 1.0);
  }
  return out;
}

inline std::vector<AnyKernel> kernel_grid(const RunConfig& cfg, const NarxDataset& data) {
  std::vector<double> base = cfg.kernel.length_scales;
  if (base.empty()) {
    const auto s = column_scales(data.xi());
    if (cfg.kernel.family == "ard_matern52") {
      base = s;
    } else {
      double acc = 0.0;
      for (double v : s) acc += v * v;
      base = {std::sqrt(acc / static_cast<double>(s.size()))};
    }
  }
  const auto signals = cfg.kernel.grid_signal_scales.empty() ? std::vector<double>{cfg.kernel.signal_scale}
                                                             : cfg.kernel.grid_signal_scales;
  const auto mults = cfg.kernel.grid_length_multipliers.empty() ? std::vector<double>{1.0}
                                                                : cfg.kernel.grid_length_multipliers;
  std::vector<AnyKernel> grid;
  for (double sf : signals)
    for (double m : mults) {
      std::vector<double> ls = base;
      for (double& l : ls) l *= m;
      grid.push_back(make_kernel(cfg.kernel.family, sf, ls));
    }
  std::stable_sort(grid.begin(), grid.end(), [](const AnyKernel& a, const AnyKernel& b) {
    return detail::canonical_key(a) < detail::canonical_key(b);
  });
  return grid;
}

// Exact fits must reproduce the targets well below the 1e-8 exactness tolerance to be selectable.
inline constexpr double kSelectionMaxResidual = 1e-9;

struct FittedModel {
  std::shared_ptr<const Interpolant<AnyKernel>> model;
  std::vector<AnyKernel> grid;
  std::vector<HyperparameterScore> scores;
  double norm_estimate = 0.0;  // sqrt(u^T alpha)
  double Gamma = 0.0;
};

inline double norm_estimate(const Interpolant<AnyKernel>& m) {
  return std::sqrt(std::max(0.0, m.targets().dot(m.alpha())));
}

inline FittedModel fit_model(const RunConfig& cfg, const NarxDataset& data, std::optional<double> lambda = std::nullopt) {
  FittedModel out;
  const double lam = lambda.value_or(cfg.active_lambda());
  out.grid = kernel_grid(cfg, data);
  FitOptions opt;
  if (lam == 0.0) opt.selection_max_residual = kSelectionMaxResidual;
  const AnyKernel chosen = out.grid.size() == 1 ? out.grid.front()
                                                : fit_hyperparameters(out.grid, data, lam, &out.scores, opt);
  out.model = std::make_shared<const Interpolant<AnyKernel>>(Interpolant<AnyKernel>::fit(chosen, data, lam));
  out.norm_estimate = norm_estimate(*out.model);
  out.Gamma = cfg.Gamma ? *cfg.Gamma : cfg.Gamma_safety * out.norm_estimate;
  return out;
}

/// Bound set as configured; `composed` drops a linear override.
inline BoundSet make_bounds(const RunConfig& cfg, const AnyKernel& kernel, double Gamma, bool composed = false) {
  const BoundSet::Constants c{cfg.L_f, cfg.L_c, Gamma, cfg.delay};
  BoundSet b = cfg.eta_mode == EtaMode::explicit_form ? BoundSet::explicit_form(c, cfg.eta_denominator)
                                                      : BoundSet::from_kernel(c, kernel);
  if (!composed && cfg.gamma_mode == GammaMode::linear) b.with_linear_gamma(cfg.gamma_slope);
  return b;
}

inline std::vector<LevelFamily> build_families(const RunConfig& cfg, const NarxDataset& data, const BoundSet& bounds) {
  std::vector<LevelFamily> out;
  for (double delta : cfg.deltas) out.push_back(build_level_family(data, bounds, delta, cfg.kappa_bar));
  return out;
}

// ---- closed loop --------------------------------------------------------------------

struct StepRow {
  int t = 0;
  StepCertificate cert;
  double u = 0.0;
  double y_next = 0.0;
  Descent descent = Descent::skipped;
};

struct RunLog {
  Vector zeta0;
  std::vector<StepRow> rows;
  std::vector<double> outputs;  // y(0..T), true plant outputs
  int infeasible_inputs = 0;
  bool aborted = false;
  std::string abort_reason;
};

/// Runs the loop from zeta0. With sigma_online > 0 the controller sees outputs corrupted by
/// N(0, sigma^2); the plant, the descent check and the outputs use the true state.
template <KernelFunction K>
RunLog simulate_run(const Plant& plant, const Controller<K>& ctl, const Vector& zeta0, int horizon,
                    double sigma_online = 0.0, std::uint64_t seed = 0, std::uint64_t run_index = 0) {
  RunLog log;
  log.zeta0 = zeta0;
  const int n = plant.order();
  const NoiseStream rng(seed, streams::online_noise);
  std::uint64_t tick = run_index << 32;
  auto measure = [&](double y) { return sigma_online > 0.0 ? y + sigma_online * rng.normal(tick++) : y; };
  Vector zeta = zeta0;
  Vector seen = zeta0;
  for (int k = 0; k < n; ++k) seen(k) = measure(zeta0(k));
  log.outputs.push_back(zeta0(n - 1));
  for (int t = 0; t < horizon; ++t) {
    const ControlAction act = ctl.control(seen);
    StepRow row;
    row.t = t;
    row.cert = act.certificate;
    row.u = act.u;
    if (!plant.input_feasible(zeta, act.u)) ++log.infeasible_inputs;
    try {
      row.y_next = plant.next_output(zeta, act.u);
    } catch (const InfeasibleInput& e) {
      row.y_next = std::numeric_limits<double>::quiet_NaN();
      log.rows.push_back(row);
      log.aborted = true;
      log.abort_reason = e.what();
      break;
    }
    const Vector next = shift_state(zeta, n, row.y_next, act.u);
    row.descent = ctl.assert_descent(act.certificate, next);
    log.rows.push_back(row);
    log.outputs.push_back(row.y_next);
    zeta = next;
    seen = shift_state(seen, n, measure(row.y_next), act.u);
  }
  return log;
}

/// (1/(T+1)) sqrt(sum_t y(t)^2) over y(0..T).
inline double rmse_displayed(const std::vector<double>& y) {
  long double acc = 0.0L;
  for (double v : y) acc += static_cast<long double>(v) * v;
  return std::sqrt(static_cast<double>(acc)) / static_cast<double>(y.size());
}

/// Conventional root mean square, sqrt(mean y^2), for comparison.
inline double rms(const std::vector<double>& y) {
  long double acc = 0.0L;
  for (double v : y) acc += static_cast<long double>(v) * v;
  return std::sqrt(static_cast<double>(acc / y.size()));
}

struct RunStats {
  double rmse = 0.0;
  double rms = 0.0;
  double max_abs_tail = 0.0;
  int tail_from = 0;
  int steps = 0;
  int certified = 0;
  int descent_checked = 0;
  int descent_violations = 0;
  int infeasible_inputs = 0;
  bool aborted = false;
  double final_y = 0.0;
};

inline RunStats summarize(const RunLog& log, int tail_from) {
  RunStats s;
  s.rmse = rmse_displayed(log.outputs);
  s.rms = rms(log.outputs);
  s.tail_from = tail_from;
  for (std::size_t t = static_cast<std::size_t>(std::max(0, tail_from)); t < log.outputs.size(); ++t)
    s.max_abs_tail = std::max(s.max_abs_tail, std::abs(log.outputs[t]));
  s.steps = static_cast<int>(log.rows.size());
  for (const auto& r : log.rows) {
    if (r.cert.certified) ++s.certified;
    if (r.descent != Descent::skipped) ++s.descent_checked;
    if (r.descent == Descent::violated) ++s.descent_violations;
  }
  s.infeasible_inputs = log.infeasible_inputs;
  s.aborted = log.aborted;
  s.final_y = log.outputs.back();
  return s;
}

inline const char* kRunLogHeader = "t,delta,kappa,i1,slack,certified,u,y_next,descent_ok";

inline void write_run_log(std::ostream& out, const RunLog& log) {
  out << kRunLogHeader << '\n';
  for (const auto& r : log.rows) {
    out << r.t << ',';
    if (r.cert.certified) out << format_double(r.cert.delta) << ',' << r.cert.kappa;
    else out << ',';
    out << ',' << r.cert.i1 << ',';
    if (r.cert.certified) out << format_double(r.cert.slack);
    out << ',' << (r.cert.certified ? 1 : 0) << ',' << format_double(r.u) << ',' << format_double(r.y_next) << ','
        << to_string(r.descent) << '\n';
  }
}

struct LoggedStep {
  bool certified = false;
  double y_next = 0.0;
  std::string descent;
};

inline std::vector<LoggedStep> read_run_log(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kRunLogHeader) throw DataError("unexpected run log header in " + path.string());
  std::vector<LoggedStep> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() != 9) throw DataError("malformed run log row in " + path.string());
    out.push_back({cells[5] == "1", parse_double(cells[7]), cells[8]});
  }
  return out;
}

// ---- artifact layout ------------------------------------------------------------------

struct Layout {
  fs::path root;
  fs::path trajectories() const { return root / "trajectories.csv"; }
  fs::path manifest() const { return root / "manifest.txt"; }
  fs::path model() const { return root / "model.txt"; }
  fs::path families_dir() const { return root / "families"; }
  fs::path family(std::size_t k) const { return families_dir() / ("family_" + std::to_string(k) + ".csv"); }
  fs::path build_report() const { return root / "build_report.txt"; }
  fs::path runs_dir() const { return root / "runs"; }
  fs::path run(std::size_t k) const { return runs_dir() / ("run_" + std::to_string(k) + ".csv"); }
  fs::path summary() const { return root / "summary.csv"; }
  fs::path verify() const { return root / "verify.txt"; }
  fs::path report() const { return root / "report.txt"; }
  fs::path timings(const std::string& stage) const { return root / ("timings_" + stage + ".txt"); }
};

namespace detail {

inline void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw ConfigError("cannot create output directory " + p.string());
}

inline std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot write " + p.string());
  return out;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline void write_timings(const fs::path& p, const std::vector<std::pair<std::string, double>>& rows) {
  auto out = open_out(p);
  out << "step,seconds\n";
  for (const auto& [k, v] : rows) out << k << ',' << v << '\n';
}

}  // namespace detail

/// Everything downstream of the trajectory file, rebuilt deterministically.
struct LoadedArtifacts {
  std::shared_ptr<const NarxDataset> data;
  std::shared_ptr<const Interpolant<AnyKernel>> model;
  std::vector<LevelFamily> families;
};

inline std::shared_ptr<const NarxDataset> load_dataset(const RunConfig& cfg) {
  const Layout lay{cfg.out};
  if (!fs::exists(lay.trajectories())) throw DataError("no trajectories in " + cfg.out.string() + "; run collect first");
  return std::make_shared<const NarxDataset>(dataset_from(cfg, read_trajectories(lay.trajectories())));
}

inline LoadedArtifacts load_artifacts(const RunConfig& cfg) {
  const Layout lay{cfg.out};
  LoadedArtifacts a;
  a.data = load_dataset(cfg);
  if (!fs::exists(lay.model())) throw DataError("no model in " + cfg.out.string() + "; run build first");
  a.model = std::make_shared<const Interpolant<AnyKernel>>(read_model(lay.model(), *a.data));
  for (std::size_t k = 0; k < cfg.deltas.size(); ++k) {
    a.families.push_back(read_family(lay.family(k), *a.data));
    if (a.families.back().delta() != cfg.deltas[k] || a.families.back().kappa_bar() != cfg.kappa_bar)
      throw DataError("family " + std::to_string(k) + " was built with a different delta menu or kappa_bar");
  }
  return a;
}

// ---- commands ---------------------------------------------------------------------------

inline int cmd_collect(const RunConfig& cfg, std::ostream& log = std::cout) {
  const detail::Stopwatch sw;
  const Layout lay{cfg.out};
  detail::ensure_dir(lay.root);
  const auto trajs = collect(cfg);
  write_trajectories(lay.trajectories(), trajs);
  auto m = detail::open_out(lay.manifest());
  m << "plant=" << cfg.plant << "\nseed=" << cfg.seed << "\ntrajectories=" << trajs.size()
    << "\nnoisy=" << (cfg.noisy ? "true" : "false") << "\nsigma_dataset=" << format_double(cfg.noise().sigma_dataset)
    << "\ncollection_stream=" << streams::collection << "\ndataset_noise_stream=" << streams::dataset_noise << '\n';
  if (cfg.plant == "numerical")
    m << "pairing=" << (cfg.pairing == GridPairing::tied ? "tied" : "independent")
      << "\ninputs_per_state=" << cfg.inputs_per_state << '\n';
  else
    m << "trajectory_length=" << cfg.trajectory_length << '\n';
  detail::write_timings(lay.timings("collect"), {{"collect", sw.seconds()}});
  log << "collected " << trajs.size() << " trajectories into " << lay.trajectories().string() << '\n';
  return 0;
}

inline int cmd_build(const RunConfig& cfg, std::ostream& log = std::cout) {
  const Layout lay{cfg.out};
  detail::ensure_dir(lay.families_dir());
  std::vector<std::pair<std::string, double>> times;
  detail::Stopwatch sw;
  const auto data = load_dataset(cfg);
  times.emplace_back("dataset", sw.seconds());
  auto report = detail::open_out(lay.build_report());
  report << "plant=" << cfg.plant << "\nN=" << data->size() << "\norder=" << data->order() << "\ndelay=" << data->delay()
         << '\n';
  if (data->empty()) {
    log << "warning: empty dataset, writing empty families\n";
    report << "warning=empty dataset\n";
    for (std::size_t k = 0; k < cfg.deltas.size(); ++k) {
      auto out = detail::open_out(lay.family(k));
      out << "# delta=" << format_double(cfg.deltas[k]) << " kappa_bar=" << cfg.kappa_bar << "\nj,i,r_i,gamma_inv_r_i\n";
    }
    return 0;
  }
  sw = {};
  const FittedModel fm = fit_model(cfg, *data);
  times.emplace_back("fit", sw.seconds());
  write_model(lay.model(), *fm.model);
  const auto& kern = fm.model->kernel();
  report << "kernel=" << kern.family_name() << "\nsignal_scale=" << format_double(kern.signal_scale()) << "\nlength_scales=";
  const auto ls = kern.length_scales();
  for (std::size_t i = 0; i < ls.size(); ++i) report << (i ? ";" : "") << format_double(ls[i]);
  report << "\nlambda=" << format_double(fm.model->lambda()) << "\njitter=" << format_double(fm.model->jitter())
         << "\nrefinement_steps=" << fm.model->diagnostics().refinement_steps
         << "\nsolve_residual=" << format_double(fm.model->diagnostics().residual)
         << "\nnorm_estimate=" << format_double(fm.norm_estimate) << "\nGamma=" << format_double(fm.Gamma) << '\n';
  for (const auto& s : fm.scores) {
    const auto cand_ls = fm.grid[s.candidate].length_scales();
    report << "candidate=" << s.candidate << " signal_scale=" << format_double(fm.grid[s.candidate].signal_scale())
           << " first_length_scale=" << format_double(cand_ls.front()) << " loo=" << format_double(s.score) << '\n';
  }

  const BoundSet bounds = make_bounds(cfg, kern, fm.Gamma);
  sw = {};
  const auto families = build_families(cfg, *data, bounds);
  times.emplace_back("families", sw.seconds());
  bool all_subset = true;
  for (std::size_t k = 0; k < families.size(); ++k) {
    const auto& f = families[k];
    write_family(lay.family(k), f);
    const bool subset = check_A0_subset_A1(f);
    all_subset = all_subset && subset;
    report << "family=" << k << " delta=" << format_double(f.delta()) << " level_sizes=";
    int shown = 0;
    for (int j = 0; j <= f.kappa_bar() && shown < 8; ++j, ++shown) report << (j ? ";" : "") << f.level(j).size();
    report << " deepest=" << f.level(f.kappa_bar()).size() << " truncated_at="
           << (f.truncated_at() ? std::to_string(*f.truncated_at()) : "none")
           << " A0_subset_A1=" << (subset ? "verified" : "unverified") << '\n';
  }
  detail::write_timings(lay.timings("build"), times);
  log << "built model (N=" << data->size() << ", kernel " << kern.family_name() << ", residual "
      << format_double(fm.model->diagnostics().residual) << ") and " << families.size() << " families; A0 in A1 "
      << (all_subset ? "verified for every delta" : "unverified for some delta (see build_report.txt)") << '\n';
  return 0;
}

struct SimulationResult {
  std::vector<RunLog> logs;
  std::vector<RunStats> stats;
};

template <KernelFunction K>
SimulationResult simulate_all(const RunConfig& cfg, const Plant& plant, const Controller<K>& ctl) {
  SimulationResult res;
  const double sigma = cfg.noise().sigma_online;
  for (std::size_t k = 0; k < cfg.initial_states.size(); ++k) {
    res.logs.push_back(simulate_run(plant, ctl, cfg.initial_states[k], cfg.horizon, sigma, cfg.seed, k));
    res.stats.push_back(summarize(res.logs.back(), cfg.steady_state_from));
  }
  return res;
}

inline const char* kSummaryHeader =
    "run,initial_state,rmse,rms,max_abs_y_tail,tail_from,steps,certified_steps,descent_checked,descent_violations,"
    "infeasible_inputs,aborted,final_y";

inline int cmd_simulate(const RunConfig& cfg, std::ostream& log = std::cout) {
  const Layout lay{cfg.out};
  detail::Stopwatch sw;
  const auto art = load_artifacts(cfg);
  const double load_s = sw.seconds();
  const Controller<AnyKernel> ctl(art.data, art.model, art.families);
  const auto plant = make_plant(cfg.plant);
  sw = {};
  const auto res = simulate_all(cfg, *plant, ctl);
  const double sim_s = sw.seconds();
  detail::ensure_dir(lay.runs_dir());
  auto summary = detail::open_out(lay.summary());
  summary << kSummaryHeader << '\n';
  for (std::size_t k = 0; k < res.logs.size(); ++k) {
    auto out = detail::open_out(lay.run(k));
    write_run_log(out, res.logs[k]);
    const auto& s = res.stats[k];
    summary << k << ',' << detail::vec_text(res.logs[k].zeta0) << ',' << format_double(s.rmse) << ','
            << format_double(s.rms) << ',' << format_double(s.max_abs_tail) << ',' << s.tail_from << ',' << s.steps << ','
            << s.certified << ',' << s.descent_checked << ',' << s.descent_violations << ',' << s.infeasible_inputs << ','
            << (s.aborted ? 1 : 0) << ',' << format_double(s.final_y) << '\n';
    log << "run " << k << " from [" << detail::vec_text(res.logs[k].zeta0) << "]: rmse=" << format_double(s.rmse)
        << " max|y| (t>=" << s.tail_from << ")=" << format_double(s.max_abs_tail) << " certified=" << s.certified << '/'
        << s.steps << " descent violations=" << s.descent_violations << (s.aborted ? " ABORTED" : "") << '\n';
  }
  detail::write_timings(lay.timings("simulate"), {{"load", load_s}, {"simulate", sim_s}});
  return 0;
}

/// Box enclosing the recorded states, for sampling nearby states.
inline std::pair<Vector, Vector> state_box(const RunConfig& cfg, const NarxDataset& data) {
  if (cfg.plant == "numerical") return {(Vector(3) << -1, -1, 0).finished(), (Vector(3) << 1, 1, 1).finished()};
  const auto& Z = data.zeta();
  return {Z.colwise().minCoeff().transpose(), Z.colwise().maxCoeff().transpose()};
}

/// Property suites over the built artifacts. Returns every result; the caller decides on failure.
inline std::vector<PropertyResult> run_verification(const RunConfig& cfg, const LoadedArtifacts& art) {
  std::vector<PropertyResult> out;
  const auto plant = make_plant(cfg.plant);
  const auto& data = *art.data;
  const auto& model = *art.model;

  // Exactness with lambda = 0 on the clean outputs. A regularized deployment is checked through
  // the model a noise-free build would select.
  if (model.lambda() == 0.0 && !cfg.noisy) {
    out.push_back(check_interpolation_exactness(model));
  } else {
    RunConfig clean = cfg;
    clean.noisy = false;
    const auto clean_data = dataset_from(clean, read_trajectories(Layout{cfg.out}.trajectories()));
    out.push_back(check_interpolation_exactness(*fit_model(clean, clean_data, 0.0).model));
  }

  const double Gamma = cfg.Gamma ? *cfg.Gamma : cfg.Gamma_safety * norm_estimate(model);
  const BoundSet deployed = make_bounds(cfg, model.kernel(), Gamma);
  const BoundSet composed = make_bounds(cfg, model.kernel(), Gamma, true);

  if (cfg.plant == "numerical" && model.lambda() == 0.0)
    out.push_back(check_oracle_agreement(model, composed, *plant, cfg.verify_grid));

  if (!cfg.noisy) {
    const auto [lo, hi] = state_box(cfg, data);
    for (auto& r : check_bound_validity(*plant, model, data, composed, cfg.verify_samples, cfg.seed, lo, hi))
      out.push_back(std::move(r));
  }

  out.push_back(check_gamma_inversion(deployed, "deployed"));
  if (deployed.gamma_mode() == GammaMode::linear) out.push_back(check_gamma_inversion(composed, "composed"));
  out.push_back(check_class_k(composed, "composed"));

  for (const auto& f : art.families) {
    out.push_back(check_level_soundness(data, deployed, f, cfg.sphere_samples, cfg.seed));
    PropertyResult sub{"A0_subset_A1_delta_" + format_double(f.delta())};
    sub.informational = true;
    sub.checked = 1;
    sub.passed = check_A0_subset_A1(f);
    sub.detail = sub.passed ? "verified" : "unverified (sufficient test inconclusive)";
    out.push_back(sub);
  }
  out.push_back(check_inradius_underestimate(cfg.geometry_configs, cfg.seed));

  // Run logs, when simulate has been run.
  const Layout lay{cfg.out};
  if (fs::exists(lay.summary())) {
    PropertyResult descent{"certified_descent"};
    PropertyResult rmse{"rmse_recomputation"};
    // Descent is only guaranteed for noise-free runs with a composed gamma.
    descent.informational = cfg.noisy || cfg.gamma_mode == GammaMode::linear;
    std::ifstream in(lay.summary());
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto cells = detail::split_csv(line);
      if (cells.size() != 13) throw DataError("malformed summary row");
      const auto k = std::stoul(cells[0]);
      const auto zeta0 = detail::parse_list(cells[1], ';');
      const auto steps = read_run_log(lay.run(k));
      std::vector<double> y{zeta0.at(static_cast<std::size_t>(cfg.order - 1))};
      for (const auto& s : steps) {
        if (s.descent == "1" || s.descent == "0") ++descent.checked;
        if (s.descent == "0" && descent.failures++ == 0) descent.detail = "first violation in run " + cells[0];
        if (std::isfinite(s.y_next)) y.push_back(s.y_next);
      }
      const double diff = std::abs(rmse_displayed(y) - parse_double(cells[2]));
      ++rmse.checked;
      rmse.worst = std::max(rmse.worst, diff);
      if (diff > 1e-12 && rmse.failures++ == 0) rmse.detail = "run " + cells[0] + " differs";
    }
    descent.passed = descent.failures == 0;
    rmse.passed = rmse.failures == 0;
    out.push_back(descent);
    out.push_back(rmse);
  }
  return out;
}

inline int cmd_verify(const RunConfig& cfg, std::ostream& log = std::cout) {
  const detail::Stopwatch sw;
  const auto art = load_artifacts(cfg);
  const auto results = run_verification(cfg, art);
  auto out = detail::open_out(Layout{cfg.out}.verify());
  bool ok = true;
  for (const auto& r : results) {
    out << describe(r) << '\n';
    log << describe(r) << '\n';
    if (!r.informational && !r.passed) ok = false;
  }
  out << (ok ? "ALL PASS" : "FAILURES PRESENT") << '\n';
  detail::write_timings(Layout{cfg.out}.timings("verify"), {{"verify", sw.seconds()}});
  return ok ? 0 : 1;
}

inline int cmd_report(const RunConfig& cfg, std::ostream& log = std::cout) {
  const Layout lay{cfg.out};
  std::ostringstream rep;
  rep << "plant: " << cfg.plant << "  seed: " << cfg.seed << "  noisy: " << (cfg.noisy ? "yes" : "no") << '\n';
  auto section = [&](const char* title, const fs::path& p) {
    rep << "\n== " << title << " (" << p.filename().string() << ")\n";
    std::ifstream in(p);
    if (!in) {
      rep << "missing\n";
      return;
    }
    rep << in.rdbuf();
  };
  section("build", lay.build_report());
  section("runs", lay.summary());
  section("verification", lay.verify());
  auto out = detail::open_out(lay.report());
  out << rep.str();
  log << rep.str();
  return 0;
}

}  // namespace invctl
