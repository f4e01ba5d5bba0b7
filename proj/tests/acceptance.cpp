// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include "invctl/invctl.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace invctl;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int failures = 0;

void verdict(int id, const std::string& title, bool ok, const std::string& detail) {
  if (!ok) ++failures;
  std::printf("%s %2d %s | %s\n", ok ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
  std::fflush(stdout);
}

// Dataset, model, bounds and controller for one config, built in memory.
struct Pipeline {
  RunConfig cfg;
  std::shared_ptr<const NarxDataset> data;
  FittedModel fit;
  std::optional<BoundSet> bounds;
  std::vector<LevelFamily> families;
  std::unique_ptr<Controller<AnyKernel>> ctl;
  double fit_seconds = 0.0;
  double family_seconds = 0.0;
};

Pipeline make_pipeline(RunConfig cfg) {
  Pipeline p;
  p.cfg = cfg;
  p.data = std::make_shared<const NarxDataset>(dataset_from(cfg, collect(cfg)));
  auto t0 = std::chrono::steady_clock::now();
  p.fit = fit_model(cfg, *p.data);
  p.fit_seconds = seconds_since(t0);
  p.bounds = make_bounds(cfg, p.fit.model->kernel(), p.fit.Gamma);
  t0 = std::chrono::steady_clock::now();
  p.families = build_families(cfg, *p.data, *p.bounds);
  p.family_seconds = seconds_since(t0);
  p.ctl = std::make_unique<Controller<AnyKernel>>(p.data, p.fit.model, p.families);
  return p;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// collect -> build -> simulate into `dir`; returns the concatenated run logs.
std::string pipeline_logs(RunConfig cfg, const std::filesystem::path& dir) {
  std::filesystem::remove_all(dir);
  cfg.out = dir;
  std::ostringstream sink;
  cmd_collect(cfg, sink);
  cmd_build(cfg, sink);
  cmd_simulate(cfg, sink);
  std::string all;
  for (std::size_t k = 0; k < cfg.initial_states.size(); ++k) all += slurp(Layout{dir}.run(k));
  return all + slurp(Layout{dir}.summary());
}

}  // namespace

int main() {
  const auto t_all = std::chrono::steady_clock::now();
  const PendulumPlant pendulum;
  const NumericalPlant numerical;

  const RunConfig num_cfg = default_config("numerical");
  const RunConfig pend_cfg = default_config("pendulum");

  std::printf("building numerical pipeline...\n");
  const Pipeline num = make_pipeline(num_cfg);
  std::printf("  N=%zu fit %.2fs families %.2fs\n", num.data->size(), num.fit_seconds, num.family_seconds);
  std::printf("building pendulum pipeline...\n");
  const Pipeline pend = make_pipeline(pend_cfg);
  std::printf("  N=%zu kernel %s fit+select %.2fs families %.2fs Gamma=%s\n", pend.data->size(),
              pend.fit.model->kernel().family_name().c_str(), pend.fit_seconds, pend.family_seconds,
              fmt(pend.fit.Gamma).c_str());
  std::fflush(stdout);

  // 1. exactness with lambda = 0 on both datasets (the fit at the selected kernel is what is timed)
  {
    auto t0 = std::chrono::steady_clock::now();
    const auto a = check_interpolation_exactness(Interpolant<AnyKernel>::fit(num.fit.model->kernel(), *num.data, 0.0));
    const auto b = check_interpolation_exactness(Interpolant<AnyKernel>::fit(pend.fit.model->kernel(), *pend.data, 0.0));
    const double secs = seconds_since(t0);
    verdict(1, "interpolation exactness", a.passed && b.passed && secs < 5.0,
            "numerical max " + fmt(a.worst) + ", pendulum max " + fmt(b.worst) + ", " + fmt(secs) + " s");
  }

  const BoundSet num_bounds = *num.bounds;

  // 2. inverse-oracle agreement on 10^4 grid points
  {
    auto t0 = std::chrono::steady_clock::now();
    const auto r = check_oracle_agreement(*num.fit.model, num_bounds, numerical, 10);
    const double secs = seconds_since(t0);
    verdict(2, "inverse-oracle agreement", r.passed && r.checked == 10000 && secs < 30.0,
            std::to_string(r.checked) + " points, " + std::to_string(r.failures) + " violations, min slack " +
                fmt(r.worst) + ", " + fmt(secs) + " s");
  }

  // 3. per-record bounds, numerical plant
  {
    auto t0 = std::chrono::steady_clock::now();
    const auto rs = check_bound_validity(numerical, *num.fit.model, *num.data, num_bounds, 1000, num_cfg.seed,
                                         state_box(num_cfg, *num.data).first, state_box(num_cfg, *num.data).second);
    const double secs = seconds_since(t0);
    bool ok = secs < 10.0;
    std::string d;
    for (const auto& r : rs) {
      ok = ok && r.passed && r.checked == 1000;
      d += r.name + " fails=" + std::to_string(r.failures) + " min slack " + fmt(r.worst) + "; ";
    }
    verdict(3, "bound soundness (delay 1)", ok, d + fmt(secs) + " s");
  }

  // 4. per-record bounds, pendulum, composed delay-2 gamma
  {
    const BoundSet composed = make_bounds(pend_cfg, pend.fit.model->kernel(), pend.fit.Gamma, true);
    const auto [lo, hi] = state_box(pend_cfg, *pend.data);
    const auto rs = check_bound_validity(pendulum, *pend.fit.model, *pend.data, composed, 1000, pend_cfg.seed, lo, hi);
    bool ok = true;
    std::string d;
    for (const auto& r : rs) {
      ok = ok && r.passed && r.checked == 1000;
      d += r.name + " fails=" + std::to_string(r.failures) + " min slack " + fmt(r.worst) + "; ";
    }
    verdict(4, "bound soundness (delay 2)", ok, d);
  }

  // 5, 6. numerical closed loop
  {
    auto t0 = std::chrono::steady_clock::now();
    const auto res = simulate_all(num_cfg, numerical, *num.ctl);
    const double secs = seconds_since(t0);
    int certified = 0, checked = 0, violations = 0, aborted = 0;
    double tail = 0.0;
    for (const auto& s : res.stats) {
      certified += s.certified;
      checked += s.descent_checked;
      violations += s.descent_violations;
      aborted += s.aborted;
      tail = std::max(tail, s.max_abs_tail);
    }
    verdict(5, "certified descent", violations == 0 && checked > 0 && aborted == 0,
            std::to_string(checked) + " checked steps (" + std::to_string(certified) + " certified), " +
                std::to_string(violations) + " violations");
    verdict(6, "practical output regulation", tail <= 0.15 && aborted == 0 && secs < 10.0,
            "max |y(t)| for t>=4: " + fmt(tail) + ", " + fmt(secs) + " s");
  }

  // 7. pendulum, noise free
  {
    auto t0 = std::chrono::steady_clock::now();
    const auto res = simulate_all(pend_cfg, pendulum, *pend.ctl);
    const double secs = seconds_since(t0) + pend.fit_seconds + pend.family_seconds;
    double worst = 0.0, worst_rms = 0.0;
    int violations = 0;
    bool aborted = false;
    for (const auto& s : res.stats) {
      worst = std::max(worst, s.rmse);
      worst_rms = std::max(worst_rms, s.rms);
      violations += s.descent_violations;
      aborted = aborted || s.aborted;
    }
    verdict(7, "pendulum regulation", worst <= 0.05 && !aborted && secs < 60.0,
            "worst RMSE " + fmt(worst) + " (conventional RMS " + fmt(worst_rms) + "), descent violations " +
                std::to_string(violations) + ", " + fmt(secs) + " s incl. build");
  }

  // 8. pendulum, noisy, ten seeds
  {
    int good = 0;
    std::string d;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      RunConfig cfg = pend_cfg;
      cfg.noisy = true;
      cfg.seed = seed;
      const Pipeline p = make_pipeline(cfg);
      const auto res = simulate_all(cfg, pendulum, *p.ctl);
      double rmse = 0.0, tail = 0.0;
      bool aborted = false;
      for (const auto& s : res.stats) {
        rmse = std::max(rmse, s.rmse);
        tail = std::max(tail, s.max_abs_tail);
        aborted = aborted || s.aborted;
      }
      const bool ok = rmse <= 0.08 && tail <= 0.1 && !aborted;
      good += ok;
      d += "s" + std::to_string(seed) + ":" + fmt(rmse) + "/" + fmt(tail) + (ok ? "" : "!") + " ";
    }
    verdict(8, "noisy robustness", good >= 9, std::to_string(good) + "/10 seeds (rmse/tail) " + d);
  }

  // 9. geometry
  {
    const auto g = check_inradius_underestimate(100, 1);
    bool ok = g.passed && g.checked == 100;
    std::string d = "inradius configs " + std::to_string(g.checked) + " overestimates " + std::to_string(g.failures);
    std::size_t levels_checked = 0;
    for (const Pipeline* p : {&num, &pend}) {
      for (const auto& f : p->families) {
        const auto r = check_level_soundness(*p->data, *p->bounds, f, 200, 1);
        levels_checked += r.checked;
        if (!r.passed) {
          ok = false;
          d += "; " + p->cfg.plant + " " + r.name + ": " + r.detail;
        }
      }
    }
    verdict(9, "geometry soundness", ok, d + "; level points checked " + std::to_string(levels_checked));
  }

  // 10. gamma inversion
  {
    const auto a = check_gamma_inversion(num_bounds, "numerical_composed");
    const auto b = check_gamma_inversion(*pend.bounds, "pendulum_linear");
    const auto c = check_gamma_inversion(make_bounds(pend_cfg, pend.fit.model->kernel(), pend.fit.Gamma, true),
                                         "pendulum_composed");
    const bool lin = pend.bounds->gamma_mode() == GammaMode::linear && pend.bounds->gamma_slope() == 1.005;
    verdict(10, "gamma inversion", a.passed && b.passed && c.passed && lin && a.checked == 100 && b.checked == 100,
            "worst relative error " + fmt(std::max({a.worst, b.worst, c.worst})));
  }

  // 11. determinism
  {
    const auto root = std::filesystem::temp_directory_path() / "invctl_acceptance";
    bool ok = true;
    std::string d;
    RunConfig noisy = pend_cfg;
    noisy.noisy = true;
    for (const RunConfig& cfg : {num_cfg, noisy}) {
      const std::string tag = cfg.plant + (cfg.noisy ? "_noisy" : "");
      const auto a = pipeline_logs(cfg, root / (tag + "_a"));
      const auto b = pipeline_logs(cfg, root / (tag + "_b"));
      const bool same = !a.empty() && a == b;
      ok = ok && same;
      d += tag + (same ? " identical (" + std::to_string(a.size()) + " bytes); " : " DIFFER; ");
    }
    std::filesystem::remove_all(root);
    verdict(11, "determinism", ok, d);
  }

  std::printf("%d criteria failed, total %.1f s\n", failures, seconds_since(t_all));
  return failures == 0 ? 0 : 1;
}
