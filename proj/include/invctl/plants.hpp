#pragma once

#include "invctl/error.hpp"
#include "invctl/narx_data.hpp"
#include "invctl/noise.hpp"
#include "invctl/types.hpp"

#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace invctl {

/// Simulatable NARX plant. The state is zeta(t); `next_output` returns y(t+1).
/// For delay 2 the input u(t) does not reach y(t+1) and is ignored there.
class Plant {
 public:
  virtual ~Plant() = default;
  virtual std::string name() const = 0;
  virtual int order() const = 0;
  virtual int delay() const = 0;
  virtual double next_output(const Vector& zeta, double u) const = 0;
  virtual bool input_feasible(const Vector& zeta, double u) const = 0;
  virtual std::optional<double> inverse(const Vector& xi) const { (void)xi; return std::nullopt; }

  /// Output `delay()` steps ahead when u is applied now: the quantity the inverse model targets.
  double target_after(const Vector& zeta, double u) const {
    const double y1 = next_output(zeta, u);
    if (delay() == 1) return y1;
    return next_output(shift_state(zeta, order(), y1, u), 0.0);
  }

  Vector successor(const Vector& zeta, double u) const {
    return shift_state(zeta, order(), next_output(zeta, u), u);
  }
};

// ---- numerical benchmark: n=2, delay 1 --------------------------------------
//   y(t+1) = -3 + sqrt(-|zeta|^2 - 16 ln u),   4 <= -|zeta|^2 - 16 ln u <= 16.

namespace numerical {

inline constexpr double radicand_lo = 4.0;
inline constexpr double radicand_hi = 16.0;
inline constexpr double feasibility_tol = 1e-12;
inline constexpr double L_f = 6.5;
inline constexpr double L_c = 0.22;

inline double radicand(const Vector& zeta, double u) { return -zeta.squaredNorm() - 16.0 * std::log(u); }

inline bool feasible(const Vector& zeta, double u) {
  if (!(u > 0.0)) return false;
  const double r = radicand(zeta, u);
  return r >= radicand_lo - feasibility_tol && r <= radicand_hi + feasibility_tol;
}

}  // namespace numerical

/// Checked step: throws when u leaves the feasibility band.
inline double numerical_step(const Vector& zeta, double u) {
  if (zeta.size() != 3) throw DimensionError("numerical plant state must have dimension 3");
  if (!numerical::feasible(zeta, u)) throw InfeasibleInput("input outside the feasibility band");
  return -3.0 + std::sqrt(numerical::radicand(zeta, u));
}

/// c([y+; zeta]) = exp(-((y+ + 3)^2 + |zeta|^2) / 16).
inline double numerical_inverse_oracle(const Vector& xi) {
  if (xi.size() != 4) throw DimensionError("numerical oracle argument must have dimension 4");
  const double a = xi(0) + 3.0;
  return std::exp(-(a * a + xi.tail(3).squaredNorm()) / 16.0);
}

class NumericalPlant final : public Plant {
 public:
  std::string name() const override { return "numerical"; }
  int order() const override { return 2; }
  int delay() const override { return 1; }
  // Unchecked beyond the radicand sign so closed loops can observe violations.
  double next_output(const Vector& zeta, double u) const override {
    if (zeta.size() != 3) throw DimensionError("numerical plant state must have dimension 3");
    if (!(u > 0.0)) throw InfeasibleInput("input must be positive");
    const double r = numerical::radicand(zeta, u);
    if (r < 0.0) throw InfeasibleInput("negative radicand");
    return -3.0 + std::sqrt(r);
  }
  bool input_feasible(const Vector& zeta, double u) const override { return numerical::feasible(zeta, u); }
  std::optional<double> inverse(const Vector& xi) const override { return numerical_inverse_oracle(xi); }
};

enum class GridPairing { independent, tied };

/// One-step experiments: y(-1), y(0) on a 7-point grid over [-1,1], u(-1) on a 4-point grid over [0,1],
/// ten feasible random u(0) each. Feasibility is by construction: draw the radicand R ~ U[4,16]
/// and set u = exp(-(R + |zeta|^2)/16).
/// `tied` sets y(-1)=y(0) (280 experiments), `independent` pairs them freely (1960).
inline std::vector<Trajectory> collect_numerical_dataset(std::uint64_t seed,
                                                         GridPairing pairing = GridPairing::independent,
                                                         int inputs_per_state = 10) {
  const NumericalPlant plant;
  const NoiseStream rng(seed, streams::collection);
  std::vector<Trajectory> out;
  std::uint64_t counter = 0;
  auto grid = [](int k, int count, double lo, double hi) { return lo + (hi - lo) * k / (count - 1); };
  for (int a = 0; a < 7; ++a) {
    for (int b = 0; b < 7; ++b) {
      if (pairing == GridPairing::tied && a != b) continue;
      for (int c = 0; c < 4; ++c) {
        Vector zeta(3);
        zeta << grid(a, 7, -1, 1), grid(b, 7, -1, 1), grid(c, 4, 0, 1);
        for (int k = 0; k < inputs_per_state; ++k) {
          const double R = rng.uniform(counter++, numerical::radicand_lo, numerical::radicand_hi);
          const double u = std::exp(-(R + zeta.squaredNorm()) / 16.0);
          Trajectory tr;
          tr.inputs = {zeta(2), u};
          tr.outputs = {zeta(0), zeta(1), plant.next_output(zeta, u)};
          out.push_back(std::move(tr));
        }
      }
    }
  }
  return out;
}

// ---- inverted pendulum: n=2, delay 2 ----------------------------------------
//   y(t+1) = (2-beta) y(t) + (beta-1) y(t-1) + (g Ts^2/l) sin y(t-1) + (Ts^2/(m l^2)) u(t-1),
//   beta = b Ts / (m l^2).

struct PendulumParams {
  double m = 1.0;
  double b = 0.4;
  double g = 9.8;
  double l = 0.3;
  double Ts = 0.001;

  double beta() const { return b * Ts / (m * l * l); }
  double A() const { return 2.0 - beta(); }
  double B() const { return -1.0 + beta(); }
  double G() const { return g * Ts * Ts / l; }
  double H() const { return Ts * Ts / (m * l * l); }
};

class PendulumPlant final : public Plant {
 public:
  explicit PendulumPlant(PendulumParams p = {}) : p_(p) {}

  const PendulumParams& params() const { return p_; }
  std::string name() const override { return "pendulum"; }
  int order() const override { return 2; }
  int delay() const override { return 2; }

  // zeta = [y(t-1); y(t); u(t-1)]
  double next_output(const Vector& zeta, double) const override {
    if (zeta.size() != 3) throw DimensionError("pendulum state must have dimension 3");
    return p_.A() * zeta(1) + p_.B() * zeta(0) + p_.G() * std::sin(zeta(0)) + p_.H() * zeta(2);
  }
  bool input_feasible(const Vector&, double u) const override { return std::isfinite(u); }

  // xi = [y(t+2); y(t-1); y(t); u(t-1)]
  std::optional<double> inverse(const Vector& xi) const override {
    if (xi.size() != 4) throw DimensionError("pendulum oracle argument must have dimension 4");
    const double beta = p_.beta();
    const double y2 = xi(0), ym = xi(1), y = xi(2), um = xi(3);
    return (y2 - (3.0 - 3.0 * beta + beta * beta) * y - p_.G() * std::sin(y) -
            p_.A() * (p_.B() * ym + p_.G() * std::sin(ym) + p_.H() * um)) / p_.H();
  }

  // Euclidean Lipschitz constants of the one-step map and the inverse over all states.
  double lipschitz_f() const {
    const double a = p_.A(), b = std::abs(p_.B()) + p_.G(), h = p_.H();
    return std::sqrt(a * a + b * b + h * h);
  }
  double lipschitz_c() const {
    const double beta = p_.beta();
    const double gy = 3.0 - 3.0 * beta + beta * beta + p_.G();
    const double gym = p_.A() * (std::abs(p_.B()) + p_.G());
    const double gum = p_.A() * p_.H();
    return std::sqrt(1.0 + gy * gy + gym * gym + gum * gum) / p_.H();
  }

 private:
  PendulumParams p_;
};

/// y(t+2) from zeta(t) when u(t) is applied.
inline double pendulum_step(const Vector& zeta, double u, const PendulumPlant& plant = PendulumPlant{}) {
  return plant.target_after(zeta, u);
}

struct PiGains {
  double Kp;
  double KI;
  double a;  // initial state [a; a; 0]
};

inline const std::array<PiGains, 6>& pendulum_pi_gains() {
  static const std::array<PiGains, 6> gains{{{20, 0.01, 0.22},
                                             {20, 0.01, -0.22},
                                             {15, 0.01, 0.18},
                                             {15, 0.01, -0.18},
                                             {12.5, 0.01, 0.16},
                                             {12.5, 0.01, -0.16}}};
  return gains;
}

/// Closed loop under u = -Kp y - KI I with I(0)=0, I(t) = I(t-1) + Ts y(t).
/// Row 0 is time -1, so each trajectory holds u(-1..T-2) and y(-1..T-1).
inline Trajectory pendulum_pi_trajectory(const PendulumPlant& plant, const PiGains& pi, int length = 200) {
  Trajectory tr;
  tr.outputs = {pi.a, pi.a};
  tr.inputs = {0.0};
  double integral = 0.0;
  for (int t = 0; t + 1 < length; ++t) {
    const double y = tr.outputs.back();
    if (t > 0) integral += plant.params().Ts * y;
    Vector zeta(3);
    zeta << tr.outputs[tr.outputs.size() - 2], y, tr.inputs.back();
    tr.inputs.push_back(-pi.Kp * y - pi.KI * integral);
    tr.outputs.push_back(plant.next_output(zeta, 0.0));
  }
  return tr;
}

inline std::vector<Trajectory> collect_pendulum_dataset(const PendulumPlant& plant = PendulumPlant{}, int length = 200) {
  std::vector<Trajectory> out;
  for (const auto& pi : pendulum_pi_gains()) out.push_back(pendulum_pi_trajectory(plant, pi, length));
  return out;
}

struct NoiseSpec {
  double sigma_dataset = 0.0;
  double sigma_online = 0.0;
  std::uint64_t seed = 0;
};

/// Adds zero-mean Gaussian noise of std sigma_d to the outputs. `index` separates trajectories.
inline Trajectory add_noise(const Trajectory& traj, double sigma_d, std::uint64_t seed, std::uint64_t index = 0) {
  if (!(sigma_d >= 0.0)) throw ConfigError("noise std must be non-negative");
  Trajectory out = traj;
  const NoiseStream rng(seed, streams::dataset_noise);
  std::vector<double> noisy(traj.outputs.size());
  for (std::size_t t = 0; t < noisy.size(); ++t)
    noisy[t] = traj.outputs[t] + (sigma_d > 0.0 ? sigma_d * rng.normal((index << 32) + t) : 0.0);
  out.noisy_outputs = std::move(noisy);
  return out;
}

inline std::vector<Trajectory> add_noise(const std::vector<Trajectory>& trajs, const NoiseSpec& spec) {
  std::vector<Trajectory> out;
  out.reserve(trajs.size());
  for (std::size_t i = 0; i < trajs.size(); ++i) out.push_back(add_noise(trajs[i], spec.sigma_dataset, spec.seed, i));
  return out;
}

inline std::unique_ptr<Plant> make_plant(const std::string& name) {
  if (name == "numerical") return std::make_unique<NumericalPlant>();
  if (name == "pendulum") return std::make_unique<PendulumPlant>();
  throw ConfigError("unknown plant: " + name);
}

}  // namespace invctl
