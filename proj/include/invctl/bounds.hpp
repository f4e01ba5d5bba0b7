#pragma once

#include "invctl/error.hpp"
#include "invctl/kernels.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <string>

namespace invctl {

enum class EtaMode { profile, explicit_form };
enum class GammaMode { composed, linear };

inline EtaMode eta_mode_from_string(const std::string& s) {
  if (s == "profile") return EtaMode::profile;
  if (s == "explicit") return EtaMode::explicit_form;
  throw ConfigError("unknown eta_mode: " + s);
}

inline GammaMode gamma_mode_from_string(const std::string& s) {
  if (s == "composed") return GammaMode::composed;
  if (s == "linear") return GammaMode::linear;
  throw ConfigError("unknown gamma_mode: " + s);
}

/// Known constants (L_f, L_c, Gamma) and the class-K functions built from them.
///
///   eta(e)     = Gamma sqrt(1 - kbar(e)/kbar(0))        (profile)
///              = Gamma sqrt(1 - exp(-e^2/den))          (explicit)
///   gamma_u(e) = L_c e + eta(e)
///   gamma_y(e) = L_f (e + gamma_u(e))                   (delay 1)
///   gamma(e)   = gamma_u + gamma_y + e                  (delay 1)
///              = gamma_u + (1 + L_f) e                  (delay 2)
///              = slope e                                (linear override)
class BoundSet {
 public:
  struct Constants {
    double L_f = 1.0;
    double L_c = 1.0;
    double Gamma = 1.0;
    int delay = 1;
  };

  /// Profile-derived eta from a kernel's normalized profile complement 1 - kbar(e)/kbar(0).
  BoundSet(Constants c, std::function<double(double)> profile_complement)
      : c_(c), eta_mode_(EtaMode::profile), complement_(std::move(profile_complement)) {
    validate();
  }

  template <KernelFunction K>
  static BoundSet from_kernel(Constants c, const K& kernel) {
    return BoundSet(c, [kernel](double e) { return kernel.profile_complement(e); });
  }

  /// Explicit eta(e) = Gamma sqrt(1 - exp(-e^2/denominator)).
  static BoundSet explicit_form(Constants c, double denominator) {
    if (!(denominator > 0.0)) throw ConfigError("eta denominator must be positive");
    BoundSet b(c, [denominator](double e) { return -std::expm1(-e * e / denominator); });
    b.eta_mode_ = EtaMode::explicit_form;
    return b;
  }

  /// gamma(e) = slope e; eta, gamma_u, gamma_y keep their composed definitions.
  BoundSet& with_linear_gamma(double slope) {
    if (!(slope > 0.0) || !std::isfinite(slope)) throw ConfigError("gamma_slope must be positive");
    gamma_mode_ = GammaMode::linear;
    slope_ = slope;
    return *this;
  }

  const Constants& constants() const { return c_; }
  int delay() const { return c_.delay; }
  EtaMode eta_mode() const { return eta_mode_; }
  GammaMode gamma_mode() const { return gamma_mode_; }
  double gamma_slope() const { return slope_; }

  double eta(double e) const {
    check(e);
    return c_.Gamma * std::sqrt(std::max(0.0, complement_(e)));
  }

  double gamma_u(double e) const { return c_.L_c * e + eta(e); }

  double gamma_y(double e) const {
    if (c_.delay != 1) throw ConfigError("gamma_y is defined for delay 1 only");
    return c_.L_f * (e + gamma_u(e));
  }

  double gamma(double e) const {
    check(e);
    if (gamma_mode_ == GammaMode::linear) return slope_ * e;
    if (c_.delay == 1) return gamma_u(e) + gamma_y(e) + e;
    return gamma_u(e) + (1.0 + c_.L_f) * e;
  }

  /// Largest e found by bisection with gamma(e) <= r, bracketed to about one ulp;
  /// linear mode divides exactly.
  double gamma_inverse(double r) const {
    if (!(r >= 0.0) || !std::isfinite(r)) throw ConfigError("gamma_inverse needs a finite non-negative radius");
    if (r == 0.0) return 0.0;
    if (gamma_mode_ == GammaMode::linear) return r / slope_;
    double lo = 0.0;
    double hi = r;  // gamma(e) >= e for every composed mode
    int doublings = 0;
    while (gamma(hi) < r) {
      lo = hi;
      hi *= 2.0;
      if (++doublings > 1'000'000 || !std::isfinite(hi)) throw ConfigError("gamma is not unbounded on the bracket");
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = lo + 0.5 * (hi - lo);
      if (mid <= lo || mid >= hi) break;
      if (gamma(mid) <= r) lo = mid;
      else hi = mid;
    }
    return lo;
  }

 private:
  void validate() const {
    if (!(c_.L_f > 0.0)) throw ConfigError("L_f must be positive");
    if (!(c_.L_c > 0.0)) throw ConfigError("L_c must be positive");
    if (!(c_.Gamma >= 0.0)) throw ConfigError("Gamma must be non-negative");
    if (c_.delay != 1 && c_.delay != 2) throw ConfigError("delay must be 1 or 2");
  }
  static void check(double e) {
    if (!(e >= 0.0)) throw ConfigError("bound argument must be non-negative");
  }

  Constants c_;
  EtaMode eta_mode_;
  GammaMode gamma_mode_ = GammaMode::composed;
  double slope_ = 1.0;
  std::function<double(double)> complement_;
};

}  // namespace invctl
