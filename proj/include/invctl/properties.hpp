#pragma once

#include "invctl/bounds.hpp"
#include "invctl/interpolant.hpp"
#include "invctl/level_sets.hpp"
#include "invctl/narx_data.hpp"
#include "invctl/noise.hpp"
#include "invctl/plants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace invctl {

struct PropertyResult {
  std::string name;
  bool passed = true;
  std::size_t checked = 0;
  std::size_t failures = 0;
  double worst = 0.0;  // property-specific: largest violation or smallest slack
  std::string detail;
  bool informational = false;  // reported but never fails the suite
};

namespace detail {

inline std::string vec_text(const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ";" : "") + format_double(v(i));
  return s;
}

// Point uniformly distributed in the closed ball B(c, r).
inline Vector sample_in_ball(const NoiseStream& rng, std::uint64_t& counter, const Vector& c, double r) {
  Vector dir(c.size());
  do {
    for (Eigen::Index k = 0; k < dir.size(); ++k) dir(k) = rng.normal(counter++);
  } while (dir.norm() == 0.0);
  dir.normalize();
  const double radius = r * std::pow(rng.uniform(counter++), 1.0 / static_cast<double>(c.size()));
  return c + radius * dir;
}

// Exit distance from a ball union along the ray p + t d, for p inside the union.
inline double exit_distance(const Vector& p, const Vector& d, const std::vector<Ball>& balls) {
  std::vector<std::pair<double, double>> spans;
  for (const auto& b : balls) {
    const Vector w = p - b.center;
    const double bq = w.dot(d);
    const double cq = w.squaredNorm() - b.radius * b.radius;
    const double disc = bq * bq - cq;
    if (disc < 0.0) continue;
    const double s = std::sqrt(disc);
    spans.emplace_back(-bq - s, -bq + s);
  }
  std::sort(spans.begin(), spans.end());
  double reach = 0.0;
  bool started = false;
  for (const auto& [lo, hi] : spans) {
    if (lo > reach) {
      if (started) break;
      continue;
    }
    if (hi > reach) reach = hi;
    started = true;
  }
  return reach;
}

}  // namespace detail

inline std::string describe(const PropertyResult& r) {
  std::ostringstream s;
  s << (r.informational ? "INFO" : (r.passed ? "PASS" : "FAIL")) << ' ' << r.name << " checked=" << r.checked
    << " failures=" << r.failures << " worst=" << format_double(r.worst);
  if (!r.detail.empty()) s << " | " << r.detail;
  return s.str();
}

/// max_i |c_hat(xi_i) - u_i| <= tol.
template <KernelFunction K>
PropertyResult check_interpolation_exactness(const Interpolant<K>& model, double tol = 1e-8) {
  PropertyResult r{"interpolation_exactness"};
  const Vector pred = model.predict_rows(model.points());
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    const double err = std::abs(pred(i) - model.targets()(i));
    ++r.checked;
    if (err > r.worst) r.worst = err;
    if (!(err <= tol)) {
      if (r.failures++ == 0) r.detail = "first failure at record " + std::to_string(i);
    }
  }
  r.passed = r.failures == 0;
  if (r.passed) r.detail = "max error " + format_double(r.worst) + " <= " + format_double(tol);
  return r;
}

/// |c(xi) - c_hat(xi)| <= eta(min_i |xi_i - xi|) + tol on a uniform grid over
/// y+ in [-1,1], zeta_1, zeta_2 in [-1,1], zeta_3 in [0,1].
template <KernelFunction K>
PropertyResult check_oracle_agreement(const Interpolant<K>& model, const BoundSet& bounds, const Plant& plant,
                                      int per_axis = 10, double tol = 1e-9) {
  PropertyResult r{"oracle_agreement"};
  r.worst = std::numeric_limits<double>::infinity();  // smallest slack
  const auto& X = model.points();
  auto axis = [per_axis](int k, double lo, double hi) { return lo + (hi - lo) * k / (per_axis - 1); };
  Vector xi(4);
  for (int a = 0; a < per_axis; ++a)
    for (int b = 0; b < per_axis; ++b)
      for (int c = 0; c < per_axis; ++c)
        for (int d = 0; d < per_axis; ++d) {
          xi << axis(a, -1, 1), axis(b, -1, 1), axis(c, -1, 1), axis(d, 0, 1);
          double eps2 = std::numeric_limits<double>::infinity();
          for (Eigen::Index i = 0; i < X.rows(); ++i) eps2 = std::min(eps2, squared_distance(X.row(i), xi));
          const double err = std::abs(*plant.inverse(xi) - model.predict(xi));
          const double slack = bounds.eta(std::sqrt(eps2)) + tol - err;
          ++r.checked;
          r.worst = std::min(r.worst, slack);
          if (slack < 0.0 && r.failures++ == 0) r.detail = "first violation at " + detail::vec_text(xi);
        }
  r.passed = r.failures == 0;
  if (r.passed) r.detail = "min slack " + format_double(r.worst);
  return r;
}

/// Per-record error bounds with the true plant:
///   |u_i - c_hat([t_i; zeta])|            <= gamma_u(|zeta_i - zeta|)
///   |y_i+ - f(zeta, c_hat([y_i+; zeta]))| <= gamma_y(|zeta_i - zeta|)   (delay 1)
///   |zeta_i+ - successor(zeta, u)|        <= gamma(|zeta_i - zeta|)
/// Half of the states are drawn near the record, half anywhere in `box`.
template <KernelFunction K>
std::vector<PropertyResult> check_bound_validity(const Plant& plant, const Interpolant<K>& model,
                                                 const NarxDataset& data, const BoundSet& bounds, int samples,
                                                 std::uint64_t seed, const Vector& box_lo, const Vector& box_hi,
                                                 double tol = 1e-9) {
  PropertyResult ru{"bound_gamma_u"}, ry{"bound_gamma_y"}, rg{"bound_gamma_successor"};
  ru.worst = ry.worst = rg.worst = std::numeric_limits<double>::infinity();
  const NoiseStream rng(seed, 101);
  std::uint64_t counter = 0;
  const int d = data.state_dimension();
  const Vector span = box_hi - box_lo;
  std::size_t undefined = 0;
  auto note = [](PropertyResult& r, double slack, const std::string& where) {
    ++r.checked;
    r.worst = std::min(r.worst, slack);
    if (slack < 0.0 && r.failures++ == 0) r.detail = "first violation " + where;
  };
  for (int s = 0; s < samples; ++s) {
    const auto i = static_cast<std::size_t>(rng.bits(counter++) % data.size());
    const Record& rec = data[i];
    Vector zeta(d);
    if (s % 2 == 0) {
      const double scale = std::pow(10.0, rng.uniform(counter++, -4.0, -1.0));
      for (int k = 0; k < d; ++k) zeta(k) = rec.zeta(k) + scale * span(k) * rng.normal(counter++);
      zeta = zeta.cwiseMax(box_lo).cwiseMin(box_hi);
    } else {
      for (int k = 0; k < d; ++k) zeta(k) = rng.uniform(counter++, box_lo(k), box_hi(k));
    }
    const double eps = distance(rec.zeta, zeta);
    Vector xi(d + 1);
    xi(0) = rec.target;
    xi.tail(d) = zeta;
    const double u = model.predict(xi);
    const std::string where = "record " + std::to_string(i) + " zeta " + detail::vec_text(zeta);
    note(ru, bounds.gamma_u(eps) + tol - std::abs(rec.input - u), where);
    double y1 = 0.0;
    try {
      y1 = plant.next_output(zeta, u);
    } catch (const InfeasibleInput&) {
      ++undefined;
      note(rg, -std::numeric_limits<double>::infinity(), where + " (plant undefined at the computed input)");
      if (bounds.delay() == 1) note(ry, -std::numeric_limits<double>::infinity(), where);
      continue;
    }
    if (bounds.delay() == 1) note(ry, bounds.gamma_y(eps) + tol - std::abs(rec.target - y1), where);
    const Vector next = shift_state(zeta, data.order(), y1, u);
    note(rg, bounds.gamma(eps) + tol - distance(rec.successor, next), where);
  }
  std::vector<PropertyResult> out{ru};
  if (bounds.delay() == 1) out.push_back(ry);
  out.push_back(rg);
  for (auto& r : out) {
    r.passed = r.failures == 0;
    if (r.passed) r.detail = "min slack " + format_double(r.worst);
    if (undefined) r.detail += " plant_undefined=" + std::to_string(undefined);
  }
  return out;
}

/// |gamma(gamma^{-1}(r)) - r| <= rel_tol max(1, r) and gamma(gamma^{-1}(r)) <= r, for log-spaced r.
inline PropertyResult check_gamma_inversion(const BoundSet& bounds, const std::string& label, int count = 100,
                                            double lo = 1e-6, double hi = 1e2, double rel_tol = 1e-9) {
  PropertyResult r{"gamma_inversion_" + label};
  for (int k = 0; k < count; ++k) {
    const double radius = lo * std::pow(hi / lo, static_cast<double>(k) / (count - 1));
    const double e = bounds.gamma_inverse(radius);
    const double back = bounds.gamma(e);
    const double rel = std::abs(back - radius) / std::max(1.0, radius);
    ++r.checked;
    r.worst = std::max(r.worst, rel);
    if ((rel > rel_tol || back > radius * (1.0 + 1e-15)) && r.failures++ == 0)
      r.detail = "first failure at r=" + format_double(radius);
  }
  r.passed = r.failures == 0;
  if (r.passed) r.detail = "max relative error " + format_double(r.worst);
  return r;
}

/// Zero at zero and strictly increasing on a log grid. eta is bounded by Gamma and flattens out
/// in floating point just below it, so within 1e-12 of Gamma it need only be non-decreasing.
inline PropertyResult check_class_k(const BoundSet& bounds, const std::string& label, int count = 1000,
                                    double lo = 1e-9, double hi = 1e3) {
  PropertyResult r{"class_k_" + label};
  struct Fn {
    const char* name;
    std::function<double(double)> f;
    bool saturates;
  };
  std::vector<Fn> fns{{"eta", [&](double e) { return bounds.eta(e); }, true},
                      {"gamma_u", [&](double e) { return bounds.gamma_u(e); }, false},
                      {"gamma", [&](double e) { return bounds.gamma(e); }, false}};
  if (bounds.delay() == 1) fns.push_back({"gamma_y", [&](double e) { return bounds.gamma_y(e); }, false});
  const double cap = bounds.constants().Gamma;
  for (const auto& fn : fns) {
    ++r.checked;
    if (fn.f(0.0) != 0.0 && r.failures++ == 0) r.detail = std::string(fn.name) + "(0) != 0";
    double prev = 0.0;
    for (int k = 0; k < count; ++k) {
      const double e = lo * std::pow(hi / lo, static_cast<double>(k) / (count - 1));
      const double v = fn.f(e);
      ++r.checked;
      const bool ok = fn.saturates && v >= cap * (1.0 - 1e-12) ? v >= prev : v > prev;
      if (!ok && r.failures++ == 0) r.detail = std::string(fn.name) + " not increasing at " + format_double(e);
      prev = v;
    }
  }
  r.passed = r.failures == 0;
  return r;
}

/// Level-0 balls inside the slab, positive radii, gamma(cert) <= r + 1e-9, and sampled points
/// of every level-(j+1) successor ball B(zeta_i+, r_i) inside level j.
inline PropertyResult check_level_soundness(const NarxDataset& data, const BoundSet& bounds, const LevelFamily& family,
                                            int samples_per_entry, std::uint64_t seed) {
  PropertyResult r{"level_soundness_delta_" + format_double(family.delta())};
  const NoiseStream rng(seed, 202);
  std::uint64_t counter = 0;
  auto fail = [&](const std::string& what) {
    if (r.failures++ == 0) r.detail = what;
  };
  for (const auto& e : family.level(0).entries) {
    ++r.checked;
    if (e.index >= data.size()) { fail("level 0 entry index out of range"); continue; }
    const double yn = std::abs(data.successors()(static_cast<Eigen::Index>(e.index), data.order() - 1));
    if (!(e.r > 0.0) || !(e.r <= family.delta() - yn))
      fail("level 0 entry i=" + std::to_string(e.index) + " r=" + format_double(e.r) + " leaves the slab");
  }
  const Level* checked_target = nullptr;
  const Level* checked_source = nullptr;
  for (int j = 0; j < family.kappa_bar(); ++j) {
    const Level& target = family.level(j);
    const Level& source = family.level(j + 1);
    for (const auto& e : source.entries) {
      ++r.checked;
      if (!(e.r > 0.0)) fail("level " + std::to_string(j + 1) + " entry i=" + std::to_string(e.index) + " has r=" + format_double(e.r));
      else if (!(e.cert > 0.0))
        fail("level " + std::to_string(j + 1) + " entry i=" + std::to_string(e.index) + " has radius " + format_double(e.cert));
      else if (bounds.gamma(e.cert) > e.r + 1e-9)
        fail("level " + std::to_string(j + 1) + " entry i=" + std::to_string(e.index) + " certificate exceeds gamma^-1(r)");
    }
    if (&target == checked_target && &source == checked_source) continue;  // shared past a fixed point
    checked_target = &target;
    checked_source = &source;
    for (const auto& e : source.entries) {
      if (!(e.r > 0.0) || e.index >= data.size()) continue;
      const Vector c = data.successors().row(static_cast<Eigen::Index>(e.index)).transpose();
      for (int s = 0; s < samples_per_entry; ++s) {
        const Vector p = detail::sample_in_ball(rng, counter, c, e.r);
        ++r.checked;
        if (!target.balls.contains(p)) {
          fail("level " + std::to_string(j + 1) + " entry i=" + std::to_string(e.index) + " has a point outside level " +
               std::to_string(j));
          break;
        }
      }
    }
  }
  r.passed = r.failures == 0;
  return r;
}

/// Single-ball inradius underestimate never exceeds a direction-sampled estimate of the true inradius.
inline PropertyResult check_inradius_underestimate(int configs, std::uint64_t seed, int dimension = 3,
                                                   int directions = 2000) {
  PropertyResult r{"inradius_underestimate"};
  const NoiseStream rng(seed, 303);
  std::uint64_t counter = 0;
  int made = 0;
  while (made < configs) {
    const int count = 2 + static_cast<int>(rng.bits(counter++) % 4);
    std::vector<Ball> balls;
    for (int b = 0; b < count; ++b) {
      Vector c(dimension);
      for (int k = 0; k < dimension; ++k) c(k) = rng.uniform(counter++, -1.0, 1.0);
      balls.push_back({c, rng.uniform(counter++, 0.2, 1.0)});
    }
    const Vector p = detail::sample_in_ball(rng, counter, balls.front().center, balls.front().radius);
    const auto under = inradius_in_union(p, balls);
    if (!under) continue;
    ++made;
    double sampled = std::numeric_limits<double>::infinity();
    for (int s = 0; s < directions; ++s) {
      Vector d(dimension);
      for (int k = 0; k < dimension; ++k) d(k) = rng.normal(counter++);
      d.normalize();
      sampled = std::min(sampled, detail::exit_distance(p, d, balls));
    }
    ++r.checked;
    const double gap = *under - sampled;
    r.worst = std::max(r.worst, gap);
    if (gap > 1e-12 && r.failures++ == 0) r.detail = "config " + std::to_string(made) + " overestimates";
  }
  r.passed = r.failures == 0;
  return r;
}

}  // namespace invctl
