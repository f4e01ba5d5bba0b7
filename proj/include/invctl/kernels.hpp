#pragma once

#include "invctl/error.hpp"
#include "invctl/types.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <string>
#include <variant>
#include <vector>

namespace invctl {

enum class KernelFamily { squared_exponential, laplacian, matern52 };

inline std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::squared_exponential: return "squared_exponential";
    case KernelFamily::laplacian: return "laplacian";
    case KernelFamily::matern52: return "matern52";
  }
  return "unknown";
}

inline KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "squared_exponential" || name == "se") return KernelFamily::squared_exponential;
  if (name == "laplacian") return KernelFamily::laplacian;
  if (name == "matern52") return KernelFamily::matern52;
  throw ConfigError("unknown kernel family: " + name);
}

namespace detail {

inline constexpr double kSqrt5 = 2.23606797749978969640917366873128;

// (1 + a + a^2/3) exp(-a)
inline double matern52_shape(double a) { return (1.0 + a + a * a / 3.0) * std::exp(-a); }

// 1 - matern52_shape(a), accurate for small a.
inline double matern52_shape_complement(double a) {
  if (a < 1e-2) {
    // exp(-a) * (a^2/6 + a^3/6 + a^4/24 + a^5/120 + a^6/720)
    const double a2 = a * a;
    return std::exp(-a) * a2 * (1.0 / 6.0 + a / 6.0 + a2 / 24.0 + a2 * a / 120.0 + a2 * a2 / 720.0);
  }
  return 1.0 - matern52_shape(a);
}

inline void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) throw ConfigError(std::string(what) + " must be positive and finite");
}

}  // namespace detail

/// Isotropic, decreasing kernel k(x, x') = kbar(|x - x'|).
///
/// Squared exponential: sf^2 exp(-r^2 / (2 l^2)).
/// Laplacian:           sf^2 exp(-r / l).
/// Matern 5/2:          sf^2 (1 + sqrt5 s + 5 s^2 / 3) exp(-sqrt5 s), s = r / (sqrt2 l),
///                      the same length-scale convention as ArdMatern52Kernel.
class IsotropicKernel {
 public:
  IsotropicKernel(KernelFamily family, double signal_scale, double length_scale)
      : family_(family), signal_scale_(signal_scale), length_scale_(length_scale) {
    detail::require_positive(signal_scale, "signal scale");
    detail::require_positive(length_scale, "length scale");
  }

  KernelFamily family() const { return family_; }
  double signal_scale() const { return signal_scale_; }
  double length_scale() const { return length_scale_; }
  double signal_variance() const { return signal_scale_ * signal_scale_; }

  /// kbar(r) for r >= 0.
  double profile(double r) const { return signal_variance() * (1.0 - profile_complement(r)); }

  /// 1 - kbar(r)/kbar(0), evaluated without cancellation near r = 0.
  double profile_complement(double r) const {
    switch (family_) {
      case KernelFamily::squared_exponential:
        return -std::expm1(-r * r / (2.0 * length_scale_ * length_scale_));
      case KernelFamily::laplacian:
        return -std::expm1(-r / length_scale_);
      case KernelFamily::matern52:
        return detail::matern52_shape_complement(detail::kSqrt5 * r / (std::sqrt(2.0) * length_scale_));
    }
    return 0.0;
  }

  template <class A, class B>
  double operator()(const Eigen::DenseBase<A>& a, const Eigen::DenseBase<B>& b) const {
    if (a.size() != b.size()) throw DimensionError("kernel arguments have different dimensions");
    const double d2 = squared_distance(a, b);
    switch (family_) {
      case KernelFamily::squared_exponential:
        return signal_variance() * std::exp(-d2 / (2.0 * length_scale_ * length_scale_));
      case KernelFamily::laplacian:
        return signal_variance() * std::exp(-std::sqrt(d2) / length_scale_);
      case KernelFamily::matern52:
        return signal_variance() *
               detail::matern52_shape(detail::kSqrt5 * std::sqrt(d2 / 2.0) / length_scale_);
    }
    return 0.0;
  }

 private:
  KernelFamily family_;
  double signal_scale_;
  double length_scale_;
};

/// ARD Matern 5/2: sf^2 (1 + sqrt5 r + 5 r^2/3) exp(-sqrt5 r), r^2 = sum_i (x_i - x'_i)^2 / (2 l_i^2).
class ArdMatern52Kernel {
 public:
  ArdMatern52Kernel(double signal_scale, std::vector<double> length_scales)
      : signal_scale_(signal_scale), length_scales_(std::move(length_scales)) {
    detail::require_positive(signal_scale, "signal scale");
    if (length_scales_.empty()) throw ConfigError("ARD kernel needs at least one length scale");
    for (double l : length_scales_) detail::require_positive(l, "length scale");
    inv_two_l2_.reserve(length_scales_.size());
    for (double l : length_scales_) inv_two_l2_.push_back(1.0 / (2.0 * l * l));
  }

  double signal_scale() const { return signal_scale_; }
  double signal_variance() const { return signal_scale_ * signal_scale_; }
  const std::vector<double>& length_scales() const { return length_scales_; }
  std::size_t dimension() const { return length_scales_.size(); }

  template <class A, class B>
  double operator()(const Eigen::DenseBase<A>& a, const Eigen::DenseBase<B>& b) const {
    if (static_cast<std::size_t>(a.size()) != dimension() || static_cast<std::size_t>(b.size()) != dimension())
      throw DimensionError("ARD kernel argument dimension does not match its length scales");
    double r2 = 0.0;
    for (std::size_t i = 0; i < dimension(); ++i) {
      const double d = a.coeff(static_cast<Eigen::Index>(i)) - b.coeff(static_cast<Eigen::Index>(i));
      r2 += d * d * inv_two_l2_[i];
    }
    return signal_variance() * detail::matern52_shape(detail::kSqrt5 * std::sqrt(r2));
  }

  // Isotropic envelope: for |x - x'| = eps the ARD value is at least kbar(eps) built from the
  // shortest length scale, so 1 - k/k(0) never exceeds this complement.
  double profile_complement(double eps) const {
    const double shortest = *std::min_element(length_scales_.begin(), length_scales_.end());
    return detail::matern52_shape_complement(detail::kSqrt5 * eps / (std::sqrt(2.0) * shortest));
  }

 private:
  double signal_scale_;
  std::vector<double> length_scales_;
  std::vector<double> inv_two_l2_;
};

template <class K>
concept KernelFunction = requires(const K& k, const Vector& x) {
  { k(x, x) } -> std::convertible_to<double>;
  { k.signal_variance() } -> std::convertible_to<double>;
  { k.profile_complement(0.0) } -> std::convertible_to<double>;
};

/// Runtime-selected kernel for config-driven pipelines.
class AnyKernel {
 public:
  AnyKernel(IsotropicKernel k) : impl_(std::move(k)) {}
  AnyKernel(ArdMatern52Kernel k) : impl_(std::move(k)) {}

  template <class A, class B>
  double operator()(const Eigen::DenseBase<A>& a, const Eigen::DenseBase<B>& b) const {
    return std::visit([&](const auto& k) { return k(a, b); }, impl_);
  }
  double signal_variance() const {
    return std::visit([](const auto& k) { return k.signal_variance(); }, impl_);
  }
  double profile_complement(double eps) const {
    return std::visit([&](const auto& k) { return k.profile_complement(eps); }, impl_);
  }

  bool is_ard() const { return std::holds_alternative<ArdMatern52Kernel>(impl_); }
  const IsotropicKernel* isotropic() const { return std::get_if<IsotropicKernel>(&impl_); }
  const ArdMatern52Kernel* ard() const { return std::get_if<ArdMatern52Kernel>(&impl_); }

  std::string family_name() const {
    if (const auto* iso = isotropic()) return to_string(iso->family());
    return "ard_matern52";
  }
  double signal_scale() const {
    return std::visit([](const auto& k) { return k.signal_scale(); }, impl_);
  }
  std::vector<double> length_scales() const {
    if (const auto* iso = isotropic()) return {iso->length_scale()};
    return ard()->length_scales();
  }

 private:
  std::variant<IsotropicKernel, ArdMatern52Kernel> impl_;
};

static_assert(KernelFunction<IsotropicKernel>);
static_assert(KernelFunction<ArdMatern52Kernel>);
static_assert(KernelFunction<AnyKernel>);

/// Gram matrix over the rows of `points`.
template <KernelFunction K>
Matrix gram(const K& kernel, const PointMatrix& points) {
  const Eigen::Index n = points.rows();
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i, i) = kernel(points.row(i), points.row(i));
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = kernel(points.row(i), points.row(j));
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

/// Kernel vector [k(x_1, x); ...; k(x_N, x)].
template <KernelFunction K, class Derived>
Vector kernel_vector(const K& kernel, const PointMatrix& points, const Eigen::DenseBase<Derived>& x) {
  Vector out(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) out(i) = kernel(points.row(i), x);
  return out;
}

}  // namespace invctl
