#pragma once

#include "invctl/error.hpp"
#include "invctl/kernels.hpp"
#include "invctl/narx_data.hpp"
#include "invctl/types.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace invctl {

struct FitOptions {
  double jitter_start = 1e-12;     // relative to kbar(0)
  double jitter_max = 1e-6;        // relative to kbar(0)
  int refinement_iterations = 60;  // iterative refinement against the un-jittered system
  // Grid search only: candidates whose solve residual exceeds this are not selectable.
  double selection_max_residual = std::numeric_limits<double>::infinity();
};

struct FitDiagnostics {
  double jitter = 0.0;
  int refinement_steps = 0;
  double residual = 0.0;  // max |(K + lambda I) alpha - u|
  double min_pivot = 0.0;
  double max_pivot = 0.0;
};

namespace detail {

// r = b - A x with long double accumulation.
inline Vector accurate_residual(const Matrix& A, const Vector& x, const Vector& b) {
  const Eigen::Index n = A.rows();
  Vector r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    long double acc = b(i);
    for (Eigen::Index j = 0; j < n; ++j) acc -= static_cast<long double>(A(j, i)) * x(j);  // A symmetric, column access
    r(i) = static_cast<double>(acc);
  }
  return r;
}

// Solve A x = b with a (possibly jittered) factor of A, refining against A itself.
template <class Factor>
Vector refined_solve(const Factor& factor, const Matrix& A, const Vector& b, int iterations, int* steps, double* residual) {
  Vector x = factor.solve(b);
  Vector best = x;
  Vector r = accurate_residual(A, x, b);
  double best_res = r.cwiseAbs().maxCoeff();
  int used = 0;
  int stalls = 0;
  for (int it = 0; it < iterations && best_res > 0.0; ++it) {
    x += factor.solve(r);
    r = accurate_residual(A, x, b);
    const double res = r.cwiseAbs().maxCoeff();
    ++used;
    if (res < best_res) {
      stalls = res > 0.9 * best_res ? stalls + 1 : 0;
      best_res = res;
      best = x;
    } else {
      ++stalls;
    }
    if (stalls >= 3) break;
  }
  if (steps) *steps = used;
  if (residual) *residual = best_res;
  return best;
}

}  // namespace detail

/// c_hat(xi) = k(xi)^T (K + lambda I)^{-1} u.
template <KernelFunction K>
class Interpolant {
 public:
  static Interpolant fit(const K& kernel, const PointMatrix& points, const Vector& targets, double lambda,
                         const FitOptions& opt = {}) {
    if (points.rows() == 0) throw FitError("cannot fit an empty dataset");
    if (points.rows() != targets.size()) throw DimensionError("point and target counts differ");
    if (!(lambda >= 0.0)) throw FitError("regularization must be non-negative");
    Interpolant out(kernel, points, targets, lambda);
    Matrix A = gram(kernel, points);
    A.diagonal().array() += lambda;
    out.factorize(A, opt);
    out.alpha_ = detail::refined_solve(out.llt_, A, targets, opt.refinement_iterations, &out.diag_.refinement_steps,
                                       &out.diag_.residual);
    out.system_ = std::move(A);
    return out;
  }

  static Interpolant fit(const K& kernel, const NarxDataset& data, double lambda, const FitOptions& opt = {}) {
    return fit(kernel, data.xi(), data.inputs(), lambda, opt);
  }

  /// Rebuild from stored weights; the factorization is recomputed for the diagnostics only.
  static Interpolant restore(const K& kernel, const PointMatrix& points, const Vector& targets, double lambda,
                             double jitter, Vector alpha) {
    if (alpha.size() != points.rows() || targets.size() != points.rows())
      throw DimensionError("stored weights do not match the dataset");
    Interpolant out(kernel, points, targets, lambda);
    Matrix A = gram(kernel, points);
    A.diagonal().array() += lambda;
    Matrix shifted = A;
    shifted.diagonal().array() += jitter;
    out.llt_.compute(shifted);
    if (out.llt_.info() != Eigen::Success) throw FitError("stored model no longer factorizes");
    out.diag_.jitter = jitter;
    out.alpha_ = std::move(alpha);
    out.diag_.residual = detail::accurate_residual(A, out.alpha_, targets).cwiseAbs().maxCoeff();
    out.system_ = std::move(A);
    return out;
  }

  const K& kernel() const { return kernel_; }
  const PointMatrix& points() const { return points_; }
  const Vector& targets() const { return targets_; }
  const Vector& alpha() const { return alpha_; }
  double lambda() const { return lambda_; }
  double jitter() const { return diag_.jitter; }
  const FitDiagnostics& diagnostics() const { return diag_; }
  std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
  Eigen::Index dimension() const { return points_.cols(); }

  template <class Derived>
  double predict(const Eigen::DenseBase<Derived>& xi) const {
    if (xi.size() != dimension()) throw DimensionError("prediction point has the wrong dimension");
    long double acc = 0.0L;
    for (Eigen::Index i = 0; i < points_.rows(); ++i)
      acc += static_cast<long double>(kernel_(points_.row(i), xi)) * alpha_(i);
    return static_cast<double>(acc);
  }

  Vector predict_rows(const PointMatrix& xs) const {
    Vector out(xs.rows());
    for (Eigen::Index r = 0; r < xs.rows(); ++r) out(r) = predict(xs.row(r));
    return out;
  }

  /// sqrt(u^T K^{-1} u); only meaningful for pure interpolation.
  double rkhs_norm_estimate() const {
    if (lambda_ > 0.0) throw FitError("RKHS norm estimate is undefined for a regularized fit");
    long double acc = 0.0L;
    for (Eigen::Index i = 0; i < targets_.size(); ++i) acc += static_cast<long double>(targets_(i)) * alpha_(i);
    return std::sqrt(std::max(0.0, static_cast<double>(acc)));
  }

  template <class Derived>
  double power_function(const Eigen::DenseBase<Derived>& xi) const {
    if (xi.size() != dimension()) throw DimensionError("power function point has the wrong dimension");
    const Vector k = kernel_vector(kernel_, points_, xi);
    const Vector v = detail::refined_solve(llt_, system_, k, 3, nullptr, nullptr);
    long double quad = 0.0L;
    for (Eigen::Index i = 0; i < k.size(); ++i) quad += static_cast<long double>(k(i)) * v(i);
    const double self = kernel_(xi, xi);
    return std::sqrt(std::max(0.0, static_cast<double>(static_cast<long double>(self) - quad)));
  }

  /// Sum over i of log N(u_i | loo mean, loo variance) with d = diag((K + lambda I)^{-1}):
  /// 0.5 log(d_i / 2pi) - alpha_i^2 / (2 d_i).
  double loo_log_predictive() const {
    const Matrix inv = llt_.solve(Matrix::Identity(points_.rows(), points_.rows()));
    double score = 0.0;
    for (Eigen::Index i = 0; i < points_.rows(); ++i) {
      const double d = inv(i, i);
      if (!(d > 0.0)) return -std::numeric_limits<double>::infinity();
      score += 0.5 * std::log(d / (2.0 * std::numbers::pi)) - alpha_(i) * alpha_(i) / (2.0 * d);
    }
    return score;
  }

 private:
  Interpolant(const K& kernel, const PointMatrix& points, const Vector& targets, double lambda)
      : kernel_(kernel), points_(points), targets_(targets), lambda_(lambda) {}

  void factorize(const Matrix& A, const FitOptions& opt) {
    const double scale = kernel_.signal_variance();
    double jitter = 0.0;
    for (;;) {
      if (jitter > 0.0) {
        Matrix shifted = A;
        shifted.diagonal().array() += jitter;
        llt_.compute(shifted);
      } else {
        llt_.compute(A);
      }
      if (llt_.info() == Eigen::Success) break;
      jitter = jitter == 0.0 ? opt.jitter_start * scale : jitter * 10.0;
      if (jitter > opt.jitter_max * scale * (1.0 + 1e-9)) {
        const Vector d = A.diagonal();
        std::ostringstream msg;
        msg << "Gram matrix not positive definite after jitter " << format_double(opt.jitter_max * scale)
            << " (N=" << A.rows() << ", diag range [" << format_double(d.minCoeff()) << ", "
            << format_double(d.maxCoeff()) << "], lambda=" << format_double(lambda_) << ")";
        throw FitError(msg.str());
      }
    }
    diag_.jitter = jitter;
    const Vector piv = llt_.matrixL().toDenseMatrix().diagonal();
    diag_.min_pivot = piv.minCoeff();
    diag_.max_pivot = piv.maxCoeff();
  }

  K kernel_;
  PointMatrix points_;
  Vector targets_;
  Vector alpha_;
  double lambda_ = 0.0;
  Matrix system_;  // K + lambda I, without jitter
  Eigen::LLT<Matrix> llt_;
  FitDiagnostics diag_;
};

// ---- hyperparameter selection ------------------------------------------------

struct HyperparameterScore {
  std::size_t candidate;  // index into the canonical ordering
  double score;
};

namespace detail {

inline auto canonical_key(const IsotropicKernel& k) {
  return std::make_tuple(static_cast<int>(k.family()), k.signal_scale(), std::vector<double>{k.length_scale()});
}
inline auto canonical_key(const ArdMatern52Kernel& k) {
  return std::make_tuple(static_cast<int>(KernelFamily::matern52) + 100, k.signal_scale(), k.length_scales());
}
inline auto canonical_key(const AnyKernel& k) {
  return std::make_tuple(k.is_ard() ? 100 + static_cast<int>(KernelFamily::matern52)
                                    : static_cast<int>(k.isotropic()->family()),
                         k.signal_scale(), k.length_scales());
}

}  // namespace detail

/// Grid candidate with the best leave-one-out log predictive density at fixed lambda.
/// Candidates are sorted canonically first, so the result does not depend on grid order;
/// candidates that fail to factorize score -inf.
template <KernelFunction K>
K fit_hyperparameters(std::vector<K> grid, const PointMatrix& points, const Vector& targets, double lambda,
                      std::vector<HyperparameterScore>* scores = nullptr, const FitOptions& opt = {}) {
  if (grid.empty()) throw ConfigError("hyperparameter grid is empty");
  std::stable_sort(grid.begin(), grid.end(),
                   [](const K& a, const K& b) { return detail::canonical_key(a) < detail::canonical_key(b); });
  std::size_t best = grid.size();
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < grid.size(); ++c) {
    double s = -std::numeric_limits<double>::infinity();
    try {
      const auto m = Interpolant<K>::fit(grid[c], points, targets, lambda, opt);
      if (m.diagnostics().residual <= opt.selection_max_residual) s = m.loo_log_predictive();
    } catch (const FitError&) {
    }
    if (scores) scores->push_back({c, s});
    if (std::isfinite(s) && (best == grid.size() || s > best_score)) {
      best = c;
      best_score = s;
    }
  }
  if (best == grid.size()) throw FitError("no hyperparameter candidate could be fitted");
  return grid[best];
}

template <KernelFunction K>
K fit_hyperparameters(std::vector<K> grid, const NarxDataset& data, double lambda,
                      std::vector<HyperparameterScore>* scores = nullptr, const FitOptions& opt = {}) {
  return fit_hyperparameters(std::move(grid), data.xi(), data.inputs(), lambda, scores, opt);
}

// ---- model dump ----------------------------------------------------------------

inline AnyKernel make_kernel(const std::string& family, double signal_scale, const std::vector<double>& length_scales) {
  if (family == "ard_matern52") return ArdMatern52Kernel(signal_scale, length_scales);
  if (length_scales.size() != 1) throw ConfigError("isotropic kernel takes exactly one length scale");
  return IsotropicKernel(kernel_family_from_string(family), signal_scale, length_scales.front());
}

inline void write_model(std::ostream& out, const Interpolant<AnyKernel>& model) {
  const auto& k = model.kernel();
  out << "kernel=" << k.family_name() << '\n';
  out << "signal_scale=" << format_double(k.signal_scale()) << '\n';
  out << "length_scales=";
  const auto ls = k.length_scales();
  for (std::size_t i = 0; i < ls.size(); ++i) out << (i ? ";" : "") << format_double(ls[i]);
  out << '\n';
  out << "lambda=" << format_double(model.lambda()) << '\n';
  out << "jitter=" << format_double(model.jitter()) << '\n';
  out << "N=" << model.size() << '\n';
  out << "dimension=" << model.dimension() << '\n';
  out << "alpha\n";
  for (Eigen::Index i = 0; i < model.alpha().size(); ++i) out << format_double(model.alpha()(i)) << '\n';
}

inline void write_model(const std::filesystem::path& path, const Interpolant<AnyKernel>& model) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_model(out, model);
}

/// Reads a dump written by write_model; the training points come from the dataset it was fitted on.
inline Interpolant<AnyKernel> read_model(std::istream& in, const NarxDataset& data) {
  std::map<std::string, std::string> fields;
  std::string line;
  while (std::getline(in, line)) {
    if (line == "alpha") break;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("malformed model line: " + line);
    fields[line.substr(0, eq)] = line.substr(eq + 1);
  }
  for (const char* key : {"kernel", "signal_scale", "length_scales", "lambda", "jitter", "N"})
    if (!fields.count(key)) throw DataError(std::string("model dump lacks ") + key);
  std::vector<double> ls;
  std::istringstream lss(fields["length_scales"]);
  for (std::string cell; std::getline(lss, cell, ';');) ls.push_back(parse_double(cell));
  const auto N = std::stoul(fields["N"]);
  if (N != data.size()) throw DataError("model dump size does not match the dataset");
  Vector alpha(static_cast<Eigen::Index>(N));
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    if (!std::getline(in, line)) throw DataError("model dump truncated");
    alpha(i) = parse_double(line);
  }
  const AnyKernel kernel = make_kernel(fields["kernel"], parse_double(fields["signal_scale"]), ls);
  return Interpolant<AnyKernel>::restore(kernel, data.xi(), data.inputs(), parse_double(fields["lambda"]),
                                         parse_double(fields["jitter"]), std::move(alpha));
}

inline Interpolant<AnyKernel> read_model(const std::filesystem::path& path, const NarxDataset& data) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  return read_model(in, data);
}

}  // namespace invctl
