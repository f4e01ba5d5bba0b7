#pragma once

#include "invctl/bounds.hpp"
#include "invctl/error.hpp"
#include "invctl/interpolant.hpp"
#include "invctl/level_sets.hpp"
#include "invctl/narx_data.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace invctl {

enum class FallbackPolicy { nearest_neighbor };

struct StepCertificate {
  std::optional<std::size_t> family;  // position in the delta menu, absent when uncertified
  double delta = std::numeric_limits<double>::quiet_NaN();
  int kappa = -1;
  std::size_t i1 = 0;
  double slack = std::numeric_limits<double>::quiet_NaN();
  bool certified = false;
};

struct Location {
  std::size_t family;
  double delta;
  int kappa;
};

struct ControlAction {
  double u;
  double reference;
  StepCertificate certificate;
};

enum class Descent { ok, violated, skipped };

inline const char* to_string(Descent d) {
  switch (d) {
    case Descent::ok: return "1";
    case Descent::violated: return "0";
    case Descent::skipped: return "skip";
  }
  return "?";
}

/// Reference selection over precomputed level families: smallest delta first, then smallest level.
template <KernelFunction K>
class Controller {
 public:
  Controller(std::shared_ptr<const NarxDataset> data, std::shared_ptr<const Interpolant<K>> model,
             std::vector<LevelFamily> families, FallbackPolicy fallback = FallbackPolicy::nearest_neighbor)
      : data_(std::move(data)), model_(std::move(model)), families_(std::move(families)), fallback_(fallback) {
    if (!data_ || !model_) throw ConfigError("controller needs a dataset and a model");
    if (model_->size() != data_->size()) throw ConfigError("model and dataset sizes differ");
    for (std::size_t k = 0; k < families_.size(); ++k) {
      if (!(families_[k].delta() > 0.0)) throw ConfigError("delta must be positive");
      if (k > 0 && !(families_[k].delta() > families_[k - 1].delta())) throw ConfigError("deltas must be strictly ascending");
      if (families_[k].kappa_bar() != families_.front().kappa_bar()) throw ConfigError("families disagree on kappa_bar");
    }
  }

  const NarxDataset& data() const { return *data_; }
  const Interpolant<K>& model() const { return *model_; }
  const std::vector<LevelFamily>& families() const { return families_; }
  FallbackPolicy fallback() const { return fallback_; }

  /// First (delta, j) with zeta in level j, scanning delta ascending then j ascending from min_level.
  template <class Derived>
  std::optional<Location> locate(const Eigen::DenseBase<Derived>& zeta, int min_level = 0) const {
    for (std::size_t k = 0; k < families_.size(); ++k) {
      const auto& fam = families_[k];
      const Level* missed = nullptr;  // deeper levels past a fixed point are the same object
      for (int j = min_level; j <= fam.kappa_bar(); ++j) {
        const Level& level = fam.level(j);
        if (&level == missed) continue;
        if (level.empty() && fam.truncated_at() && j >= *fam.truncated_at()) break;
        if (level.balls.contains(zeta)) return Location{k, fam.delta(), j};
        missed = &level;
      }
    }
    return std::nullopt;
  }

  /// Covering level-kappa entry with the largest slack cert - |zeta - zeta_i| (lowest index on ties).
  template <class Derived>
  StepCertificate select_reference(const Eigen::DenseBase<Derived>& zeta, const Location& loc) const {
    if (loc.kappa < 1) throw ConfigError("level 0 carries no reference");
    const Level& level = families_.at(loc.family).level(loc.kappa);
    const auto best = level.balls.best_slack(zeta);
    if (!best || best->second < 0.0)
      throw Error("internal inconsistency: located level has no covering entry");
    StepCertificate c;
    c.family = loc.family;
    c.delta = loc.delta;
    c.kappa = loc.kappa;
    c.i1 = level.entries[static_cast<std::size_t>(best->first)].index;
    c.slack = best->second;
    c.certified = true;
    return c;
  }

  template <class Derived>
  std::size_t nearest_record(const Eigen::DenseBase<Derived>& zeta) const {
    const auto& Z = data_->zeta();
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
      const double d = squared_distance(zeta, Z.row(i));
      if (d < best_d) {
        best_d = d;
        best = static_cast<std::size_t>(i);
      }
    }
    return best;
  }

  /// u = c_hat([reference; zeta]). A level-0 hit has no action, so the search starts at level 1.
  ControlAction control(const Vector& zeta) const {
    if (data_->empty()) throw ConfigError("controller has an empty dataset");
    StepCertificate cert;
    if (const auto loc = locate(zeta, 1)) {
      cert = select_reference(zeta, *loc);
    } else {
      cert.i1 = nearest_record(zeta);
    }
    const double reference = (*data_)[cert.i1].target;
    Vector xi(zeta.size() + 1);
    xi(0) = reference;
    xi.tail(zeta.size()) = zeta;
    return {model_->predict(xi), reference, cert};
  }

  /// zeta_next must lie in level kappa-1 of the same family (level 0 as the union of successor balls).
  Descent assert_descent(const StepCertificate& previous, const Vector& zeta_next) const {
    if (!previous.certified || !previous.family || previous.kappa < 1) return Descent::skipped;
    const auto& fam = families_.at(*previous.family);
    return contains(fam, previous.kappa - 1, zeta_next) ? Descent::ok : Descent::violated;
  }

 private:
  std::shared_ptr<const NarxDataset> data_;
  std::shared_ptr<const Interpolant<K>> model_;
  std::vector<LevelFamily> families_;
  FallbackPolicy fallback_;
};

}  // namespace invctl
