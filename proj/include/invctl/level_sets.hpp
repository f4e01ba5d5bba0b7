#pragma once

#include "invctl/bounds.hpp"
#include "invctl/error.hpp"
#include "invctl/narx_data.hpp"
#include "invctl/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace invctl {

struct Ball {
  Vector center;
  double radius = 0.0;
};

struct IndexedEntry {
  std::size_t index = 0;  // dataset record
  double r = 0.0;         // inradius of the record's successor in the target set
  double cert = 0.0;      // gamma^{-1}(r)

  friend bool operator==(const IndexedEntry&, const IndexedEntry&) = default;
};

inline constexpr double kMinInradius = 1e-12;
inline constexpr std::size_t kIndexThreshold = 256;

/// delta - |p_n| when positive.
template <class Derived>
std::optional<double> inradius_in_slab(const Eigen::DenseBase<Derived>& p, int n, double delta) {
  if (!(delta > 0.0)) throw ConfigError("delta must be positive");
  const double r = delta - std::abs(p.coeff(n - 1));
  if (r > 0.0) return r;
  return std::nullopt;
}

/// Single-ball underestimate of the inradius of p in a union: max_k (R_k - |p - c_k|) when positive.
template <class Derived>
std::optional<double> inradius_in_union(const Eigen::DenseBase<Derived>& p, const std::vector<Ball>& balls) {
  std::optional<double> best;
  for (const auto& b : balls) {
    const double v = b.radius - distance(p, b.center);
    if (v > 0.0 && (!best || v > *best)) best = v;
  }
  return best;
}

/// Closed balls with a uniform grid hash over the centers once there are more than
/// kIndexThreshold of them. The cell edge is the largest radius, so every ball that
/// can touch a point has its center in one of the 3^d neighbouring cells.
class BallIndex {
 public:
  BallIndex() = default;
  BallIndex(PointMatrix centers, Vector radii, std::size_t threshold = kIndexThreshold)
      : centers_(std::move(centers)), radii_(std::move(radii)) {
    if (centers_.rows() != radii_.size()) throw DimensionError("center and radius counts differ");
    if (static_cast<std::size_t>(centers_.rows()) > threshold && radii_.maxCoeff() > 0.0) {
      cell_ = radii_.maxCoeff() * (1.0 + 1e-9) + std::numeric_limits<double>::min();
      for (Eigen::Index i = 0; i < centers_.rows(); ++i) cells_[cell_key(centers_.row(i))].push_back(i);
    }
  }

  std::size_t size() const { return static_cast<std::size_t>(centers_.rows()); }
  bool empty() const { return centers_.rows() == 0; }
  bool indexed() const { return cell_ > 0.0; }
  const PointMatrix& centers() const { return centers_; }
  const Vector& radii() const { return radii_; }

  /// Calls visit(ball position) for every ball that may reach within max radius of p.
  template <class Derived, class Visit>
  void for_candidates(const Eigen::DenseBase<Derived>& p, Visit&& visit) const {
    if (!indexed()) {
      for (Eigen::Index i = 0; i < centers_.rows(); ++i)
        if (!visit(i)) return;
      return;
    }
    const auto d = static_cast<std::size_t>(centers_.cols());
    std::vector<std::int64_t> base(d), probe(d);
    for (std::size_t k = 0; k < d; ++k)
      base[k] = static_cast<std::int64_t>(std::floor(p.coeff(static_cast<Eigen::Index>(k)) / cell_));
    std::vector<int> offset(d, -1);
    for (;;) {
      for (std::size_t k = 0; k < d; ++k) probe[k] = base[k] + offset[k];
      const auto it = cells_.find(probe);
      if (it != cells_.end()) {
        for (const Eigen::Index i : it->second)
          if (!visit(i)) return;
      }
      std::size_t k = 0;
      while (k < d && offset[k] == 1) offset[k++] = -1;
      if (k == d) break;
      ++offset[k];
    }
  }

  template <class Derived>
  bool contains(const Eigen::DenseBase<Derived>& p) const {
    bool hit = false;
    for_candidates(p, [&](Eigen::Index i) {
      if (distance(p, centers_.row(i)) <= radii_(i)) hit = true;
      return !hit;
    });
    return hit;
  }

  /// Position of the ball maximizing radius - |p - c| (lowest position on ties), with that value.
  template <class Derived>
  std::optional<std::pair<Eigen::Index, double>> best_slack(const Eigen::DenseBase<Derived>& p) const {
    std::optional<std::pair<Eigen::Index, double>> best;
    for_candidates(p, [&](Eigen::Index i) {
      const double s = radii_(i) - distance(p, centers_.row(i));
      if (!best || s > best->second || (s == best->second && i < best->first)) best = std::make_pair(i, s);
      return true;
    });
    return best;
  }

  /// Whether the closed ball B(c, r) lies inside one single ball of the index.
  template <class Derived>
  bool single_ball_contains(const Eigen::DenseBase<Derived>& c, double r) const {
    bool hit = false;
    for_candidates(c, [&](Eigen::Index i) {
      if (distance(c, centers_.row(i)) + r <= radii_(i)) hit = true;
      return !hit;
    });
    return hit;
  }

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<std::int64_t>& key) const {
      std::uint64_t h = 0x9E3779B97F4A7C15ULL;
      for (const auto v : key) {
        h ^= static_cast<std::uint64_t>(v) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
      }
      return static_cast<std::size_t>(h);
    }
  };

  template <class Derived>
  std::vector<std::int64_t> cell_key(const Eigen::DenseBase<Derived>& p) const {
    std::vector<std::int64_t> key(static_cast<std::size_t>(p.size()));
    for (Eigen::Index k = 0; k < p.size(); ++k) key[static_cast<std::size_t>(k)] = static_cast<std::int64_t>(std::floor(p.coeff(k) / cell_));
    return key;
  }

  PointMatrix centers_;
  Vector radii_;
  double cell_ = 0.0;
  std::unordered_map<std::vector<std::int64_t>, std::vector<Eigen::Index>, KeyHash> cells_;
};

/// One level: entries plus the ball union they describe.
struct Level {
  std::vector<IndexedEntry> entries;
  BallIndex balls;  // ball k belongs to entries[k]

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
};

/// Level 0 balls are B(zeta_i+, r_i) inside the slab |y| < delta;
/// level j >= 1 balls are B(zeta_i, gamma^{-1}(r_i)) where r_i is the inradius of zeta_i+ in level j-1.
class LevelFamily {
 public:
  LevelFamily() = default;
  LevelFamily(double delta, int kappa_bar, std::vector<std::shared_ptr<const Level>> levels,
              std::optional<int> truncated_at)
      : delta_(delta), kappa_bar_(kappa_bar), levels_(std::move(levels)), truncated_at_(truncated_at) {}

  double delta() const { return delta_; }
  int kappa_bar() const { return kappa_bar_; }
  /// First level found empty, after which all deeper levels are empty.
  std::optional<int> truncated_at() const { return truncated_at_; }
  const Level& level(int j) const {
    if (j < 0 || j > kappa_bar_) throw DimensionError("level out of range");
    return *levels_[static_cast<std::size_t>(j)];
  }
  std::size_t total_entries() const {
    std::size_t n = 0;
    for (const auto& l : levels_) n += l->size();
    return n;
  }

 private:
  double delta_ = 0.0;
  int kappa_bar_ = 0;
  std::vector<std::shared_ptr<const Level>> levels_;
  std::optional<int> truncated_at_;
};

// ---- construction ----------------------------------------------------------------

inline std::vector<IndexedEntry> compute_index_set(const NarxDataset& data, double delta, const BoundSet& bounds) {
  std::vector<IndexedEntry> out;
  const auto& succ = data.successors();
  for (Eigen::Index i = 0; i < succ.rows(); ++i) {
    const auto r = inradius_in_slab(succ.row(i), data.order(), delta);
    if (r && *r > kMinInradius) out.push_back({static_cast<std::size_t>(i), *r, bounds.gamma_inverse(*r)});
  }
  return out;
}

inline std::vector<IndexedEntry> compute_index_set(const NarxDataset& data, const Level& target, const BoundSet& bounds) {
  std::vector<IndexedEntry> out;
  if (target.empty()) return out;
  const auto& succ = data.successors();
  for (Eigen::Index i = 0; i < succ.rows(); ++i) {
    const auto best = target.balls.best_slack(succ.row(i));
    if (best && best->second > kMinInradius)
      out.push_back({static_cast<std::size_t>(i), best->second, bounds.gamma_inverse(best->second)});
  }
  return out;
}

/// Ball union for a level: level 0 centers on successors with radius r, deeper levels on states with radius cert.
inline Level make_level(const NarxDataset& data, int j, std::vector<IndexedEntry> entries) {
  const auto n = static_cast<Eigen::Index>(entries.size());
  PointMatrix centers(n, data.state_dimension());
  Vector radii(n);
  const auto& src = j == 0 ? data.successors() : data.zeta();
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& e = entries[static_cast<std::size_t>(k)];
    if (e.index >= data.size()) throw DataError("level entry refers to a record outside the dataset");
    centers.row(k) = src.row(static_cast<Eigen::Index>(e.index));
    radii(k) = j == 0 ? e.r : e.cert;
  }
  Level out;
  out.entries = std::move(entries);
  out.balls = BallIndex(std::move(centers), std::move(radii));
  return out;
}

inline LevelFamily build_level_family(const NarxDataset& data, const BoundSet& bounds, double delta, int kappa_bar) {
  if (!(delta > 0.0)) throw ConfigError("delta must be positive");
  if (kappa_bar < 1) throw ConfigError("kappa_bar must be at least 1");
  std::vector<std::shared_ptr<const Level>> levels;
  levels.push_back(std::make_shared<const Level>(make_level(data, 0, compute_index_set(data, delta, bounds))));
  std::optional<int> truncated;
  if (levels.back()->empty()) truncated = 0;
  for (int j = 1; j <= kappa_bar; ++j) {
    const auto& prev = levels.back();
    if (prev->empty()) {
      levels.push_back(prev);
      continue;
    }
    auto entries = compute_index_set(data, *prev, bounds);
    if (j >= 2 && entries == prev->entries) {
      // Fixed point: the map from one level to the next is deterministic.
      while (static_cast<int>(levels.size()) <= kappa_bar) levels.push_back(prev);
      break;
    }
    levels.push_back(std::make_shared<const Level>(make_level(data, j, std::move(entries))));
    if (levels.back()->empty() && !truncated) truncated = j;
  }
  return LevelFamily(delta, kappa_bar, std::move(levels), truncated);
}

template <class Derived>
bool contains(const LevelFamily& family, int j, const Eigen::DenseBase<Derived>& zeta) {
  return family.level(j).balls.contains(zeta);
}

/// Sufficient test that every level-0 ball sits inside a single level-1 ball; false is inconclusive.
inline bool check_A0_subset_A1(const LevelFamily& family) {
  const Level& l0 = family.level(0);
  const Level& l1 = family.level(1);
  for (Eigen::Index k = 0; k < l0.balls.centers().rows(); ++k)
    if (!l1.balls.single_ball_contains(l0.balls.centers().row(k), l0.balls.radii()(k))) return false;
  return true;
}

// ---- dumps -------------------------------------------------------------------------
// Rows `j,i,r_i,gamma_inv_r_i`, preceded by `# delta=... kappa_bar=...`.

inline void write_family(std::ostream& out, const LevelFamily& family) {
  out << "# delta=" << format_double(family.delta()) << " kappa_bar=" << family.kappa_bar() << '\n';
  out << "j,i,r_i,gamma_inv_r_i\n";
  for (int j = 0; j <= family.kappa_bar(); ++j)
    for (const auto& e : family.level(j).entries)
      out << j << ',' << e.index << ',' << format_double(e.r) << ',' << format_double(e.cert) << '\n';
}

inline void write_family(const std::filesystem::path& path, const LevelFamily& family) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_family(out, family);
}

inline LevelFamily read_family(std::istream& in, const NarxDataset& data) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# delta=", 0) != 0) throw DataError("family dump lacks its header");
  double delta = 0.0;
  int kappa_bar = 0;
  {
    const auto kpos = line.find(" kappa_bar=");
    if (kpos == std::string::npos) throw DataError("family dump header lacks kappa_bar");
    delta = parse_double(line.substr(8, kpos - 8));
    kappa_bar = std::stoi(line.substr(kpos + 11));
  }
  if (!std::getline(in, line) || line != "j,i,r_i,gamma_inv_r_i") throw DataError("family dump lacks its column header");
  std::vector<std::vector<IndexedEntry>> entries(static_cast<std::size_t>(kappa_bar) + 1);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() != 4) throw DataError("malformed family row: " + line);
    const int j = std::stoi(cells[0]);
    if (j < 0 || j > kappa_bar) throw DataError("family row level out of range: " + line);
    entries[static_cast<std::size_t>(j)].push_back(
        {static_cast<std::size_t>(std::stoul(cells[1])), parse_double(cells[2]), parse_double(cells[3])});
  }
  std::vector<std::shared_ptr<const Level>> levels;
  std::optional<int> truncated;
  for (int j = 0; j <= kappa_bar; ++j) {
    auto& e = entries[static_cast<std::size_t>(j)];
    if (j >= 2 && e == levels.back()->entries) {
      levels.push_back(levels.back());
      continue;
    }
    levels.push_back(std::make_shared<const Level>(make_level(data, j, std::move(e))));
    if (levels.back()->empty() && !truncated) truncated = j;
  }
  return LevelFamily(delta, kappa_bar, std::move(levels), truncated);
}

inline LevelFamily read_family(const std::filesystem::path& path, const NarxDataset& data) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  return read_family(in, data);
}

}  // namespace invctl
