#pragma once

#include "invctl/error.hpp"
#include "invctl/types.hpp"

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace invctl {

/// Input/output record: inputs u(0..T-1), outputs y(0..T).
/// Index 0 is the oldest sample; the first n outputs and n-1 inputs form the initial state.
struct Trajectory {
  std::vector<double> inputs;
  std::vector<double> outputs;
  std::optional<std::vector<double>> noisy_outputs;

  std::size_t length() const { return inputs.size(); }

  void validate() const {
    if (outputs.size() != inputs.size() + 1)
      throw DataError("trajectory needs exactly one more output than inputs");
    if (noisy_outputs && noisy_outputs->size() != outputs.size())
      throw DataError("noisy output channel length differs from outputs");
  }

  const std::vector<double>& channel(bool noisy) const {
    if (!noisy) return outputs;
    if (!noisy_outputs) throw DataError("trajectory has no noisy output channel");
    return *noisy_outputs;
  }
};

/// zeta = [y(t-n+1..t); u(t-n+1..t-1)].
struct AugmentedState {
  int n = 0;
  Vector values;

  AugmentedState() = default;
  AugmentedState(int order, Vector v) : n(order), values(std::move(v)) {
    if (order < 1) throw DimensionError("model order must be at least 1");
    if (values.size() != 2 * order - 1) throw DimensionError("augmented state must have dimension 2n-1");
  }

  double latest_output() const { return values(n - 1); }
  auto outputs() const { return values.head(n); }
  auto inputs() const { return values.tail(n - 1); }
};

/// Drop the oldest output and input, append y_next and u_now.
inline Vector shift_state(const Vector& zeta, int n, double y_next, double u_now) {
  if (n < 1 || zeta.size() != 2 * n - 1) throw DimensionError("state dimension inconsistent with order");
  Vector out(zeta.size());
  for (int k = 0; k + 1 < n; ++k) out(k) = zeta(k + 1);
  out(n - 1) = y_next;
  if (n > 1) {
    for (int k = 0; k + 2 < n; ++k) out(n + k) = zeta(n + k + 1);
    out(2 * n - 2) = u_now;
  }
  return out;
}

inline AugmentedState shift_state(const AugmentedState& zeta, double y_next, double u_now) {
  return AugmentedState(zeta.n, shift_state(zeta.values, zeta.n, y_next, u_now));
}

struct Record {
  Vector xi;         // [target; zeta]
  Vector zeta;
  double target = 0;  // y+ (delay 1) or y++ (delay 2)
  double input = 0;
  Vector successor;  // one-step successor of zeta
};

class NarxDataset {
 public:
  NarxDataset() = default;

  // Keeps the first occurrence of each xi (bitwise comparison).
  NarxDataset(int n, int delay, std::vector<Record> records) : n_(n), delay_(delay) {
    if (n < 1) throw DimensionError("model order must be at least 1");
    if (delay != 1 && delay != 2) throw DataError("delay must be 1 or 2");
    std::set<std::vector<std::uint64_t>> seen;
    for (auto& r : records) {
      if (r.zeta.size() != 2 * n - 1 || r.successor.size() != 2 * n - 1 || r.xi.size() != 2 * n)
        throw DimensionError("record dimension inconsistent with order");
      std::vector<std::uint64_t> key(static_cast<std::size_t>(r.xi.size()));
      for (Eigen::Index k = 0; k < r.xi.size(); ++k) key[static_cast<std::size_t>(k)] = std::bit_cast<std::uint64_t>(r.xi(k));
      if (seen.insert(std::move(key)).second) records_.push_back(std::move(r));
    }
    const auto N = static_cast<Eigen::Index>(records_.size());
    xi_.resize(N, 2 * n);
    zeta_.resize(N, 2 * n - 1);
    successor_.resize(N, 2 * n - 1);
    inputs_.resize(N);
    targets_.resize(N);
    for (Eigen::Index i = 0; i < N; ++i) {
      const auto& r = records_[static_cast<std::size_t>(i)];
      xi_.row(i) = r.xi.transpose();
      zeta_.row(i) = r.zeta.transpose();
      successor_.row(i) = r.successor.transpose();
      inputs_(i) = r.input;
      targets_(i) = r.target;
    }
  }

  int order() const { return n_; }
  int delay() const { return delay_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  int state_dimension() const { return 2 * n_ - 1; }

  const std::vector<Record>& records() const { return records_; }
  const Record& operator[](std::size_t i) const { return records_[i]; }

  const PointMatrix& xi() const { return xi_; }
  const PointMatrix& zeta() const { return zeta_; }
  const PointMatrix& successors() const { return successor_; }
  const Vector& inputs() const { return inputs_; }
  const Vector& targets() const { return targets_; }

 private:
  int n_ = 1;
  int delay_ = 1;
  std::vector<Record> records_;
  PointMatrix xi_, zeta_, successor_;
  Vector inputs_, targets_;
};

/// Records k = 0..N-1 read straight off the trajectory:
///   zeta = [y(k..k+n-1); u(k..k+n-2)], input u(k+n-1),
///   target y(k+n) (delay 1) or y(k+n+1) (delay 2),
///   successor = [y(k+1..k+n); u(k+1..k+n-1)].
inline NarxDataset build_dataset(const Trajectory& traj, int n, int delay, bool noisy = false) {
  traj.validate();
  if (n < 1) throw DimensionError("model order must be at least 1");
  if (delay != 1 && delay != 2) throw DataError("delay must be 1 or 2");
  const auto T = static_cast<long>(traj.length());
  const long N = T - n + 2 - delay;
  if (N < 1) throw DataError("trajectory too short for the requested order and delay");
  const auto& y = traj.channel(noisy);
  const auto& u = traj.inputs;
  const int d = 2 * n - 1;
  std::vector<Record> records;
  records.reserve(static_cast<std::size_t>(N));
  for (long k = 0; k < N; ++k) {
    Record r;
    r.zeta.resize(d);
    r.successor.resize(d);
    for (int j = 0; j < n; ++j) {
      r.zeta(j) = y[static_cast<std::size_t>(k + j)];
      r.successor(j) = y[static_cast<std::size_t>(k + j + 1)];
    }
    for (int j = 0; j + 1 < n; ++j) {
      r.zeta(n + j) = u[static_cast<std::size_t>(k + j)];
      r.successor(n + j) = u[static_cast<std::size_t>(k + j + 1)];
    }
    r.input = u[static_cast<std::size_t>(k + n - 1)];
    r.target = y[static_cast<std::size_t>(k + n - 1 + delay)];
    r.xi.resize(d + 1);
    r.xi(0) = r.target;
    r.xi.tail(d) = r.zeta;
    records.push_back(std::move(r));
  }
  return NarxDataset(n, delay, std::move(records));
}

inline NarxDataset merge(const std::vector<NarxDataset>& parts) {
  if (parts.empty()) throw DataError("nothing to merge");
  const int n = parts.front().order();
  const int delay = parts.front().delay();
  std::vector<Record> all;
  for (const auto& p : parts) {
    if (p.order() != n || p.delay() != delay) throw DataError("cannot merge datasets with different order or delay");
    all.insert(all.end(), p.records().begin(), p.records().end());
  }
  return NarxDataset(n, delay, std::move(all));
}

inline NarxDataset build_dataset(const std::vector<Trajectory>& trajs, int n, int delay, bool noisy = false) {
  std::vector<NarxDataset> parts;
  parts.reserve(trajs.size());
  for (const auto& t : trajs) parts.push_back(build_dataset(t, n, delay, noisy));
  if (parts.empty()) return NarxDataset(n, delay, {});
  return merge(parts);
}

// ---- trajectory files --------------------------------------------------------
// Header `t,u,y[,y_noisy]`; the u cell is empty on the last row of each segment.
// Several segments may share a file; each restarts at t=0.

inline void write_trajectories(std::ostream& out, const std::vector<Trajectory>& trajs) {
  const bool noisy = !trajs.empty() && trajs.front().noisy_outputs.has_value();
  out << (noisy ? "t,u,y,y_noisy\n" : "t,u,y\n");
  for (const auto& tr : trajs) {
    tr.validate();
    if (tr.noisy_outputs.has_value() != noisy) throw DataError("mixed noisy and clean trajectories in one file");
    for (std::size_t t = 0; t < tr.outputs.size(); ++t) {
      out << t << ',';
      if (t < tr.inputs.size()) out << format_double(tr.inputs[t]);
      out << ',' << format_double(tr.outputs[t]);
      if (noisy) out << ',' << format_double((*tr.noisy_outputs)[t]);
      out << '\n';
    }
  }
}

inline void write_trajectories(const std::filesystem::path& path, const std::vector<Trajectory>& trajs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_trajectories(out, trajs);
  if (!out) throw DataError("write failed for " + path.string());
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace detail

inline std::vector<Trajectory> read_trajectories(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty trajectory file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  bool noisy = false;
  if (line == "t,u,y,y_noisy") noisy = true;
  else if (line != "t,u,y") throw DataError("unexpected trajectory header: " + line);

  std::vector<Trajectory> out;
  Trajectory cur;
  bool open_input = false;  // previous row had an empty u
  auto finish = [&] {
    if (cur.outputs.empty()) return;
    if (!open_input) throw DataError("trajectory segment does not end with an empty input cell");
    cur.validate();
    out.push_back(std::move(cur));
    cur = Trajectory{};
    open_input = false;
  };
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() != (noisy ? 4u : 3u)) throw DataError("wrong column count on line " + std::to_string(lineno));
    const auto t = static_cast<std::size_t>(std::stoul(cells[0]));
    if (t == 0) finish();
    if (t != cur.outputs.size()) throw DataError("non-consecutive time index on line " + std::to_string(lineno));
    if (open_input) throw DataError("empty input cell before the end of a segment on line " + std::to_string(lineno));
    try {
      if (cells[1].empty()) open_input = true;
      else cur.inputs.push_back(parse_double(cells[1]));
      cur.outputs.push_back(parse_double(cells[2]));
      if (noisy) {
        if (!cur.noisy_outputs) cur.noisy_outputs.emplace();
        cur.noisy_outputs->push_back(parse_double(cells[3]));
      }
    } catch (const std::invalid_argument& e) {
      throw DataError(std::string(e.what()) + " on line " + std::to_string(lineno));
    }
  }
  finish();
  return out;
}

inline std::vector<Trajectory> read_trajectories(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  return read_trajectories(in);
}

}  // namespace invctl
