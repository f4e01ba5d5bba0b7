#pragma once

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <cstddef>
#include <string>
#include <stdexcept>
#include <system_error>

namespace invctl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// One point per row.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Works across row/column vector expressions without forming a temporary.
template <class A, class B>
double squared_distance(const Eigen::DenseBase<A>& a, const Eigen::DenseBase<B>& b) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double d = a.coeff(i) - b.coeff(i);
    acc += d * d;
  }
  return acc;
}

template <class A, class B>
double distance(const Eigen::DenseBase<A>& a, const Eigen::DenseBase<B>& b) {
  return std::sqrt(squared_distance(a, b));
}

// Shortest decimal text that round-trips to the same double.
inline std::string format_double(double value) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

inline double parse_double(const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  while (first != last && *first == ' ') ++first;
  while (last != first && (last[-1] == ' ' || last[-1] == '\r')) --last;
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) throw std::invalid_argument("not a number: '" + text + "'");
  return v;
}

}  // namespace invctl
