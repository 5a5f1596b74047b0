#pragma once

#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace isohom {

using Real = double;
using Complex = std::complex<double>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using RealVector = Vector<Real>;
using RealMatrix = Matrix<Real>;
using ComplexVector = Vector<Complex>;
using ComplexMatrix = Matrix<Complex>;

/// Integer frequency vector q in Z^n. Lexicographic order is the canonical order.
using Frequency = std::vector<int>;

inline constexpr Real kPi = std::numbers::pi;
inline constexpr Real kTwoPi = 2.0 * std::numbers::pi;

inline int sup_norm(const Frequency& q) {
  int m = 0;
  for (int v : q) m = std::max(m, v < 0 ? -v : v);
  return m;
}

inline Frequency negate(Frequency q) {
  for (int& v : q) v = -v;
  return q;
}

inline Real dot(const Frequency& q, const RealVector& x) {
  Real s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) s += q[i] * x[static_cast<Eigen::Index>(i)];
  return s;
}

inline long squared_norm(const Frequency& q) {
  long s = 0;
  for (int v : q) s += static_cast<long>(v) * v;
  return s;
}

/// All frequency vectors with |q|_inf <= bound, in lexicographic order.
std::vector<Frequency> frequency_box(int dim, int bound);

/// Uniform grid on [0, 2pi)^dim with res points per axis; row i of the result is
/// the i-th point, first axis slowest.
RealMatrix torus_grid(int dim, int res);

}  // namespace isohom
