#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>

namespace qds3 {

using cplx = std::complex<double>;
inline constexpr cplx I_unit{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

/// Largest entrywise modulus of `a - b`.
template <typename A, typename B>
double max_abs_diff(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

/// Largest entrywise modulus of `m - m^dagger`.
template <typename M>
double hermiticity_defect(const Eigen::MatrixBase<M>& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

/// Dense matrix exponential by scaling and squaring with the [13/13] Pade
/// approximant. Works for any square complex Eigen matrix; the 1-norm decides
/// the number of squarings.
template <typename Derived>
auto expm(const Eigen::MatrixBase<Derived>& a_in) {
  using Mat = Eigen::Matrix<typename Derived::Scalar, Derived::RowsAtCompileTime,
                            Derived::ColsAtCompileTime>;
  static constexpr std::array<double, 14> b = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
      1187353796428800.0,  129060195264000.0,   10559470521600.0,
      670442572800.0,      33522128640.0,       1323241920.0,
      40840800.0,          960960.0,            16380.0,
      182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;

  Mat a = a_in;
  const auto n = a.rows();
  if (a.cwiseAbs().maxCoeff() == 0.0) return Mat(Mat::Identity(n, n));
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
    a /= std::ldexp(1.0, squarings);
  }

  const Mat id = Mat::Identity(n, n);
  const Mat a2 = a * a;
  const Mat a4 = a2 * a2;
  const Mat a6 = a4 * a2;
  const Mat u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
                      b[3] * a2 + b[1] * id;
  const Mat u = a * u_inner;
  const Mat v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 +
                b[2] * a2 + b[0] * id;
  Mat r = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) r = (r * r).eval();
  return r;
}

}  // namespace qds3
