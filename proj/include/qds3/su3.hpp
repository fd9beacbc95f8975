#pragma once

// U(3) / Gell-Mann algebra in the fundamental representation.
//
// Index conventions: flavour/level indices are 0-based (0,1,2). The basis is
// stored as lambda[0..8] so that lambda[3] and lambda[8] are the two diagonal
// generators and lambda[0] = sqrt(2/3) * identity.

#include "qds3/errors.hpp"
#include "qds3/linalg.hpp"

#include <array>
#include <cmath>

namespace qds3::su3 {

using MatrixC3 = Eigen::Matrix3cd;

struct GellMannBasis {
  std::array<MatrixC3, 9> lambdas;

  const MatrixC3& operator[](int a) const { return lambdas[static_cast<std::size_t>(a)]; }
};

/// Elementary matrix e_ab with a single unit entry at (a, b).
inline MatrixC3 elementary(int a, int b) {
  MatrixC3 e = MatrixC3::Zero();
  e(a, b) = 1.0;
  return e;
}

inline GellMannBasis build_basis() {
  GellMannBasis g;
  for (auto& m : g.lambdas) m.setZero();
  const double s3 = 1.0 / std::sqrt(3.0);

  g.lambdas[0] = std::sqrt(2.0 / 3.0) * MatrixC3::Identity();
  g.lambdas[1](0, 1) = 1.0;
  g.lambdas[1](1, 0) = 1.0;
  g.lambdas[2](0, 1) = -I_unit;
  g.lambdas[2](1, 0) = I_unit;
  g.lambdas[3](0, 0) = 1.0;
  g.lambdas[3](1, 1) = -1.0;
  g.lambdas[4](0, 2) = 1.0;
  g.lambdas[4](2, 0) = 1.0;
  g.lambdas[5](0, 2) = -I_unit;
  g.lambdas[5](2, 0) = I_unit;
  g.lambdas[6](1, 2) = 1.0;
  g.lambdas[6](2, 1) = 1.0;
  g.lambdas[7](1, 2) = -I_unit;
  g.lambdas[7](2, 1) = I_unit;
  g.lambdas[8](0, 0) = s3;
  g.lambdas[8](1, 1) = s3;
  g.lambdas[8](2, 2) = -2.0 * s3;
  return g;
}

/// max over A,B in {0..8} of |1/2 Tr(lambda_A lambda_B) - delta_AB|.
inline double orthogonality_residual(const GellMannBasis& g) {
  double worst = 0.0;
  for (int a = 0; a < 9; ++a)
    for (int b = 0; b < 9; ++b) {
      const cplx half_trace = 0.5 * (g[a] * g[b]).trace();
      worst = std::max(worst, std::abs(half_trace - (a == b ? 1.0 : 0.0)));
    }
  return worst;
}

/// Coordinates of a Hermitian 3x3 matrix in the orthonormal basis lambda_A / sqrt(2).
///
/// On the diagonal sector this reproduces the Jacobi three-body combinations
///   x3 = (x11 - x22)/sqrt2, x8 = (x11 + x22 - 2 x33)/sqrt6, x0 = (x11 + x22 + x33)/sqrt3.
struct OrthogonalCoords {
  std::array<double, 9> x{};

  double x0() const { return x[0]; }
  double x3() const { return x[3]; }
  double x8() const { return x[8]; }
  double operator[](int a) const { return x[static_cast<std::size_t>(a)]; }
};

inline OrthogonalCoords to_orthogonal_coords(const MatrixC3& m) {
  if (hermiticity_defect(m) > 1e-12)
    throw PreconditionError("to_orthogonal_coords: matrix is not Hermitian");
  static const GellMannBasis g = build_basis();
  OrthogonalCoords c;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int a = 0; a < 9; ++a) c.x[static_cast<std::size_t>(a)] = (m * g[a]).trace().real() * inv_sqrt2;
  return c;
}

inline MatrixC3 from_orthogonal_coords(const OrthogonalCoords& c) {
  static const GellMannBasis g = build_basis();
  MatrixC3 m = MatrixC3::Zero();
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int a = 0; a < 9; ++a) m += c[a] * inv_sqrt2 * g[a];
  return m;
}

/// Residual of the completeness relation
///   delta_ab delta_cd = 1/3 delta_cb delta_ad + 1/2 sum_{A=1..8} (lambda_A)_cb (lambda_A)_ad
/// maximised over all 81 index tuples. With `extended`, the sum runs over A = 0..8
/// and the explicit 1/3 term is dropped (lambda_0 carries it).
inline double completeness_residual(bool extended = false) {
  const GellMannBasis g = build_basis();
  double worst = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
          const double lhs = (a == b && c == d) ? 1.0 : 0.0;
          cplx rhs = 0.0;
          if (!extended && c == b && a == d) rhs += 1.0 / 3.0;
          for (int A = extended ? 0 : 1; A <= 8; ++A) rhs += 0.5 * g[A](c, b) * g[A](a, d);
          worst = std::max(worst, std::abs(lhs - rhs));
        }
  return worst;
}

/// max over (a,b,c,d) of || [e_ab, e_cd] - (delta_bc e_ad - delta_ad e_cb) ||_max.
inline double commutator_table_residual() {
  double worst = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
          const MatrixC3 lhs = elementary(a, b) * elementary(c, d) - elementary(c, d) * elementary(a, b);
          MatrixC3 rhs = MatrixC3::Zero();
          if (b == c) rhs += elementary(a, d);
          if (a == d) rhs -= elementary(c, b);
          worst = std::max(worst, max_abs_diff(lhs, rhs));
        }
  return worst;
}

/// Fixed-charge data used to project the residual fermion-number terms.
/// The coefficients C, C3, C8 depend on boundary conditions and are supplied
/// by the caller (or fitted, see bosonization::kinetic_identity_fit).
struct ChargeSector {
  int n0 = 0;
  double m3 = 0.0;
  double m8 = 0.0;
  double c = 0.0;
  double c3 = 0.0;
  double c8 = 0.0;
};

struct DetuningShift {
  double d_eps3 = 0.0;
  double d_eps8 = 0.0;
};

inline DetuningShift detuning_shift(const ChargeSector& s) {
  return {-(s.c * s.m3 + 0.5 * s.c3), -(s.c * s.m8 + 0.5 * s.c8)};
}

/// Weight (m, y): eigenvalues of lambda_3 and lambda_8 on a basis state.
struct Weight {
  double m = 0.0;
  double y = 0.0;
};

inline std::array<Weight, 3> fundamental_weights() {
  const GellMannBasis g = build_basis();
  std::array<Weight, 3> w;
  for (int k = 0; k < 3; ++k) w[static_cast<std::size_t>(k)] = {g[3](k, k).real(), g[8](k, k).real()};
  return w;
}

/// max over the three fundamental weights of |m^2 + y^2 - 4/3|.
inline double weight_residual() {
  double worst = 0.0;
  for (const auto& w : fundamental_weights())
    worst = std::max(worst, std::abs(w.m * w.m + w.y * w.y - 4.0 / 3.0));
  return worst;
}

}  // namespace qds3::su3
