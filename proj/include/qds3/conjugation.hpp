#pragma once

// Checks the unitary conjugation U H0 U^dag with U = exp(i sum_A phi_A(0) S_A)
// on a truncated boson space, and the channel-0 displaced oscillator.
//
// S_A are the Jacobi-normalised diagonal generators
//   S_3 = (e11 - e22)/sqrt2, S_8 = (e11 + e22 - 2 e33)/sqrt6, S_0 = 1/sqrt3.
// Every S_A is level-diagonal and different (channel, mode) pairs act on
// different tensor factors, so U factorises exactly into one exponential per
// (channel, mode); each factor is computed and checked on its own
// 3 x (n_max + 1) space.

#include "qds3/couplings.hpp"
#include "qds3/errors.hpp"
#include "qds3/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <vector>

namespace qds3::conjugation {

/// Level eigenvalues of S_3, S_8, S_0 (rows) on levels 1..3 (columns).
inline std::array<std::array<double, 3>, 3> jacobi_generators() {
  const double r2 = std::sqrt(2.0), r6 = std::sqrt(6.0), r3 = std::sqrt(3.0);
  return {{{1.0 / r2, -1.0 / r2, 0.0}, {1.0 / r6, 1.0 / r6, -2.0 / r6}, {1.0 / r3, 1.0 / r3, 1.0 / r3}}};
}

inline Eigen::MatrixXcd lowering(int n_max) {
  Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(n_max + 1, n_max + 1);
  for (int n = 1; n <= n_max; ++n) b(n - 1, n) = std::sqrt(static_cast<double>(n));
  return b;
}

/// Dense (3 (n_max+1))-dimensional operator diag(levels) (x) bath.
inline Eigen::MatrixXcd level_kron(const std::array<double, 3>& levels, const Eigen::MatrixXcd& bath) {
  const auto d = bath.rows();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(3 * d, 3 * d);
  for (int l = 0; l < 3; ++l) out.block(l * d, l * d, d, d) = levels[static_cast<std::size_t>(l)] * bath;
  return out;
}

struct ConjugationReport {
  double deviation = 0.0;             ///< max |U H0 U^dag - expected| on the kept block
  double displaced_deviation = 0.0;   ///< max |E_n - (omega n - g^2/omega)| for kept n
  double constant_shift = 0.0;        ///< sum_k omega_k lambda_k^2 (per level, all channels)
  double constant_level_spread = 0.0; ///< spread of that constant across the three levels
  int occupation_cutoff = 0;
};

/// Occupations <= n_max / 3 are kept by default: the finite displacement
/// leaks truncation error well below the top two levels.
inline int default_cutoff(int n_max) { return n_max / 3; }

inline ConjugationReport conjugation_check(int n_modes, int n_max, AcsCouplings c, int occupation_cutoff = -1) {
  if (n_modes < 1) throw PreconditionError("conjugation_check: n_modes must be >= 1");
  if (n_max < 3) throw PreconditionError("conjugation_check: n_max must be >= 3");
  if (3 * (n_max + 1) > 600) throw CapacityError("conjugation_check: per-factor space too large");
  c.validate();
  if (occupation_cutoff < 0) occupation_cutoff = default_cutoff(n_max);
  if (occupation_cutoff > n_max) throw PreconditionError("conjugation_check: cutoff above n_max");

  const auto gens = jacobi_generators();
  const Eigen::MatrixXcd b = lowering(n_max);
  const Eigen::MatrixXcd bd = b.adjoint();
  const Eigen::MatrixXcd number = bd * b;
  const Eigen::MatrixXcd x = b + bd;
  const Eigen::MatrixXcd p = b - bd;
  const auto d = n_max + 1;
  const std::array<double, 3> ones{1.0, 1.0, 1.0};

  ConjugationReport rep;
  rep.occupation_cutoff = occupation_cutoff;
  std::array<double, 3> level_constant{0.0, 0.0, 0.0};

  for (int n = 1; n <= n_modes; ++n) {
    const double k = 2.0 * kPi * n / c.length_L;
    const double omega = c.v_fermi * k;
    const double damp = std::exp(-c.reg_a * k / 2.0);
    const double lam = -std::sqrt(2.0 * kPi / (c.length_L * k)) * damp;  // phi(0) = lam (b + b^dag)
    const double drive = c.v_fermi * std::sqrt(2.0 * kPi * k / c.length_L) * damp;
    const Eigen::MatrixXcd h0 = level_kron(ones, omega * number);

    for (const auto& s : gens) {
      const Eigen::MatrixXcd u = expm((I_unit * lam * level_kron(s, x)).eval());
      const Eigen::MatrixXcd lhs = u * h0 * u.adjoint();
      const std::array<double, 3> s2{s[0] * s[0], s[1] * s[1], s[2] * s[2]};
      const Eigen::MatrixXcd expected = h0 - drive * I_unit * level_kron(s, p) +
                                        omega * lam * lam * level_kron(s2, Eigen::MatrixXcd::Identity(d, d));
      for (int l = 0; l < 3; ++l)
        for (int lp = 0; lp < 3; ++lp)
          for (int i = 0; i <= occupation_cutoff; ++i)
            for (int j = 0; j <= occupation_cutoff; ++j)
              rep.deviation = std::max(rep.deviation, std::abs(lhs(l * d + i, lp * d + j) - expected(l * d + i, lp * d + j)));
      for (int l = 0; l < 3; ++l) level_constant[static_cast<std::size_t>(l)] += omega * lam * lam * s2[static_cast<std::size_t>(l)];
    }

    // Channel 0 after combining the longitudinal and kinetic linear terms:
    // omega b^dag b + g (b + b^dag), g = C_k S_0.
    const double factor = 1.0 - c.j_par * c.length_L / (2.0 * kPi * c.v_fermi);
    const double g = -drive * factor / std::sqrt(3.0);
    const Eigen::MatrixXcd hd = omega * number + g * x;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(hd, Eigen::EigenvaluesOnly);
    for (int m = 0; m <= occupation_cutoff; ++m)
      rep.displaced_deviation =
          std::max(rep.displaced_deviation, std::abs(eig.eigenvalues()(m) - (omega * m - g * g / omega)));
  }

  rep.constant_shift = level_constant[0];
  rep.constant_level_spread = std::max({level_constant[0], level_constant[1], level_constant[2]}) -
                              std::min({level_constant[0], level_constant[1], level_constant[2]});
  return rep;
}

}  // namespace qds3::conjugation
