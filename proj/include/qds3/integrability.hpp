#pragma once

// Particle-impurity scattering matrix, the trigonometric R-matrix and the
// coupling reparametrisation that identifies one with the other.
//
// Two-site operators act on (particle) x (impurity); the particle index is the
// slow one: row = 3 * alpha + gamma.

#include "qds3/couplings.hpp"
#include "qds3/errors.hpp"
#include "qds3/linalg.hpp"
#include "qds3/su3.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace qds3::integrability {

using TwoSiteOperator = Eigen::Matrix<cplx, 9, 9>;
using ThreeSiteOperator = Eigen::Matrix<cplx, 27, 27>;

inline constexpr int pair_index(int particle, int impurity) { return 3 * particle + impurity; }

/// e_ab (x) e_cd
inline TwoSiteOperator kron(const su3::MatrixC3& a, const su3::MatrixC3& b) {
  TwoSiteOperator out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out.block<3, 3>(3 * i, 3 * j) = a(i, j) * b;
  return out;
}

inline TwoSiteOperator swap_operator() {
  TwoSiteOperator p = TwoSiteOperator::Zero();
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) p(pair_index(a, b), pair_index(b, a)) = 1.0;
  return p;
}

namespace detail {
inline double pair_phase(const AcsCouplings& c, int a, int b) {
  if (a == 0 && b == 1) return c.zeta12;
  if (a == 0 && b == 2) return c.zeta13;
  return c.zeta23;
}
}  // namespace detail

/// H_int = J_par sum_a e_aa(x)e_aa + J_perp sum_{a<b} (e^{i zeta_ab} e_ab(x)e_ba + h.c.)
inline TwoSiteOperator build_interaction(const AcsCouplings& c) {
  using su3::elementary;
  TwoSiteOperator h = TwoSiteOperator::Zero();
  for (int a = 0; a < 3; ++a) {
    h += c.j_par * kron(elementary(a, a), elementary(a, a));
    for (int b = a + 1; b < 3; ++b) {
      const cplx phase = std::polar(1.0, detail::pair_phase(c, a, b));
      h += c.j_perp * (phase * kron(elementary(a, b), elementary(b, a)) +
                       std::conj(phase) * kron(elementary(b, a), elementary(a, b)));
    }
  }
  return h;
}

/// S = exp(i H). Rejects non-Hermitian generators.
inline TwoSiteOperator scattering_matrix(const TwoSiteOperator& h) {
  if (hermiticity_defect(h) > 1e-12)
    throw PreconditionError("scattering_matrix: generator is not Hermitian");
  return expm((I_unit * h).eval());
}

/// Closed form of exp(i H_int): e^{iJpar} on |aa>, cos Jperp on |ab> (a != b),
/// i sin Jperp e^{+-i zeta_ab} on the exchange entries.
inline TwoSiteOperator scattering_closed_form(const AcsCouplings& c) {
  using su3::elementary;
  TwoSiteOperator s = TwoSiteOperator::Zero();
  const cplx diag_same = std::polar(1.0, c.j_par);
  for (int a = 0; a < 3; ++a) {
    s += diag_same * kron(elementary(a, a), elementary(a, a));
    for (int b = 0; b < 3; ++b)
      if (a != b) s += std::cos(c.j_perp) * kron(elementary(a, a), elementary(b, b));
    for (int b = a + 1; b < 3; ++b) {
      const cplx phase = std::polar(1.0, detail::pair_phase(c, a, b));
      s += I_unit * std::sin(c.j_perp) *
           (phase * kron(elementary(a, b), elementary(b, a)) +
            std::conj(phase) * kron(elementary(b, a), elementary(a, b)));
    }
  }
  return s;
}

/// Logarithmic R-matrix parameters: x = e^{i f_bar}, q = e^{mu_bar}.
struct TrigParams {
  double f_bar = 0.0;
  double mu_bar = 0.0;
};

/// R = sinh(i f + mu) sum e_aa(x)e_aa + i sin f sum_{a!=b} e_aa(x)e_bb
///     + sinh mu sum_{a<b} (e^{if} e_ab(x)e_ba + e^{-if} e_ba(x)e_ab)
inline TwoSiteOperator build_r_matrix(const TrigParams& t) {
  using su3::elementary;
  const cplx same = std::sinh(cplx(t.mu_bar, t.f_bar));
  const cplx mixed = I_unit * std::sin(t.f_bar);
  const double exch = std::sinh(t.mu_bar);
  const cplx x = std::polar(1.0, t.f_bar);
  TwoSiteOperator r = TwoSiteOperator::Zero();
  for (int a = 0; a < 3; ++a) {
    r += same * kron(elementary(a, a), elementary(a, a));
    for (int b = 0; b < 3; ++b)
      if (a != b) r += mixed * kron(elementary(a, a), elementary(b, b));
    for (int b = a + 1; b < 3; ++b)
      r += exch * (x * kron(elementary(a, b), elementary(b, a)) +
                   std::conj(x) * kron(elementary(b, a), elementary(a, b)));
  }
  return r;
}

/// Embeds a two-site operator into V(x)V(x)V acting on the sites (first, second).
inline ThreeSiteOperator embed(const TwoSiteOperator& r, int first, int second) {
  ThreeSiteOperator out = ThreeSiteOperator::Zero();
  const int spectator = 3 - first - second;
  for (int row = 0; row < 27; ++row)
    for (int col = 0; col < 27; ++col) {
      const std::array<int, 3> ri = {row / 9, (row / 3) % 3, row % 3};
      const std::array<int, 3> ci = {col / 9, (col / 3) % 3, col % 3};
      if (ri[static_cast<std::size_t>(spectator)] != ci[static_cast<std::size_t>(spectator)]) continue;
      out(row, col) = r(pair_index(ri[static_cast<std::size_t>(first)], ri[static_cast<std::size_t>(second)]),
                        pair_index(ci[static_cast<std::size_t>(first)], ci[static_cast<std::size_t>(second)]));
    }
  return out;
}

/// || R12(f1) R13(f1+f2) R23(f2) - R23(f2) R13(f1+f2) R12(f1) ||_F / || R12 R13 R23 ||_F
/// at common mu. Returns 0 when both products vanish.
inline double yang_baxter_residual(double f1, double f2, double mu) {
  const ThreeSiteOperator r12 = embed(build_r_matrix({f1, mu}), 0, 1);
  const ThreeSiteOperator r13 = embed(build_r_matrix({f1 + f2, mu}), 0, 2);
  const ThreeSiteOperator r23 = embed(build_r_matrix({f2, mu}), 1, 2);
  const ThreeSiteOperator lhs = r12 * r13 * r23;
  const ThreeSiteOperator rhs = r23 * r13 * r12;
  const double scale = lhs.norm();
  const double diff = (lhs - rhs).norm();
  if (scale == 0.0) return diff;
  return diff / scale;
}

/// Couplings -> (f_bar, mu_bar) with cosh mu = cos Jpar / cos Jperp and
/// cot^2 f = sin^2 Jpar / (sin(Jperp+Jpar) sin(Jperp-Jpar)); f in (0, pi/2], mu >= 0.
inline TrigParams reparametrize(double j_par, double j_perp) {
  const double prod = std::sin(j_perp + j_par) * std::sin(j_perp - j_par);
  if (std::abs(prod) <= 1e-14) throw DegenerateError("reparametrize: isotropic point |J_par| = |J_perp|");
  const double cos_perp = std::cos(j_perp);
  if (std::abs(cos_perp) <= 1e-12) throw DomainError("reparametrize: cos(J_perp) = 0");
  const double ratio = std::cos(j_par) / cos_perp;
  if (ratio < 1.0) throw DomainError("reparametrize: cos(J_par)/cos(J_perp) < 1");
  if (prod < 0.0) throw DomainError("reparametrize: cot^2(f) would be negative");
  TrigParams t;
  t.mu_bar = std::acosh(ratio);
  t.f_bar = std::atan2(std::sqrt(prod), std::abs(std::sin(j_par)));
  return t;
}

/// Returns a copy of `base` with J_par, J_perp set and all three phases equal to f_bar.
inline AcsCouplings solvable_couplings(double j_par, double j_perp, AcsCouplings base = {}) {
  const TrigParams t = reparametrize(j_par, j_perp);
  base.j_par = j_par;
  base.j_perp = j_perp;
  base.zeta12 = base.zeta13 = base.zeta23 = t.f_bar;
  return base;
}

struct SolvabilityMatch {
  TrigParams params;       ///< principal-branch output of reparametrize
  TrigParams branch;       ///< signed parameters that matched
  cplx scale{0.0, 0.0};    ///< least-squares c in S ~ c R
  double residual = 0.0;   ///< ||S - cR||_F / ||cR||_F
};

inline double phase_distance(double a, double b) {
  return std::abs(std::remainder(a - b, 2.0 * kPi));
}

/// Certifies S = exp(i H_int) is proportional to an R-matrix. Requires equal
/// phases zeta12 = zeta13 = zeta23; the four sign branches (+-f, +-mu) are searched.
inline SolvabilityMatch match_s_to_r(const AcsCouplings& c, double mismatch_tol = 1e-6) {
  if (phase_distance(c.zeta12, c.zeta13) > 1e-12 || phase_distance(c.zeta12, c.zeta23) > 1e-12)
    throw PreconditionError("match_s_to_r: requires zeta12 = zeta13 = zeta23");
  const TrigParams principal = reparametrize(c.j_par, c.j_perp);
  const TwoSiteOperator s = scattering_matrix(build_interaction(c));

  SolvabilityMatch best;
  best.params = principal;
  best.residual = std::numeric_limits<double>::infinity();
  for (int fs : {1, -1})
    for (int ms : {1, -1}) {
      const TrigParams branch{fs * principal.f_bar, ms * principal.mu_bar};
      const TwoSiteOperator r = build_r_matrix(branch);
      const double rr = r.squaredNorm();
      if (rr == 0.0) continue;
      const cplx scale = (r.adjoint() * s).trace() / rr;
      const double res = (s - scale * r).norm() / (std::abs(scale) * std::sqrt(rr));
      if (res < best.residual) {
        best.branch = branch;
        best.scale = scale;
        best.residual = res;
      }
    }
  if (!(best.residual <= mismatch_tol))
    throw MismatchError("match_s_to_r: best branch residual " + std::to_string(best.residual) +
                        " exceeds " + std::to_string(mismatch_tol));
  return best;
}

}  // namespace qds3::integrability
