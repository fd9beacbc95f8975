#pragma once

// Three-level quantum dissipative system with two ohmic bath channels that
// couple through lambda_3 and lambda_8.

#include "qds3/couplings.hpp"
#include "qds3/errors.hpp"
#include "qds3/sparse.hpp"
#include "qds3/su3.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace qds3::qds {

struct QdsParams {
  double eps3 = 0.0;
  double eps8 = 0.0;
  double delta = 0.0;
  double zeta = 0.0;
  double alpha = 0.0;
  double omega_c = 1.0;

  void validate() const {
    for (double v : {eps3, eps8, delta, zeta, alpha, omega_c})
      if (!std::isfinite(v)) throw PreconditionError("QdsParams: non-finite parameter");
    if (alpha < 0.0) throw PreconditionError("QdsParams: alpha must be >= 0");
    if (omega_c <= 0.0) throw PreconditionError("QdsParams: omega_c must be > 0");
  }
};

struct BathMode {
  double omega = 0.0;
  double coupling = 0.0;
};

/// Mode ladder shared by the lambda_3 and lambda_8 channels (equal couplings).
struct BathDiscretization {
  std::vector<BathMode> modes;
  int n_max = 1;

  void validate() const {
    if (modes.empty()) throw PreconditionError("BathDiscretization: need at least one mode");
    if (n_max < 1) throw PreconditionError("BathDiscretization: n_max must be >= 1");
    for (std::size_t i = 0; i < modes.size(); ++i) {
      if (!(modes[i].omega > 0.0)) throw PreconditionError("BathDiscretization: omega_k must be > 0");
      if (i > 0 && !(modes[i].omega > modes[i - 1].omega))
        throw PreconditionError("BathDiscretization: omega_k must be strictly increasing");
      if (!std::isfinite(modes[i].coupling)) throw PreconditionError("BathDiscretization: non-finite C_k");
    }
  }
};

/// AC-S couplings and charge-sector data -> QDS parameters.
///
/// eps3, eps8 are the lambda_3 / lambda_8 components of the traceless part of
/// diag(h1, h2, h3), shifted by the charge-sector detuning correction.
inline QdsParams map_acs_to_qds(AcsCouplings c, const su3::ChargeSector& sector = {}) {
  c.validate();
  const su3::DetuningShift shift = su3::detuning_shift(sector);
  const double x = c.j_par * c.length_L / (2.0 * kPi * c.v_fermi);
  QdsParams q;
  q.eps3 = 0.5 * (c.h1 - c.h2) + shift.d_eps3;
  q.eps8 = (c.h1 + c.h2 - 2.0 * c.h3) / (2.0 * std::sqrt(3.0)) + shift.d_eps8;
  q.delta = -c.j_perp * c.length_L / (2.0 * kPi * c.reg_a);
  q.zeta = AcsCouplings::wrap_phase(c.zeta23 - c.zeta13 + c.zeta12);
  q.alpha = (1.0 - x) * (1.0 - x);
  q.omega_c = c.v_fermi / c.reg_a;
  return q;
}

/// omega_n = 2 pi v_F n / L and
/// C_k = -v_F sqrt(2 pi k / L) e^{-omega_k / 2 omega_c} (1 - J_par L / 2 pi v_F), k = 2 pi n / L.
inline BathDiscretization build_bath(int n_modes, AcsCouplings c, int n_max = 1) {
  if (n_modes < 1) throw PreconditionError("build_bath: n_modes must be >= 1");
  c.validate();
  const double omega_c = c.v_fermi / c.reg_a;
  const double factor = 1.0 - c.j_par * c.length_L / (2.0 * kPi * c.v_fermi);
  BathDiscretization b;
  b.n_max = n_max;
  for (int n = 1; n <= n_modes; ++n) {
    const double k = 2.0 * kPi * n / c.length_L;
    const double omega = c.v_fermi * k;
    const double coupling =
        -c.v_fermi * std::sqrt(2.0 * kPi * k / c.length_L) * std::exp(-omega / (2.0 * omega_c)) * factor;
    b.modes.push_back({omega, coupling});
  }
  b.validate();
  return b;
}

/// Same ladder specified directly by QDS data: omega_n = n * spacing and
/// C_n = -sqrt(spacing * alpha * omega_n * e^{-omega_n/omega_c}).
inline BathDiscretization build_ohmic_bath(int n_modes, double spacing, const QdsParams& q, int n_max = 1) {
  if (n_modes < 1) throw PreconditionError("build_ohmic_bath: n_modes must be >= 1");
  if (!(spacing > 0.0)) throw PreconditionError("build_ohmic_bath: spacing must be > 0");
  q.validate();
  BathDiscretization b;
  b.n_max = n_max;
  for (int n = 1; n <= n_modes; ++n) {
    const double omega = n * spacing;
    b.modes.push_back({omega, -std::sqrt(spacing * q.alpha * omega * std::exp(-omega / q.omega_c))});
  }
  b.validate();
  return b;
}

/// eps3 lambda_3 + eps8 lambda_8 + Delta (lambda_1 + lambda_4 + cos(zeta) lambda_6 + sin(zeta) lambda_7)
inline su3::MatrixC3 impurity_block(const QdsParams& q) {
  static const su3::GellMannBasis g = su3::build_basis();
  return q.eps3 * g[3] + q.eps8 * g[8] +
         q.delta * (g[1] + g[4] + std::cos(q.zeta) * g[6] + std::sin(q.zeta) * g[7]);
}

/// Tunnelling block with independent pair phases: entry (a, b), a < b, is
/// Delta e^{-i zeta_ab}. Its spectrum depends on zeta23 - zeta13 + zeta12 only.
inline su3::MatrixC3 tunnelling_block(double delta, double zeta12, double zeta13, double zeta23) {
  su3::MatrixC3 m = su3::MatrixC3::Zero();
  m(0, 1) = delta * std::polar(1.0, -zeta12);
  m(0, 2) = delta * std::polar(1.0, -zeta13);
  m(1, 2) = delta * std::polar(1.0, -zeta23);
  m(1, 0) = std::conj(m(0, 1));
  m(2, 0) = std::conj(m(0, 2));
  m(2, 1) = std::conj(m(1, 2));
  return m;
}

/// One bath channel: a level-diagonal coupling operator and its mode list.
struct BathChannel {
  su3::MatrixC3 coupling_operator;
  std::vector<BathMode> modes;
};

/// Product basis: index = level * bath_dimension + sum_j occ_j (n_max + 1)^j,
/// j running over the modes of channel 0, then channel 1, ...
class QdsLayout {
 public:
  QdsLayout(int total_modes, int n_max, std::int64_t dimension_cap) : n_max_(n_max), total_modes_(total_modes) {
    bath_dim_ = 1;
    for (int j = 0; j < total_modes; ++j) {
      if (bath_dim_ > dimension_cap / (3 * (n_max + 1)))
        throw CapacityError("QdsLayout: dimension exceeds cap of " + std::to_string(dimension_cap));
      bath_dim_ *= (n_max + 1);
    }
    if (3 * bath_dim_ > dimension_cap)
      throw CapacityError("QdsLayout: dimension exceeds cap of " + std::to_string(dimension_cap));
  }

  std::int64_t bath_dimension() const { return bath_dim_; }
  std::int64_t dimension() const { return 3 * bath_dim_; }
  int n_max() const { return n_max_; }
  int total_modes() const { return total_modes_; }

  std::int64_t stride(int j) const {
    std::int64_t s = 1;
    for (int i = 0; i < j; ++i) s *= (n_max_ + 1);
    return s;
  }
  int occupation(std::int64_t bath_index, int j) const {
    return static_cast<int>((bath_index / stride(j)) % (n_max_ + 1));
  }

 private:
  int n_max_;
  int total_modes_;
  std::int64_t bath_dim_;
};

inline constexpr std::int64_t kDefaultDimensionCap = std::int64_t{1} << 22;

/// H = impurity (x) 1 + sum_j omega_j b_j^dag b_j + sum_j C_j X_ch(j) (x) (b_j + b_j^dag).
inline SparseOperator assemble_channels(const su3::MatrixC3& impurity, const std::vector<BathChannel>& channels,
                                        int n_max, std::int64_t dimension_cap = kDefaultDimensionCap) {
  if (n_max < 1) throw PreconditionError("assemble_channels: n_max must be >= 1");
  int total = 0;
  for (const auto& ch : channels) {
    if (!ch.coupling_operator.isDiagonal(0.0))
      throw PreconditionError("assemble_channels: channel coupling operator must be level-diagonal");
    total += static_cast<int>(ch.modes.size());
  }
  const QdsLayout layout(total, n_max, dimension_cap);
  const std::int64_t nb = layout.bath_dimension();

  std::vector<double> omegas;
  std::vector<double> couplings;
  std::vector<int> owner;
  for (std::size_t c = 0; c < channels.size(); ++c)
    for (const auto& m : channels[c].modes) {
      omegas.push_back(m.omega);
      couplings.push_back(m.coupling);
      owner.push_back(static_cast<int>(c));
    }

  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(3 * nb * (1 + 2 * total) + 6 * nb));
  for (int l = 0; l < 3; ++l)
    for (int lp = 0; lp < 3; ++lp) {
      if (l == lp || impurity(l, lp) == cplx{}) continue;
      for (std::int64_t b = 0; b < nb; ++b) entries.emplace_back(l * nb + b, lp * nb + b, impurity(l, lp));
    }
  for (int l = 0; l < 3; ++l)
    for (std::int64_t b = 0; b < nb; ++b) {
      double diag = impurity(l, l).real();
      for (int j = 0; j < total; ++j) diag += omegas[static_cast<std::size_t>(j)] * layout.occupation(b, j);
      entries.emplace_back(l * nb + b, l * nb + b, diag);
      for (int j = 0; j < total; ++j) {
        const int occ = layout.occupation(b, j);
        if (occ >= n_max) continue;
        const double x = channels[static_cast<std::size_t>(owner[static_cast<std::size_t>(j)])].coupling_operator(l, l).real();
        const double v = couplings[static_cast<std::size_t>(j)] * x * std::sqrt(occ + 1.0);
        if (v == 0.0) continue;
        const std::int64_t up = b + layout.stride(j);
        entries.emplace_back(l * nb + up, l * nb + b, v);
        entries.emplace_back(l * nb + b, l * nb + up, v);
      }
    }
  return SparseOperator(layout.dimension(), entries);
}

inline SparseOperator assemble_hamiltonian(const QdsParams& q, const BathDiscretization& bath,
                                           std::int64_t dimension_cap = kDefaultDimensionCap) {
  q.validate();
  bath.validate();
  static const su3::GellMannBasis g = su3::build_basis();
  return assemble_channels(impurity_block(q), {{g[3], bath.modes}, {g[8], bath.modes}}, bath.n_max, dimension_cap);
}

/// exp(-(omega - center)^2 / (2 width^2))
struct GaussianTestFunction {
  double center = 0.0;
  double width = 1.0;

  double operator()(double omega) const {
    const double z = (omega - center) / width;
    return std::exp(-0.5 * z * z);
  }
};

struct SpectralCheck {
  double discrete = 0.0;    ///< sum_k C_k^2 f(omega_k)
  double continuum = 0.0;   ///< int alpha omega e^{-omega/omega_c} f(omega) d omega
  double rel_residual = 0.0;
};

inline double ohmic_density(const QdsParams& q, double omega) {
  return q.alpha * omega * std::exp(-omega / q.omega_c);
}

inline SpectralCheck spectral_density_residual(const BathDiscretization& bath, const QdsParams& q,
                                               const GaussianTestFunction& f) {
  bath.validate();
  q.validate();
  if (!(f.width > 0.0)) throw PreconditionError("spectral_density_residual: width must be > 0");
  SpectralCheck out;
  for (const auto& m : bath.modes) out.discrete += m.coupling * m.coupling * f(m.omega);

  const double upper = std::max(f.center + 40.0 * f.width, 1e-12);
  const double lower = std::max(0.0, f.center - 40.0 * f.width);
  auto integrand = [&](double w) { return ohmic_density(q, w) * f(w); };
  out.continuum = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, lower, upper, 20, 1e-14);

  const double diff = std::abs(out.discrete - out.continuum);
  if (out.continuum == 0.0)
    out.rel_residual = diff;
  else
    out.rel_residual = diff / std::abs(out.continuum);
  return out;
}

}  // namespace qds3::qds
