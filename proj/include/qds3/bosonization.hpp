#pragma once

// Finite-window constructive bosonisation. Boson modes are window-truncated
// fermion bilinears; the identities they satisfy are checked on a validity
// sector where truncation cannot be seen.

#include "qds3/errors.hpp"
#include "qds3/fock.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <unordered_set>
#include <vector>

namespace qds3::bosonization {

using fock::Bits;
using fock::FermionFockSpace;
using fock::FockOperator;
using fock::FockVector;

/// b_k and b_k^dag for k = 2 pi k_index / L:
///   b_k^dag = i sqrt(2pi/(L k)) sum_p c^dag_{p+k} c_p   (pairs inside the window)
struct BosonMode {
  FockOperator lower;
  FockOperator raise;
};

inline BosonMode boson_mode(const FermionFockSpace& space, int k_index, int flavor = 0) {
  const auto& w = space.window();
  if (k_index < 1 || k_index > w.n_max - w.n_min)
    throw PreconditionError("boson_mode: k index out of range [1, n_max - n_min]");
  // 2 pi / (L k) = 1 / k_index
  const cplx pref = I_unit / std::sqrt(static_cast<double>(k_index));
  std::vector<fock::BilinearTerm> t;
  for (int p = w.n_min; p + k_index <= w.n_max; ++p)
    t.push_back({pref, space.mode(p + k_index, flavor), space.mode(p, flavor)});
  FockOperator raise(std::move(t));
  return {raise.adjoint(), raise};
}

/// States whose lowest n_protect slots are filled and highest n_protect slots
/// are empty, for every flavour.
struct ValiditySector {
  int n_protect = 0;

  bool contains(const FermionFockSpace& space, Bits bits) const {
    const auto& w = space.window();
    for (int f = 0; f < space.flavors(); ++f)
      for (int j = 0; j < n_protect; ++j) {
        if (!((bits >> space.mode(w.n_min + j, f)) & 1)) return false;
        if ((bits >> space.mode(w.n_max - j, f)) & 1) return false;
      }
    return true;
  }

  void validate(const FermionFockSpace& space) const {
    const auto& w = space.window();
    if (n_protect < 0 || n_protect > std::min(-w.n_min, w.n_max))
      throw PreconditionError("ValiditySector: n_protect must lie in [0, min(|n_min|, n_max)]");
  }
};

namespace detail {
template <typename F>
void for_each_combination(const std::vector<int>& items, int choose, F&& f) {
  const int n = static_cast<int>(items.size());
  if (choose > n || choose < 0) return;
  std::vector<int> idx(static_cast<std::size_t>(choose));
  for (int i = 0; i < choose; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    Bits mask = 0;
    for (int i : idx) mask |= Bits{1} << items[static_cast<std::size_t>(i)];
    f(mask);
    int i = choose - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - choose + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < choose; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}
}  // namespace detail

/// Sector states with total charge in `charges` and at most `max_pairs`
/// particle-hole pairs on top of the charge ground state. Sorted, unique.
inline std::vector<Bits> enumerate_sector(const FermionFockSpace& space, const ValiditySector& sector,
                                          const std::vector<int>& charges, int max_pairs) {
  sector.validate(space);
  std::vector<int> below;  // free modes occupied in the sea
  std::vector<int> above;  // free modes empty in the sea
  const auto& w = space.window();
  for (int m = 0; m < space.modes(); ++m) {
    const int n = space.slot_of(m);
    if (n < w.n_min + sector.n_protect || n > w.n_max - sector.n_protect) continue;
    (space.sea_occupied(m) ? below : above).push_back(m);
  }
  const Bits sea = space.fermi_sea();
  std::vector<Bits> out;
  for (int q : charges)
    for (int pairs = 0; pairs <= max_pairs; ++pairs) {
      const int n_particles = pairs + std::max(q, 0);
      const int n_holes = pairs + std::max(-q, 0);
      if (n_particles > static_cast<int>(above.size()) || n_holes > static_cast<int>(below.size())) continue;
      detail::for_each_combination(below, n_holes, [&](Bits holes) {
        detail::for_each_combination(above, n_particles, [&](Bits parts) { out.push_back((sea & ~holes) | parts); });
      });
    }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// max over states of || ([b_k, b^dag_k'] - delta_kk') |psi> ||.
inline double commutator_residual(const FermionFockSpace& space, int k_index, int kp_index,
                                  const std::vector<Bits>& states, int flavor = 0, int flavor_p = 0) {
  const BosonMode bk = boson_mode(space, k_index, flavor);
  const BosonMode bkp = boson_mode(space, kp_index, flavor_p);
  const double delta = (k_index == kp_index && flavor == flavor_p) ? 1.0 : 0.0;
  double worst = 0.0;
  for (Bits s : states) {
    const FockVector psi(s, 1.0);
    FockVector r = fock::apply_commutator(bk.lower, bkp.raise, psi);
    if (delta != 0.0) r -= cplx(delta) * psi;
    worst = std::max(worst, r.norm());
  }
  return worst;
}

/// Overload scanning every state of the validity sector with <= max_pairs excitations
/// (all charges reachable by max_pairs extra particles or holes).
inline double commutator_residual(const FermionFockSpace& space, int k_index, int kp_index,
                                  const ValiditySector& sector, int max_pairs = 2) {
  std::vector<int> charges;
  for (int q = -max_pairs; q <= max_pairs; ++q) charges.push_back(q);
  return commutator_residual(space, k_index, kp_index, enumerate_sector(space, sector, charges, max_pairs));
}

struct TwoPointComparison {
  cplx numeric;
  cplx analytic;
  double rel_err = 0.0;
};

/// Regularised equal-time two-point function <0|psi^dag(x) psi(0)|0> from the
/// window's Fermi-sea occupations, against (2pi/L) / (1 - exp(-2 pi i (x - i a)/L)).
inline TwoPointComparison two_point_compare(const FermionFockSpace& space, double x, double a) {
  const auto& w = space.window();
  const double L = w.length_L;
  if (!(a > 0.0)) throw PreconditionError("two_point_compare: a must be > 0");
  if (!(std::abs(x) < 0.5 * L)) throw PreconditionError("two_point_compare: need |x| < L/2");
  const FockVector sea(space.fermi_sea(), 1.0);
  TwoPointComparison out;
  for (int n = w.n_min; n <= w.n_max; ++n) {
    const int m = space.mode(n, 0);
    const FockOperator number({{1.0, m, m}});
    const double occupation = sea.dot(number.apply(sea)).real();
    if (occupation == 0.0) continue;
    out.numeric += occupation * std::polar(std::exp(2.0 * kPi * n * a / L), 2.0 * kPi * n * x / L);
  }
  out.numeric *= 2.0 * kPi / L;
  out.analytic = (2.0 * kPi / L) / (1.0 - std::exp(-2.0 * kPi * I_unit * cplx(x, -a) / L));
  out.rel_err = std::abs(out.numeric - out.analytic) / std::abs(out.analytic);
  return out;
}

namespace detail {
inline void require_single_flavor(const FermionFockSpace& space, const char* what) {
  if (space.flavors() != 1) throw PreconditionError(std::string(what) + ": single-flavour space required");
}
}  // namespace detail

/// Fermionic local density sum_{p,p'} :c^dag_p c_p': (window-restricted).
inline FockOperator fermion_density(const FermionFockSpace& space) {
  std::vector<fock::BilinearTerm> t;
  for (int m = 0; m < space.modes(); ++m)
    for (int mp = 0; mp < space.modes(); ++mp) t.push_back({1.0, m, mp});
  return FockOperator(std::move(t), space.number_operator().constant());
}

/// sum_{k>0} sqrt(kL/2pi) e^{-ka/2} i (b_k - b_k^dag) + N.
inline FockOperator boson_density(const FermionFockSpace& space, double a) {
  const auto& w = space.window();
  FockOperator acc = space.number_operator();
  for (int n = 1; n <= w.n_max - w.n_min; ++n) {
    const BosonMode b = boson_mode(space, n);
    const double weight = std::sqrt(static_cast<double>(n)) * std::exp(-kPi * n * a / w.length_L);
    acc = acc + (I_unit * weight) * (b.lower - b.raise);
  }
  return acc;
}

struct DensityCheck {
  double residual = 0.0;          ///< max |<phi|L_ferm - L_bos|psi>| over sector pairs
  double diagonal_defect = 0.0;   ///< max |<psi|L_ferm|psi> - <psi|N|psi>|
  std::size_t states = 0;
};

inline DensityCheck density_identity_residual(const FermionFockSpace& space, const ValiditySector& sector, double a,
                                              int max_pairs = 3, std::vector<int> charges = {0}) {
  detail::require_single_flavor(space, "density_identity_residual");
  if (!(a > 0.0)) throw PreconditionError("density_identity_residual: a must be > 0");
  const std::vector<Bits> states = enumerate_sector(space, sector, charges, max_pairs);
  const std::unordered_set<Bits> in_sector(states.begin(), states.end());
  const FockOperator lf = fermion_density(space);
  const FockOperator diff = (lf - boson_density(space, a)).simplified();
  const FockOperator number = space.number_operator();

  DensityCheck out;
  out.states = states.size();
  for (Bits s : states) {
    const FockVector psi(s, 1.0);
    for (const auto& [bits, amp] : diff.apply(psi))
      if (in_sector.count(bits)) out.residual = std::max(out.residual, std::abs(amp));
    const cplx dl = psi.dot(lf.apply(psi)) - psi.dot(number.apply(psi));
    out.diagonal_defect = std::max(out.diagonal_defect, std::abs(dl));
  }
  return out;
}

/// sum_p v_F p :c^dag_p c_p:
inline FockOperator fermion_kinetic(const FermionFockSpace& space, double v_fermi) {
  std::vector<fock::BilinearTerm> t;
  cplx constant{};
  for (int m = 0; m < space.modes(); ++m) {
    const double e = v_fermi * space.window().momentum(space.slot_of(m));
    t.push_back({e, m, m});
    if (space.sea_occupied(m)) constant -= e;
  }
  return {std::move(t), constant};
}

/// sum_{k>0} v_F k b_k^dag b_k applied to psi.
inline FockVector apply_boson_kinetic(const FermionFockSpace& space, double v_fermi, const FockVector& psi) {
  const auto& w = space.window();
  FockVector out;
  for (int n = 1; n <= w.n_max - w.n_min; ++n) {
    const BosonMode b = boson_mode(space, n);
    FockVector term = b.raise.apply(b.lower.apply(psi));
    term *= cplx(v_fermi * w.momentum(n));
    out += term;
  }
  return out;
}

struct KineticFit {
  double residual = 0.0;   ///< max_psi || (H_ferm - H_bos - poly(N)) psi ||
  double c = 0.0;          ///< coefficient of N^2
  double c0 = 0.0;         ///< coefficient of N
  double constant = 0.0;
  std::size_t states = 0;
};

/// Fits H_ferm - H_bos = C N^2 + C0 N + const over sector states of the given charges.
inline KineticFit kinetic_identity_fit(const FermionFockSpace& space, const ValiditySector& sector,
                                       double v_fermi = 1.0, std::vector<int> charges = {-2, -1, 0, 1, 2},
                                       int max_pairs = 64) {
  detail::require_single_flavor(space, "kinetic_identity_fit");
  const std::vector<Bits> states = enumerate_sector(space, sector, charges, max_pairs);
  if (states.size() < 3) throw PreconditionError("kinetic_identity_fit: too few sector states");
  const FockOperator hf = fermion_kinetic(space, v_fermi);

  std::vector<FockVector> diffs;
  diffs.reserve(states.size());
  Eigen::MatrixXd design(static_cast<Eigen::Index>(states.size()), 3);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(states.size()));
  for (std::size_t i = 0; i < states.size(); ++i) {
    const FockVector psi(states[i], 1.0);
    diffs.push_back(hf.apply(psi) - apply_boson_kinetic(space, v_fermi, psi));
    const double q = space.charge(states[i]);
    const auto row = static_cast<Eigen::Index>(i);
    design(row, 0) = q * q;
    design(row, 1) = q;
    design(row, 2) = 1.0;
    rhs(row) = psi.dot(diffs.back()).real();
  }
  const Eigen::Vector3d coef = design.colPivHouseholderQr().solve(rhs);

  KineticFit out{0.0, coef(0), coef(1), coef(2), states.size()};
  for (std::size_t i = 0; i < states.size(); ++i) {
    const double q = space.charge(states[i]);
    FockVector r = diffs[i];
    r -= cplx(out.c * q * q + out.c0 * q + out.constant) * FockVector(states[i], 1.0);
    out.residual = std::max(out.residual, r.norm());
  }
  return out;
}

}  // namespace qds3::bosonization
