#pragma once

// Truncated chiral-fermion Fock space on a finite momentum window.
//
// Modes are ordered by slot n (ascending) and then by flavour:
//   mode(n, f) = (n - n_min) * flavors + f.
// A basis state is an occupation bitstring (bit j <-> mode j). Fermionic signs
// follow the Jordan-Wigner string over lower-indexed modes.

#include "qds3/errors.hpp"
#include "qds3/linalg.hpp"
#include "qds3/sparse.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <unordered_map>
#include <utility>
#include <vector>

namespace qds3::fock {

using Bits = std::uint64_t;
inline constexpr int kMaxModes = 64;

struct MomentumWindow {
  int n_min = -1;
  int n_max = 1;
  double length_L = 2.0 * kPi;

  int slots() const { return n_max - n_min + 1; }
  double momentum(int n) const { return 2.0 * kPi * n / length_L; }

  void validate() const {
    if (!(n_min < 0 && n_max > 0)) throw PreconditionError("MomentumWindow: need n_min < 0 < n_max");
    if (!(length_L > 0.0)) throw PreconditionError("MomentumWindow: length_L must be > 0");
  }

  /// Symmetric window n in [-half_width, half_width].
  static MomentumWindow symmetric(int half_width, double length_L = 2.0 * kPi) {
    return {-half_width, half_width, length_L};
  }
};

/// Sparse state vector over occupation bitstrings.
class FockVector {
 public:
  FockVector() = default;
  FockVector(Bits b, cplx amp) { amps_.emplace(b, amp); }

  void add(Bits b, cplx amp) { amps_[b] += amp; }
  cplx amplitude(Bits b) const {
    auto it = amps_.find(b);
    return it == amps_.end() ? cplx{} : it->second;
  }
  std::size_t size() const { return amps_.size(); }
  bool empty() const { return amps_.empty(); }

  auto begin() const { return amps_.begin(); }
  auto end() const { return amps_.end(); }

  double norm() const {
    double s = 0.0;
    for (const auto& [b, a] : amps_) s += std::norm(a);
    return std::sqrt(s);
  }

  FockVector& operator+=(const FockVector& o) {
    for (const auto& [b, a] : o.amps_) amps_[b] += a;
    return *this;
  }
  FockVector& operator-=(const FockVector& o) {
    for (const auto& [b, a] : o.amps_) amps_[b] -= a;
    return *this;
  }
  FockVector& operator*=(cplx s) {
    for (auto& [b, a] : amps_) a *= s;
    return *this;
  }
  friend FockVector operator-(FockVector a, const FockVector& b) { return a -= b; }
  friend FockVector operator+(FockVector a, const FockVector& b) { return a += b; }
  friend FockVector operator*(cplx s, FockVector a) { return a *= s; }

  /// <this|other>
  cplx dot(const FockVector& other) const {
    cplx s{};
    for (const auto& [b, a] : amps_) s += std::conj(a) * other.amplitude(b);
    return s;
  }

 private:
  std::unordered_map<Bits, cplx> amps_;
};

struct BilinearTerm {
  cplx coeff;
  int create;
  int annihilate;
};

/// Matrix-free operator sum_i coeff_i c^dag_{create_i} c_{annihilate_i} + constant.
class FockOperator {
 public:
  FockOperator() = default;
  FockOperator(std::vector<BilinearTerm> terms, cplx constant = {})
      : terms_(std::move(terms)), constant_(constant) {}

  const std::vector<BilinearTerm>& terms() const { return terms_; }
  cplx constant() const { return constant_; }

  FockVector apply(const FockVector& psi) const {
    FockVector out;
    for (const auto& [bits, amp] : psi) {
      if (constant_ != cplx{}) out.add(bits, constant_ * amp);
      for (const auto& t : terms_) {
        const Bits qmask = Bits{1} << t.annihilate;
        if (!(bits & qmask)) continue;
        int parity = std::popcount(bits & (qmask - 1));
        const Bits mid = bits ^ qmask;
        const Bits pmask = Bits{1} << t.create;
        if (mid & pmask) continue;
        parity += std::popcount(mid & (pmask - 1));
        out.add(mid | pmask, (parity & 1 ? -1.0 : 1.0) * t.coeff * amp);
      }
    }
    return out;
  }

  FockOperator adjoint() const {
    std::vector<BilinearTerm> t;
    t.reserve(terms_.size());
    for (const auto& x : terms_) t.push_back({std::conj(x.coeff), x.annihilate, x.create});
    return {std::move(t), std::conj(constant_)};
  }

  /// Merges terms that share (create, annihilate) and drops zeros.
  FockOperator simplified() const {
    std::map<std::pair<int, int>, cplx> acc;
    for (const auto& t : terms_) acc[{t.create, t.annihilate}] += t.coeff;
    std::vector<BilinearTerm> t;
    for (const auto& [key, c] : acc)
      if (c != cplx{}) t.push_back({c, key.first, key.second});
    return {std::move(t), constant_};
  }

  friend FockOperator operator+(const FockOperator& a, const FockOperator& b) {
    std::vector<BilinearTerm> t = a.terms_;
    t.insert(t.end(), b.terms_.begin(), b.terms_.end());
    return FockOperator(std::move(t), a.constant_ + b.constant_).simplified();
  }
  friend FockOperator operator*(cplx s, const FockOperator& a) {
    std::vector<BilinearTerm> t = a.terms_;
    for (auto& x : t) x.coeff *= s;
    return {std::move(t), s * a.constant_};
  }
  friend FockOperator operator-(const FockOperator& a, const FockOperator& b) { return a + cplx(-1.0) * b; }

 private:
  std::vector<BilinearTerm> terms_;
  cplx constant_{};
};

/// Applies the commutator [a, b] to psi.
inline FockVector apply_commutator(const FockOperator& a, const FockOperator& b, const FockVector& psi) {
  return a.apply(b.apply(psi)) - b.apply(a.apply(psi));
}

class FermionFockSpace {
 public:
  FermionFockSpace(MomentumWindow w, int flavors, int full_basis_cap = 24)
      : window_(w), flavors_(flavors), full_cap_(full_basis_cap) {
    window_.validate();
    if (flavors != 1 && flavors != 3) throw PreconditionError("FermionFockSpace: flavors must be 1 or 3");
    if (modes() > kMaxModes)
      throw CapacityError("FermionFockSpace: " + std::to_string(modes()) + " modes exceed the " +
                          std::to_string(kMaxModes) + "-mode bitstring representation");
  }

  const MomentumWindow& window() const { return window_; }
  int flavors() const { return flavors_; }
  int modes() const { return window_.slots() * flavors_; }
  int full_basis_cap() const { return full_cap_; }

  int mode(int n, int flavor) const {
    if (n < window_.n_min || n > window_.n_max || flavor < 0 || flavor >= flavors_)
      throw PreconditionError("FermionFockSpace::mode: slot or flavor out of range");
    return (n - window_.n_min) * flavors_ + flavor;
  }
  int slot_of(int mode) const { return window_.n_min + mode / flavors_; }
  int flavor_of(int mode) const { return mode % flavors_; }
  bool contains_slot(int n) const { return n >= window_.n_min && n <= window_.n_max; }

  bool sea_occupied(int mode) const { return slot_of(mode) <= 0; }

  /// Reference state: every slot n <= 0 filled for every flavour.
  Bits fermi_sea() const {
    Bits b = 0;
    for (int m = 0; m < modes(); ++m)
      if (sea_occupied(m)) b |= Bits{1} << m;
    return b;
  }

  /// Normal-ordered charge of `bits` relative to the Fermi sea (all flavours when flavor < 0).
  int charge(Bits bits, int flavor = -1) const {
    int q = 0;
    for (int m = 0; m < modes(); ++m) {
      if (flavor >= 0 && flavor_of(m) != flavor) continue;
      const bool occ = (bits >> m) & 1;
      if (occ && !sea_occupied(m)) ++q;
      if (!occ && sea_occupied(m)) --q;
    }
    return q;
  }

  /// Sum over modes of the normal-ordered number operator (one flavour or all).
  FockOperator number_operator(int flavor = -1) const {
    std::vector<BilinearTerm> t;
    cplx constant{};
    for (int m = 0; m < modes(); ++m) {
      if (flavor >= 0 && flavor_of(m) != flavor) continue;
      t.push_back({1.0, m, m});
      if (sea_occupied(m)) constant -= 1.0;
    }
    return {std::move(t), constant};
  }

  /// All 2^modes occupation strings, sorted.
  std::vector<Bits> enumerate_full() const {
    if (modes() > full_cap_)
      throw CapacityError("FermionFockSpace::enumerate_full: " + std::to_string(modes()) +
                          " modes exceed the full-basis cap of " + std::to_string(full_cap_));
    std::vector<Bits> out(std::size_t{1} << modes());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<Bits>(i);
    return out;
  }

  /// Fixed total charge sector (sorted), bounded by full_basis_cap modes.
  std::vector<Bits> enumerate_charge(int total_charge) const {
    std::vector<Bits> out;
    for (Bits b : enumerate_full())
      if (charge(b) == total_charge) out.push_back(b);
    return out;
  }

  /// Matrix of `op` on a sorted basis; the basis must be closed under `op`.
  SparseOperator materialize(const FockOperator& op, const std::vector<Bits>& basis) const {
    std::vector<Triplet> entries;
    for (std::size_t col = 0; col < basis.size(); ++col) {
      const FockVector image = op.apply(FockVector(basis[col], 1.0));
      for (const auto& [bits, amp] : image) {
        if (amp == cplx{}) continue;
        auto it = std::lower_bound(basis.begin(), basis.end(), bits);
        if (it == basis.end() || *it != bits)
          throw PreconditionError("FermionFockSpace::materialize: basis is not closed under the operator");
        entries.emplace_back(static_cast<std::int64_t>(it - basis.begin()), static_cast<std::int64_t>(col), amp);
      }
    }
    return SparseOperator(static_cast<std::int64_t>(basis.size()), entries);
  }

 private:
  MomentumWindow window_;
  int flavors_;
  int full_cap_;
};

inline FermionFockSpace build_space(const MomentumWindow& w, int flavors, int full_basis_cap = 24) {
  return FermionFockSpace(w, flavors, full_basis_cap);
}

}  // namespace qds3::fock
