#pragma once

#include "qds3/errors.hpp"
#include "qds3/linalg.hpp"

#include <cmath>

namespace qds3 {

/// Parameters of the anisotropic Coqblin-Schrieffer fermion-gas model
/// (hbar = 1). Phases are radians; fields h1..h3 couple to S_11..S_33.
struct AcsCouplings {
  double j_par = 0.0;
  double j_perp = 0.0;
  double zeta12 = 0.0;
  double zeta13 = 0.0;
  double zeta23 = 0.0;
  double h1 = 0.0;
  double h2 = 0.0;
  double h3 = 0.0;
  double length_L = 2.0 * kPi;
  double v_fermi = 1.0;
  double reg_a = 0.1;

  /// Throws PreconditionError on non-positive kinematics or non-finite input,
  /// and wraps the phases into [0, 2pi).
  void validate() {
    for (double v : {j_par, j_perp, zeta12, zeta13, zeta23, h1, h2, h3, length_L, v_fermi, reg_a})
      if (!std::isfinite(v)) throw PreconditionError("AcsCouplings: non-finite parameter");
    if (length_L <= 0.0) throw PreconditionError("AcsCouplings: length_L must be > 0");
    if (v_fermi <= 0.0) throw PreconditionError("AcsCouplings: v_fermi must be > 0");
    if (reg_a <= 0.0) throw PreconditionError("AcsCouplings: reg_a must be > 0");
    zeta12 = wrap_phase(zeta12);
    zeta13 = wrap_phase(zeta13);
    zeta23 = wrap_phase(zeta23);
  }

  static double wrap_phase(double z) {
    double w = std::fmod(z, 2.0 * kPi);
    if (w < 0.0) w += 2.0 * kPi;
    return w;
  }
};

}  // namespace qds3
