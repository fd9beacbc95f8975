#pragma once

// Short-iterate Lanczos propagation of |psi(t)> = exp(-i H t)|psi(0)> and the
// observables recorded along the way.

#include "qds3/errors.hpp"
#include "qds3/sparse.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace qds3::evolve {

/// Amplitudes over (3 levels) x (bath); level is the slow index.
struct SystemBathState {
  Eigen::VectorXcd amplitudes;

  std::int64_t bath_dimension() const { return amplitudes.size() / 3; }

  /// |level> (x) |bath vacuum>
  static SystemBathState level_vacuum(int level, std::int64_t dimension) {
    if (level < 0 || level > 2) throw PreconditionError("level_vacuum: level must be 0, 1 or 2");
    if (dimension % 3 != 0) throw PreconditionError("level_vacuum: dimension must be a multiple of 3");
    SystemBathState s;
    s.amplitudes = Eigen::VectorXcd::Zero(dimension);
    s.amplitudes(level * (dimension / 3)) = 1.0;
    return s;
  }
};

struct TrajectoryRow {
  double t = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
  double p3 = 0.0;
  double lam3 = 0.0;
  double lam8 = 0.0;
  double re_c12 = 0.0;  ///< Re <psi| (|1><2| (x) 1) |psi>
  double im_c12 = 0.0;
  double norm = 0.0;
  double energy = 0.0;
};

struct Trajectory {
  static constexpr const char* kCsvHeader = "t,p1,p2,p3,lam3,lam8,re_c12,im_c12,norm,energy";

  std::vector<TrajectoryRow> rows;
  double energy_scale = 0.0;  ///< ||H psi(0)||, an upper bound on |E(0)|

  double max_norm_drift() const {
    double worst = 0.0;
    for (const auto& r : rows) worst = std::max(worst, std::abs(r.norm - rows.front().norm));
    return worst;
  }

  double max_relative_energy_drift() const {
    double worst = 0.0;
    const double e0 = rows.front().energy;
    double scale = std::max(energy_scale, std::abs(e0));
    if (scale == 0.0) scale = 1.0;
    for (const auto& r : rows) worst = std::max(worst, std::abs(r.energy - e0) / scale);
    return worst;
  }

  void write_csv(std::ostream& os) const {
    os << kCsvHeader << '\n';
    std::ostringstream line;
    line << std::setprecision(17);
    for (const auto& r : rows) {
      line.str("");
      line << r.t << ',' << r.p1 << ',' << r.p2 << ',' << r.p3 << ',' << r.lam3 << ',' << r.lam8 << ','
           << r.re_c12 << ',' << r.im_c12 << ',' << r.norm << ',' << r.energy << '\n';
      os << line.str();
    }
  }
};

inline TrajectoryRow observe(double t, const SparseOperator& h, const Eigen::VectorXcd& psi) {
  const std::int64_t nb = psi.size() / 3;
  const auto block = [&](int l) { return psi.segment(l * nb, nb); };
  TrajectoryRow r;
  r.t = t;
  r.p1 = block(0).squaredNorm();
  r.p2 = block(1).squaredNorm();
  r.p3 = block(2).squaredNorm();
  r.lam3 = r.p1 - r.p2;
  r.lam8 = (r.p1 + r.p2 - 2.0 * r.p3) / std::sqrt(3.0);
  const cplx c12 = block(0).dot(block(1));  // sum conj(psi_1) psi_2
  r.re_c12 = c12.real();
  r.im_c12 = c12.imag();
  r.norm = psi.norm();
  r.energy = psi.dot(h.apply(psi)).real();
  return r;
}

struct KrylovOptions {
  int subspace = 24;          ///< Lanczos vectors per restart
  double tolerance = 1e-10;   ///< local error target per accepted sub-step
  int max_halvings = 30;      ///< sub-step refinements before StepFailure
};

/// Advances psi by time `h` using as many Lanczos restarts as needed.
inline Eigen::VectorXcd krylov_advance(const SparseOperator& hmat, Eigen::VectorXcd psi, double h,
                                       const KrylovOptions& opt) {
  const std::int64_t n = psi.size();
  const int m_max = static_cast<int>(std::min<std::int64_t>(opt.subspace, n));
  double remaining = h;
  double trial = h;
  Eigen::MatrixXcd basis(n, m_max);

  while (remaining > 0.0) {
    const double beta0 = psi.norm();
    if (beta0 == 0.0) return psi;
    basis.col(0) = psi / beta0;
    std::vector<double> alpha;
    std::vector<double> beta;
    int m = 0;
    double residual_beta = 0.0;
    for (int j = 0; j < m_max; ++j) {
      Eigen::VectorXcd w = hmat.apply(basis.col(j));
      const double a = basis.col(j).dot(w).real();
      alpha.push_back(a);
      w -= a * basis.col(j);
      if (j > 0) w -= beta[static_cast<std::size_t>(j - 1)] * basis.col(j - 1);
      for (int i = 0; i <= j; ++i) w -= basis.col(i).dot(w) * basis.col(i);
      const double b = w.norm();
      m = j + 1;
      residual_beta = b;
      if (b <= 1e-14 * (std::abs(a) + 1.0)) {
        residual_beta = 0.0;
        break;
      }
      if (j + 1 < m_max) {
        beta.push_back(b);
        basis.col(j + 1) = w / b;
      }
    }

    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) t(i, i) = alpha[static_cast<std::size_t>(i)];
    for (int i = 0; i + 1 < m; ++i) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(t);
    const Eigen::MatrixXd& q = eig.eigenvectors();
    const Eigen::VectorXd& lam = eig.eigenvalues();

    double step = std::min(trial, remaining);
    Eigen::VectorXcd y;
    for (int halvings = 0;; ++halvings) {
      Eigen::VectorXcd phase(m);
      for (int i = 0; i < m; ++i) phase(i) = std::polar(1.0, -lam(i) * step) * q(0, i);
      y = q.cast<cplx>() * phase;
      const double err = beta0 * residual_beta * std::abs(y(m - 1));
      if (err <= opt.tolerance) break;
      if (halvings >= opt.max_halvings)
        throw StepFailure("krylov_advance: local error " + std::to_string(err) + " above tolerance at step " +
                          std::to_string(step));
      step *= 0.5;
    }
    psi = beta0 * (basis.leftCols(m) * y);
    remaining -= step;
    if (remaining < 1e-15 * h) remaining = 0.0;
    trial = step;
  }
  return psi;
}

/// Rows at t = 0, dt, 2 dt, ..., t_final.
inline Trajectory evolve(const SparseOperator& h, const SystemBathState& psi0, double t_final, double dt,
                         const KrylovOptions& opt = {}) {
  if (!(dt > 0.0)) throw PreconditionError("evolve: dt must be > 0");
  if (!(t_final >= 0.0)) throw PreconditionError("evolve: t_final must be >= 0");
  if (psi0.amplitudes.size() != h.dimension())
    throw PreconditionError("evolve: state and Hamiltonian dimensions differ");
  if (psi0.amplitudes.size() % 3 != 0) throw PreconditionError("evolve: dimension must be a multiple of 3");
  if (std::abs(psi0.amplitudes.norm() - 1.0) > 1e-9) throw PreconditionError("evolve: initial state not normalised");

  const auto steps = static_cast<std::int64_t>(std::llround(t_final / dt));
  Trajectory traj;
  traj.energy_scale = h.apply(psi0.amplitudes).norm();
  traj.rows.reserve(static_cast<std::size_t>(steps + 1));
  Eigen::VectorXcd psi = psi0.amplitudes;
  traj.rows.push_back(observe(0.0, h, psi));
  for (std::int64_t s = 1; s <= steps; ++s) {
    psi = krylov_advance(h, std::move(psi), dt, opt);
    traj.rows.push_back(observe(static_cast<double>(s) * dt, h, psi));
  }
  return traj;
}

}  // namespace qds3::evolve
