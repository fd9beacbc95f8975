// Acceptance suite. Each criterion prints exactly one PASS/FAIL line.
// Usage: acceptance [criterion-number]   (no argument runs all twelve)

#include "qds3/bosonization.hpp"
#include "qds3/conjugation.hpp"
#include "qds3/evolve.hpp"
#include "qds3/integrability.hpp"
#include "qds3/qds.hpp"
#include "qds3/su3.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace qds3;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string sci(double v) { return fmt("%.3e", v); }

// 1. Algebra identities.
Outcome algebra() {
  const auto g = su3::build_basis();
  const double orth = su3::orthogonality_residual(g);
  const double comp = su3::completeness_residual(false);
  const double ext = su3::completeness_residual(true);
  double weight = 0.0;
  for (int l = 0; l < 3; ++l) {
    const double m = g[3](l, l).real(), y = g[8](l, l).real();
    weight = std::max(weight, std::abs(m * m + y * y - 4.0 / 3.0));
  }
  // "exact" in double precision: within two ulps of 4/3
  const double ulp2 = 2.0 * std::numeric_limits<double>::epsilon();
  return {comp <= 1e-14 && ext <= 1e-14 && orth <= 1e-14 && weight <= ulp2,
          "completeness=" + sci(comp) + " extended=" + sci(ext) + " orthogonality=" + sci(orth) +
              " weights=" + sci(weight) + " (tol 1e-14, weights 2ulp)"};
}

AcsCouplings random_couplings(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> j(-kPi, kPi), z(0.0, 2 * kPi);
  AcsCouplings c;
  c.j_par = j(rng);
  c.j_perp = j(rng);
  c.zeta12 = z(rng);
  c.zeta13 = z(rng);
  c.zeta23 = z(rng);
  return c;
}

// 2. exp(i H_int) against the closed form, with Eigen's exp as a second oracle.
Outcome scattering() {
  std::mt19937_64 rng(20240601);
  double worst = 0.0, oracle = 0.0;
  for (int s = 0; s < 100; ++s) {
    const auto c = random_couplings(rng);
    const auto h = integrability::build_interaction(c);
    const auto closed = integrability::scattering_closed_form(c);
    worst = std::max(worst, max_abs_diff(integrability::scattering_matrix(h), closed));
    const Eigen::MatrixXcd ref = Eigen::MatrixXcd(I_unit * h).exp();
    oracle = std::max(oracle, max_abs_diff(closed, ref));
  }
  return {worst <= 1e-12 && oracle <= 1e-12,
          "max|expm - closed|=" + sci(worst) + " max|closed - eigen exp|=" + sci(oracle) + " (tol 1e-12, 100 samples)"};
}

// 3. Yang-Baxter grid.
Outcome yang_baxter() {
  double worst = 0.0;
  int points = 0;
  for (int i = 1; i <= 14; ++i)
    for (int j = 1; j <= 14; ++j)
      for (double mu : {0.2, 0.5, 1.0}) {
        worst = std::max(worst, integrability::yang_baxter_residual(0.1 * i, 0.1 * j, mu));
        ++points;
      }
  return {worst <= 1e-10, "max relative residual=" + sci(worst) + " over " + std::to_string(points) + " points (tol 1e-10)"};
}

// 4. Solvability certificate plus domain errors.
Outcome solvability() {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  int mismatches = 0;
  for (int s = 0; s < 50; ++s) {
    const double jperp = 0.02 + (0.5 * kPi - 0.04) * u(rng);
    const double jpar = jperp * 0.98 * u(rng);
    const auto c = integrability::solvable_couplings(jpar, jperp);
    try {
      const auto m = integrability::match_s_to_r(c, 1.0);
      const auto r = integrability::build_r_matrix(m.branch);
      const auto smat = integrability::scattering_matrix(integrability::build_interaction(c));
      worst = std::max(worst, (smat - m.scale * r).norm() / r.norm());
    } catch (const MismatchError&) {
      ++mismatches;
    }
  }
  int raised = 0;
  for (int s = 0; s < 20; ++s) {
    const double jpar = 0.05 + (0.5 * kPi - 0.1) * u(rng);
    const double jperp = jpar * (0.02 + 0.96 * u(rng));
    try {
      (void)integrability::reparametrize(jpar, jperp);
    } catch (const DomainError&) {
      ++raised;
    }
  }
  return {worst <= 1e-9 && mismatches == 0 && raised == 20,
          "max ||S - cR||/||R||=" + sci(worst) + " mismatches=" + std::to_string(mismatches) +
              " DomainError raised " + std::to_string(raised) + "/20 (tol 1e-9)"};
}

// 5. Boson commutators on the validity sector plus an out-of-sector probe.
Outcome commutators() {
  const fock::FermionFockSpace space(fock::MomentumWindow::symmetric(12), 1);
  const bosonization::ValiditySector sector{4};
  std::vector<int> charges{-2, -1, 0, 1, 2};
  const auto states = bosonization::enumerate_sector(space, sector, charges, 2);
  double worst = 0.0;
  for (int k = 1; k <= 4; ++k)
    for (int kp = 1; kp <= 4; ++kp) worst = std::max(worst, bosonization::commutator_residual(space, k, kp, states));
  const double probe = bosonization::commutator_residual(space, 24, 24, std::vector<fock::Bits>{space.fermi_sea()});
  return {worst <= 1e-12 && probe > 0.1,
          "sector residual=" + sci(worst) + " on " + std::to_string(states.size()) +
              " states (tol 1e-12), probe k=k'=24 residual=" + fmt("%.4f", probe) + " (> 0.1)"};
}

// 6. Regularised two-point function.
Outcome two_point() {
  const double L = 2 * kPi;
  const fock::FermionFockSpace space(fock::MomentumWindow{-40, 1, L}, 1);
  double worst = 0.0;
  for (int i = -50; i <= 50; ++i)
    worst = std::max(worst, bosonization::two_point_compare(space, 0.25 * L * i / 50.0, 0.05 * L).rel_err);
  return {worst <= 1e-5, "max rel_err over |x| <= L/4=" + sci(worst) + " (tol 1e-5)"};
}

// 7. Kinetic identity and window independence.
Outcome kinetic() {
  const auto fit = [](int m) {
    const fock::FermionFockSpace space(fock::MomentumWindow::symmetric(m), 1);
    return bosonization::kinetic_identity_fit(space, bosonization::ValiditySector{m - 3});
  };
  const auto a = fit(10), b = fit(14);
  const double res = std::max(a.residual, b.residual);
  const double drift = std::max({std::abs(a.c - b.c), std::abs(a.c0 - b.c0), std::abs(a.constant - b.constant)});
  return {res <= 1e-10 && drift <= 1e-10,
          "post-fit residual=" + sci(res) + " coefficient drift M=10 vs 14=" + sci(drift) + " C=" + fmt("%.12f", a.c) +
              " (tol 1e-10)"};
}

// 8. Density identity over growing windows.
Outcome density() {
  const double L = 2 * kPi;
  std::vector<double> r;
  for (int m : {8, 12, 16}) {
    const fock::FermionFockSpace space(fock::MomentumWindow::symmetric(m, L), 1);
    r.push_back(bosonization::density_identity_residual(space, bosonization::ValiditySector{m / 2}, 0.02 * L).residual);
  }
  const bool monotone = r[1] < r[0] && r[2] < r[1];
  return {monotone && r[2] <= 1e-2, "residual M=8,12,16: " + sci(r[0]) + ", " + sci(r[1]) + ", " + sci(r[2]) +
                                        (monotone ? " monotone" : " not monotone") + " (need decreasing and <= 1e-2)"};
}

// 9. Spectral density and per-mode identity.
Outcome spectral() {
  AcsCouplings c;
  c.j_par = 0.15;
  c.reg_a = 0.1;
  c.length_L = 10 * kPi;  // 200 modes reach 4 omega_c
  const auto q = qds::map_acs_to_qds(c);
  const auto bath = qds::build_bath(200, c);
  const auto s = qds::spectral_density_residual(bath, q, {0.3 * q.omega_c, 0.1 * q.omega_c});
  double per_mode = 0.0;
  for (const auto& m : bath.modes) {
    const double lhs = m.coupling * m.coupling * c.length_L / (2 * kPi * c.v_fermi);
    const double rhs = q.alpha * m.omega * std::exp(-m.omega / q.omega_c);
    per_mode = std::max(per_mode, std::abs(lhs - rhs) / rhs);
  }
  return {s.rel_residual <= 0.02 && per_mode <= 1e-14,
          "relative residual=" + sci(s.rel_residual) + " (tol 2e-2), per-mode identity=" + sci(per_mode) +
              " (tol 1e-14), 200 modes up to " + fmt("%.1f", bath.modes.back().omega / q.omega_c) + " omega_c"};
}

// 10. Dynamics oracles and conservation.
Outcome dynamics() {
  qds::BathDiscretization inert;
  inert.n_max = 1;
  inert.modes = {{1.0, 0.0}};
  qds::QdsParams osc;
  osc.delta = 0.7;
  const auto h1 = qds::assemble_hamiltonian(osc, inert);
  const auto t1 = evolve::evolve(h1, evolve::SystemBathState::level_vacuum(0, h1.dimension()), 20.0 / osc.delta, 0.05);
  double osc_err = 0.0;
  for (const auto& r : t1.rows)
    osc_err = std::max(osc_err, std::abs(r.p1 - (5.0 / 9.0 + 4.0 / 9.0 * std::cos(3.0 * osc.delta * r.t))));

  qds::QdsParams frozen;
  frozen.eps3 = 0.3;
  frozen.eps8 = -0.2;
  frozen.alpha = 0.4;
  frozen.omega_c = 3.0;
  const auto h2 = qds::assemble_hamiltonian(frozen, qds::build_ohmic_bath(2, 0.6, frozen, 3));
  auto psi = evolve::SystemBathState::level_vacuum(0, h2.dimension());
  const auto nb = h2.dimension() / 3;
  psi.amplitudes(0) = std::sqrt(0.5);
  psi.amplitudes(nb) = std::sqrt(0.3);
  psi.amplitudes(2 * nb) = std::sqrt(0.2);
  const auto t2 = evolve::evolve(h2, psi, 10.0, 0.25);
  double pop = 0.0;
  for (const auto& r : t2.rows)
    pop = std::max({pop, std::abs(r.p1 - 0.5), std::abs(r.p2 - 0.3), std::abs(r.p3 - 0.2)});

  qds::QdsParams full;
  full.eps3 = 0.2;
  full.eps8 = -0.1;
  full.delta = 0.3;
  full.zeta = 0.5;
  full.alpha = 0.2;
  full.omega_c = 5.0;
  const auto h3 = qds::assemble_hamiltonian(full, qds::build_ohmic_bath(4, 0.5, full, 3));
  evolve::KrylovOptions opt;
  opt.subspace = 40;
  const auto t3 = evolve::evolve(h3, evolve::SystemBathState::level_vacuum(0, h3.dimension()), 2.0, 0.5, opt);
  const double norm = t3.max_norm_drift(), energy = t3.max_relative_energy_drift();

  return {osc_err <= 1e-6 && pop <= 1e-10 && norm <= 1e-9 && energy <= 1e-8,
          "P1 oscillation err=" + sci(osc_err) + " (tol 1e-6), frozen populations=" + sci(pop) +
              " (tol 1e-10), dim " + std::to_string(h3.dimension()) + " norm drift=" + sci(norm) +
              " (tol 1e-9) energy drift=" + sci(energy) + " (tol 1e-8)"};
}

// 11. Unitary conjugation on a truncated boson space.
Outcome conjugation_check() {
  AcsCouplings c;
  c.j_par = 0.2;
  const auto r = conjugation::conjugation_check(1, 24, c);
  return {r.deviation <= 1e-6 && r.displaced_deviation <= 1e-8,
          "n_max=24 occupations<=" + std::to_string(r.occupation_cutoff) + ": conjugation=" + sci(r.deviation) +
              " (tol 1e-6) displaced oscillator=" + sci(r.displaced_deviation) + " (tol 1e-8)"};
}

// 12. CLI contract.
int shell(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome cli_contract() {
  const std::string cli = std::string("'") + QDS3_CLI_PATH + "'";
  const fs::path dir = fs::temp_directory_path() / ("qds3_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const auto path = [&](const char* name) { return "'" + (dir / name).string() + "'"; };
  std::ofstream(dir / "sim.json") << R"({"n_modes": 1, "n_max": 2, "t_final": 1.0, "dt": 0.1,
    "qds": {"eps3": 0.1, "delta": 0.3, "zeta": 0.2, "alpha": 0.1, "omega_c": 2.0}})";

  std::vector<std::string> failures;
  const auto expect = [&](const std::string& args, int code) {
    const int got = shell(cli + " " + args);
    if (got != code) failures.push_back(args + " -> " + std::to_string(got) + " (want " + std::to_string(code) + ")");
  };
  expect("verify-algebra --out " + path("alg.json"), 0);
  expect("verify-smatrix --samples 5 --tol 1e-30 --out " + path("fail.json"), 1);
  expect("reparam", 2);
  expect("verify-ybe --out /nonexistent-dir/ybe.json", 3);
  expect("verify-ybe --seed 9 --samples 8 --out " + path("y1.json"), 0);
  expect("verify-ybe --seed 9 --samples 8 --out " + path("y2.json"), 0);
  expect("simulate --config " + path("sim.json") + " --out " + path("s1.csv"), 0);
  expect("simulate --config " + path("sim.json") + " --out " + path("s2.csv"), 0);

  const bool json_same = slurp(dir / "y1.json") == slurp(dir / "y2.json") && !slurp(dir / "y1.json").empty();
  const bool csv_same = slurp(dir / "s1.csv") == slurp(dir / "s2.csv");
  const std::string csv = slurp(dir / "s1.csv");
  const bool header = csv.substr(0, csv.find('\n')) == "t,p1,p2,p3,lam3,lam8,re_c12,im_c12,norm,energy";
  fs::remove_all(dir);

  std::string detail = "exit codes " + std::string(failures.empty() ? "0/1/2/3 as specified" : "MISMATCH");
  for (const auto& f : failures) detail += " [" + f + "]";
  detail += json_same ? ", JSON reruns identical" : ", JSON reruns differ";
  detail += csv_same ? ", CSV reruns identical" : ", CSV reruns differ";
  detail += header ? ", CSV header exact" : ", CSV header wrong";
  return {failures.empty() && json_same && csv_same && header, detail};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"algebra identities", algebra},
      {"scattering closed form", scattering},
      {"Yang-Baxter grid", yang_baxter},
      {"solvability certificate", solvability},
      {"boson commutators", commutators},
      {"two-point function", two_point},
      {"kinetic identity", kinetic},
      {"density identity", density},
      {"spectral density", spectral},
      {"dynamics", dynamics},
      {"unitary conjugation", conjugation_check},
      {"CLI contract", cli_contract},
  };

  std::vector<int> selected;
  if (argc > 1) {
    const int n = std::atoi(argv[1]);
    if (n < 1 || n > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "usage: %s [1-%zu]\n", argv[0], criteria.size());
      return 2;
    }
    selected.push_back(n);
  } else {
    for (int i = 1; i <= static_cast<int>(criteria.size()); ++i) selected.push_back(i);
  }

  int failed = 0;
  for (int i : selected) {
    const auto& c = criteria[static_cast<std::size_t>(i - 1)];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] criterion %2d %-24s %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", i, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
