#pragma once

// Command-line front end: argument parsing, config loading, dispatch and
// result serialisation.
//
// Exit codes: 0 all checks pass, 1 a numerical check failed,
// 2 usage or configuration error, 3 I/O error.

#include "qds3/bosonization.hpp"
#include "qds3/conjugation.hpp"
#include "qds3/couplings.hpp"
#include "qds3/errors.hpp"
#include "qds3/evolve.hpp"
#include "qds3/integrability.hpp"
#include "qds3/qds.hpp"
#include "qds3/su3.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qds3::cli {

using Json = nlohmann::ordered_json;

enum class Command { VerifyAlgebra, VerifyYbe, VerifySmatrix, Reparam, Bosonize, Spectral, Simulate, Conjugation };

inline const std::map<std::string, Command>& command_names() {
  static const std::map<std::string, Command> names{
      {"verify-algebra", Command::VerifyAlgebra}, {"verify-ybe", Command::VerifyYbe},
      {"verify-smatrix", Command::VerifySmatrix}, {"reparam", Command::Reparam},
      {"bosonize", Command::Bosonize},            {"spectral", Command::Spectral},
      {"simulate", Command::Simulate},            {"conjugation", Command::Conjugation}};
  return names;
}

inline std::string command_name(Command c) {
  for (const auto& [name, cmd] : command_names())
    if (cmd == c) return name;
  return "unknown";
}

enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitUsage = 2, kExitIo = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
/// Thrown by parse_command for --help; carries the usage text.
struct HelpRequested : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  Command command = Command::VerifyAlgebra;
  Json parameters = Json::object();
  std::optional<std::string> config_path;
  std::optional<std::string> output_path;
};

// ---------------------------------------------------------------------------
// parsing

inline std::vector<std::string> normalise_args(std::vector<std::string> args) {
  if (args.size() >= 2 && args[0] == "verify") {
    args[1] = "verify-" + args[1];
    args.erase(args.begin());
  }
  return args;
}

/// Maps argv (without the program name) to a RunConfig. Only flags given on
/// the command line end up in `parameters`; defaults are applied at dispatch.
inline RunConfig parse_command(const std::vector<std::string>& raw_args) {
  const std::vector<std::string> args = normalise_args(raw_args);

  CLI::App app{"qds3: SU(3) Kondo / three-level dissipative system toolkit", "qds3"};
  app.require_subcommand(1);
  app.fallthrough(false);

  std::map<std::string, double> nums;
  std::map<std::string, long long> ints;
  std::map<std::string, std::string> strs;
  std::string out_path;
  std::string config_path;

  auto common = [&](CLI::App* sub, bool seeded) {
    sub->add_option("--out", out_path, "Output file (default: stdout)");
    sub->add_option("--tol", nums["tol"], "Override every tolerance of this command");
    if (seeded) {
      sub->add_option("--seed", ints["seed"], "RNG seed");
      sub->add_option("--samples", ints["samples"], "Random samples")->check(CLI::NonNegativeNumber);
    }
  };

  auto* alg = app.add_subcommand("verify-algebra", "Gell-Mann basis identities");
  common(alg, true);
  auto* ybe = app.add_subcommand("verify-ybe", "Yang-Baxter residual over a grid plus random points");
  common(ybe, true);
  auto* smx = app.add_subcommand("verify-smatrix", "Scattering matrix closed form and solvability certificate");
  common(smx, true);

  auto* rep = app.add_subcommand("reparam", "Map (J_par, J_perp) to (f, mu)");
  common(rep, false);
  rep->add_option("--jpar", nums["jpar"], "Longitudinal coupling")->required();
  rep->add_option("--jperp", nums["jperp"], "Transverse coupling")->required();

  auto* bos = app.add_subcommand("bosonize", "Finite-window bosonisation checks");
  common(bos, false);
  bos->add_option("--window", ints["window"], "Half width M of the window [-M, M]");
  bos->add_option("--flavors", ints["flavors"], "Fermion flavours (1 or 3)");
  bos->add_option("--check", strs["check"], "commutator | two-point | kinetic | density | all")
      ->check(CLI::IsMember({"commutator", "two-point", "kinetic", "density", "all"}));
  bos->add_option("--depth", ints["depth"], "Fermi-sea depth for the two-point check");
  bos->add_option("--a-over-l", nums["a_over_l"], "Regulator a / L");
  bos->add_option("--kmax", ints["kmax"], "Largest boson index in the commutator check");

  auto* spe = app.add_subcommand("spectral", "Discrete bath vs ohmic spectral density");
  common(spe, false);
  spe->add_option("--modes", ints["modes"], "Number of bath modes");
  spe->add_option("--jpar", nums["jpar"], "Longitudinal coupling");
  spe->add_option("--length", nums["length"], "System length L");
  spe->add_option("--vf", nums["vf"], "Fermi velocity");
  spe->add_option("--a", nums["a"], "Short-distance cutoff a");
  spe->add_option("--center", nums["center"], "Test-function centre in units of omega_c");
  spe->add_option("--width", nums["width"], "Test-function width in units of omega_c");

  auto* sim = app.add_subcommand("simulate", "Time evolution of the three-level system plus bath");
  sim->add_option("--config", config_path, "JSON configuration")->required();
  sim->add_option("--out", out_path, "CSV output (default: stdout)");

  auto* con = app.add_subcommand("conjugation", "Truncated unitary-conjugation check");
  common(con, false);
  con->add_option("--modes", ints["modes"], "Bath modes");
  con->add_option("--nmax", ints["nmax"], "Boson occupation cutoff per mode");
  con->add_option("--cutoff", ints["cutoff"], "Largest checked occupation (default nmax/3)");
  con->add_option("--jpar", nums["jpar"], "Longitudinal coupling");
  con->add_option("--length", nums["length"], "System length L");
  con->add_option("--a", nums["a"], "Short-distance cutoff a");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested(app.help("", CLI::AppFormatMode::All));
  } catch (const CLI::ParseError& e) {
    throw UsageError(std::string(e.what()) + "\n" + app.help());
  }

  RunConfig cfg;
  const CLI::App* chosen = app.get_subcommands().front();
  cfg.command = command_names().at(chosen->get_name());

  for (const auto* opt : chosen->get_options()) {
    if (opt->count() == 0) continue;
    std::string key = opt->get_name();
    while (!key.empty() && key.front() == '-') key.erase(key.begin());
    for (auto& ch : key)
      if (ch == '-') ch = '_';
    if (key == "out" || key == "config" || key == "help") continue;
    if (nums.count(key)) {
      if (!std::isfinite(nums[key])) throw UsageError(opt->get_name() + ": value must be finite");
      const std::string stored = key == "jpar" ? "j_par" : key == "jperp" ? "j_perp" : key;
      cfg.parameters[stored] = nums[key];
    } else if (ints.count(key)) {
      cfg.parameters[key] = ints[key];
    } else if (strs.count(key)) {
      cfg.parameters[key] = strs[key];
    }
  }
  if (!out_path.empty()) cfg.output_path = out_path;
  if (!config_path.empty()) cfg.config_path = config_path;
  return cfg;
}

// ---------------------------------------------------------------------------
// configuration files

struct SimulationConfig {
  int n_modes = 4;
  int n_max = 1;
  double t_final = 10.0;
  double dt = 0.1;
  int initial_level = 1;  ///< 1, 2 or 3
  evolve::KrylovOptions krylov;
  qds::QdsParams qds;
  qds::BathDiscretization bath;
  Json echo;  ///< validated input, echoed into results
};

namespace detail {

inline double number(const Json& j, const std::string& key) {
  if (!j.is_number()) throw UsageError("config: '" + key + "' must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw UsageError("config: '" + key + "' must be finite");
  return v;
}

inline int integer(const Json& j, const std::string& key) {
  if (!j.is_number_integer()) throw UsageError("config: '" + key + "' must be an integer");
  return j.get<int>();
}

inline void reject_unknown(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw UsageError("config: '" + where + "' must be an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw UsageError("config: unknown key '" + key + "' in " + where);
}

}  // namespace detail

/// Validates a simulation config document. Exactly one of "qds" / "acs".
inline SimulationConfig parse_simulation_config(const Json& doc) {
  using detail::integer;
  using detail::number;
  detail::reject_unknown(doc,
                         {"n_modes", "n_max", "t_final", "dt", "initial_level", "krylov_subspace",
                          "krylov_tolerance", "qds", "acs"},
                         "top level");
  const bool has_qds = doc.contains("qds");
  const bool has_acs = doc.contains("acs");
  if (has_qds && has_acs) throw UsageError("config: 'qds' and 'acs' blocks are mutually exclusive");
  if (!has_qds && !has_acs) throw UsageError("config: one of 'qds' or 'acs' is required");

  SimulationConfig s;
  if (doc.contains("n_modes")) s.n_modes = integer(doc["n_modes"], "n_modes");
  if (doc.contains("n_max")) s.n_max = integer(doc["n_max"], "n_max");
  if (doc.contains("t_final")) s.t_final = number(doc["t_final"], "t_final");
  if (doc.contains("dt")) s.dt = number(doc["dt"], "dt");
  if (doc.contains("initial_level")) s.initial_level = integer(doc["initial_level"], "initial_level");
  if (doc.contains("krylov_subspace")) s.krylov.subspace = integer(doc["krylov_subspace"], "krylov_subspace");
  if (doc.contains("krylov_tolerance")) s.krylov.tolerance = number(doc["krylov_tolerance"], "krylov_tolerance");

  if (s.n_modes < 1) throw UsageError("config: n_modes must be >= 1");
  if (s.n_max < 1) throw UsageError("config: n_max must be >= 1");
  if (!(s.dt > 0.0)) throw UsageError("config: dt must be > 0");
  if (!(s.t_final >= 0.0)) throw UsageError("config: t_final must be >= 0");
  if (s.initial_level < 1 || s.initial_level > 3) throw UsageError("config: initial_level must be 1, 2 or 3");
  if (s.krylov.subspace < 2) throw UsageError("config: krylov_subspace must be >= 2");
  if (!(s.krylov.tolerance > 0.0)) throw UsageError("config: krylov_tolerance must be > 0");

  try {
    if (has_qds) {
      const Json& b = doc["qds"];
      detail::reject_unknown(b, {"eps3", "eps8", "delta", "zeta", "alpha", "omega_c", "mode_spacing"}, "qds");
      qds::QdsParams q;
      double spacing = 1.0;
      if (b.contains("eps3")) q.eps3 = number(b["eps3"], "eps3");
      if (b.contains("eps8")) q.eps8 = number(b["eps8"], "eps8");
      if (b.contains("delta")) q.delta = number(b["delta"], "delta");
      if (b.contains("zeta")) q.zeta = number(b["zeta"], "zeta");
      if (b.contains("alpha")) q.alpha = number(b["alpha"], "alpha");
      if (b.contains("omega_c")) q.omega_c = number(b["omega_c"], "omega_c");
      if (b.contains("mode_spacing")) spacing = number(b["mode_spacing"], "mode_spacing");
      q.validate();
      s.qds = q;
      s.bath = qds::build_ohmic_bath(s.n_modes, spacing, q, s.n_max);
    } else {
      const Json& b = doc["acs"];
      detail::reject_unknown(b,
                             {"j_par", "j_perp", "zeta12", "zeta13", "zeta23", "h1", "h2", "h3", "length_L",
                              "v_fermi", "reg_a", "n0", "M3", "M8", "C", "C3", "C8"},
                             "acs");
      AcsCouplings c;
      su3::ChargeSector sector;
      const std::map<std::string, double*> fields{
          {"j_par", &c.j_par},   {"j_perp", &c.j_perp},     {"zeta12", &c.zeta12}, {"zeta13", &c.zeta13},
          {"zeta23", &c.zeta23}, {"h1", &c.h1},             {"h2", &c.h2},         {"h3", &c.h3},
          {"length_L", &c.length_L}, {"v_fermi", &c.v_fermi}, {"reg_a", &c.reg_a}, {"M3", &sector.m3},
          {"M8", &sector.m8},    {"C", &sector.c},          {"C3", &sector.c3},    {"C8", &sector.c8}};
      for (const auto& [key, dst] : fields)
        if (b.contains(key)) *dst = number(b[key], key);
      if (b.contains("n0")) sector.n0 = integer(b["n0"], "n0");
      c.validate();
      s.qds = qds::map_acs_to_qds(c, sector);
      s.bath = qds::build_bath(s.n_modes, c, s.n_max);
    }
  } catch (const PreconditionError& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  s.echo = doc;
  return s;
}

/// Reads and validates a config file into a simulate RunConfig.
inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw UsageError("config parse error in '" + path + "': " + e.what());
  }
  parse_simulation_config(doc);
  RunConfig cfg;
  cfg.command = Command::Simulate;
  cfg.config_path = path;
  cfg.parameters = doc;
  return cfg;
}

// ---------------------------------------------------------------------------
// execution

struct RunResult {
  Command command = Command::VerifyAlgebra;
  Json inputs = Json::object();
  Json residuals = Json::object();
  bool pass = true;
  std::optional<evolve::Trajectory> trajectory;

  /// Records value <= tol (or value > tol when `above` is set).
  void check(const std::string& name, double value, double tol, bool above = false) {
    const bool ok = std::isfinite(value) && (above ? value > tol : value <= tol);
    Json entry;
    entry["value"] = value;
    entry[above ? "min" : "tol"] = tol;
    entry["pass"] = ok;
    residuals[name] = entry;
    pass = pass && ok;
  }

  Json to_json() const {
    Json j;
    j["command"] = command_name(command);
    j["inputs"] = inputs;
    j["residuals"] = residuals;
    j["pass"] = pass;
    return j;
  }
};

namespace detail {

template <class T>
T param(const Json& p, const std::string& key, T fallback) {
  return p.contains(key) ? p[key].get<T>() : fallback;
}

/// --tol replaces every tolerance; minimum thresholds (breakdown probes) keep theirs.
inline double tol(const Json& p, double fallback) { return param<double>(p, "tol", fallback); }

inline int positive_int(const Json& p, const std::string& key, int fallback, int lo = 1) {
  const long long v = param<long long>(p, key, fallback);
  if (v < lo || v > 1000000) throw UsageError("--" + key + " out of range");
  return static_cast<int>(v);
}

inline RunResult run_verify_algebra(const RunConfig& cfg) {
  const Json& p = cfg.parameters;
  const auto seed = param<long long>(p, "seed", 1);
  const int samples = positive_int(p, "samples", 1000, 0);
  RunResult r;
  r.inputs["seed"] = seed;
  r.inputs["samples"] = samples;
  const su3::GellMannBasis g = su3::build_basis();
  r.check("orthogonality", su3::orthogonality_residual(g), tol(p, 1e-14));
  r.check("completeness", su3::completeness_residual(false), tol(p, 1e-14));
  r.check("completeness_extended", su3::completeness_residual(true), tol(p, 1e-14));
  r.check("commutator_table", su3::commutator_table_residual(), tol(p, 1e-14));
  r.check("weights", su3::weight_residual(), tol(p, 1e-15));

  std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    su3::MatrixC3 a;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) a(i, j) = cplx(normal(rng), normal(rng));
    const su3::MatrixC3 h = 0.5 * (a + a.adjoint());
    worst = std::max(worst, max_abs_diff(su3::from_orthogonal_coords(su3::to_orthogonal_coords(h)), h));
  }
  r.check("orthogonal_coords_roundtrip", worst, tol(p, 1e-13));
  return r;
}

inline RunResult run_verify_ybe(const RunConfig& cfg) {
  const Json& p = cfg.parameters;
  const auto seed = param<long long>(p, "seed", 1);
  const int samples = positive_int(p, "samples", 16, 0);
  RunResult r;
  r.inputs["seed"] = seed;
  r.inputs["samples"] = samples;
  double grid = 0.0;
  for (int i = 1; i <= 14; ++i)
    for (int j = 1; j <= 14; ++j)
      for (double mu : {0.2, 0.5, 1.0})
        grid = std::max(grid, integrability::yang_baxter_residual(0.1 * i, 0.1 * j, mu));
  r.check("grid", grid, tol(p, 1e-10));

  std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
  std::uniform_real_distribution<double> f(0.05, 1.5), m(0.05, 2.0);
  double random = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double f1 = f(rng), f2 = f(rng), mu = m(rng);
    random = std::max(random, integrability::yang_baxter_residual(f1, f2, mu));
  }
  r.check("random", random, tol(p, 1e-10));
  return r;
}

inline RunResult run_verify_smatrix(const RunConfig& cfg) {
  const Json& p = cfg.parameters;
  const auto seed = param<long long>(p, "seed", 1);
  const int samples = positive_int(p, "samples", 100, 0);
  RunResult r;
  r.inputs["seed"] = seed;
  r.inputs["samples"] = samples;

  std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
  std::uniform_real_distribution<double> coupling(-1.5, 1.5), phase(0.0, 2.0 * kPi), unit(0.0, 1.0);
  double closed = 0.0;
  for (int s = 0; s < samples; ++s) {
    AcsCouplings c;
    c.j_par = coupling(rng);
    c.j_perp = coupling(rng);
    c.zeta12 = phase(rng);
    c.zeta13 = phase(rng);
    c.zeta23 = phase(rng);
    const auto h = integrability::build_interaction(c);
    closed = std::max(closed, max_abs_diff(integrability::scattering_matrix(h), integrability::scattering_closed_form(c)));
  }
  r.check("closed_form", closed, tol(p, 1e-12));

  // Solvable line: 0 <= J_par < J_perp < pi/2 with every phase set to f.
  double cert = 0.0;
  int certified = 0;
  for (int s = 0; s < samples; ++s) {
    const double jperp = 0.05 + (0.5 * kPi - 0.1) * unit(rng);
    const double jpar = 0.95 * jperp * unit(rng);
    const auto c = integrability::solvable_couplings(jpar, jperp);
    try {
      const auto m = integrability::match_s_to_r(c, 1.0);
      const double rel = m.residual * std::abs(m.scale);  // ||S - cR|| / ||R||
      cert = std::max(cert, rel);
      ++certified;
    } catch (const MismatchError&) {
      cert = std::numeric_limits<double>::infinity();
    }
  }
  r.inputs["certified"] = certified;
  r.check("solvability", cert, tol(p, 1e-9));

  // Out of domain: 0 < J_perp < J_par < pi/2 must raise DomainError.
  int raised = 0;
  const int out_samples = std::max(1, samples / 5);
  for (int s = 0; s < out_samples; ++s) {
    const double jpar = 0.1 + (0.5 * kPi - 0.2) * unit(rng);
    const double jperp = (0.05 + 0.9 * unit(rng)) * jpar;
    try {
      (void)integrability::reparametrize(jpar, jperp);
    } catch (const DomainError&) {
      ++raised;
    }
  }
  r.inputs["out_of_domain_samples"] = out_samples;
  r.check("domain_error_misses", static_cast<double>(out_samples - raised), 0.0);
  return r;
}

inline RunResult run_reparam(const RunConfig& cfg) {
  const Json& p = cfg.parameters;
  const double jpar = p.at("j_par").get<double>();
  const double jperp = p.at("j_perp").get<double>();
  RunResult r;
  r.inputs["j_par"] = jpar;
  r.inputs["j_perp"] = jperp;
  integrability::TrigParams t;
  try {
    t = integrability::reparametrize(jpar, jperp);
  } catch (const std::domain_error& e) {
    throw UsageError(std::string("reparam: ") + e.what());
  }
  r.inputs["f_bar"] = t.f_bar;
  r.inputs["mu_bar"] = t.mu_bar;
  const auto c = integrability::solvable_couplings(jpar, jperp);
  try {
    const auto m = integrability::match_s_to_r(c, 1.0);
    r.inputs["scale_re"] = m.scale.real();
    r.inputs["scale_im"] = m.scale.imag();
    r.check("s_vs_r", m.residual * std::abs(m.scale), tol(p, 1e-9));
  } catch (const MismatchError&) {
    r.check("s_vs_r", std::numeric_limits<double>::infinity(), tol(p, 1e-9));
  }
  return r;
}

inline RunResult run_bosonize(const RunConfig& cfg) {
  const Json& p = cfg.parameters;
  const int window = positive_int(p, "window", 12);
  const int flavors = positive_int(p, "flavors", 1);
  const std::string check = param<std::string>(p, "check", "commutator");
  RunResult r;
  r.inputs["window"] = window;
  r.inputs["flavors"] = flavors;
  r.inputs["check"] = check;
  const bool all = check == "all";
  const double L = 2.0 * kPi;

  if (all || check == "commutator") {
    const int kmax = positive_int(p, "kmax", std::min(4, window));
    r.inputs["kmax"] = kmax;
    const fock::FermionFockSpace space(fock::MomentumWindow::symmetric(window, L), flavors);
    const bosonization::ValiditySector sector{kmax};
    sector.validate(space);
    double worst = 0.0;
    for (int k = 1; k <= kmax; ++k)
      for (int kp = 1; kp <= kmax; ++kp)
        worst = std::max(worst, bosonization::commutator_residual(space, k, kp, sector));
    r.check("commutator", worst, tol(p, 1e-12));
    const double probe = bosonization::commutator_residual(space, 2 * window, 2 * window, std::vector<fock::Bits>{space.fermi_sea()});
    r.check("commutator_breakdown_probe", probe, 0.1, true);
  }
  if (all || check == "two-point") {
    const int depth = positive_int(p, "depth", 40);
    const double a_over_l = param<double>(p, "a_over_l", 0.05);
    r.inputs["depth"] = depth;
    r.inputs["two_point_a_over_l"] = a_over_l;
    const fock::FermionFockSpace space(fock::MomentumWindow{-depth, 1, L}, 1);
    double worst = 0.0;
    for (int i = -20; i <= 20; ++i)
      worst = std::max(worst, bosonization::two_point_compare(space, 0.25 * L * i / 20.0, a_over_l * L).rel_err);
    r.check("two_point", worst, tol(p, 1e-5));
  }
  if (all || check == "kinetic") {
    if (window < 4) throw UsageError("bosonize: kinetic check needs --window >= 4");
    const fock::FermionFockSpace space(fock::MomentumWindow::symmetric(window, L), 1);
    const auto fit = bosonization::kinetic_identity_fit(space, bosonization::ValiditySector{window - 3});
    r.inputs["kinetic_c"] = fit.c;
    r.inputs["kinetic_c0"] = fit.c0;
    r.inputs["kinetic_constant"] = fit.constant;
    r.check("kinetic_fit", fit.residual, tol(p, 1e-10));
    r.check("kinetic_coefficient", std::abs(fit.c - fit.c0), tol(p, 1e-10));
  }
  if (all || check == "density") {
    const double a_over_l = param<double>(p, "a_over_l", 0.02);
    r.inputs["density_a_over_l"] = a_over_l;
    const fock::FermionFockSpace space(fock::MomentumWindow::symmetric(window, L), 1);
    const auto d = bosonization::density_identity_residual(space, bosonization::ValiditySector{window / 2},
                                                           a_over_l * L);
    r.check("density", d.residual, tol(p, 1e-2));
  }
  return r;
}

inline RunResult run_spectral(const RunConfig& cfg) {
  const Json& p = cfg.parameters;
  const int modes = positive_int(p, "modes", 200);
  AcsCouplings c;
  c.j_par = param<double>(p, "j_par", 0.1);
  c.length_L = param<double>(p, "length", 2.0 * kPi);
  c.v_fermi = param<double>(p, "vf", 1.0);
  c.reg_a = param<double>(p, "a", 0.1);
  try {
    c.validate();
  } catch (const PreconditionError& e) {
    throw UsageError(e.what());
  }
  const qds::QdsParams q = qds::map_acs_to_qds(c);
  const qds::GaussianTestFunction f{param<double>(p, "center", 0.3) * q.omega_c,
                                    param<double>(p, "width", 0.1) * q.omega_c};
  if (!(f.width > 0.0)) throw UsageError("spectral: --width must be > 0");
  RunResult r;
  r.inputs["modes"] = modes;
  r.inputs["alpha"] = q.alpha;
  r.inputs["omega_c"] = q.omega_c;
  r.inputs["center"] = f.center;
  r.inputs["width"] = f.width;
  const auto bath = qds::build_bath(modes, c);
  const auto s = qds::spectral_density_residual(bath, q, f);
  r.inputs["discrete"] = s.discrete;
  r.inputs["continuum"] = s.continuum;
  r.check("spectral_density", s.rel_residual, tol(p, 0.02));

  double per_mode = 0.0;
  for (const auto& m : bath.modes) {
    const double lhs = m.coupling * m.coupling * c.length_L / (2.0 * kPi * c.v_fermi);
    const double rhs = qds::ohmic_density(q, m.omega);
    per_mode = std::max(per_mode, rhs == 0.0 ? std::abs(lhs) : std::abs(lhs - rhs) / std::abs(rhs));
  }
  r.check("per_mode_identity", per_mode, tol(p, 1e-14));
  return r;
}

inline RunResult run_conjugation(const RunConfig& cfg) {
  const Json& p = cfg.parameters;
  const int modes = positive_int(p, "modes", 1);
  const int nmax = positive_int(p, "nmax", 24, 3);
  const int cutoff = static_cast<int>(param<long long>(p, "cutoff", conjugation::default_cutoff(nmax)));
  AcsCouplings c;
  c.j_par = param<double>(p, "j_par", 0.2);
  c.length_L = param<double>(p, "length", 2.0 * kPi);
  c.reg_a = param<double>(p, "a", 0.1);
  RunResult r;
  r.inputs["modes"] = modes;
  r.inputs["nmax"] = nmax;
  r.inputs["cutoff"] = cutoff;
  conjugation::ConjugationReport rep;
  try {
    rep = conjugation::conjugation_check(modes, nmax, c, cutoff);
  } catch (const PreconditionError& e) {
    throw UsageError(e.what());
  }
  r.inputs["constant_shift"] = rep.constant_shift;
  r.check("conjugation", rep.deviation, tol(p, 1e-6));
  r.check("displaced_oscillator", rep.displaced_deviation, tol(p, 1e-8));
  r.check("constant_level_spread", rep.constant_level_spread, tol(p, 1e-12));
  return r;
}

inline RunResult run_simulate(const RunConfig& cfg) {
  if (!cfg.config_path) throw UsageError("simulate: --config is required");
  const RunConfig loaded = load_config(*cfg.config_path);
  const SimulationConfig s = parse_simulation_config(loaded.parameters);
  RunResult r;
  r.inputs = s.echo;
  SparseOperator h;
  try {
    h = qds::assemble_hamiltonian(s.qds, s.bath);
  } catch (const CapacityError& e) {
    throw UsageError(std::string("simulate: ") + e.what());
  }
  const auto psi0 = evolve::SystemBathState::level_vacuum(s.initial_level - 1, h.dimension());
  evolve::Trajectory traj = evolve::evolve(h, psi0, s.t_final, s.dt, s.krylov);
  r.check("norm_drift", traj.max_norm_drift(), 1e-9);
  r.check("relative_energy_drift", traj.max_relative_energy_drift(), 1e-8);
  r.trajectory = std::move(traj);
  return r;
}

}  // namespace detail

inline RunResult execute(const RunConfig& cfg) {
  RunResult r;
  switch (cfg.command) {
    case Command::VerifyAlgebra: r = detail::run_verify_algebra(cfg); break;
    case Command::VerifyYbe: r = detail::run_verify_ybe(cfg); break;
    case Command::VerifySmatrix: r = detail::run_verify_smatrix(cfg); break;
    case Command::Reparam: r = detail::run_reparam(cfg); break;
    case Command::Bosonize: r = detail::run_bosonize(cfg); break;
    case Command::Spectral: r = detail::run_spectral(cfg); break;
    case Command::Simulate: r = detail::run_simulate(cfg); break;
    case Command::Conjugation: r = detail::run_conjugation(cfg); break;
  }
  r.command = cfg.command;
  return r;
}

/// Verification commands emit JSON; simulate emits CSV (its JSON summary goes
/// to `summary`). Writes to stdout when `path` is empty.
inline void write_outputs(const RunResult& result, const std::optional<std::string>& path,
                          std::ostream& stdout_stream = std::cout, std::ostream& summary = std::cerr) {
  std::ostringstream body;
  if (result.trajectory) {
    result.trajectory->write_csv(body);
    summary << result.to_json().dump() << '\n';
  } else {
    body << result.to_json().dump(2) << '\n';
  }
  if (!path) {
    stdout_stream << body.str();
    stdout_stream.flush();
    if (!stdout_stream) throw IoError("failed writing to stdout");
    return;
  }
  std::ofstream out(*path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open output file '" + *path + "'");
  out << body.str();
  out.close();
  if (!out) throw IoError("failed writing output file '" + *path + "'");
}

/// QDS3_THREADS caps Eigen's internal threads.
inline void apply_thread_env() {
  const char* env = std::getenv("QDS3_THREADS");
  if (!env || !*env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw UsageError("QDS3_THREADS must be a positive integer");
  Eigen::setNbThreads(static_cast<int>(n));
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    apply_thread_env();
    const RunConfig cfg = parse_command(args);
    const RunResult result = execute(cfg);
    write_outputs(result, cfg.output_path, out, err);
    return result.pass ? kExitPass : kExitFail;
  } catch (const HelpRequested& h) {
    out << h.what();
    return kExitPass;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const StepFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitFail;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace qds3::cli
