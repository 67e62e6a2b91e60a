// thermo run <command> <config.json> [--budget N] [--grid G] [--tol x] [--threads k]
//
// Exit codes: 0 success, 2 audit failure, 3 budget or convergence failure,
// 64 malformed config or invalid parameters.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "thermo/conformal.hpp"
#include "thermo/io/config.hpp"
#include "thermo/io/csv.hpp"
#include "thermo/io/measure_io.hpp"
#include "thermo/keller.hpp"
#include "thermo/pressure.hpp"
#include "thermo/transfer.hpp"

namespace fs = std::filesystem;
using namespace thermo;
using io::CsvWriter;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAudit = 2;
constexpr int kExitBudget = 3;
constexpr int kExitUsage = 64;

struct Flags {
  std::size_t budget = kDefaultNodeBudget;
  int grid = kDefaultGrid;
  double tol = 1e-12;
  unsigned threads = 1;
  std::string output_dir;
};

struct Ctx {
  io::ExperimentConfig cfg;
  std::optional<IntervalMap> map;
  std::optional<Potential> phi;
  Flags flags;
  WalkOptions walk;
  Exec exec;
  fs::path out;

  std::string file(const std::string& name) const { return (out / name).string(); }
  double x0() const { return cfg.num("x0", 0.3); }

  // Depth whose preimage layer first reaches 2^bits points.
  int depth_for(int bits, int cap) const {
    return depth_for_leaves(*map, x0(), std::size_t{1} << bits, cap);
  }
};

// Tracks pass/fail of audit rows; audit failures set exit code 2.
struct AuditSheet {
  std::vector<std::tuple<std::string, double, double, bool>> rows;
  void check(const std::string& name, double value, double threshold, bool pass) {
    rows.emplace_back(name, value, threshold, pass);
  }
  bool all() const {
    for (const auto& r : rows)
      if (!std::get<3>(r)) return false;
    return true;
  }
  void write(const std::string& path) const {
    CsvWriter w(path, "check,value,threshold,pass");
    for (const auto& [n, v, t, p] : rows) w.row(n, v, t, p);
  }
};

// ---- pressure / entropy ----------------------------------------------------

struct TreeRun {
  std::vector<double> a;  // a_1..a_k, k <= requested depth
  bool budget_hit = false;
  std::string message;
};

template <class P>
TreeRun run_tree(const Ctx& c, const P& phi, double x0, int n_max) {
  detail::reject_breakpoint(*c.map, x0);
  TreeRun r;
  try {
    walk_preimage_tree(
        *c.map, phi, x0, n_max,
        [&](int, std::span<const PreimageEntry> e) { r.a.push_back(detail::layer_log_sum(e)); }, c.walk);
  } catch (const BudgetError& e) {
    r.budget_hit = true;
    r.message = e.what();
  }
  return r;
}

// Rows n,p_n,P_hat,delta,status; returns P_hat, delta.
std::pair<double, double> write_pressure_rows(const std::string& path, const TreeRun& r, int n_min) {
  CsvWriter w(path, "n,p_n,P_hat,delta,status");
  const int N = static_cast<int>(r.a.size());
  if (N == 0) {
    w.row(0, 0.0, 0.0, 0.0, "budget_exceeded");
    return {0.0, 0.0};
  }
  const int k = std::min(3, N);
  const double P = (r.a[N - 1] - (N - k >= 1 ? r.a[N - k - 1] : 0.0)) / k;
  double delta = 0.0;
  for (int n = std::max(1, N - 4); n <= N; ++n) delta = std::max(delta, std::abs(r.a[n - 1] / n - P));
  const std::string status = r.budget_hit ? "budget_exceeded" : "ok";
  for (int n = std::max(1, n_min); n <= N; ++n) w.row(n, r.a[n - 1] / n, P, delta, status);
  return {P, delta};
}

int cmd_pressure(Ctx& c, bool entropy_only) {
  const double x0 = c.x0();
  const int n_max = c.cfg.integer("n_max", c.depth_for(15, 24));
  const int n_min = c.cfg.integer("n_min", 1);
  if (entropy_only) {
    const auto r = run_tree(c, ZeroPotential{}, x0, n_max);
    write_pressure_rows(c.file("entropy.csv"), r, n_min);
    return r.budget_hit ? kExitBudget : kExitOk;
  }
  const auto r = run_tree(c, *c.phi, x0, n_max);
  const auto [P, delta] = write_pressure_rows(c.file("pressure.csv"), r, n_min);
  if (r.budget_hit) return kExitBudget;

  const auto h = run_tree(c, ZeroPotential{}, x0, n_max);
  const int N = static_cast<int>(h.a.size());
  const double h_top = (h.a[N - 1] - (N >= 4 ? h.a[N - 4] : 0.0)) / std::min(3, N);
  const Range range = potential_range(*c.phi, *c.map, c.cfg.integer("range_grid", kDefaultRangeGrid));
  const auto hyp = hyperbolicity_check(*c.map, *c.phi, P, c.cfg.integer("hyper_n", 20),
                                       c.cfg.integer("range_grid", kDefaultRangeGrid));
  const int sep_n = c.cfg.integer("sep_n", 10);
  const double sep_eps = c.cfg.num("sep_eps", 0.01);
  const auto sep = separated_pressure(*c.map, *c.phi, sep_n, sep_eps, c.cfg.integer("sep_grid", 10000), c.exec);
  CsvWriter w(c.file("classification.csv"),
              "x0,n_max,P_hat,delta,sup_phi,inf_phi,h_top,bounded_range,hyperbolic,witness_n,margin,"
              "separated_n,separated_eps,separated_points,separated_value");
  w.row(x0, N, P, delta, range.sup, range.inf, h_top, bounded_range_check(range, std::max(0.0, h_top)),
        hyp.verdict == HyperbolicVerdict::hyperbolic ? "hyperbolic" : "unknown", hyp.witness_n, hyp.margin,
        sep_n, sep_eps, sep.points.size(), sep.value);
  return kExitOk;
}

// ---- conformal -------------------------------------------------------------

struct ConformalRun {
  TransitionSequence ts;
  WeakLimitResult wl;
  ConformalityReport conf;
  AtomAudit atoms;
  std::vector<Interval> tests;
};

ConformalRun conformal_pipeline(const Ctx& c) {
  ConformalRun r;
  const int n = c.cfg.integer("conformal_n", c.depth_for(16, 28));
  const auto sl = collect_slices(*c.map, *c.phi, c.x0(), n, c.walk);
  r.ts = transition_from_log_sums(sl.log_sums);
  WeakLimitOptions opt;
  opt.bins = c.cfg.integer("bins", 64);
  opt.schedule_length = c.cfg.integer("schedule_length", kDefaultScheduleLength);
  opt.ms.weights.theta = c.cfg.num("theta", 0.0);
  const std::string mode = c.cfg.str("tail_mode", "closure");
  if (mode != "closure" && mode != "truncate") c.cfg.fail("tail_mode", "tail_mode must be closure or truncate");
  opt.ms.mode = mode == "closure" ? TailMode::geometric_closure : TailMode::truncate;
  r.wl = weak_limit(sl, r.ts.c, c.map->lo(), c.map->hi(), opt);
  r.tests = single_branch_intervals(*c.map, c.cfg.integer("tests", 20), static_cast<unsigned>(c.cfg.seed));
  r.conf = conformality_audit(r.wl.measure, *c.map, *c.phi, r.ts.c, r.tests);
  const auto levels = c.cfg.int_list("levels", {8, 64, 512});
  r.atoms = atom_audit(r.wl.measure, levels, c.map->lo(), c.map->hi());
  return r;
}

void write_conformal(const Ctx& c, const ConformalRun& r) {
  {
    CsvWriter w(c.file("transition.csv"), "n,a_n,c,residual,limsup");
    for (std::size_t i = 0; i < r.ts.a.size(); ++i) w.row(i + 1, r.ts.a[i], r.ts.c, r.ts.residual, r.ts.limsup);
  }
  io::write_measure(c.file("mu.csv"), r.wl.measure);
  io::write_measure(c.file("mu_binned.csv"), r.wl.binned);
  {
    CsvWriter w(c.file("conformal.csv"),
                "s_final,c,stability,slice_stability,tail_fraction,max_delta_A,converged,status");
    w.row(r.wl.schedule.back(), r.ts.c, r.wl.stability, r.wl.slice_stability, r.wl.tail_fraction,
          r.conf.max_delta, r.wl.converged, r.wl.status);
  }
  {
    CsvWriter w(c.file("conformality.csv"), "a,b,delta_A");
    for (std::size_t i = 0; i < r.tests.size(); ++i) w.row(r.tests[i].a, r.tests[i].b, r.conf.deltas[i]);
  }
  {
    CsvWriter w(c.file("atoms.csv"), "bins,max_mass");
    for (std::size_t i = 0; i < r.atoms.levels.size(); ++i) w.row(r.atoms.levels[i], r.atoms.max_mass[i]);
  }
}

int cmd_conformal(Ctx& c) {
  const auto r = conformal_pipeline(c);
  write_conformal(c, r);
  return r.wl.converged ? kExitOk : kExitBudget;
}

// ---- equilibrium -----------------------------------------------------------

struct EquilibriumRun {
  ConformalRun conf;
  EigenReport eig;
  EquilibriumState eq;
  HyperbolicityReport hyp;
  double tree_P = 0.0, tree_delta = 0.0;
  ContractionAudit gn;
};

EquilibriumRun equilibrium_pipeline(const Ctx& c) {
  EquilibriumRun r;
  r.conf = conformal_pipeline(c);
  PowerOptions po;
  po.grid = c.flags.grid;
  po.tol = c.flags.tol;
  po.seed = static_cast<unsigned>(c.cfg.seed);
  po.exec = c.exec;
  r.eig = power_iteration(*c.map, *c.phi, r.conf.wl.measure, po);
  const auto pr = tree_pressure(*c.map, *c.phi, c.x0(), 1, c.cfg.integer("n_max", c.depth_for(15, 24)), c.walk);
  r.tree_P = pr.estimate;
  r.tree_delta = pr.delta;
  r.hyp = hyperbolicity_check(*c.map, *c.phi, pr.estimate, c.cfg.integer("hyper_n", 20),
                              c.cfg.integer("range_grid", kDefaultRangeGrid));
  r.eq = equilibrium_state(*c.phi, r.conf.wl.measure, r.eig, false);
  r.gn = gn_contraction_audit(*c.map, *c.phi, r.eig.log_lambda, 20, c.flags.grid);
  return r;
}

void write_equilibrium(const Ctx& c, const EquilibriumRun& r) {
  {
    CsvWriter w(c.file("eigen.csv"),
                "lambda,log_lambda,residual,iterations,converged,rho_deflated,rho_r2,tree_P_hat,tree_delta");
    w.row(r.eig.lambda, r.eig.log_lambda, r.eig.residual, r.eig.iterations, r.eig.converged, r.eig.rho,
          r.eig.rho_r2, r.tree_P, r.tree_delta);
  }
  {
    CsvWriter w(c.file("eigenfunction.csv"), "x,h");
    for (int i = 0; i < r.eig.h.size(); ++i) w.row(r.eig.h.node(i), r.eig.h.values()[i]);
  }
  io::write_measure(c.file("nu.csv"), r.eq.nu);
  {
    CsvWriter w(c.file("equilibrium.csv"),
                "pressure,integral_phi,entropy,hyperbolic,witness_n,gn_witness,gn_sup,residual");
    w.row(r.eq.pressure, r.eq.integral_phi, r.eq.entropy,
          r.hyp.verdict == HyperbolicVerdict::hyperbolic ? "hyperbolic" : "unknown", r.hyp.witness_n,
          r.gn.witness_n, r.gn.sup_value, r.eig.residual);
  }
}

int cmd_equilibrium(Ctx& c) {
  const auto r = equilibrium_pipeline(c);
  write_conformal(c, r.conf);
  write_equilibrium(c, r);
  if (r.hyp.verdict == HyperbolicVerdict::hyperbolic && !(r.eq.entropy > 0.0)) return kExitAudit;
  return r.eig.converged && r.conf.wl.converged ? kExitOk : kExitBudget;
}

// ---- correlations ----------------------------------------------------------

int cmd_correlations(Ctx& c) {
  const auto r = equilibrium_pipeline(c);
  const int G = c.cfg.integer("corr_grid", kCorrelationGrid);
  const int n = c.cfg.integer("corr_n", 20);
  const std::string obs_kind = c.cfg.str("observable", "indicator");
  GridFunction obs = default_observable(c.map->lo(), c.map->hi(), G);
  if (obs_kind == "cosine") {
    const double lo = c.map->lo(), hi = c.map->hi();
    obs = GridFunction::sample([&](double x) { return std::cos(M_PI * (x - lo) / (hi - lo)); }, G, lo, hi);
  } else if (obs_kind != "indicator") {
    c.cfg.fail("observable", "observable must be indicator or cosine");
  }
  const auto corr = correlation(*c.map, *c.phi, obs, obs, r.eq, n, c.exec);
  {
    CsvWriter w(c.file("correlations.csv"), "n,C_n");
    for (std::size_t i = 0; i < corr.c.size(); ++i) w.row(i + 1, corr.c[i]);
  }
  {
    CsvWriter w(c.file("correlation_fit.csv"), "rho,C,r_squared,fitted,status");
    w.row(corr.rho, corr.constant, corr.r_squared, corr.fitted,
          corr.resolved ? "ok" : "mixing below resolution");
  }
  const auto gap = spectral_gap_estimate(*c.map, *c.phi, r.eig, r.eq, n, G, c.exec);
  {
    CsvWriter w(c.file("gap.csv"), "rho_deflated,rho_correlation,rho,correlation_r2,flagged");
    w.row(gap.deflated, gap.from_correlation, gap.rho, gap.correlation_r2, gap.flagged);
  }
  return kExitOk;
}

// ---- norms -----------------------------------------------------------------

int cmd_norms(Ctx& c) {
  const int count = c.cfg.integer("functions", 100);
  const double alpha = c.cfg.num("alpha", 0.5);
  const double A = c.cfg.num("A", 0.5);
  const int atoms = c.cfg.integer("atoms", 256);
  const double lo = c.map ? c.map->lo() : 0.0, hi = c.map ? c.map->hi() : 1.0;
  const AtomicMeasure m = AtomicMeasure::uniform(atoms, lo, hi);
  std::mt19937_64 rng(c.cfg.seed);
  std::vector<SampledFunction<double>> fs;
  for (int i = 0; i < count; ++i) fs.push_back(random_piecewise_holder(rng, atoms, alpha, lo, hi));
  CsvWriter w(c.file("norms.csv"),
              "index,alpha,A,l1,linf,keller_seminorm,keller_norm,var_p,bv_norm,holder_norm,"
              "bv_le_holder,keller_le_bv,osc_p_le_var,product_bound");
  bool ok = true;
  for (int i = 0; i < count; ++i) {
    const auto r = norm_report(fs[i], m, alpha, A);
    const SampledFunction<double>& partner = fs[(i + 1) % count];
    const auto audit = norm_chain_audit(fs[i], m, alpha, A, std::span(&partner, 1));
    ok = ok && audit.passed;
    w.row(i, alpha, A, r.l1, r.linf, r.keller_seminorm, r.keller_norm, r.var_p, r.bv_norm, r.holder_norm,
          audit.checks[0].pass, audit.checks[1].pass, audit.checks[2].pass, audit.checks[3].pass);
  }
  return ok ? kExitOk : kExitAudit;
}

// ---- curve -----------------------------------------------------------------

int cmd_curve(Ctx& c) {
  const double t0 = c.cfg.num("t_min", -1.0), t1 = c.cfg.num("t_max", 1.0);
  const int steps = c.cfg.integer("t_steps", 21);
  if (steps < 5 || !(t1 > t0)) c.cfg.fail("t_steps", "need t_steps >= 5 and t_min < t_max");
  std::vector<double> ts;
  for (int i = 0; i < steps; ++i) ts.push_back(i == steps - 1 ? t1 : t0 + (t1 - t0) * i / (steps - 1));
  const auto chi_spec = c.cfg.potential_param("chi");
  const Potential chi = chi_spec ? chi_spec->build(*c.map) : *c.phi;
  const auto curve = pressure_curve(*c.map, *c.phi, chi, ts, c.x0(), c.cfg.integer("n_max", c.depth_for(15, 24)), c.walk);
  CsvWriter w(c.file("curve.csv"), "t,P_hat,dP_central,d2P_central,fit_residual,delta");
  for (std::size_t i = 0; i < ts.size(); ++i)
    w.row(curve.t[i], curve.pressure[i], curve.first_diff[i], curve.second_diff[i], curve.fit_residual[i],
          curve.delta[i]);
  return kExitOk;
}

// ---- appendix --------------------------------------------------------------

int cmd_appendix(Ctx& c) {
  const double h = c.cfg.num("h", std::log(4.0));
  const auto con = appendix_construct(h);
  const auto a = appendix_audit(con, c.x0(), c.cfg.integer("n_max", 10), kDefaultRangeGrid, c.walk);
  CsvWriter w(c.file("appendix.csv"),
              "h,sup_phi,inf_phi,range,P_hat,delta,h_top,hyperbolic,bounded_range,hypotheses_hold");
  w.row(h, a.sup_phi, a.inf_phi, a.sup_phi - a.inf_phi, a.pressure, a.pressure_delta, a.h_top, a.hyperbolic,
        a.bounded_range, a.hypotheses_hold);
  return a.hyperbolic && a.hypotheses_hold ? kExitOk : kExitAudit;
}

// ---- audit-all -------------------------------------------------------------

int cmd_audit_all(Ctx& c) {
  const TreeRun tr = run_tree(c, *c.phi, c.x0(), c.cfg.integer("n_max", c.depth_for(15, 24)));
  write_pressure_rows(c.file("pressure.csv"), tr, 1);
  if (tr.budget_hit) return kExitBudget;
  const auto r = equilibrium_pipeline(c);
  write_conformal(c, r.conf);
  write_equilibrium(c, r);
  const double adj = adjoint_invariance_audit(*c.map, *c.phi, r.eig.log_lambda, r.conf.wl.measure,
                                              adjoint_test_suite(c.map->lo(), c.map->hi(), c.flags.grid), c.exec);

  AuditSheet s;
  s.check("weak_limit_stability", r.conf.wl.stability, kStabilityTol, r.conf.wl.converged);
  s.check("conformality_max_delta", r.conf.conf.max_delta, 1e-2, r.conf.conf.max_delta <= 1e-2);
  const auto& mm = r.conf.atoms.max_mass;
  s.check("atom_decay", mm.back(), mm.front(), mm.size() < 2 || mm.back() < mm.front());
  const auto cells = r.conf.wl.measure.bin_masses(c.map->lo(), c.map->hi(), 64);
  const double min_cell = *std::min_element(cells.begin(), cells.end());
  s.check("full_support_min_cell", min_cell, 0.0, min_cell > 0.0);
  s.check("mu_normalized", std::abs(r.conf.wl.measure.total_mass() - 1.0), 1e-12,
          std::abs(r.conf.wl.measure.total_mass() - 1.0) <= 1e-12);
  s.check("eigen_converged", r.eig.residual, 10.0 * c.flags.tol, r.eig.converged);
  const double gap = std::abs(r.eig.log_lambda - r.tree_P);
  const double gap_tol = std::max(2.0 * r.tree_delta, 1e-2);
  s.check("eigen_vs_tree_pressure", gap, gap_tol, gap <= gap_tol);
  const bool hyp = r.hyp.verdict == HyperbolicVerdict::hyperbolic;
  s.check("entropy_positive", r.eq.entropy, 0.0, !hyp || r.eq.entropy > 0.0);
  s.check("nu_normalized", std::abs(r.eq.nu.total_mass() - 1.0), 1e-12,
          std::abs(r.eq.nu.total_mass() - 1.0) <= 1e-12);
  s.check("adjoint_invariance", adj, 1e-2, adj <= 1e-2);
  s.write(c.file("audit.csv"));
  return s.all() ? kExitOk : kExitAudit;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thermodynamic formalism experiments on interval maps"};
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "Run one experiment from a JSON config");
  std::string command, config_path;
  Flags flags;
  const std::vector<std::string> commands{"pressure", "entropy", "conformal", "equilibrium", "correlations",
                                          "norms", "curve", "appendix", "audit-all"};
  run->add_option("command", command, "Experiment")->required()->check(CLI::IsMember(commands));
  run->add_option("config", config_path, "Config file (JSON)")->required();
  run->add_option("--budget", flags.budget, "Preimage-tree node budget");
  run->add_option("--grid", flags.grid, "Transfer-operator grid size")->check(CLI::Range(16, 1 << 24));
  run->add_option("--tol", flags.tol, "Power-iteration tolerance")->check(CLI::PositiveNumber);
  run->add_option("--threads", flags.threads, "Worker threads (speed only)")->check(CLI::Range(1u, 1024u));
  run->add_option("--output-dir", flags.output_dir, "Override the config's output_dir");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  Ctx c;
  c.flags = flags;
  c.exec.threads = flags.threads;
  c.walk.budget = flags.budget;
  c.walk.exec = c.exec;
  try {
    c.cfg = io::load_config(config_path, command != "appendix" && command != "norms");
    if (c.cfg.map) c.map = c.cfg.map->build();
    if (c.map && c.cfg.potential) c.phi = c.cfg.potential->build(*c.map);
  } catch (const io::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << config_path << ":1: " << e.what() << '\n';
    return kExitUsage;
  }
  c.out = flags.output_dir.empty() ? fs::path(c.cfg.output_dir) : fs::path(flags.output_dir);
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) {
    std::cerr << "cannot create output directory " << c.out << ": " << ec.message() << '\n';
    return kExitUsage;
  }

  int code = kExitOk;
  std::string status = "ok", message;
  try {
    if (command == "pressure") code = cmd_pressure(c, false);
    else if (command == "entropy") code = cmd_pressure(c, true);
    else if (command == "conformal") code = cmd_conformal(c);
    else if (command == "equilibrium") code = cmd_equilibrium(c);
    else if (command == "correlations") code = cmd_correlations(c);
    else if (command == "norms") code = cmd_norms(c);
    else if (command == "curve") code = cmd_curve(c);
    else if (command == "appendix") code = cmd_appendix(c);
    else code = cmd_audit_all(c);
    if (code == kExitAudit) status = "audit_failed";
    if (code == kExitBudget) status = "not_converged";
  } catch (const io::ConfigError& e) {
    std::cerr << e.what() << '\n';
    code = kExitUsage;
    status = "config_error";
    message = e.what();
  } catch (const BudgetError& e) {
    code = kExitBudget;
    status = "budget_exceeded";
    message = e.what();
  } catch (const ConvergenceError& e) {
    code = kExitBudget;
    status = "not_converged";
    message = e.what();
  } catch (const AuditError& e) {
    code = kExitAudit;
    status = "audit_failed";
    message = e.what();
  } catch (const DomainError& e) {
    code = kExitUsage;
    status = "invalid_parameters";
    message = e.what();
  }
  if (!message.empty() && status != "config_error") std::cerr << "error: " << message << '\n';
  for (char& ch : message)
    if (ch == ',' || ch == '\n') ch = ';';
  CsvWriter w(c.file("status.csv"), "command,status,exit_code,message");
  w.row(command, status, code, message);
  return code;
}
