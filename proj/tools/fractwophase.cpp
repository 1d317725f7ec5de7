#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fractwophase/config.hpp"
#include "fractwophase/io.hpp"

namespace fs = std::filesystem;
using namespace fractwophase;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kValidation = 2, kNonConvergence = 3, kIo = 4 };

struct Common {
  std::string config;
  std::string out = "out";
};

void add_common(CLI::App* cmd, Common& c, bool with_out = true) {
  cmd->add_option("--config", c.config, "Problem configuration (INI)")->required()->check(CLI::ExistingFile);
  if (with_out) cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
}

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
  return fs::path(dir);
}

Report json_number(double x) { return std::isfinite(x) ? Report(x) : Report(nullptr); }

Report diagnostics_json(const SolutionDiagnostics& d) {
  Report r;
  r["final_eps"] = d.final_eps;
  r["iters"] = d.iterations;
  r["residual"] = d.residual;
  r["energy"] = d.energy;
  r["interphase_measure"] = d.interphase_measure;
  r["residual_threshold"] = d.residual_threshold;
  r["stage_iterations"] = d.stage_iterations;
  r["energy_unregularized"] = d.energy_unregularized;
  return r;
}

void write_solution_fields(const Solution& sol, const fs::path& out, const std::string& suffix = "") {
  write_field(sol.u, out / ("u" + suffix + ".ndg"));
  write_field(sol.chi_gt, out / ("chi_gt" + suffix + ".ndg"));
  write_field(sol.chi_lt, out / ("chi_lt" + suffix + ".ndg"));
  write_field(sol.zeta, out / ("zeta" + suffix + ".ndg"));
}

void write_manifest(const Common& c, const RunConfig& cfg, const std::vector<std::string>& argv, const fs::path& out) {
  write_report(make_manifest(c.config, cfg.solver.seed, argv), out / "manifest.json");
}

std::vector<std::string> warnings_of(const ProblemData& data) { return data.warnings(); }

int run_solve(const Common& c, const std::vector<std::string>& argv) {
  const RunConfig cfg = parse_config(c.config);
  const ProblemData data = build_problem(cfg);
  for (const auto& w : warnings_of(data)) std::cerr << "warning: " << w << '\n';
  const fs::path out = prepare_out(c.out);
  const Solution sol = solve_two_phase(data, cfg.reg, cfg.solver);
  Report rep = diagnostics_json(sol.diagnostics);
  // Variational-inequality certificate against seeded random directions.
  double margin = std::numeric_limits<double>::infinity();
  for (std::uint64_t k = 0; k < 10; ++k) {
    const GridFunction w = random_test_function(data.mask(), cfg.solver.seed * 1000 + k);
    margin = std::min(margin, variational_inequality_defect(sol, data, w) + variational_inequality_tolerance(sol, data, w));
  }
  rep["vi_min_margin"] = margin;
  rep["nondegenerate"] = check_nondegeneracy(data).global;
  rep["warnings"] = warnings_of(data);
  write_solution_fields(sol, out);
  write_report(rep, out / "report.json");
  write_manifest(c, cfg, argv, out);
  std::cout << rep.dump(2) << '\n';
  return kOk;
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      out.push_back(std::stod(part));
    } catch (const std::logic_error&) {
      throw ValidationError(std::string(what) + ": cannot parse '" + part + "'");
    }
  }
  if (out.empty()) throw ValidationError(std::string(what) + ": empty list");
  return out;
}

int run_rate(const Common& c, const std::string& eps_list, const std::vector<std::string>& argv) {
  const RunConfig cfg = parse_config(c.config);
  const ProblemData data = build_problem(cfg);
  const auto eps = parse_list(eps_list, "--eps-list");
  const fs::path out = prepare_out(c.out);
  const RateReport r = epsilon_rate_study(data, eps, cfg.solver);
  Report rep;
  rep["eps"] = r.eps;
  rep["errors"] = r.errors;
  rep["reference_eps"] = r.reference_eps;
  rep["noise_floor"] = r.noise_floor;
  rep["usable_points"] = r.usable_points;
  rep["fitted_slope"] = json_number(r.fitted_slope);
  rep["regularization_inactive"] = r.regularization_inactive;
  write_report(rep, out / "rate.json");
  write_manifest(c, cfg, argv, out);
  std::cout << rep.dump(2) << '\n';
  return kOk;
}

Report sweep_json(const SweepReport& r) {
  Report rep;
  rep["s_values"] = r.s_values;
  rep["grad_errors"] = r.grad_errors;
  rep["pairings_gt"] = r.pairings_gt;
  rep["pairings_lt"] = r.pairings_lt;
  rep["pairing_gaps"] = r.pairing_gaps;
  rep["strong_phase_errors"] = r.strong_phase_errors ? Report(*r.strong_phase_errors) : Report(nullptr);
  rep["interphase_measures"] = r.interphase_measures;
  rep["noise_floor"] = r.noise_floor;
  return rep;
}

int run_sweep(const Common& c, const std::string& s_list, const std::vector<std::string>& argv) {
  const RunConfig cfg = parse_config(c.config);
  const ProblemData data = build_problem(cfg);
  const auto s_values = parse_list(s_list, "--s-list");
  const fs::path out = prepare_out(c.out);
  const SweepReport r = s_sweep([&](double s) { return data.with_s(s); }, s_values, cfg.reg, cfg.solver);
  for (std::size_t k = 0; k < r.solutions.size(); ++k) write_solution_fields(r.solutions[k], out, "_s" + std::to_string(k));
  const Report rep = sweep_json(r);
  write_report(rep, out / "sweep.json");
  write_manifest(c, cfg, argv, out);
  std::cout << rep.dump(2) << '\n';
  return kOk;
}

int run_perturb(const Common& c, const std::string& scales, const std::string& bump_file,
                const std::vector<std::string>& argv) {
  const RunConfig cfg = parse_config(c.config);
  const ProblemData data = build_problem(cfg);
  const auto factors = parse_list(scales, "--v-scale-list");
  const fs::path out = prepare_out(c.out);
  GridFunction bump;
  if (!bump_file.empty()) {
    bump = read_field(fs::path(bump_file), data.grid_ptr());
  } else {
    const OmegaShape& shape = *data.mask().shape();
    const auto lo = shape.bbox_lower();
    const auto hi = shape.bbox_upper();
    bump = smooth_bump(data.grid_ptr(), {0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])}, shape.diameter() / 8.0);
  }
  std::vector<GridFunction> vs;
  for (double f : factors) vs.push_back(data.v() + f * bump);
  const PerturbationReport r = v_perturbation_study(data, vs, cfg.reg, cfg.solver);
  Report rep;
  rep["v_scales"] = factors;
  rep["grad_errors"] = r.grad_errors;
  rep["level_set_distances"] = r.level_set_distances;
  rep["pairing_gaps"] = r.pairing_gaps;
  rep["interphase_measures"] = r.interphase_measures;
  rep["noise_floor"] = r.noise_floor;
  rep["reference"] = diagnostics_json(r.reference.diagnostics);
  write_solution_fields(r.reference, out);
  for (std::size_t k = 0; k < r.solutions.size(); ++k) write_solution_fields(r.solutions[k], out, "_v" + std::to_string(k));
  write_report(rep, out / "perturb.json");
  write_manifest(c, cfg, argv, out);
  std::cout << rep.dump(2) << '\n';
  return kOk;
}

int run_two_membrane(const Common& c, const std::vector<std::string>& argv) {
  const RunConfig cfg = parse_config(c.config);
  const ProblemData data = build_problem(cfg);
  const GridFunction g = materialize(cfg.g, data.mask(), cfg.base_dir);
  const fs::path out = prepare_out(c.out);
  const TwoMembraneSolution sol = solve_two_membrane(data, g, cfg.reg, cfg.solver);
  Report rep = diagnostics_json(sol.diagnostics);
  rep["stage_energies"] = sol.energy_trace;
  write_field(sol.u, out / "u.ndg");
  write_field(sol.w, out / "w.ndg");
  write_field(sol.chi_gt, out / "chi_gt.ndg");
  write_field(sol.chi_lt, out / "chi_lt.ndg");
  write_field(sol.zeta, out / "zeta.ndg");
  write_report(rep, out / "report.json");
  write_manifest(c, cfg, argv, out);
  std::cout << rep.dump(2) << '\n';
  return kOk;
}

struct QviFlags {
  std::string phi;
  std::optional<std::string> v0_file;
  std::optional<double> c1;
  std::optional<std::string> g_minus;
  std::optional<std::string> g_plus;
  std::optional<double> t;
  std::optional<double> theta;
  std::optional<double> fp_tol;
};

int run_qvi(const Common& c, const QviFlags& flags, const std::vector<std::string>& argv) {
  const RunConfig cfg = parse_config(c.config);
  const ProblemData data = build_problem(cfg);
  PhiSpec spec = cfg.phi.value_or(PhiSpec{});
  if (!flags.phi.empty()) spec.kind = flags.phi;
  if (spec.kind.empty()) throw ValidationError("qvi: no operator given (--phi or a [phi] section)");
  if (flags.v0_file) spec.v0 = *flags.v0_file;
  if (flags.c1) spec.c1 = *flags.c1;
  if (flags.g_minus) spec.g_minus = *flags.g_minus;
  if (flags.g_plus) spec.g_plus = *flags.g_plus;
  if (flags.t) spec.t = *flags.t;
  if (flags.theta) spec.fixed_point.theta = *flags.theta;
  if (flags.fp_tol) spec.fixed_point.fp_tol = *flags.fp_tol;
  // CLI paths are relative to the working directory, config paths to the config file.
  const bool from_flags = flags.v0_file || flags.g_minus || flags.g_plus;
  const PhiOperator op = build_phi(spec, data, from_flags ? fs::current_path() : cfg.base_dir);
  FixedPointConfig fp = spec.fixed_point;
  fp.inner = cfg.solver;
  fp.reg = cfg.reg;
  const fs::path out = prepare_out(c.out);
  Report rep;
  try {
    const QviResult r = solve_qvi(data, op, fp);
    rep = diagnostics_json(r.solution.diagnostics);
    rep["outer_iterations"] = r.outer_iterations;
    rep["fixed_point_history"] = r.history;
    rep["apriori_radius"] = r.apriori_radius;
    write_solution_fields(r.solution, out);
    write_field(r.solution.v, out / "v.ndg");
  } catch (const FixedPointNonConvergence& e) {
    Report fail;
    fail["error"] = e.what();
    fail["fixed_point_history"] = e.history();
    write_report(fail, out / "report.json");
    throw;
  }
  write_report(rep, out / "report.json");
  write_manifest(c, cfg, argv, out);
  std::cout << rep.dump(2) << '\n';
  return kOk;
}

int run_validate(const Common& c) {
  try {
    const RunConfig cfg = parse_config(c.config);
    const ProblemData data = build_problem(cfg);
    if (cfg.phi) validate_phi(build_phi(*cfg.phi, data, cfg.base_dir), data);
    for (const auto& w : data.warnings()) std::cerr << "warning: " << w << '\n';
    std::cout << "valid: p = " << data.p() << ", s = " << data.s() << ", p* = " << data.exponents().p_star
              << ", p# = " << data.exponents().p_sharp << ", nondegenerate = " << std::boolalpha
              << check_nondegeneracy(data).global << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "invalid: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"Two-phase obstacle problems for the fractional p-Laplacian"};
  app.require_subcommand(1);

  Common solve_c, rate_c, sweep_c, perturb_c, membrane_c, qvi_c, validate_c;
  std::string eps_list, s_list = "0.5,0.7,0.85,0.95,0.99,1.0", scales = "0.5,0.25,0.125,0.0625,0.03125,0.015625",
                        bump_file;
  QviFlags qf;

  auto* solve = app.add_subcommand("solve", "Solve the two-phase problem");
  add_common(solve, solve_c);
  auto* rate = app.add_subcommand("rate", "Regularization error study");
  add_common(rate, rate_c);
  rate->add_option("--eps-list", eps_list, "Strictly decreasing eps values, comma separated")->required();
  auto* sweep = app.add_subcommand("sweep-s", "Stability as s increases to 1");
  add_common(sweep, sweep_c);
  sweep->add_option("--s-list", s_list, "Increasing s values ending at 1")->capture_default_str();
  auto* perturb = app.add_subcommand("perturb-v", "Continuous dependence on the level set");
  add_common(perturb, perturb_c);
  perturb->add_option("--v-scale-list", scales, "Perturbation amplitudes")->capture_default_str();
  perturb->add_option("--bump-file", bump_file, "NDG1 perturbation shape (default: centred smooth bump)");
  auto* membrane = app.add_subcommand("two-membrane", "Coupled two-membrane system (load of the second membrane in [g])");
  add_common(membrane, membrane_c);
  auto* qvi = app.add_subcommand("qvi", "Implicit level set by damped fixed-point iteration");
  add_common(qvi, qvi_c);
  qvi->add_option("--phi", qf.phi, "nemytskii | uryson | affine_reflection | coupled_membrane");
  qvi->add_option("--phi-v0-file", qf.v0_file, "NDG1 field v0 (nemytskii offset, affine reflection centre)");
  qvi->add_option("--phi-c1", qf.c1, "Nemytskii slope c1");
  qvi->add_option("--phi-g-minus", qf.g_minus, "Lower truncation level: number or NDG1 path");
  qvi->add_option("--phi-g-plus", qf.g_plus, "Upper truncation level: number or NDG1 path");
  qvi->add_option("--phi-t", qf.t, "Order t of the coupled membrane");
  qvi->add_option("--theta", qf.theta, "Damping in (0, 1]");
  qvi->add_option("--fp-tol", qf.fp_tol, "Fixed-point tolerance");
  auto* validate = app.add_subcommand("validate", "Parse and validate a configuration");
  add_common(validate, validate_c, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*solve) return run_solve(solve_c, args);
    if (*rate) return run_rate(rate_c, eps_list, args);
    if (*sweep) return run_sweep(sweep_c, s_list, args);
    if (*perturb) return run_perturb(perturb_c, scales, bump_file, args);
    if (*membrane) return run_two_membrane(membrane_c, args);
    if (*qvi) return run_qvi(qvi_c, qf, args);
    if (*validate) return run_validate(validate_c);
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kValidation;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kValidation;
  } catch (const NonConvergence& e) {
    std::cerr << "not converged: " << e.what() << " (iterations " << e.iterations() << ", residual " << e.residual()
              << ")\n";
    return kNonConvergence;
  } catch (const FixedPointNonConvergence& e) {
    std::cerr << "not converged: " << e.what() << '\n';
    return kNonConvergence;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOther;
}
