#pragma once

#include <filesystem>
#include <map>
#include <limits>
#include <optional>
#include <string>

#include "fractwophase/qvi.hpp"

namespace fractwophase {

/// Source of a data field: a constant, a named builtin, or an NDG1 file.
/// Builtins (parameters as keys of the same section):
///   const     value
///   gaussian  amplitude * exp(-|x - center|^2 / width^2)
///   linear    offset + slope . x
///   sine      amplitude * prod_k sin(mode_k pi (x_k - lo_k) / (hi_k - lo_k)) over the bounding box of Omega
struct FieldSpec {
  enum class Kind { Const, Expr, File };
  Kind kind = Kind::Const;
  double value = 0.0;
  std::string expr;
  std::map<std::string, std::string> params;
  std::filesystem::path file;
};

struct PhiSpec {
  std::string kind;  // nemytskii | uryson | affine_reflection | coupled_membrane
  std::string map = "clamp";          // nemytskii: clamp | tanh
  double c1 = 0.0;
  double bound = 1.0;
  std::string v0 = "0";               // number or NDG1 path
  std::string kernel = "constant";    // uryson: constant | gaussian
  double amplitude = 1.0;
  double width = 1.0;
  std::string g = "identity";         // uryson: identity | clamp | tanh
  std::string g_minus = "-1";         // number or NDG1 path
  std::string g_plus = "1";
  std::optional<double> t;            // coupled membrane order, defaults to s
  FixedPointConfig fixed_point;       // theta, fp_tol, max_outer (inner/reg copied from the run)
};

struct RunConfig {
  int dim = 1;
  OmegaShape omega;
  std::size_t n = 256;
  double padding_factor = 4.0;
  double p = 2.0;
  double s = 0.5;
  double q = std::numeric_limits<double>::infinity();
  RegularizationParams reg;
  SolverConfig solver;
  FieldSpec f{FieldSpec::Kind::Const, 1.0, {}, {}, {}};
  FieldSpec lambda_plus{FieldSpec::Kind::Const, 0.0, {}, {}, {}};
  FieldSpec lambda_minus{FieldSpec::Kind::Const, 0.0, {}, {}, {}};
  FieldSpec v{FieldSpec::Kind::Const, 0.0, {}, {}, {}};
  FieldSpec g{FieldSpec::Kind::Const, 0.0, {}, {}, {}};  // second membrane load
  bool has_g = false;
  std::optional<PhiSpec> phi;
  std::filesystem::path base_dir;  // relative file paths resolve here
};

/// INI-style text with sections [problem], [regularization], [solver], [f],
/// [lambda_plus], [lambda_minus], [v], [g], [phi]. Unknown sections or keys are
/// ParseErrors carrying the line number; out-of-range values are ValidationErrors.
RunConfig parse_config_string(const std::string& text, const std::filesystem::path& base_dir = ".");
RunConfig parse_config(const std::filesystem::path& path);

/// Grid, mask and validated problem data (all standing assumptions checked).
ProblemData build_problem(const RunConfig& config);
GridFunction materialize(const FieldSpec& spec, const OmegaMask& mask, const std::filesystem::path& base_dir);
/// "1.5" -> constant field, anything else -> NDG1 path relative to base_dir.
GridFunction scalar_or_file(const std::string& text, const OmegaMask& mask, const std::filesystem::path& base_dir);
PhiOperator build_phi(const PhiSpec& spec, const ProblemData& data, const std::filesystem::path& base_dir);

}  // namespace fractwophase
