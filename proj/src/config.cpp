#include "fractwophase/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fractwophase/io.hpp"

namespace fractwophase {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::set<std::string> field{"const", "expr", "file", "value", "amplitude",
                                           "center", "width", "offset", "slope", "mode"};
  static const std::map<std::string, std::set<std::string>> keys{
      {"problem",
       {"dim", "omega", "omega_lower", "omega_upper", "omega_center", "omega_radius", "n", "padding_factor", "p",
        "s", "q"}},
      {"regularization", {"eps0", "ratio", "steps"}},
      {"solver", {"max_iters", "grad_tol", "step_rule", "fixed_step", "armijo_c", "max_backtracks", "seed"}},
      {"f", field},
      {"lambda_plus", field},
      {"lambda_minus", field},
      {"v", field},
      {"g", field},
      {"phi",
       {"kind", "map", "c1", "bound", "v0", "kernel", "amplitude", "width", "g", "g_minus", "g_plus", "t", "theta",
        "fp_tol", "max_outer"}},
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Boost's tree drops positions; recover them from the text for diagnostics.
std::size_t line_of(const std::string& text, const std::string& section, const std::string& key) {
  std::istringstream in(text);
  std::string line, current;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == ';' || t[0] == '#') continue;
    if (t.front() == '[') {
      current = trim(t.substr(1, t.find(']') - 1));
      if (key.empty() && current == section) return no;
      continue;
    }
    if (current == section && !key.empty() && trim(t.substr(0, t.find('='))) == key) return no;
  }
  return 0;
}

class Reader {
 public:
  Reader(const pt::ptree& tree, const std::string& text) : tree_(tree), text_(text) {}

  bool has(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(section);
    return sec && sec->find(key) != sec->not_found();
  }
  bool has_section(const std::string& section) const { return tree_.get_child_optional(section).has_value(); }

  std::string raw(const std::string& section, const std::string& key) const {
    return trim(tree_.get_child(section).get<std::string>(key));
  }

  [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& what) const {
    throw ParseError("[" + section + "] " + key + ": " + what, line_of(text_, section, key));
  }

  double number(const std::string& section, const std::string& key, double fallback) const {
    if (!has(section, key)) return fallback;
    return parse_number(section, key, raw(section, key));
  }

  double parse_number(const std::string& section, const std::string& key, const std::string& value) const {
    if (value == "inf" || value == "infinity") return std::numeric_limits<double>::infinity();
    try {
      std::size_t used = 0;
      const double x = std::stod(value, &used);
      if (used != value.size()) fail(section, key, "expected a number, got '" + value + "'");
      return x;
    } catch (const std::logic_error&) {
      fail(section, key, "expected a number, got '" + value + "'");
    }
  }

  long integer(const std::string& section, const std::string& key, long fallback) const {
    if (!has(section, key)) return fallback;
    const std::string value = raw(section, key);
    try {
      std::size_t used = 0;
      const long x = std::stol(value, &used);
      if (used != value.size()) fail(section, key, "expected an integer, got '" + value + "'");
      return x;
    } catch (const std::logic_error&) {
      fail(section, key, "expected an integer, got '" + value + "'");
    }
  }

  std::string word(const std::string& section, const std::string& key, const std::string& fallback) const {
    return has(section, key) ? raw(section, key) : fallback;
  }

  std::array<double, 2> pair(const std::string& section, const std::string& key, std::array<double, 2> fallback,
                             int dim) const {
    if (!has(section, key)) return fallback;
    const std::string value = raw(section, key);
    std::array<double, 2> out{0.0, 0.0};
    std::istringstream in(value);
    std::string part;
    int k = 0;
    while (std::getline(in, part, ',')) {
      if (k >= 2) fail(section, key, "expected at most 2 comma-separated numbers");
      out[k++] = parse_number(section, key, trim(part));
    }
    if (k != dim) fail(section, key, "expected " + std::to_string(dim) + " comma-separated numbers");
    return out;
  }

 private:
  const pt::ptree& tree_;
  const std::string& text_;
};

FieldSpec parse_field(const Reader& r, const std::string& section, FieldSpec fallback) {
  if (!r.has_section(section)) return fallback;
  const int chosen = int(r.has(section, "const")) + int(r.has(section, "expr")) + int(r.has(section, "file"));
  if (chosen != 1) r.fail(section, "", "exactly one of const, expr, file is required");
  FieldSpec spec;
  if (r.has(section, "const")) {
    spec.kind = FieldSpec::Kind::Const;
    spec.value = r.number(section, "const", 0.0);
  } else if (r.has(section, "file")) {
    spec.kind = FieldSpec::Kind::File;
    spec.file = r.raw(section, "file");
  } else {
    spec.kind = FieldSpec::Kind::Expr;
    spec.expr = r.raw(section, "expr");
    static const std::set<std::string> builtins{"const", "gaussian", "linear", "sine"};
    if (!builtins.count(spec.expr)) r.fail(section, "expr", "unknown builtin '" + spec.expr + "'");
    for (const char* key : {"value", "amplitude", "center", "width", "offset", "slope", "mode"})
      if (r.has(section, key)) spec.params[key] = r.raw(section, key);
  }
  return spec;
}

std::vector<double> split_numbers(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    try {
      out.push_back(std::stod(trim(part)));
    } catch (const std::logic_error&) {
      throw ValidationError(what + ": expected numbers, got '" + text + "'");
    }
  }
  return out;
}

}  // namespace

RunConfig parse_config_string(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(e.message(), e.line());
  }
  const auto& keys = known_keys();
  // Sections without keys never reach the tree.
  std::istringstream lines(text);
  std::string line;
  for (std::size_t number = 1; std::getline(lines, line); ++number) {
    const std::string t = trim(line);
    if (t.size() > 2 && t.front() == '[' && t.back() == ']' && !keys.count(trim(t.substr(1, t.size() - 2))))
      throw ParseError("unknown section " + t, number);
  }
  for (const auto& [section, body] : tree) {
    const auto it = keys.find(section);
    if (it == keys.end())
      throw ParseError("unknown section [" + section + "]", line_of(text, section, ""));
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw ParseError("[" + section + "] unknown key '" + key + "'", line_of(text, section, key));
  }
  const Reader r(tree, text);
  RunConfig c;
  c.base_dir = base_dir;

  c.dim = static_cast<int>(r.integer("problem", "dim", 1));
  if (c.dim != 1 && c.dim != 2) throw ValidationError("dim must be 1 or 2");
  const std::string omega = r.word("problem", "omega", c.dim == 1 ? "interval" : "box");
  if (omega == "interval") {
    if (c.dim != 1) throw ValidationError("omega = interval requires dim = 1");
    const auto lo = r.pair("problem", "omega_lower", {-1.0, 0.0}, 1);
    const auto hi = r.pair("problem", "omega_upper", {1.0, 0.0}, 1);
    if (!(hi[0] > lo[0])) throw ValidationError("omega_upper must exceed omega_lower");
    c.omega = OmegaShape::interval(lo[0], hi[0]);
  } else if (omega == "box") {
    const auto lo = r.pair("problem", "omega_lower", {-1.0, -1.0}, c.dim);
    const auto hi = r.pair("problem", "omega_upper", {1.0, 1.0}, c.dim);
    for (int k = 0; k < c.dim; ++k)
      if (!(hi[k] > lo[k])) throw ValidationError("omega_upper must exceed omega_lower on every axis");
    c.omega = c.dim == 1 ? OmegaShape::interval(lo[0], hi[0]) : OmegaShape::box(lo, hi);
  } else if (omega == "ball") {
    const auto centre = r.pair("problem", "omega_center", {0.0, 0.0}, c.dim);
    const double radius = r.number("problem", "omega_radius", 1.0);
    if (!(radius > 0.0)) throw ValidationError("omega_radius must be positive");
    c.omega = OmegaShape::ball(c.dim, centre, radius);
  } else {
    r.fail("problem", "omega", "expected interval, box or ball");
  }
  const long n = r.integer("problem", "n", 256);
  if (n < 8 || (n & (n - 1)) != 0) throw ValidationError("n must be a power of two >= 8");
  c.n = static_cast<std::size_t>(n);
  c.padding_factor = r.number("problem", "padding_factor", 4.0);
  if (!(c.padding_factor >= 2.0)) throw ValidationError("padding_factor must be >= 2");
  c.p = r.number("problem", "p", 2.0);
  c.s = r.number("problem", "s", 0.5);
  c.q = r.number("problem", "q", std::numeric_limits<double>::infinity());

  c.reg.eps0 = r.number("regularization", "eps0", c.reg.eps0);
  c.reg.ratio = r.number("regularization", "ratio", c.reg.ratio);
  c.reg.steps = static_cast<int>(r.integer("regularization", "steps", c.reg.steps));
  c.reg.validate();

  const long max_iters = r.integer("solver", "max_iters", static_cast<long>(c.solver.max_iters));
  if (max_iters < 1) throw ValidationError("max_iters must be >= 1");
  c.solver.max_iters = static_cast<std::size_t>(max_iters);
  c.solver.grad_tol = r.number("solver", "grad_tol", c.solver.grad_tol);
  const std::string rule = r.word("solver", "step_rule", "adaptive");
  if (rule == "adaptive")
    c.solver.step_rule = StepRule::AdaptiveTwoPoint;
  else if (rule == "fixed")
    c.solver.step_rule = StepRule::Fixed;
  else
    r.fail("solver", "step_rule", "expected fixed or adaptive");
  c.solver.fixed_step = r.number("solver", "fixed_step", c.solver.fixed_step);
  c.solver.armijo_c = r.number("solver", "armijo_c", c.solver.armijo_c);
  c.solver.max_backtracks = static_cast<int>(r.integer("solver", "max_backtracks", c.solver.max_backtracks));
  const long seed = r.integer("solver", "seed", 0);
  if (seed < 0) throw ValidationError("seed must be >= 0");
  c.solver.seed = static_cast<std::uint64_t>(seed);
  c.solver.validate();

  c.f = parse_field(r, "f", c.f);
  c.lambda_plus = parse_field(r, "lambda_plus", c.lambda_plus);
  c.lambda_minus = parse_field(r, "lambda_minus", c.lambda_minus);
  c.v = parse_field(r, "v", c.v);
  c.has_g = r.has_section("g");
  c.g = parse_field(r, "g", c.g);

  if (r.has_section("phi")) {
    PhiSpec phi;
    phi.kind = r.word("phi", "kind", "");
    static const std::set<std::string> kinds{"nemytskii", "uryson", "affine_reflection", "coupled_membrane"};
    if (!kinds.count(phi.kind)) r.fail("phi", "kind", "expected nemytskii, uryson, affine_reflection or coupled_membrane");
    phi.map = r.word("phi", "map", phi.map);
    phi.c1 = r.number("phi", "c1", phi.c1);
    phi.bound = r.number("phi", "bound", phi.bound);
    phi.v0 = r.word("phi", "v0", phi.v0);
    phi.kernel = r.word("phi", "kernel", phi.kernel);
    phi.amplitude = r.number("phi", "amplitude", phi.amplitude);
    phi.width = r.number("phi", "width", phi.width);
    phi.g = r.word("phi", "g", phi.g);
    phi.g_minus = r.word("phi", "g_minus", phi.g_minus);
    phi.g_plus = r.word("phi", "g_plus", phi.g_plus);
    if (r.has("phi", "t")) phi.t = r.number("phi", "t", 1.0);
    phi.fixed_point.theta = r.number("phi", "theta", phi.fixed_point.theta);
    phi.fixed_point.fp_tol = r.number("phi", "fp_tol", phi.fixed_point.fp_tol);
    phi.fixed_point.max_outer = static_cast<int>(r.integer("phi", "max_outer", phi.fixed_point.max_outer));
    c.phi = phi;
  }
  return c;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_string(ss.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

GridFunction materialize(const FieldSpec& spec, const OmegaMask& mask, const std::filesystem::path& base_dir) {
  const GridPtr& grid = mask.grid_ptr();
  if (spec.kind == FieldSpec::Kind::Const) return GridFunction(grid, spec.value);
  if (spec.kind == FieldSpec::Kind::File) {
    const auto path = spec.file.is_absolute() ? spec.file : base_dir / spec.file;
    return read_field(path, grid);
  }
  const int d = grid->dim();
  auto param = [&](const char* key, const std::string& fallback) {
    const auto it = spec.params.find(key);
    const std::string text = it == spec.params.end() ? fallback : it->second;
    auto values = split_numbers(text, std::string(spec.expr) + " " + key);
    if (values.size() == 1 && d == 2) values.push_back(values[0]);
    if (values.size() < static_cast<std::size_t>(d))
      throw ValidationError(spec.expr + " " + key + ": expected " + std::to_string(d) + " values");
    return values;
  };
  if (spec.expr == "const") return GridFunction(grid, param("value", "0")[0]);
  if (spec.expr == "gaussian") {
    const double a = param("amplitude", "1")[0];
    const auto c = param("center", "0");
    const double w = param("width", "1")[0];
    if (!(w > 0.0)) throw ValidationError("gaussian width must be positive");
    return sample(grid, [&](std::array<double, 2> x) {
      double r2 = 0.0;
      for (int k = 0; k < d; ++k) r2 += (x[k] - c[k]) * (x[k] - c[k]);
      return a * std::exp(-r2 / (w * w));
    });
  }
  if (spec.expr == "linear") {
    const double offset = param("offset", "0")[0];
    const auto slope = param("slope", "0");
    return sample(grid, [&](std::array<double, 2> x) {
      double v = offset;
      for (int k = 0; k < d; ++k) v += slope[k] * x[k];
      return v;
    });
  }
  if (spec.expr == "sine") {
    const double a = param("amplitude", "1")[0];
    const auto mode = param("mode", "1");
    const OmegaShape* shape = mask.shape();
    if (!shape) throw ValidationError("sine builtin needs a shaped Omega");
    const auto lo = shape->bbox_lower();
    const auto hi = shape->bbox_upper();
    return sample(grid, [&](std::array<double, 2> x) {
      double v = a;
      for (int k = 0; k < d; ++k) v *= std::sin(mode[k] * M_PI * (x[k] - lo[k]) / (hi[k] - lo[k]));
      return v;
    });
  }
  throw ValidationError("unknown builtin '" + spec.expr + "'");
}

ProblemData build_problem(const RunConfig& config) {
  GridPtr grid;
  MaskPtr mask;
  try {
    grid = make_padded_grid(config.omega, config.n, config.padding_factor);
    mask = std::make_shared<const OmegaMask>(grid, config.omega);
  } catch (const InvalidArgument& e) {
    throw ValidationError(e.what());
  } catch (const DomainError& e) {
    throw ValidationError(e.what());
  }
  auto field = [&](const FieldSpec& spec) { return materialize(spec, *mask, config.base_dir); };
  return ProblemData(mask, config.p, config.s, field(config.f), field(config.lambda_plus), field(config.lambda_minus),
                     field(config.v), config.q);
}

GridFunction scalar_or_file(const std::string& text, const OmegaMask& mask, const std::filesystem::path& base_dir) {
  try {
    std::size_t used = 0;
    const double x = std::stod(text, &used);
    if (used == text.size()) return GridFunction(mask.grid_ptr(), x);
  } catch (const std::logic_error&) {
  }
  const std::filesystem::path path(text);
  return read_field(path.is_absolute() ? path : base_dir / path, mask.grid_ptr());
}

PhiOperator build_phi(const PhiSpec& spec, const ProblemData& data, const std::filesystem::path& base_dir) {
  const OmegaMask& mask = data.mask();
  if (spec.kind == "nemytskii") {
    NemytskiiPhi::Map map;
    if (spec.map == "clamp")
      map = NemytskiiPhi::Map::Clamp;
    else if (spec.map == "tanh")
      map = NemytskiiPhi::Map::Tanh;
    else
      throw ValidationError("phi map must be clamp or tanh");
    return NemytskiiPhi::make(map, enforce_zero_extension(scalar_or_file(spec.v0, mask, base_dir), mask), spec.c1,
                              spec.bound);
  }
  if (spec.kind == "uryson") {
    UrysonPhi::Kernel kernel;
    if (spec.kernel == "constant")
      kernel = UrysonPhi::Kernel::Constant;
    else if (spec.kernel == "gaussian")
      kernel = UrysonPhi::Kernel::Gaussian;
    else
      throw ValidationError("phi kernel must be constant or gaussian");
    UrysonPhi::Nonlinearity g;
    if (spec.g == "identity")
      g = UrysonPhi::Nonlinearity::Identity;
    else if (spec.g == "clamp")
      g = UrysonPhi::Nonlinearity::Clamp;
    else if (spec.g == "tanh")
      g = UrysonPhi::Nonlinearity::Tanh;
    else
      throw ValidationError("phi g must be identity, clamp or tanh");
    return UrysonPhi::make(kernel, spec.amplitude, spec.width, g, spec.bound);
  }
  if (spec.kind == "affine_reflection")
    return AffineReflectionPhi{enforce_zero_extension(scalar_or_file(spec.v0, mask, base_dir), mask)};
  if (spec.kind == "coupled_membrane")
    return CoupledMembranePhi{spec.t.value_or(data.s()), scalar_or_file(spec.g_minus, mask, base_dir),
                              scalar_or_file(spec.g_plus, mask, base_dir)};
  throw ValidationError("unknown phi kind '" + spec.kind + "'");
}

}  // namespace fractwophase
