#include "fractwophase/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <fftw3.h>
#include <openssl/evp.h>

#include "fractwophase/parallel.hpp"

namespace fractwophase {

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void scan_finite(const Report& node, const std::string& where) {
  if (node.is_number_float()) {
    if (!std::isfinite(node.get<double>())) throw IoError("report: non-finite value at " + where);
  } else if (node.is_object()) {
    for (auto it = node.begin(); it != node.end(); ++it) scan_finite(it.value(), where + "/" + it.key());
  } else if (node.is_array()) {
    for (std::size_t i = 0; i < node.size(); ++i) scan_finite(node[i], where + "/" + std::to_string(i));
  }
}

}  // namespace

void write_field(const GridFunction& u, std::ostream& out) {
  const BoxGrid& g = u.grid();
  out << "NDG1\n" << g.dim();
  for (int k = 0; k < g.dim(); ++k) out << ' ' << g.n(k);
  out << '\n' << std::setprecision(17);
  for (int k = 0; k < g.dim(); ++k) out << g.lower(k) << ' ';
  for (int k = 0; k < g.dim(); ++k) out << g.upper(k) << (k + 1 < g.dim() ? " " : "");
  out << '\n';
  for (std::size_t i = 0; i < u.size(); ++i) out << u[i] << '\n';
}

void write_field(const GridFunction& u, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_field(u, out);
  if (!out) throw IoError("write failed: " + path.string());
}

GridFunction read_field(std::istream& in, const GridPtr& grid, const std::string& origin) {
  std::string line;
  if (!std::getline(in, line) || line != "NDG1") throw ReadError(origin + ": missing NDG1 header");
  if (!std::getline(in, line)) throw ReadError(origin + ": missing dimension line");
  std::istringstream dims(line);
  int d = 0;
  std::array<std::size_t, 2> n{1, 1};
  if (!(dims >> d) || (d != 1 && d != 2)) throw ReadError(origin + ": dimension must be 1 or 2");
  for (int k = 0; k < d; ++k)
    if (!(dims >> n[k])) throw ReadError(origin + ": missing node count for axis " + std::to_string(k));
  if (!std::getline(in, line)) throw ReadError(origin + ": missing bounds line");
  std::istringstream bounds(line);
  std::array<double, 2> lo{0.0, 0.0}, hi{1.0, 1.0};
  for (int k = 0; k < d; ++k)
    if (!(bounds >> lo[k])) throw ReadError(origin + ": malformed lower bounds");
  for (int k = 0; k < d; ++k)
    if (!(bounds >> hi[k])) throw ReadError(origin + ": malformed upper bounds");

  GridPtr target = grid;
  if (target) {
    bool same = target->dim() == d;
    for (int k = 0; same && k < d; ++k)
      same = target->n(k) == n[k] && target->lower(k) == lo[k] && target->upper(k) == hi[k];
    if (!same) throw ReadError(origin + ": header does not match the problem grid");
  } else {
    try {
      target = std::make_shared<const BoxGrid>(d, lo, hi, n);
    } catch (const InvalidArgument& e) {
      throw ReadError(origin + ": " + e.what());
    }
  }
  const std::size_t expected = target->size();
  std::vector<double> values;
  values.reserve(expected);
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(line, &used);
    } catch (const std::exception&) {
      throw ReadError(origin + ": malformed value on data line " + std::to_string(values.size() + 1));
    }
    if (line.find_first_not_of(" \t\r", used) != std::string::npos)
      throw ReadError(origin + ": trailing text on data line " + std::to_string(values.size() + 1));
    values.push_back(x);
  }
  if (values.size() != expected)
    throw ReadError(origin + ": expected " + std::to_string(expected) + " values, found " +
                    std::to_string(values.size()));
  return GridFunction(target, std::move(values));
}

GridFunction read_field(const std::filesystem::path& path, const GridPtr& grid) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_field(in, grid, path.string());
}

void check_finite(const Report& report) { scan_finite(report, ""); }

void write_report(const Report& report, const std::filesystem::path& path) {
  check_finite(report);
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << report.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

std::string library_version() { return "1.0.0"; }

Report make_manifest(const std::filesystem::path& config_path, std::uint64_t seed,
                     const std::vector<std::string>& command_line) {
  Report m;
  m["config"] = config_path.string();
  m["config_sha256"] = sha256_hex(read_text(config_path));
  m["version"] = library_version();
  m["fftw"] = std::string(fftw_version);
  m["compiler"] = __VERSION__;
  m["seed"] = seed;
  m["threads"] = worker_count();
  m["command_line"] = command_line;
  return m;
}

}  // namespace fractwophase
