#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "fractwophase/grid.hpp"

namespace fractwophase {

/// Malformed or truncated NDG1 input.
class ReadError : public IoError {
 public:
  using IoError::IoError;
};

/// NDG1 text: "NDG1", "d n1 [n2]", "lower... upper...", then values row-major,
/// one per line, all at 17 significant digits.
void write_field(const GridFunction& u, std::ostream& out);
void write_field(const GridFunction& u, const std::filesystem::path& path);

/// Reads an NDG1 field. With `grid` set, the header must describe that grid and the
/// result shares it; otherwise a grid is built from the header.
GridFunction read_field(std::istream& in, const GridPtr& grid = nullptr, const std::string& origin = "<stream>");
GridFunction read_field(const std::filesystem::path& path, const GridPtr& grid = nullptr);

using Report = nlohmann::ordered_json;

/// Throws IoError naming the offending key when any number in `report` is NaN or infinite.
void check_finite(const Report& report);
/// Pretty-printed JSON; refuses non-finite numbers.
void write_report(const Report& report, const std::filesystem::path& path);

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

std::string library_version();

/// Run provenance: config hash, library and FFT versions, seed, command line, thread cap.
Report make_manifest(const std::filesystem::path& config_path, std::uint64_t seed,
                     const std::vector<std::string>& command_line);

}  // namespace fractwophase
