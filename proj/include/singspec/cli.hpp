#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "singspec/common.hpp"
#include "singspec/femnd.hpp"
#include "singspec/potentials.hpp"

namespace singspec::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.3.0";
inline constexpr std::uint64_t kDefaultSeed = 20240607u;

// ---------------------------------------------------------------------------
// Logging (SINGSPEC_LOG = error | info | debug)
// ---------------------------------------------------------------------------

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

LogLevel log_level();
void set_log_level(LogLevel level);
void log(LogLevel level, const std::string& message);

// ---------------------------------------------------------------------------
// Problem descriptors
// ---------------------------------------------------------------------------

/// Experiment kinds understood by run().
inline const std::vector<std::string> kKinds = {"solve1d", "solve2d",  "weyl",     "converge", "abel",
                                                "subord",  "admissible", "sandwich", "regularity", "refine2d"};

/// A parsed and checked config. `raw` keeps the JSON as given (with file
/// references resolved against base_dir) and is what the config hash covers.
struct ExperimentConfig {
  Json raw;
  std::string kind;
  std::uint64_t seed = kDefaultSeed;
  bool seed_given = false;
  std::filesystem::path base_dir = ".";
  std::filesystem::path output;  ///< relative to the run's out_dir unless absolute
};

/// Throws ConfigError naming the offending field.
ExperimentConfig parse_config(const Json& j, const std::filesystem::path& base_dir = ".");
Json load_json(const std::filesystem::path& file);

/// A potential definition: inline object or {"file": path}. `field` is the
/// JSON path used in error messages.
std::shared_ptr<const potentials::Primitive1D> parse_primitive(const Json& j, const std::string& field = "potential");
potentials::VectorField parse_field(const Json& j, const std::string& field = "potential");
Json resolve_potential(const Json& j, const std::filesystem::path& base_dir, const std::string& field = "potential");

/// "rect:Lx,Ly,nx,ny" or "disk:R,level".
femnd::Mesh2D parse_domain(const std::string& text);

/// "r0:r1:steps", inclusive, linear (log spaced when `log_spaced`).
std::vector<double> parse_grid(const std::string& text, bool log_spaced = false);
/// "k0..k1" -> {2^-k0, ..., 2^-k1}.
std::vector<double> parse_scales(const std::string& text);

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

/// 17 significant digits, lowercase scientific.
std::string format_number(double v);

/// FNV-1a 64 over the compact dump of the config, as 16 hex digits.
std::string config_hash(const Json& config);

/// Header lines, each starting with "# ".
std::string metadata_header(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Running and validation
// ---------------------------------------------------------------------------

struct RunOptions {
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;  ///< overrides the config seed
};

struct RunResult {
  int exit_code = 0;  ///< 0 ok, 1 config error, 2 numerical failure
  std::vector<std::filesystem::path> artifacts;
  std::string message;
};

/// Never throws: errors become exit codes with module-qualified messages.
RunResult run(const Json& config, const RunOptions& opts = {}, const std::filesystem::path& base_dir = ".");

struct Issue {
  std::string severity;  ///< "error" or "warning"
  std::string field;
  std::string message;
};

/// Schema and admissibility check only; no spectra are computed.
std::vector<Issue> validate(const Json& config, const std::filesystem::path& base_dir = ".");

std::vector<std::string> preset_names();
/// Throws ConfigError for unknown names.
Json preset(const std::string& name);

}  // namespace singspec::cli
