#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lyapcert/certify.hpp"
#include "lyapcert/expr.hpp"
#include "lyapcert/grid.hpp"

namespace lyapcert {

// ---------------------------------------------------------------------------
// System configuration (TOML)

enum class FieldMode { kExplicit, kGradient, kHamiltonian };
std::string to_string(FieldMode mode);

struct FalsifierSettings {
  bool enabled = false;
  int trials = 200;
  double horizon = 100.0;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  bool dump_csv = false;
};

struct SystemConfig {
  int dimension = 2;
  FieldMode mode = FieldMode::kExplicit;
  std::string F_source;
  std::vector<std::string> f_sources;  // explicit mode only
  bool negate_F = false;               // gradient mode
  int dof = 1;                         // hamiltonian mode
  Vec x0;
  GridSpec grid;
  double eta = 1e-4;
  double tol_S = 1e-6;  // relative to max |f| on each surface
  double tol_H = 1e-9;
  QuasiIsolationParams quasi;
  FamilyParams family;
  FalsifierSettings falsifier;
  std::uint64_t seed = 42;

  std::shared_ptr<const Variables> variables() const;
  Expr F() const;
  VectorFieldDef field() const;
};

// Throws ConfigError naming the offending line or field.
SystemConfig parse_config(const std::string& text, const std::string& origin = "<config>");
SystemConfig load_config(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Mesh text format

struct MeshData {
  int dimension = 2;
  double level = 0.0;
  std::vector<Vec> vertices;
  std::vector<Vec> normals;
  std::vector<std::array<int, 2>> edges;
  std::vector<std::array<int, 3>> triangles;
};

void write_mesh(std::ostream& out, const Hypersurface& H);
MeshData read_mesh(std::istream& in);

// ---------------------------------------------------------------------------
// Files

// Writes via a temporary sibling file and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

// ---------------------------------------------------------------------------
// Commands. Exit codes: 0 certified-stable, 1 violated, 2 inconclusive,
// 3 configuration error, 4 any other error.

inline constexpr int kExitStable = 0;
inline constexpr int kExitViolated = 1;
inline constexpr int kExitInconclusive = 2;
inline constexpr int kExitConfigError = 3;
inline constexpr int kExitError = 4;

struct CertifyOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;  // default: <config stem>.cert.json beside the config
  bool falsify = false;
  std::optional<std::uint64_t> seed;
};

int cmd_certify(const CertifyOptions& options, std::ostream& log);
int cmd_levels(const std::filesystem::path& config, const std::filesystem::path& out_dir, std::ostream& log);
int cmd_plot(const std::filesystem::path& certificate, const std::filesystem::path& svg, std::ostream& log);

}  // namespace lyapcert
