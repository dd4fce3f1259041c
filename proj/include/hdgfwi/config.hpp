#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hdgfwi/forward.hpp"
#include "hdgfwi/inversion.hpp"

namespace hdgfwi {

struct MeshSpec {
  std::optional<std::filesystem::path> file;
  int dim = 2;
  Point lower = Point::Zero();
  Point upper = Point::Zero();
  std::vector<int> cells;
};

struct Inclusion {
  Point center = Point::Zero();
  double radius = 0.0;
  double wave_speed = 0.0;
};

struct ModelSpec {
  std::optional<std::filesystem::path> file;
  double wave_speed = 1500.0;
  double density = 1000.0;
  int order = 0;
  std::vector<Inclusion> inclusions;
};

struct DataSpec {
  std::optional<std::filesystem::path> file;
  std::optional<double> snr_db;
  std::string format = "auto";  ///< csv, binary or auto
  std::optional<MeshSpec> mesh;            ///< synthesis mesh, when it differs
  std::optional<OrderSelection> orders;    ///< synthesis orders, when they differ
};

struct GradcheckSpec {
  int num_cells = 5;
  std::vector<int> cells;
  std::vector<double> steps{1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
  Parameter parameter = Parameter::kWaveSpeed;
  double perturbation = 0.1;  ///< relative offset of the evaluation model from the data model
};

/// Validated run configuration with every default resolved.
struct RunConfig {
  MeshSpec mesh;
  ModelSpec model;
  std::vector<double> frequencies;
  double laplace_shift = 0.0;
  BoundarySpec boundary;
  AcquisitionSetup acquisition;
  OrderSelection orders;
  FactorizationOptions solver;
  DataSpec data;
  InversionSettings inversion;
  ModelSpec initial_model;
  GradcheckSpec gradcheck;
  std::filesystem::path output_dir = "output";
  std::uint64_t seed = 0;

  /// The resolved configuration as pretty-printed JSON.
  std::string resolved_json;
};

/// Parses and validates a JSON configuration. Relative paths are taken
/// relative to base_dir. Unknown keys and wrong types are rejected with
/// the offending key path.
RunConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::filesystem::path& path);

/// Re-renders resolved_json after programmatic edits (seed, output dir).
void refresh_resolved(RunConfig& config);

Mesh build_mesh(const MeshSpec& spec);
Model build_model(const Mesh& mesh, const ModelSpec& spec);

}  // namespace hdgfwi
