#pragma once

#include <filesystem>
#include <string>

#include "hdgfwi/config.hpp"

namespace hdgfwi {

struct MeshInfo {
  int dim = 0;
  std::size_t vertices = 0;
  std::size_t cells = 0;
  std::size_t faces = 0;
  std::size_t interior_faces = 0;
  std::size_t boundary_faces = 0;
  std::size_t trace_dofs = 0;
  std::size_t volume_dofs = 0;  ///< per scalar unknown
  int min_order = 0;
  int max_order = 0;
};

/// Counts at the first configured frequency.
MeshInfo mesh_info(const RunConfig& config);
std::string format_mesh_info(const MeshInfo& info);

/// Observed data: read from data.file when set, otherwise synthesized from
/// the configured true model on the data mesh with the data orders.
DataSet obtain_data(const RunConfig& config);

/// Evaluation model of gradcheck: the true model with every wave-speed
/// coefficient scaled by 1 + perturbation * u, u uniform in [-1, 1].
Model gradcheck_model(const RunConfig& config, const Mesh& mesh);

struct InvertSummary {
  double initial_misfit = 0.0;
  double final_misfit = 0.0;
  std::size_t iterations = 0;
};

/// Verb drivers. Each writes the resolved config and VERSION into the
/// output directory before any other artifact.
void run_mesh_info(const RunConfig& config);
void run_forward(const RunConfig& config);
void run_synthesize(const RunConfig& config);
GradientCheckReport run_gradcheck(const RunConfig& config);
InvertSummary run_invert(const RunConfig& config);

void write_run_header(const RunConfig& config);

}  // namespace hdgfwi
