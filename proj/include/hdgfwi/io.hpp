#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hdgfwi/dataset.hpp"
#include "hdgfwi/inversion.hpp"
#include "hdgfwi/mesh.hpp"
#include "hdgfwi/model.hpp"

namespace hdgfwi {

namespace fs = std::filesystem;

/// ASCII node-element mesh: "dim N_vertices N_cells", then one line of dim
/// coordinates per vertex, then one line of dim+1 0-based vertex indices
/// per cell.
Mesh read_mesh(const fs::path& path);
Mesh parse_mesh(const std::string& text);
void write_mesh(const Mesh& mesh, const fs::path& path);

/// Model file: "dim N_cells order", then per cell the wave-speed
/// coefficients followed by the density coefficients. The binary variant
/// starts with the magic "HDGM" and stores little-endian int32 dim, int64
/// N_cells, int32 order, then float64 c and rho arrays.
Model read_model(const fs::path& path);
void write_model(const Model& model, const fs::path& path, bool binary = false);

/// DataSet CSV: '#' header lines (frequencies, sources, receivers), a
/// column line, then rows source_id,receiver_id,freq_re,freq_im,value_re,value_im
/// with freq = sigma. The binary variant starts with "HDGD" and stores
/// the header followed by a contiguous little-endian complex64 array.
DataSet read_dataset(const fs::path& path);
void write_dataset(const DataSet& data, const fs::path& path, bool binary = false);
/// Value count above which "auto" output picks the binary layout.
inline constexpr std::size_t kBinaryDataThreshold = 1u << 20;

/// Measurement CSV of forward runs (same row layout as the DataSet CSV).
void write_measurements(const fs::path& path, const std::vector<double>& frequencies, double laplace_shift,
                        const std::vector<std::vector<CVector>>& values);

/// VTK legacy ASCII unstructured grid with per-vertex and per-cell scalars.
void write_vtk(const fs::path& path, const Mesh& mesh, const std::map<std::string, std::vector<double>>& point_data,
               const std::map<std::string, std::vector<double>>& cell_data);

/// HDG pressure averaged onto the mesh vertices (real and imaginary parts).
std::pair<std::vector<double>, std::vector<double>> vertex_pressure(const HdgSystem& system,
                                                                    const FieldSolution& solution);

/// Inversion log without wall time (deterministic) and the timings file.
void write_inversion_log(const fs::path& path, const std::vector<IterationRecord>& log);
void write_timings(const fs::path& path, const std::vector<IterationRecord>& log,
                   const std::vector<double>& wall_seconds);

/// Writes text to a file, throwing IoError on failure.
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

}  // namespace hdgfwi
