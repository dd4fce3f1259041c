#include "hdgfwi/workflow.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "hdgfwi/io.hpp"

namespace hdgfwi {

namespace {

std::vector<double> cell_means(const Mesh& mesh, const Model& model) {
  std::vector<double> c(mesh.num_cells());
  for (std::size_t e = 0; e < c.size(); ++e) c[e] = model.mean_wave_speed(e);
  return c;
}

std::string checkpoint_name(const RunConfig& c, int frequency_index, int iteration) {
  std::ostringstream name;
  name << "model_f" << std::setw(2) << std::setfill('0') << frequency_index;
  if (iteration < 0) {
    name << "_final.txt";
  } else {
    name << "_it" << std::setw(3) << std::setfill('0') << iteration << ".txt";
  }
  return (c.output_dir / "checkpoints" / name.str()).string();
}

bool binary_data(const RunConfig& c, const DataSet& d) {
  if (c.data.format == "binary") return true;
  if (c.data.format == "csv") return false;
  std::size_t n = 0;
  for (const auto& block : d.values) {
    for (const CVector& t : block) n += static_cast<std::size_t>(t.size());
  }
  return n > kBinaryDataThreshold;
}

}  // namespace

MeshInfo mesh_info(const RunConfig& c) {
  const Mesh mesh = build_mesh(c.mesh);
  const Model model = build_model(mesh, c.model);
  const Discretization disc = make_discretization(mesh, model, c.frequencies.front(), c.orders);
  MeshInfo info;
  info.dim = mesh.dim();
  info.vertices = mesh.num_vertices();
  info.cells = mesh.num_cells();
  info.faces = mesh.num_faces();
  info.interior_faces = mesh.num_interior_faces();
  info.boundary_faces = mesh.num_boundary_faces();
  info.trace_dofs = disc.trace_dofs();
  info.volume_dofs = disc.volume_dofs();
  const auto [lo, hi] = std::minmax_element(disc.cell_orders().begin(), disc.cell_orders().end());
  info.min_order = *lo;
  info.max_order = *hi;
  return info;
}

std::string format_mesh_info(const MeshInfo& i) {
  std::ostringstream out;
  out << "dim " << i.dim << '\n'
      << "vertices " << i.vertices << '\n'
      << "cells " << i.cells << '\n'
      << "faces " << i.faces << " (interior " << i.interior_faces << ", boundary " << i.boundary_faces << ")\n"
      << "orders " << i.min_order << ".." << i.max_order << '\n'
      << "trace dof " << i.trace_dofs << '\n'
      << "volume dof per unknown " << i.volume_dofs << '\n'
      << "volume dof total " << (i.dim + 1) * i.volume_dofs << '\n';
  return out.str();
}

DataSet obtain_data(const RunConfig& c) {
  if (c.data.file) {
    DataSet d = read_dataset(*c.data.file);
    d.validate();
    return d;
  }
  const Mesh mesh = build_mesh(c.data.mesh ? *c.data.mesh : c.mesh);
  const Model truth = build_model(mesh, c.model);
  return synthesize_data(mesh, c.boundary, truth, c.acquisition, c.frequencies, c.laplace_shift,
                         c.data.orders ? *c.data.orders : c.orders, c.data.snr_db, c.seed, c.solver);
}

Model gradcheck_model(const RunConfig& c, const Mesh& mesh) {
  Model m = build_model(mesh, c.model);
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : m.wave_speed()) v *= 1.0 + c.gradcheck.perturbation * u(rng);
  return m;
}

void write_run_header(const RunConfig& c) {
  std::error_code ec;
  fs::create_directories(c.output_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + c.output_dir.string() + "': " + ec.message());
  write_text(c.output_dir / "config.resolved.json", c.resolved_json);
  write_text(c.output_dir / "VERSION", std::string(version_string()) + "\n");
}

void run_mesh_info(const RunConfig& c) {
  write_run_header(c);
  const std::string text = format_mesh_info(mesh_info(c));
  write_text(c.output_dir / "mesh_info.txt", text);
  std::fputs(text.c_str(), stdout);
}

void run_forward(const RunConfig& c) {
  write_run_header(c);
  const Mesh mesh = build_mesh(c.mesh);
  const Model model = build_model(mesh, c.model);
  model.validate();
  if (c.acquisition.sources.empty()) throw ConfigError("forward: no sources configured");
  const std::vector<Excitation> sources = point_excitations(c.acquisition);
  std::vector<std::vector<CVector>> values;
  for (std::size_t f = 0; f < c.frequencies.size(); ++f) {
    ForwardSolver solver(mesh, make_discretization(mesh, model, c.frequencies[f], c.orders), c.boundary, c.solver);
    solver.set_state(model, complex_frequency(c.frequencies[f], c.laplace_shift));
    const RestrictionOperator restriction(mesh, solver.discretization(), c.acquisition.receivers);
    const std::vector<FieldSolution> fields = solver.solve_all(sources);
    std::vector<CVector> block;
    for (std::size_t s = 0; s < fields.size(); ++s) {
      block.push_back(restriction.apply(fields[s]));
      auto [re, im] = vertex_pressure(solver.system(), fields[s]);
      write_vtk(c.output_dir / ("field_f" + std::to_string(f) + "_s" + std::to_string(s) + ".vtk"), mesh,
                {{"pressure_re", re}, {"pressure_im", im}}, {{"wave_speed", cell_means(mesh, model)}});
    }
    values.push_back(std::move(block));
    spdlog::info("forward: frequency {} Hz, {} trace dof, {} sources", c.frequencies[f],
                 solver.discretization().trace_dofs(), sources.size());
  }
  write_measurements(c.output_dir / "measurements.csv", c.frequencies, c.laplace_shift, values);
}

void run_synthesize(const RunConfig& c) {
  write_run_header(c);
  if (c.data.file) throw ConfigError("synthesize: data.file is an input of invert; remove it to synthesize");
  const DataSet d = obtain_data(c);
  const bool binary = binary_data(c, d);
  write_dataset(d, c.output_dir / (binary ? "data.bin" : "data.csv"), binary);
  spdlog::info("synthesize: {} frequencies, {} sources, {} receivers, snr {}", d.frequencies.size(),
               d.sources.size(), d.receivers.size(), d.snr_db ? std::to_string(*d.snr_db) + " dB" : "none");
}

GradientCheckReport run_gradcheck(const RunConfig& c) {
  write_run_header(c);
  const Mesh mesh = build_mesh(c.mesh);
  const DataSet data = obtain_data(c);
  const Model model = gradcheck_model(c, mesh);
  std::vector<int> dofs = c.gradcheck.cells;
  if (dofs.empty()) {
    std::vector<int> all(model.num_dofs());
    std::iota(all.begin(), all.end(), 0);
    std::mt19937_64 rng(c.seed + 1);
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(std::min<std::size_t>(all.size(), static_cast<std::size_t>(c.gradcheck.num_cells)));
    std::sort(all.begin(), all.end());
    dofs = all;
  }
  const GradientCheckReport report =
      gradient_check(mesh, c.boundary, model, data, c.orders, c.gradcheck.parameter, dofs, c.gradcheck.steps, c.solver);
  std::ostringstream out;
  out << std::setprecision(17);
  out << "step,relative_error\n";
  for (const GradientCheckRow& r : report.rows) out << r.step << ',' << r.relative_error << '\n';
  write_text(c.output_dir / "gradcheck.csv", out.str());
  std::ostringstream detail;
  detail << std::setprecision(17) << "dof,adjoint";
  for (const GradientCheckRow& r : report.rows) detail << ",fd_" << r.step;
  detail << '\n';
  for (std::size_t i = 0; i < report.dofs.size(); ++i) {
    detail << report.dofs[i] << ',' << report.adjoint[i];
    for (const RVector& fd : report.finite_difference) detail << ',' << fd[i];
    detail << '\n';
  }
  write_text(c.output_dir / "gradcheck_dofs.csv", detail.str());
  spdlog::info("gradcheck: minimum relative error {:.3e} over {} steps", report.min_relative_error,
               report.rows.size());
  std::printf("min_relative_error %.6e\n", report.min_relative_error);
  return report;
}

InvertSummary run_invert(const RunConfig& c) {
  write_run_header(c);
  fs::create_directories(c.output_dir / "checkpoints");
  const DataSet data = obtain_data(c);
  const Mesh mesh = build_mesh(c.mesh);
  const Model initial = build_model(mesh, c.initial_model);
  const Model* last = nullptr;
  Model latest = initial;
  auto checkpoint = [&](const Model& m, int fi, int it) {
    latest = m;
    last = &latest;
    write_model(m, checkpoint_name(c, fi, it));
  };
  std::optional<InversionResult> run;
  try {
    run = run_inversion(mesh, c.boundary, initial, data, c.orders, c.inversion, checkpoint, c.solver);
  } catch (const Error&) {
    write_model(last ? *last : initial, c.output_dir / "checkpoints" / "model_abort.txt");
    throw;
  }
  const InversionResult& result = *run;
  write_inversion_log(c.output_dir / "inversion_log.csv", result.log);
  write_timings(c.output_dir / "timings.csv", result.log, result.wall_seconds);
  write_model(result.model, c.output_dir / "model_final.txt");
  write_vtk(c.output_dir / "model_final.vtk", mesh, {}, {{"wave_speed", cell_means(mesh, result.model)}});
  InvertSummary s;
  s.iterations = result.log.size();
  if (!result.log.empty()) {
    s.initial_misfit = result.log.front().misfit;
    s.final_misfit = result.log.back().misfit;
  }
  std::printf("initial_misfit %.6e\nfinal_misfit %.6e\n", s.initial_misfit, s.final_misfit);
  return s;
}

}  // namespace hdgfwi
