#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hdgfwi/basis.hpp"
#include "hdgfwi/config.hpp"
#include "hdgfwi/workflow.hpp"

namespace py = pybind11;
using namespace hdgfwi;

namespace {

py::dict info_dict(const MeshInfo& info) {
  py::dict d;
  d["dim"] = info.dim;
  d["vertices"] = info.vertices;
  d["cells"] = info.cells;
  d["faces"] = info.faces;
  d["interior_faces"] = info.interior_faces;
  d["boundary_faces"] = info.boundary_faces;
  d["trace_dofs"] = info.trace_dofs;
  d["volume_dofs"] = info.volume_dofs;
  d["min_order"] = info.min_order;
  d["max_order"] = info.max_order;
  return d;
}

py::array_t<std::complex<double>> data_array(const DataSet& data) {
  const auto nf = static_cast<py::ssize_t>(data.frequencies.size());
  const auto ns = static_cast<py::ssize_t>(data.sources.size());
  const auto nr = static_cast<py::ssize_t>(data.receivers.size());
  py::array_t<std::complex<double>> out({nf, ns, nr});
  auto v = out.mutable_unchecked<3>();
  for (py::ssize_t f = 0; f < nf; ++f) {
    for (py::ssize_t s = 0; s < ns; ++s) {
      for (py::ssize_t r = 0; r < nr; ++r) v(f, s, r) = data.values[f][s][r];
    }
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "HDG frequency-domain acoustic inversion";
  m.attr("__version__") = HDGFWI_VERSION;

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<StructuralError>(m, "StructuralError", base.ptr());
  py::register_exception<MeshError>(m, "MeshError", base.ptr());

  m.def("dof_count", &dof_count, py::arg("order"), py::arg("dim"),
        "Number of nodal coefficients of a degree-`order` polynomial on a simplex.");

  py::class_<RunConfig>(m, "Config")
      .def_static("from_file", &load_config, py::arg("path"))
      .def_static("from_json", &parse_config, py::arg("text"), py::arg("base_dir") = std::filesystem::path("."))
      .def_property_readonly("resolved_json", [](const RunConfig& c) { return c.resolved_json; })
      .def_property_readonly("frequencies", [](const RunConfig& c) { return c.frequencies; })
      .def_property(
          "seed", [](const RunConfig& c) { return c.seed; },
          [](RunConfig& c, std::uint64_t s) {
            c.seed = s;
            refresh_resolved(c);
          })
      .def_property(
          "output_dir", [](const RunConfig& c) { return c.output_dir; },
          [](RunConfig& c, const std::filesystem::path& p) {
            c.output_dir = p;
            refresh_resolved(c);
          });

  m.def(
      "mesh_info", [](const RunConfig& c) { return info_dict(mesh_info(c)); }, py::arg("config"));

  m.def(
      "observed_data",
      [](const RunConfig& c) {
        DataSet data;
        {
          py::gil_scoped_release release;
          data = obtain_data(c);
        }
        return data_array(data);
      },
      py::arg("config"), "Observed data as a complex array indexed [frequency, source, receiver].");

  m.def(
      "gradient_check",
      [](const RunConfig& c) {
        GradientCheckReport r;
        {
          py::gil_scoped_release release;
          r = run_gradcheck(c);
        }
        py::list rows;
        for (const GradientCheckRow& row : r.rows) rows.append(py::make_tuple(row.step, row.relative_error));
        py::dict d;
        d["dofs"] = r.dofs;
        d["rows"] = rows;
        d["min_relative_error"] = r.min_relative_error;
        return d;
      },
      py::arg("config"));

  m.def(
      "invert",
      [](const RunConfig& c) {
        InvertSummary s;
        {
          py::gil_scoped_release release;
          s = run_invert(c);
        }
        py::dict d;
        d["initial_misfit"] = s.initial_misfit;
        d["final_misfit"] = s.final_misfit;
        d["iterations"] = s.iterations;
        return d;
      },
      py::arg("config"));
}
