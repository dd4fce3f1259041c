#include "hdgfwi/config.hpp"

#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "hdgfwi/basis.hpp"
#include "hdgfwi/io.hpp"

namespace hdgfwi {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw ConfigError("config key '" + path + "': " + what);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) bad(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) bad(join(path, key), "unknown key");
  }
}

double number(const json& obj, const std::string& key, const std::string& path) {
  const json& v = obj.at(key);
  if (!v.is_number()) bad(join(path, key), "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) bad(join(path, key), "must be finite");
  return x;
}

double number_or(const json& obj, const std::string& key, const std::string& path, double fallback) {
  return obj.contains(key) ? number(obj, key, path) : fallback;
}

int integer(const json& obj, const std::string& key, const std::string& path) {
  const json& v = obj.at(key);
  if (!v.is_number_integer()) bad(join(path, key), "expected an integer");
  return v.get<int>();
}

int integer_or(const json& obj, const std::string& key, const std::string& path, int fallback) {
  return obj.contains(key) ? integer(obj, key, path) : fallback;
}

std::string string_of(const json& obj, const std::string& key, const std::string& path) {
  const json& v = obj.at(key);
  if (!v.is_string()) bad(join(path, key), "expected a string");
  return v.get<std::string>();
}

Point point_of(const json& v, int dim, const std::string& path) {
  if (!v.is_array() || static_cast<int>(v.size()) != dim) bad(path, "expected an array of " + std::to_string(dim) + " numbers");
  Point p = Point::Zero();
  for (int d = 0; d < dim; ++d) {
    if (!v[d].is_number()) bad(path + "[" + std::to_string(d) + "]", "expected a number");
    p[d] = v[d].get<double>();
  }
  return p;
}

json point_json(const Point& p, int dim) {
  json a = json::array();
  for (int d = 0; d < dim; ++d) a.push_back(p[d]);
  return a;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path.lexically_normal() : (base / path).lexically_normal();
}

MeshSpec parse_mesh_spec(const json& j, const std::string& path, const std::filesystem::path& base) {
  check_keys(j, path, {"generator", "file"});
  if (j.contains("generator") && j.contains("file")) bad(path, "conflicting mesh sources: give either 'generator' or 'file'");
  MeshSpec spec;
  if (j.contains("file")) {
    spec.file = resolve(base, string_of(j, "file", path));
    return spec;
  }
  if (!j.contains("generator")) bad(path, "needs 'generator' or 'file'");
  const std::string gp = join(path, "generator");
  const json& g = j.at("generator");
  check_keys(g, gp, {"lower", "upper", "cells"});
  if (!g.contains("upper") || !g.contains("cells")) bad(gp, "needs 'upper' and 'cells'");
  const json& cells = g.at("cells");
  if (!cells.is_array() || (cells.size() != 2 && cells.size() != 3)) bad(join(gp, "cells"), "expected 2 or 3 integers");
  spec.dim = static_cast<int>(cells.size());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (!cells[k].is_number_integer() || cells[k].get<int>() < 1) {
      bad(join(gp, "cells") + "[" + std::to_string(k) + "]", "expected an integer >= 1");
    }
    spec.cells.push_back(cells[k].get<int>());
  }
  spec.upper = point_of(g.at("upper"), spec.dim, join(gp, "upper"));
  if (g.contains("lower")) spec.lower = point_of(g.at("lower"), spec.dim, join(gp, "lower"));
  for (int d = 0; d < spec.dim; ++d) {
    if (!(spec.upper[d] > spec.lower[d])) bad(gp, "degenerate extent along axis " + std::to_string(d));
  }
  return spec;
}

json mesh_json(const MeshSpec& spec) {
  if (spec.file) return {{"file", spec.file->string()}};
  return {{"generator", {{"lower", point_json(spec.lower, spec.dim)}, {"upper", point_json(spec.upper, spec.dim)},
                         {"cells", spec.cells}}}};
}

ModelSpec parse_model_spec(const json& j, const std::string& path, const std::filesystem::path& base, int dim) {
  check_keys(j, path, {"file", "wave_speed", "density", "order", "inclusions"});
  ModelSpec spec;
  if (j.contains("file")) {
    for (const char* k : {"wave_speed", "inclusions", "order"}) {
      if (j.contains(k)) bad(join(path, k), "cannot be combined with 'file'");
    }
    spec.file = resolve(base, string_of(j, "file", path));
  }
  spec.wave_speed = number_or(j, "wave_speed", path, spec.wave_speed);
  spec.density = number_or(j, "density", path, spec.density);
  spec.order = integer_or(j, "order", path, spec.order);
  if (!(spec.wave_speed > 0.0)) bad(join(path, "wave_speed"), "must be positive");
  if (!(spec.density > 0.0)) bad(join(path, "density"), "must be positive");
  if (spec.order < 0 || spec.order > 4) bad(join(path, "order"), "must be in [0, 4]");
  if (j.contains("inclusions")) {
    const json& inc = j.at("inclusions");
    const std::string ip = join(path, "inclusions");
    if (!inc.is_array()) bad(ip, "expected an array");
    for (std::size_t k = 0; k < inc.size(); ++k) {
      const std::string kp = ip + "[" + std::to_string(k) + "]";
      check_keys(inc[k], kp, {"center", "radius", "wave_speed"});
      for (const char* req : {"center", "radius", "wave_speed"}) {
        if (!inc[k].contains(req)) bad(join(kp, req), "missing");
      }
      Inclusion in;
      in.center = point_of(inc[k].at("center"), dim, join(kp, "center"));
      in.radius = number(inc[k], "radius", kp);
      in.wave_speed = number(inc[k], "wave_speed", kp);
      if (!(in.radius > 0.0)) bad(join(kp, "radius"), "must be positive");
      if (!(in.wave_speed > 0.0)) bad(join(kp, "wave_speed"), "must be positive");
      spec.inclusions.push_back(in);
    }
  }
  return spec;
}

json model_json(const ModelSpec& spec, int dim) {
  json j;
  if (spec.file) {
    j["file"] = spec.file->string();
    j["density"] = spec.density;
    return j;
  }
  j["wave_speed"] = spec.wave_speed;
  j["density"] = spec.density;
  j["order"] = spec.order;
  json inc = json::array();
  for (const Inclusion& in : spec.inclusions) {
    inc.push_back({{"center", point_json(in.center, dim)}, {"radius", in.radius}, {"wave_speed", in.wave_speed}});
  }
  j["inclusions"] = inc;
  return j;
}

BoundaryCondition parse_condition(const json& v, const std::string& path) {
  BoundaryCondition bc;
  std::string kind;
  if (v.is_string()) {
    kind = v.get<std::string>();
  } else {
    check_keys(v, path, {"kind", "alpha", "beta"});
    if (!v.contains("kind")) bad(join(path, "kind"), "missing");
    kind = string_of(v, "kind", path);
    bc.alpha = number_or(v, "alpha", path, bc.alpha);
    bc.beta = number_or(v, "beta", path, bc.beta);
  }
  if (kind == "dirichlet") {
    bc.kind = BoundaryKind::kDirichlet;
  } else if (kind == "neumann") {
    bc.kind = BoundaryKind::kNeumann;
  } else if (kind == "robin") {
    bc.kind = BoundaryKind::kRobin;
    if (bc.beta == 0.0) bad(path, "Robin condition with beta = 0 must be declared 'dirichlet'");
  } else if (kind == "abc") {
    bc.kind = BoundaryKind::kAbc;
  } else {
    bad(path, "unknown boundary kind '" + kind + "' (dirichlet, neumann, robin, abc)");
  }
  return bc;
}

json condition_json(const BoundaryCondition& bc) {
  if (bc.kind == BoundaryKind::kRobin) return {{"kind", "robin"}, {"alpha", bc.alpha}, {"beta", bc.beta}};
  return boundary_kind_name(bc.kind);
}

OrderSelection parse_orders(const json& j, const std::string& path) {
  check_keys(j, path, {"order", "dofs_per_wavelength", "p_min", "p_max"});
  OrderSelection sel;
  if (j.contains("order")) {
    for (const char* k : {"dofs_per_wavelength", "p_min", "p_max"}) {
      if (j.contains(k)) bad(join(path, k), "cannot be combined with a fixed 'order'");
    }
    const int p = integer(j, "order", path);
    if (p < 0 || p > 8) bad(join(path, "order"), "must be in [0, 8]");
    sel.uniform_order = p;
    return sel;
  }
  sel.policy.dofs_per_wavelength = number_or(j, "dofs_per_wavelength", path, sel.policy.dofs_per_wavelength);
  sel.policy.p_min = integer_or(j, "p_min", path, sel.policy.p_min);
  sel.policy.p_max = integer_or(j, "p_max", path, sel.policy.p_max);
  if (!(sel.policy.dofs_per_wavelength > 0.0)) bad(join(path, "dofs_per_wavelength"), "must be positive");
  if (sel.policy.p_min < 0 || sel.policy.p_max > 8 || sel.policy.p_min > sel.policy.p_max) {
    bad(path, "need 0 <= p_min <= p_max <= 8");
  }
  return sel;
}

json orders_json(const OrderSelection& sel) {
  if (sel.uniform_order) return {{"order", *sel.uniform_order}};
  return {{"dofs_per_wavelength", sel.policy.dofs_per_wavelength},
          {"p_min", sel.policy.p_min},
          {"p_max", sel.policy.p_max}};
}

std::vector<Point> line_points(const json& j, int dim, const std::string& path) {
  check_keys(j, path, {"from", "to", "count"});
  for (const char* k : {"from", "to", "count"}) {
    if (!j.contains(k)) bad(join(path, k), "missing");
  }
  const Point a = point_of(j.at("from"), dim, join(path, "from"));
  const Point b = point_of(j.at("to"), dim, join(path, "to"));
  const int n = integer(j, "count", path);
  if (n < 1) bad(join(path, "count"), "must be >= 1");
  std::vector<Point> out;
  for (int k = 0; k < n; ++k) {
    const double t = n == 1 ? 0.5 : static_cast<double>(k) / (n - 1);
    out.push_back(a + t * (b - a));
  }
  return out;
}

}  // namespace

Mesh build_mesh(const MeshSpec& spec) {
  if (spec.file) return read_mesh(*spec.file);
  return build_structured_mesh(spec.dim, spec.lower, spec.upper, spec.cells);
}

Model build_model(const Mesh& mesh, const ModelSpec& spec) {
  if (spec.file) {
    Model m = read_model(*spec.file);
    if (m.num_cells() != mesh.num_cells() || m.dim() != mesh.dim()) {
      throw ConfigError("model file '" + spec.file->string() + "' does not match the mesh (" +
                        std::to_string(m.num_cells()) + " cells, mesh has " + std::to_string(mesh.num_cells()) + ")");
    }
    return m;
  }
  Model m(mesh.dim(), mesh.num_cells(), spec.order, spec.wave_speed, spec.density);
  if (spec.inclusions.empty()) return m;
  const std::vector<Point>& nodes = cached_basis(mesh.dim(), spec.order).nodes();
  const int nm = m.dofs_per_cell();
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
    for (int k = 0; k < nm; ++k) {
      const Point x = mesh.to_physical(e, nodes[k]);
      for (const Inclusion& in : spec.inclusions) {
        if ((x - in.center).norm() <= in.radius) m.wave_speed()[e * nm + k] = in.wave_speed;
      }
    }
  }
  return m;
}

void refresh_resolved(RunConfig& c) {
  const int pdim = c.mesh.dim;
  json j;
  j["version"] = version_string();
  j["mesh"] = mesh_json(c.mesh);
  j["model"] = model_json(c.model, pdim);
  j["frequencies"] = c.frequencies;
  j["laplace_shift"] = c.laplace_shift;
  json b;
  b["default"] = condition_json(c.boundary.default_condition);
  for (const auto& [tag, bc] : c.boundary.per_tag) b[boundary_tag_name(tag)] = condition_json(bc);
  j["boundary"] = b;
  json src = json::array();
  for (const PointSource& s : c.acquisition.sources) {
    src.push_back({{"position", point_json(s.position, pdim)}, {"amplitude", {s.amplitude.real(), s.amplitude.imag()}}});
  }
  json rec = json::array();
  for (const Point& r : c.acquisition.receivers) rec.push_back(point_json(r, pdim));
  j["acquisition"] = {{"sources", src}, {"receivers", rec}};
  j["discretization"] = orders_json(c.orders);
  j["solver"] = {{"backend", c.solver.backend == SolverBackend::kEigen ? "eigen" : "native"},
                 {"pivot_threshold", c.solver.pivot_threshold}};
  json d;
  if (c.data.file) d["file"] = c.data.file->string();
  d["snr_db"] = c.data.snr_db ? json(*c.data.snr_db) : json(nullptr);
  d["format"] = c.data.format;
  if (c.data.mesh) d["mesh"] = mesh_json(*c.data.mesh);
  if (c.data.orders) d["discretization"] = orders_json(*c.data.orders);
  j["data"] = d;
  const InversionSettings& s = c.inversion;
  j["inversion"] = {{"iterations_per_frequency", s.iterations_per_frequency},
                    {"c_min", s.c_min},
                    {"c_max", std::isfinite(s.c_max) ? json(s.c_max) : json(nullptr)},
                    {"initial_step_fraction", s.initial_step_fraction},
                    {"armijo_c1", s.line_search.c1},
                    {"max_line_search_trials", s.line_search.max_trials},
                    {"misfit_tolerance", s.misfit_tolerance},
                    {"checkpoint_every", s.checkpoint_every},
                    {"initial_model", model_json(c.initial_model, pdim)}};
  j["gradcheck"] = {{"num_cells", c.gradcheck.num_cells},
                    {"cells", c.gradcheck.cells},
                    {"steps", c.gradcheck.steps},
                    {"parameter", c.gradcheck.parameter == Parameter::kWaveSpeed ? "wave_speed" : "inverse_bulk_modulus"},
                    {"perturbation", c.gradcheck.perturbation}};
  j["output_dir"] = c.output_dir.string();
  j["seed"] = c.seed;
  c.resolved_json = j.dump(2) + "\n";
}

RunConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, "", {"mesh", "model", "frequencies", "laplace_shift", "boundary", "acquisition", "discretization",
                        "solver", "data", "inversion", "gradcheck", "output_dir", "seed", "version"});
  RunConfig c;
  if (!root.contains("mesh")) bad("mesh", "missing");
  c.mesh = parse_mesh_spec(root.at("mesh"), "mesh", base_dir);
  int dim = c.mesh.dim;
  std::optional<Mesh> file_mesh;
  if (c.mesh.file) {
    file_mesh.emplace(read_mesh(*c.mesh.file));
    dim = file_mesh->dim();
    c.mesh.dim = dim;
  }

  c.model = parse_model_spec(root.value("model", json::object()), "model", base_dir, dim);

  if (!root.contains("frequencies")) bad("frequencies", "missing");
  const json& freqs = root.at("frequencies");
  if (!freqs.is_array()) bad("frequencies", "expected an array of numbers");
  if (freqs.empty()) bad("frequencies", "frequency list is empty");
  for (std::size_t k = 0; k < freqs.size(); ++k) {
    if (!freqs[k].is_number() || !(freqs[k].get<double>() >= 0.0)) {
      bad("frequencies[" + std::to_string(k) + "]", "expected a nonnegative number (Hz)");
    }
    c.frequencies.push_back(freqs[k].get<double>());
  }
  c.laplace_shift = number_or(root, "laplace_shift", "", 0.0);
  if (c.laplace_shift < 0.0) bad("laplace_shift", "must be nonnegative");
  for (std::size_t k = 0; k < c.frequencies.size(); ++k) {
    if (c.frequencies[k] == 0.0 && c.laplace_shift == 0.0) {
      bad("frequencies[" + std::to_string(k) + "]", "zero frequency needs a positive laplace_shift");
    }
  }

  c.boundary = BoundarySpec::surface_dirichlet(dim == 2 ? BoundaryTag::kYMax : BoundaryTag::kZMax);
  if (root.contains("boundary")) {
    const json& b = root.at("boundary");
    if (!b.is_object()) bad("boundary", "expected an object");
    c.boundary.per_tag.clear();
    for (const auto& [key, value] : b.items()) {
      const std::string kp = join("boundary", key);
      if (key == "default") {
        c.boundary.default_condition = parse_condition(value, kp);
        continue;
      }
      const std::optional<BoundaryTag> tag = parse_boundary_tag(key);
      if (!tag) bad(kp, "unknown boundary tag (xmin, xmax, ymin, ymax, zmin, zmax, boundary, default)");
      c.boundary.per_tag[*tag] = parse_condition(value, kp);
    }
  }

  // Acquisition.
  const json acq = root.value("acquisition", json::object());
  check_keys(acq, "acquisition", {"sources", "receivers", "source_line", "receiver_line", "surface"});
  if (acq.contains("sources")) {
    const json& s = acq.at("sources");
    if (!s.is_array()) bad("acquisition.sources", "expected an array");
    for (std::size_t k = 0; k < s.size(); ++k) {
      const std::string kp = "acquisition.sources[" + std::to_string(k) + "]";
      PointSource src;
      if (s[k].is_array()) {
        src.position = point_of(s[k], dim, kp);
      } else {
        check_keys(s[k], kp, {"position", "amplitude"});
        if (!s[k].contains("position")) bad(join(kp, "position"), "missing");
        src.position = point_of(s[k].at("position"), dim, join(kp, "position"));
        if (s[k].contains("amplitude")) {
          const json& a = s[k].at("amplitude");
          if (a.is_number()) {
            src.amplitude = a.get<double>();
          } else if (a.is_array() && a.size() == 2 && a[0].is_number() && a[1].is_number()) {
            src.amplitude = {a[0].get<double>(), a[1].get<double>()};
          } else {
            bad(join(kp, "amplitude"), "expected a number or [re, im]");
          }
        }
      }
      c.acquisition.sources.push_back(src);
    }
  }
  if (acq.contains("receivers")) {
    const json& r = acq.at("receivers");
    if (!r.is_array()) bad("acquisition.receivers", "expected an array");
    for (std::size_t k = 0; k < r.size(); ++k) {
      c.acquisition.receivers.push_back(point_of(r[k], dim, "acquisition.receivers[" + std::to_string(k) + "]"));
    }
  }
  if (acq.contains("source_line")) {
    for (const Point& p : line_points(acq.at("source_line"), dim, "acquisition.source_line")) {
      c.acquisition.sources.push_back({p, 1.0});
    }
  }
  if (acq.contains("receiver_line")) {
    for (const Point& p : line_points(acq.at("receiver_line"), dim, "acquisition.receiver_line")) {
      c.acquisition.receivers.push_back(p);
    }
  }
  if (acq.contains("surface")) {
    const json& s = acq.at("surface");
    const std::string sp = "acquisition.surface";
    check_keys(s, sp, {"sources", "receivers", "depth", "source_depth"});
    Point lo = c.mesh.lower, hi = c.mesh.upper;
    double cell_height = 0.0;
    if (file_mesh) {
      std::tie(lo, hi) = file_mesh->bounding_box();
    } else {
      cell_height = (hi[dim - 1] - lo[dim - 1]) / c.mesh.cells[dim - 1];
    }
    if (!s.contains("depth") && cell_height == 0.0) bad(join(sp, "depth"), "required for file meshes");
    const double depth = number_or(s, "depth", sp, cell_height);
    const double source_depth = number_or(s, "source_depth", sp, depth);
    auto place = [&](int n, double d, const std::string& key) {
      if (n < 1) bad(join(sp, key), "must be >= 1");
      std::vector<Point> out;
      const int side = dim == 3 ? static_cast<int>(std::lround(std::sqrt(static_cast<double>(n)))) : n;
      if (dim == 3 && side * side != n) bad(join(sp, key), "must be a perfect square in 3D");
      for (int a = 0; a < side; ++a) {
        for (int b = 0; b < (dim == 3 ? side : 1); ++b) {
          Point p = Point::Zero();
          p[0] = lo[0] + (a + 0.5) / side * (hi[0] - lo[0]);
          if (dim == 3) p[1] = lo[1] + (b + 0.5) / side * (hi[1] - lo[1]);
          p[dim - 1] = hi[dim - 1] - d;
          out.push_back(p);
        }
      }
      return out;
    };
    if (s.contains("sources")) {
      for (const Point& p : place(integer(s, "sources", sp), source_depth, "sources")) c.acquisition.sources.push_back({p, 1.0});
    }
    if (s.contains("receivers")) {
      for (const Point& p : place(integer(s, "receivers", sp), depth, "receivers")) c.acquisition.receivers.push_back(p);
    }
  }
  if (c.acquisition.receivers.empty()) bad("acquisition.receivers", "at least one receiver is required");

  c.orders = root.contains("discretization") ? parse_orders(root.at("discretization"), "discretization") : OrderSelection{};
  if (!root.contains("discretization")) c.orders.uniform_order = 2;

  if (root.contains("solver")) {
    const json& s = root.at("solver");
    check_keys(s, "solver", {"backend", "pivot_threshold"});
    if (s.contains("backend")) {
      const std::string b = string_of(s, "backend", "solver");
      if (b == "native") {
        c.solver.backend = SolverBackend::kNative;
      } else if (b == "eigen") {
        c.solver.backend = SolverBackend::kEigen;
      } else {
        bad("solver.backend", "expected 'native' or 'eigen'");
      }
    }
    c.solver.pivot_threshold = number_or(s, "pivot_threshold", "solver", c.solver.pivot_threshold);
    if (!(c.solver.pivot_threshold > 0.0 && c.solver.pivot_threshold <= 1.0)) {
      bad("solver.pivot_threshold", "must be in (0, 1]");
    }
  }

  if (root.contains("data")) {
    const json& d = root.at("data");
    check_keys(d, "data", {"file", "snr_db", "format", "mesh", "discretization"});
    if (d.contains("file")) c.data.file = resolve(base_dir, string_of(d, "file", "data"));
    if (d.contains("snr_db") && !d.at("snr_db").is_null()) c.data.snr_db = number(d, "snr_db", "data");
    if (d.contains("format")) {
      c.data.format = string_of(d, "format", "data");
      if (c.data.format != "csv" && c.data.format != "binary" && c.data.format != "auto") {
        bad("data.format", "expected 'csv', 'binary' or 'auto'");
      }
    }
    if (d.contains("mesh")) {
      c.data.mesh = parse_mesh_spec(d.at("mesh"), "data.mesh", base_dir);
      if (c.data.mesh->file ? false : c.data.mesh->dim != dim) bad("data.mesh", "dimension differs from 'mesh'");
    }
    if (d.contains("discretization")) c.data.orders = parse_orders(d.at("discretization"), "data.discretization");
  }

  c.initial_model = c.model;
  c.initial_model.inclusions.clear();
  c.initial_model.file.reset();
  if (root.contains("inversion")) {
    const json& inv = root.at("inversion");
    const std::string ip = "inversion";
    check_keys(inv, ip, {"iterations_per_frequency", "c_min", "c_max", "initial_step_fraction", "armijo_c1",
                         "max_line_search_trials", "misfit_tolerance", "checkpoint_every", "initial_model"});
    InversionSettings& s = c.inversion;
    s.iterations_per_frequency = integer_or(inv, "iterations_per_frequency", ip, s.iterations_per_frequency);
    s.c_min = number_or(inv, "c_min", ip, s.c_min);
    if (inv.contains("c_max") && !inv.at("c_max").is_null()) s.c_max = number(inv, "c_max", ip);
    s.initial_step_fraction = number_or(inv, "initial_step_fraction", ip, s.initial_step_fraction);
    s.line_search.c1 = number_or(inv, "armijo_c1", ip, s.line_search.c1);
    s.line_search.max_trials = integer_or(inv, "max_line_search_trials", ip, s.line_search.max_trials);
    s.misfit_tolerance = number_or(inv, "misfit_tolerance", ip, s.misfit_tolerance);
    s.checkpoint_every = integer_or(inv, "checkpoint_every", ip, s.checkpoint_every);
    if (s.iterations_per_frequency < 0) bad(join(ip, "iterations_per_frequency"), "must be >= 0");
    if (!(s.c_min >= 0.0) || !(s.c_min < s.c_max)) bad(ip, "need 0 <= c_min < c_max");
    if (!(s.initial_step_fraction > 0.0)) bad(join(ip, "initial_step_fraction"), "must be positive");
    if (!(s.line_search.c1 > 0.0 && s.line_search.c1 < 1.0)) bad(join(ip, "armijo_c1"), "must be in (0, 1)");
    if (s.line_search.max_trials < 1) bad(join(ip, "max_line_search_trials"), "must be >= 1");
    if (s.checkpoint_every < 0) bad(join(ip, "checkpoint_every"), "must be >= 0");
    if (inv.contains("initial_model")) {
      c.initial_model = parse_model_spec(inv.at("initial_model"), join(ip, "initial_model"), base_dir, dim);
    }
  }

  if (root.contains("gradcheck")) {
    const json& g = root.at("gradcheck");
    const std::string gp = "gradcheck";
    check_keys(g, gp, {"num_cells", "cells", "steps", "parameter", "perturbation"});
    c.gradcheck.num_cells = integer_or(g, "num_cells", gp, c.gradcheck.num_cells);
    if (c.gradcheck.num_cells < 1) bad(join(gp, "num_cells"), "must be >= 1");
    if (g.contains("cells")) {
      const json& cells = g.at("cells");
      if (!cells.is_array()) bad(join(gp, "cells"), "expected an array of integers");
      for (std::size_t k = 0; k < cells.size(); ++k) {
        if (!cells[k].is_number_integer()) bad(join(gp, "cells") + "[" + std::to_string(k) + "]", "expected an integer");
        c.gradcheck.cells.push_back(cells[k].get<int>());
      }
    }
    if (g.contains("steps")) {
      const json& steps = g.at("steps");
      if (!steps.is_array() || steps.empty()) bad(join(gp, "steps"), "expected a nonempty array of numbers");
      c.gradcheck.steps.clear();
      for (std::size_t k = 0; k < steps.size(); ++k) {
        if (!steps[k].is_number() || !(steps[k].get<double>() > 0.0)) {
          bad(join(gp, "steps") + "[" + std::to_string(k) + "]", "expected a positive number");
        }
        c.gradcheck.steps.push_back(steps[k].get<double>());
      }
    }
    if (g.contains("parameter")) {
      const std::string p = string_of(g, "parameter", gp);
      if (p == "wave_speed") {
        c.gradcheck.parameter = Parameter::kWaveSpeed;
      } else if (p == "inverse_bulk_modulus") {
        c.gradcheck.parameter = Parameter::kInverseBulkModulus;
      } else {
        bad(join(gp, "parameter"), "expected 'wave_speed' or 'inverse_bulk_modulus'");
      }
    }
    c.gradcheck.perturbation = number_or(g, "perturbation", gp, c.gradcheck.perturbation);
  }

  c.output_dir = resolve(base_dir, root.contains("output_dir") ? string_of(root, "output_dir", "") : "output");
  if (root.contains("seed")) {
    const json& s = root.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      bad("seed", "expected a nonnegative integer");
    }
    c.seed = s.get<std::uint64_t>();
  }
  refresh_resolved(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  return parse_config(text, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

}  // namespace hdgfwi
