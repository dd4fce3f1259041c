#include "hdgfwi/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hdgfwi/basis.hpp"

namespace hdgfwi {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

std::ofstream open_out(const fs::path& path, bool binary = false) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.imbue(std::locale::classic());
  return out;
}

std::ifstream open_in(const fs::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

bool has_magic(const fs::path& path, const char* magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  char buf[4] = {0, 0, 0, 0};
  in.read(buf, 4);
  return in.gcount() == 4 && std::memcmp(buf, magic, 4) == 0;
}

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const fs::path& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ConfigError("truncated binary file '" + path.string() + "'");
  return value;
}

// Line-oriented tokenizer that reports 1-based line numbers.
class LineReader {
 public:
  explicit LineReader(const std::string& text) : in_(text) {}
  bool next(std::istringstream& line) {
    std::string s;
    while (std::getline(in_, s)) {
      ++number_;
      if (s.find_first_not_of(" \t\r") == std::string::npos) continue;
      line.clear();
      line.str(s);
      return true;
    }
    return false;
  }
  int number() const noexcept { return number_; }

 private:
  std::istringstream in_;
  int number_ = 0;
};

std::string fmt17(double v) {
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s << std::setprecision(17) << v;
  return s.str();
}

}  // namespace

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
  finish(out, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Mesh parse_mesh(const std::string& text) {
  LineReader reader(text);
  std::istringstream line;
  auto fail = [&](const std::string& what) {
    throw MeshError(MeshErrorKind::kParse, "mesh parse error at line " + std::to_string(reader.number()) + ": " + what);
  };
  if (!reader.next(line)) fail("missing header");
  long dim = 0, nv = 0, nc = 0;
  if (!(line >> dim >> nv >> nc)) fail("header must be 'dim N_vertices N_cells'");
  if (dim != 2 && dim != 3) fail("dimension must be 2 or 3");
  if (nv <= 0 || nc <= 0) fail("vertex and cell counts must be positive");
  std::vector<Point> vertices(static_cast<std::size_t>(nv), Point::Zero());
  for (long v = 0; v < nv; ++v) {
    if (!reader.next(line)) fail("expected " + std::to_string(nv) + " vertex lines");
    for (int d = 0; d < dim; ++d) {
      if (!(line >> vertices[v][d])) fail("vertex line needs " + std::to_string(dim) + " coordinates");
      if (!std::isfinite(vertices[v][d])) fail("non-finite coordinate");
    }
    std::string extra;
    if (line >> extra) fail("unexpected token '" + extra + "' on vertex line");
  }
  std::vector<std::array<int, 4>> cells(static_cast<std::size_t>(nc), {-1, -1, -1, -1});
  for (long e = 0; e < nc; ++e) {
    if (!reader.next(line)) fail("expected " + std::to_string(nc) + " cell lines");
    for (int k = 0; k <= dim; ++k) {
      long idx = 0;
      if (!(line >> idx)) fail("cell line needs " + std::to_string(dim + 1) + " vertex indices");
      cells[e][k] = static_cast<int>(idx);
    }
    std::string extra;
    if (line >> extra) fail("unexpected token '" + extra + "' on cell line");
  }
  if (reader.next(line)) fail("trailing content after the cell table");
  return Mesh(static_cast<int>(dim), std::move(vertices), std::move(cells));
}

Mesh read_mesh(const fs::path& path) { return parse_mesh(read_text(path)); }

void write_mesh(const Mesh& mesh, const fs::path& path) {
  std::ofstream out = open_out(path);
  out << std::setprecision(17);
  out << mesh.dim() << ' ' << mesh.num_vertices() << ' ' << mesh.num_cells() << '\n';
  for (const Point& v : mesh.vertices()) {
    for (int d = 0; d < mesh.dim(); ++d) out << (d ? " " : "") << v[d];
    out << '\n';
  }
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
    const auto cv = mesh.cell_vertices(e);
    for (std::size_t k = 0; k < cv.size(); ++k) out << (k ? " " : "") << cv[k];
    out << '\n';
  }
  finish(out, path);
}

Model read_model(const fs::path& path) {
  if (has_magic(path, "HDGM")) {
    std::ifstream in = open_in(path, true);
    in.ignore(4);
    const int dim = get<std::int32_t>(in, path);
    const auto ncell = get<std::int64_t>(in, path);
    const int order = get<std::int32_t>(in, path);
    if ((dim != 2 && dim != 3) || ncell <= 0 || order < 0) throw ConfigError("invalid model header in '" + path.string() + "'");
    Model m(dim, static_cast<std::size_t>(ncell), order, 1.0, 1.0);
    for (double& c : m.wave_speed()) c = get<double>(in, path);
    for (double& r : m.density()) r = get<double>(in, path);
    m.validate();
    return m;
  }
  LineReader reader(read_text(path));
  std::istringstream line;
  auto fail = [&](const std::string& what) {
    throw ConfigError("model file '" + path.string() + "' line " + std::to_string(reader.number()) + ": " + what);
  };
  if (!reader.next(line)) fail("missing header");
  long dim = 0, ncell = 0, order = 0;
  if (!(line >> dim >> ncell >> order) || (dim != 2 && dim != 3) || ncell <= 0 || order < 0) {
    fail("header must be 'dim N_cells order'");
  }
  Model m(static_cast<int>(dim), static_cast<std::size_t>(ncell), static_cast<int>(order), 1.0, 1.0);
  const int nm = m.dofs_per_cell();
  for (long e = 0; e < ncell; ++e) {
    if (!reader.next(line)) fail("expected " + std::to_string(ncell) + " cell rows");
    for (int k = 0; k < nm; ++k) {
      if (!(line >> m.wave_speed()[e * nm + k])) fail("row needs " + std::to_string(2 * nm) + " values");
    }
    for (int k = 0; k < nm; ++k) {
      if (!(line >> m.density()[e * nm + k])) fail("row needs " + std::to_string(2 * nm) + " values");
    }
  }
  m.validate();
  return m;
}

void write_model(const Model& model, const fs::path& path, bool binary) {
  if (binary) {
    std::ofstream out = open_out(path, true);
    out.write("HDGM", 4);
    put<std::int32_t>(out, model.dim());
    put<std::int64_t>(out, static_cast<std::int64_t>(model.num_cells()));
    put<std::int32_t>(out, model.order());
    for (double c : model.wave_speed()) put<double>(out, c);
    for (double r : model.density()) put<double>(out, r);
    finish(out, path);
    return;
  }
  std::ofstream out = open_out(path);
  out << std::setprecision(17);
  out << model.dim() << ' ' << model.num_cells() << ' ' << model.order() << '\n';
  const int nm = model.dofs_per_cell();
  for (std::size_t e = 0; e < model.num_cells(); ++e) {
    for (int k = 0; k < nm; ++k) out << (k ? " " : "") << model.wave_speed()[e * nm + k];
    for (int k = 0; k < nm; ++k) out << ' ' << model.density()[e * nm + k];
    out << '\n';
  }
  finish(out, path);
}

namespace {

void write_rows(std::ostream& out, const std::vector<double>& frequencies, double shift,
                const std::vector<std::vector<CVector>>& values) {
  out << "source_id,receiver_id,freq_re,freq_im,value_re,value_im\n";
  for (std::size_t f = 0; f < values.size(); ++f) {
    const Complex sigma = complex_frequency(frequencies[f], shift);
    for (std::size_t s = 0; s < values[f].size(); ++s) {
      for (Eigen::Index r = 0; r < values[f][s].size(); ++r) {
        out << s << ',' << r << ',' << fmt17(sigma.real()) << ',' << fmt17(sigma.imag()) << ','
            << fmt17(values[f][s][r].real()) << ',' << fmt17(values[f][s][r].imag()) << '\n';
      }
    }
  }
}

}  // namespace

void write_measurements(const fs::path& path, const std::vector<double>& frequencies, double laplace_shift,
                        const std::vector<std::vector<CVector>>& values) {
  std::ofstream out = open_out(path);
  write_rows(out, frequencies, laplace_shift, values);
  finish(out, path);
}

void write_dataset(const DataSet& data, const fs::path& path, bool binary) {
  data.validate();
  if (binary) {
    std::ofstream out = open_out(path, true);
    out.write("HDGD", 4);
    put<std::uint32_t>(out, 1);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(data.frequencies.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(data.sources.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(data.receivers.size()));
    put<double>(out, data.laplace_shift);
    for (double f : data.frequencies) put<double>(out, f);
    for (const PointSource& s : data.sources) {
      for (int d = 0; d < 3; ++d) put<double>(out, s.position[d]);
      put<double>(out, s.amplitude.real());
      put<double>(out, s.amplitude.imag());
    }
    for (const Point& r : data.receivers) {
      for (int d = 0; d < 3; ++d) put<double>(out, r[d]);
    }
    for (const auto& block : data.values) {
      for (const CVector& trace : block) {
        for (Eigen::Index k = 0; k < trace.size(); ++k) {
          put<float>(out, static_cast<float>(trace[k].real()));
          put<float>(out, static_cast<float>(trace[k].imag()));
        }
      }
    }
    finish(out, path);
    return;
  }
  std::ofstream out = open_out(path);
  out << "# hdgfwi dataset 1\n";
  out << "# laplace_shift " << fmt17(data.laplace_shift) << '\n';
  if (data.snr_db) out << "# snr_db " << fmt17(*data.snr_db) << '\n';
  if (data.seed) out << "# seed " << *data.seed << '\n';
  for (std::size_t f = 0; f < data.frequencies.size(); ++f) {
    out << "# frequency " << f << ' ' << fmt17(data.frequencies[f]) << '\n';
  }
  for (std::size_t s = 0; s < data.sources.size(); ++s) {
    const PointSource& src = data.sources[s];
    out << "# source " << s << ' ' << fmt17(src.position.x()) << ' ' << fmt17(src.position.y()) << ' '
        << fmt17(src.position.z()) << ' ' << fmt17(src.amplitude.real()) << ' ' << fmt17(src.amplitude.imag())
        << '\n';
  }
  for (std::size_t r = 0; r < data.receivers.size(); ++r) {
    const Point& x = data.receivers[r];
    out << "# receiver " << r << ' ' << fmt17(x.x()) << ' ' << fmt17(x.y()) << ' ' << fmt17(x.z()) << '\n';
  }
  write_rows(out, data.frequencies, data.laplace_shift, data.values);
  finish(out, path);
}

DataSet read_dataset(const fs::path& path) {
  DataSet data;
  if (has_magic(path, "HDGD")) {
    std::ifstream in = open_in(path, true);
    in.ignore(4);
    if (get<std::uint32_t>(in, path) != 1) throw ConfigError("unsupported data set version in '" + path.string() + "'");
    const auto nf = get<std::uint32_t>(in, path);
    const auto ns = get<std::uint32_t>(in, path);
    const auto nr = get<std::uint32_t>(in, path);
    data.laplace_shift = get<double>(in, path);
    for (std::uint32_t f = 0; f < nf; ++f) data.frequencies.push_back(get<double>(in, path));
    for (std::uint32_t s = 0; s < ns; ++s) {
      PointSource src;
      for (int d = 0; d < 3; ++d) src.position[d] = get<double>(in, path);
      const double re = get<double>(in, path);
      const double im = get<double>(in, path);
      src.amplitude = {re, im};
      data.sources.push_back(src);
    }
    for (std::uint32_t r = 0; r < nr; ++r) {
      Point x;
      for (int d = 0; d < 3; ++d) x[d] = get<double>(in, path);
      data.receivers.push_back(x);
    }
    data.values.assign(nf, std::vector<CVector>(ns, CVector::Zero(nr)));
    for (auto& block : data.values) {
      for (CVector& trace : block) {
        for (Eigen::Index k = 0; k < trace.size(); ++k) {
          const float re = get<float>(in, path);
          const float im = get<float>(in, path);
          trace[k] = {re, im};
        }
      }
    }
    data.validate();
    return data;
  }
  LineReader reader(read_text(path));
  std::istringstream line;
  auto fail = [&](const std::string& what) {
    throw ConfigError("data file '" + path.string() + "' line " + std::to_string(reader.number()) + ": " + what);
  };
  struct Row {
    long s, r;
    double fre, fim, vre, vim;
  };
  std::vector<Row> rows;
  bool header_done = false;
  while (reader.next(line)) {
    const std::string text = line.str();
    if (text[0] == '#') {
      std::istringstream h(text.substr(1));
      std::string key;
      h >> key;
      if (key == "laplace_shift") {
        h >> data.laplace_shift;
      } else if (key == "snr_db") {
        double v;
        h >> v;
        data.snr_db = v;
      } else if (key == "seed") {
        std::uint64_t v;
        h >> v;
        data.seed = v;
      } else if (key == "frequency") {
        std::size_t i;
        double f;
        if (!(h >> i >> f) || i != data.frequencies.size()) fail("bad frequency header");
        data.frequencies.push_back(f);
      } else if (key == "source") {
        std::size_t i;
        PointSource src;
        double re, im;
        if (!(h >> i >> src.position.x() >> src.position.y() >> src.position.z() >> re >> im) ||
            i != data.sources.size()) {
          fail("bad source header");
        }
        src.amplitude = {re, im};
        data.sources.push_back(src);
      } else if (key == "receiver") {
        std::size_t i;
        Point x;
        if (!(h >> i >> x.x() >> x.y() >> x.z()) || i != data.receivers.size()) fail("bad receiver header");
        data.receivers.push_back(x);
      }
      continue;
    }
    if (!header_done) {
      if (text.rfind("source_id", 0) != 0) fail("expected the column line");
      header_done = true;
      continue;
    }
    std::string cell;
    std::vector<std::string> parts;
    std::istringstream csv(text);
    while (std::getline(csv, cell, ',')) parts.push_back(cell);
    if (parts.size() != 6) fail("expected 6 comma-separated columns");
    try {
      rows.push_back({std::stol(parts[0]), std::stol(parts[1]), std::stod(parts[2]), std::stod(parts[3]),
                      std::stod(parts[4]), std::stod(parts[5])});
    } catch (const std::exception&) {
      fail("non-numeric value");
    }
  }
  data.values.assign(data.frequencies.size(),
                     std::vector<CVector>(data.sources.size(),
                                          CVector::Constant(static_cast<Eigen::Index>(data.receivers.size()),
                                                            Complex(std::nan(""), 0.0))));
  for (const Row& row : rows) {
    std::size_t best = data.frequencies.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < data.frequencies.size(); ++f) {
      const Complex sigma = complex_frequency(data.frequencies[f], data.laplace_shift);
      const double d = std::abs(sigma - Complex(row.fre, row.fim));
      if (d < best_d) {
        best_d = d;
        best = f;
      }
    }
    if (best == data.frequencies.size() || best_d > 1e-9 * (1.0 + std::abs(Complex(row.fre, row.fim)))) {
      throw ConfigError("data file '" + path.string() + "': row frequency not listed in the header");
    }
    if (row.s < 0 || row.s >= static_cast<long>(data.sources.size()) || row.r < 0 ||
        row.r >= static_cast<long>(data.receivers.size())) {
      throw ConfigError("data file '" + path.string() + "': row index outside the header lists");
    }
    data.values[best][row.s][row.r] = {row.vre, row.vim};
  }
  data.validate();
  return data;
}

void write_vtk(const fs::path& path, const Mesh& mesh, const std::map<std::string, std::vector<double>>& point_data,
               const std::map<std::string, std::vector<double>>& cell_data) {
  std::ofstream out = open_out(path);
  out << std::setprecision(10);
  out << "# vtk DataFile Version 3.0\nhdgfwi\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_vertices() << " double\n";
  for (const Point& v : mesh.vertices()) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  const int nvc = mesh.vertices_per_cell();
  out << "CELLS " << mesh.num_cells() << ' ' << mesh.num_cells() * (nvc + 1) << '\n';
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
    out << nvc;
    for (int v : mesh.cell_vertices(e)) out << ' ' << v;
    out << '\n';
  }
  out << "CELL_TYPES " << mesh.num_cells() << '\n';
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) out << (mesh.dim() == 2 ? 5 : 10) << '\n';
  auto scalars = [&](const std::string& name, const std::vector<double>& values, std::size_t expected) {
    if (values.size() != expected) throw StructuralError("VTK field '" + name + "' has the wrong length");
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : values) out << v << '\n';
  };
  if (!point_data.empty()) {
    out << "POINT_DATA " << mesh.num_vertices() << '\n';
    for (const auto& [name, values] : point_data) scalars(name, values, mesh.num_vertices());
  }
  if (!cell_data.empty()) {
    out << "CELL_DATA " << mesh.num_cells() << '\n';
    for (const auto& [name, values] : cell_data) scalars(name, values, mesh.num_cells());
  }
  finish(out, path);
}

std::pair<std::vector<double>, std::vector<double>> vertex_pressure(const HdgSystem& system,
                                                                    const FieldSolution& solution) {
  const Mesh& mesh = system.mesh();
  const int dim = mesh.dim();
  std::vector<Complex> sum(mesh.num_vertices(), 0.0);
  std::vector<int> count(mesh.num_vertices(), 0);
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
    const int order = system.discretization().cell_order(e);
    const auto verts = mesh.cell_vertices(e);
    for (int k = 0; k <= dim; ++k) {
      Point ref = Point::Zero();
      if (k > 0) ref[k - 1] = 1.0;
      sum[verts[k]] += evaluate_pressure(solution, e, order, dim, ref);
      ++count[verts[k]];
    }
  }
  std::vector<double> re(sum.size(), 0.0), im(sum.size(), 0.0);
  for (std::size_t v = 0; v < sum.size(); ++v) {
    if (count[v] == 0) continue;
    re[v] = sum[v].real() / count[v];
    im[v] = sum[v].imag() / count[v];
  }
  return {re, im};
}

void write_inversion_log(const fs::path& path, const std::vector<IterationRecord>& log) {
  std::ofstream out = open_out(path);
  out << "frequency_index,frequency_hz,iteration,misfit,step,gradient_norm,trials,status\n";
  for (const IterationRecord& r : log) {
    out << r.frequency_index << ',' << fmt17(r.frequency) << ',' << r.iteration << ',' << fmt17(r.misfit) << ','
        << fmt17(r.step) << ',' << fmt17(r.gradient_norm) << ',' << r.trials << ',' << r.status << '\n';
  }
  finish(out, path);
}

void write_timings(const fs::path& path, const std::vector<IterationRecord>& log,
                   const std::vector<double>& wall_seconds) {
  std::ofstream out = open_out(path);
  out << "frequency_index,iteration,wall_seconds\n";
  for (std::size_t k = 0; k < log.size() && k < wall_seconds.size(); ++k) {
    out << log[k].frequency_index << ',' << log[k].iteration << ',' << wall_seconds[k] << '\n';
  }
  finish(out, path);
}

}  // namespace hdgfwi
