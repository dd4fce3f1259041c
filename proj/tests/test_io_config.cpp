#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "hdgfwi/config.hpp"
#include "hdgfwi/io.hpp"
#include "hdgfwi/workflow.hpp"
#include "support.hpp"

using namespace hdgfwi;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "hdgfwi_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

const char* kBase = R"({
  "mesh": {"generator": {"lower": [0, 0], "upper": [1, 1], "cells": [2, 2]}},
  "frequencies": [5.0],
  "acquisition": {"sources": [[0.5, 0.5]], "receivers": [[0.2, 0.8]]}
})";

nlohmann::json base() { return nlohmann::json::parse(kBase); }

std::string config_error(const nlohmann::json& j) {
  try {
    parse_config(j.dump());
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

DataSet small_dataset() {
  DataSet d;
  d.frequencies = {2.0, 3.5};
  d.laplace_shift = 0.25;
  d.sources = {{Point(0.1, 0.2, 0.0), 1.0}, {Point(0.3, 0.4, 0.0), Complex(0.5, -1.5)}};
  d.receivers = {Point(0.9, 0.1, 0.0), Point(0.8, 0.2, 0.0), Point(0.7, 0.3, 0.0)};
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  d.values.assign(2, std::vector<CVector>(2, CVector(3)));
  for (auto& block : d.values) {
    for (CVector& v : block) {
      for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = Complex(g(rng), g(rng));
    }
  }
  d.snr_db = 10.0;
  d.seed = 99;
  return d;
}

}  // namespace

TEST(ModelIo, TextAndBinaryRoundTrip) {
  const std::array<int, 2> cells{2, 3};
  const Mesh mesh = build_structured_mesh(2, Point::Zero(), Point(1, 1, 0), cells);
  const Model m = fixtures::random_model(mesh, 2, 1500.0, 0.1, 3);
  for (bool binary : {false, true}) {
    const fs::path path = scratch(binary ? "model.bin" : "model.txt");
    write_model(m, path, binary);
    const Model back = read_model(path);
    EXPECT_EQ(back.order(), 2);
    EXPECT_EQ(back.num_cells(), m.num_cells());
    EXPECT_EQ(back.wave_speed(), m.wave_speed());
    EXPECT_EQ(back.density(), m.density());
  }
}

TEST(ModelIo, MalformedFileIsAnIoError) {
  const fs::path path = scratch("bad_model.txt");
  write_text(path, "2 3 0\n1500 1000\n");
  EXPECT_ANY_THROW(read_model(path));
  EXPECT_THROW(read_model(scratch("does_not_exist.txt")), IoError);
}

TEST(DataIo, CsvRoundTripIsExact) {
  const DataSet d = small_dataset();
  const fs::path path = scratch("data.csv");
  write_dataset(d, path);
  const DataSet back = read_dataset(path);
  EXPECT_EQ(back.frequencies, d.frequencies);
  EXPECT_EQ(back.laplace_shift, d.laplace_shift);
  ASSERT_EQ(back.sources.size(), 2u);
  EXPECT_EQ(back.sources[1].amplitude, d.sources[1].amplitude);
  ASSERT_EQ(back.receivers.size(), 3u);
  for (std::size_t f = 0; f < 2; ++f) {
    for (std::size_t s = 0; s < 2; ++s) EXPECT_EQ(back.values[f][s], d.values[f][s]);
  }
}

TEST(DataIo, BinaryRoundTripKeepsSinglePrecision) {
  const DataSet d = small_dataset();
  const fs::path path = scratch("data.bin");
  write_dataset(d, path, true);
  const DataSet back = read_dataset(path);
  EXPECT_EQ(back.frequencies, d.frequencies);
  for (std::size_t f = 0; f < 2; ++f) {
    for (std::size_t s = 0; s < 2; ++s) {
      EXPECT_LT((back.values[f][s] - d.values[f][s]).norm(), 1e-6 * d.values[f][s].norm());
    }
  }
}

TEST(DataIo, ShapeIsValidated) {
  DataSet d = small_dataset();
  d.values[1].pop_back();
  EXPECT_THROW(d.validate(), ConfigError);
  d = small_dataset();
  d.values[0][0][1] = Complex(std::numeric_limits<double>::quiet_NaN(), 0.0);
  EXPECT_THROW(d.validate(), ConfigError);
}

TEST(Vtk, HasPointAndCellSections) {
  const std::array<int, 2> cells{2, 1};
  const Mesh mesh = build_structured_mesh(2, Point::Zero(), Point(2, 1, 0), cells);
  const fs::path path = scratch("grid.vtk");
  write_vtk(path, mesh, {{"p_re", std::vector<double>(mesh.num_vertices(), 1.0)}},
            {{"c", std::vector<double>(mesh.num_cells(), 1500.0)}});
  const std::string text = read_text(path);
  EXPECT_EQ(text.rfind("# vtk DataFile Version", 0), 0u);
  EXPECT_NE(text.find("POINTS 6"), std::string::npos);
  EXPECT_NE(text.find("CELLS 4"), std::string::npos);
  EXPECT_NE(text.find("POINT_DATA 6"), std::string::npos);
  EXPECT_NE(text.find("CELL_DATA 4"), std::string::npos);
  EXPECT_NE(text.find("SCALARS c double"), std::string::npos);
}

TEST(InversionLog, CarriesNoWallTime) {
  std::vector<IterationRecord> log{{0, 5.0, 0, 1.0, 0.0, 2.0, 0, "initial"},
                                   {0, 5.0, 1, 0.5, 0.1, 1.0, 2, "accepted"}};
  const fs::path a = scratch("log.csv"), t = scratch("timings.csv");
  write_inversion_log(a, log);
  write_timings(t, log, {0.25, 0.5});
  const std::string text = read_text(a);
  EXPECT_EQ(text.find("wall"), std::string::npos);
  EXPECT_NE(text.find("accepted"), std::string::npos);
  EXPECT_NE(read_text(t).find("0.5"), std::string::npos);
}

TEST(Config, DefaultsAreResolved) {
  const RunConfig c = parse_config(kBase);
  EXPECT_EQ(c.frequencies, std::vector<double>{5.0});
  EXPECT_DOUBLE_EQ(complex_frequency(c.frequencies[0], c.laplace_shift).imag(), 2.0 * kPi * 5.0);
  EXPECT_EQ(c.laplace_shift, 0.0);
  EXPECT_EQ(c.model.wave_speed, 1500.0);
  EXPECT_EQ(c.model.density, 1000.0);
  ASSERT_TRUE(c.orders.uniform_order.has_value());
  EXPECT_EQ(*c.orders.uniform_order, 2);
  EXPECT_EQ(c.boundary.for_tag(BoundaryTag::kYMax).kind, BoundaryKind::kDirichlet);
  EXPECT_EQ(c.boundary.for_tag(BoundaryTag::kXMin).kind, BoundaryKind::kAbc);
  EXPECT_EQ(c.acquisition.sources.size(), 1u);
  EXPECT_EQ(c.acquisition.sources[0].amplitude, Complex(1.0, 0.0));
  const nlohmann::json resolved = nlohmann::json::parse(c.resolved_json);
  EXPECT_TRUE(resolved.contains("inversion"));
  EXPECT_TRUE(resolved.contains("boundary"));
  // Parsing the resolved form gives the same resolved form.
  EXPECT_EQ(parse_config(c.resolved_json).resolved_json, c.resolved_json);
}

TEST(Config, UnknownKeyNamesItsPath) {
  nlohmann::json j = base();
  j["inversion"] = {{"iterations", 5}};
  EXPECT_NE(config_error(j).find("inversion.iterations"), std::string::npos);
  j = base();
  j["colour"] = "red";
  EXPECT_NE(config_error(j).find("unknown key"), std::string::npos);
}

TEST(Config, RejectsInvalidInput) {
  nlohmann::json j = base();
  j["frequencies"] = nlohmann::json::array();
  EXPECT_NE(config_error(j).find("frequency list is empty"), std::string::npos);

  j = base();
  j["mesh"]["file"] = "mesh.txt";
  EXPECT_NE(config_error(j).find("conflicting mesh sources"), std::string::npos);

  j = base();
  j["boundary"] = {{"xmin", {{"kind", "robin"}, {"alpha", 1.0}, {"beta", 0.0}}}};
  EXPECT_NE(config_error(j).find("dirichlet"), std::string::npos);

  j = base();
  j["frequencies"] = {0.0};
  EXPECT_NE(config_error(j).find("laplace_shift"), std::string::npos);

  j = base();
  j["acquisition"]["receivers"] = nlohmann::json::array();
  EXPECT_NE(config_error(j).find("receiver"), std::string::npos);

  j = base();
  j["model"] = {{"wave_speed", "fast"}};
  EXPECT_NE(config_error(j).find("model.wave_speed"), std::string::npos);

  EXPECT_THROW(parse_config("{ not json"), ConfigError);
}

TEST(Config, AcquisitionLinesAndAmplitudes) {
  nlohmann::json j = base();
  j["acquisition"] = {{"source_line", {{"from", {0.1, 0.9}}, {"to", {0.9, 0.9}}, {"count", 5}}},
                      {"receivers", {{0.5, 0.5}}},
                      {"sources", {{{"position", {0.2, 0.2}}, {"amplitude", {0.0, 2.0}}}}}};
  const RunConfig c = parse_config(j.dump());
  ASSERT_EQ(c.acquisition.sources.size(), 6u);
  bool found = false;
  for (const PointSource& s : c.acquisition.sources) found |= s.amplitude == Complex(0.0, 2.0);
  EXPECT_TRUE(found);
}

TEST(Workflow, MeshInfoForTwoTriangles) {
  nlohmann::json j = base();
  j["mesh"]["generator"]["cells"] = {1, 1};
  j["discretization"] = {{"order", 3}};
  const RunConfig c = parse_config(j.dump());
  const std::string text = format_mesh_info(mesh_info(c));
  EXPECT_NE(text.find("trace dof 20"), std::string::npos) << text;
  EXPECT_NE(text.find("volume dof per unknown 20"), std::string::npos) << text;
}

#ifdef HDGFWI_CLI
namespace {

struct CliResult {
  int code = -1;
  std::string err;
};

CliResult run_cli(const std::string& args) {
  const fs::path err = scratch("cli_stderr.txt");
  const std::string cmd = std::string(HDGFWI_CLI) + " " + args + " >/dev/null 2>" + err.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = fs::exists(err) ? read_text(err) : "";
  return r;
}

nlohmann::json error_record(const std::string& err) {
  // The record is the last non-empty stderr line.
  std::istringstream in(err);
  std::string line, last;
  while (std::getline(in, line)) {
    if (!line.empty()) last = line;
  }
  return nlohmann::json::parse(last, nullptr, false);
}

fs::path write_config(const std::string& name, const nlohmann::json& j) {
  const fs::path path = scratch(name);
  write_text(path, j.dump(2));
  return path;
}

}  // namespace

TEST(Cli, MeshInfoSucceeds) {
  nlohmann::json j = base();
  j["output_dir"] = scratch("cli_out").string();
  const CliResult r = run_cli("mesh-info --config " + write_config("ok.json", j).string());
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(scratch("cli_out") / "mesh_info.txt"));
  EXPECT_TRUE(fs::exists(scratch("cli_out") / "config.resolved.json"));
}

TEST(Cli, ConfigErrorExitsWithTwo) {
  nlohmann::json j = base();
  j["frequencies"] = nlohmann::json::array();
  const CliResult r = run_cli("mesh-info --config " + write_config("bad.json", j).string());
  EXPECT_EQ(r.code, 2);
  const nlohmann::json rec = error_record(r.err);
  ASSERT_TRUE(rec.is_object()) << r.err;
  EXPECT_EQ(rec["exit_code"], 2);
  EXPECT_EQ(rec["error"], "config");
  EXPECT_NE(rec["message"].get<std::string>().find("frequency list is empty"), std::string::npos);
}

TEST(Cli, MissingDataFileExitsWithFour) {
  nlohmann::json j = base();
  j["data"] = {{"file", scratch("no_such_data.csv").string()}};
  j["output_dir"] = scratch("cli_out4").string();
  const CliResult r = run_cli("invert --config " + write_config("io.json", j).string());
  EXPECT_EQ(r.code, 4) << r.err;
  EXPECT_EQ(error_record(r.err)["exit_code"], 4);
}

TEST(Cli, UnknownFlagIsAUsageError) {
  EXPECT_EQ(run_cli("mesh-info --no-such-flag").code, 2);
  EXPECT_EQ(run_cli("--version").code, 0);
}
#endif
