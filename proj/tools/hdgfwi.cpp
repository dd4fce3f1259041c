#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "hdgfwi/mesh.hpp"
#include "hdgfwi/workflow.hpp"

namespace {

int report(const char* kind, int code, const std::string& message) {
  const nlohmann::json record{{"error", kind}, {"exit_code", code}, {"message", message}};
  std::fprintf(stderr, "%s\n", record.dump().c_str());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HDG frequency-domain acoustic modeling and full-waveform inversion"};
  app.set_version_flag("--version", std::string(hdgfwi::version_string()));
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off")->capture_default_str();

  const char* verbs[][2] = {
      {"mesh-info", "Print mesh and dof counts"},
      {"forward", "Solve the forward problem: fields (VTK) and receiver measurements"},
      {"synthesize", "Generate a data set, optionally with noise"},
      {"gradcheck", "Compare the adjoint gradient with finite differences"},
      {"invert", "Run the frequency-continuation inversion"},
  };
  for (const auto& verb : verbs) {
    CLI::App* sub = app.add_subcommand(verb[0], verb[1]);
    sub->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "RNG seed (overrides the config)");
    sub->add_option("--output-dir", output_dir, "Artifact directory (overrides the config)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  auto logger = spdlog::stderr_color_mt("hdgfwi");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    hdgfwi::RunConfig config = hdgfwi::load_config(config_path);
    if (seed) config.seed = *seed;
    if (output_dir) config.output_dir = *output_dir;
    hdgfwi::refresh_resolved(config);
    spdlog::debug("resolved config:\n{}", config.resolved_json);

    const std::string verb = app.get_subcommands().front()->get_name();
    if (verb == "mesh-info") {
      hdgfwi::run_mesh_info(config);
    } else if (verb == "forward") {
      hdgfwi::run_forward(config);
    } else if (verb == "synthesize") {
      hdgfwi::run_synthesize(config);
    } else if (verb == "gradcheck") {
      hdgfwi::run_gradcheck(config);
    } else {
      hdgfwi::run_invert(config);
    }
  } catch (const hdgfwi::ConfigError& e) {
    return report("config", 2, e.what());
  } catch (const hdgfwi::NumericalError& e) {
    return report("numerical", 3, e.what());
  } catch (const hdgfwi::IoError& e) {
    return report("io", 4, e.what());
  } catch (const hdgfwi::MeshError& e) {
    return report("mesh", 4, e.what());
  } catch (const hdgfwi::StructuralError& e) {
    return report("internal", 1, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return report("io", 4, e.what());
  } catch (const std::exception& e) {
    return report("internal", 1, e.what());
  }
  return 0;
}
