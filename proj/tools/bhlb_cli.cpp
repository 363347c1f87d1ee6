#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "bhlb/runner.hpp"
#include "bhlb/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitValidation = 3;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  std::optional<std::string> variant;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config = true) {
  auto* opt = cmd->add_option("--config", c.config, "scenario YAML file");
  if (needs_config) opt->required();
  cmd->add_option("--seed", c.seed, "RNG seed (overrides run.seed)");
  cmd->add_option("--duration", c.duration, "simulated seconds (overrides run.duration_s)");
  cmd->add_option("--variant", c.variant, "SON variant: local|global");
  cmd->add_option("--out", c.out, "output directory (overrides run.out_dir)");
}

bhlb::ScenarioConfig resolve(const Common& c) {
  auto cfg = bhlb::load_scenario(c.config);
  if (c.seed) cfg.run.seed = *c.seed;
  if (c.duration) cfg.run.duration_s = *c.duration;
  if (c.out) cfg.run.out_dir = *c.out;
  if (c.variant) {
    try {
      cfg.son.variant = bhlb::parse_son_variant(*c.variant);
    } catch (const bhlb::SonConfigError& e) {
      throw bhlb::ConfigError(e.what());
    }
  }
  cfg.validate();
  return cfg;
}

void progress(int w, int total) {
  std::fprintf(stderr, "\rwindow %d/%d", w, total);
  if (w == total) std::fputc('\n', stderr);
}

int cmd_run(const Common& c) {
  const auto cfg = resolve(c);
  const auto out = bhlb::run_scenario(cfg, progress);
  bhlb::write_outputs(out, cfg.run.out_dir);
  std::cout << out.summary_json() << "\n";
  return kExitOk;
}

int cmd_sweep(const Common& c, const std::string& param, const std::vector<std::string>& raw) {
  const auto cfg = resolve(c);
  const auto p = bhlb::parse_sweep_parameter(param);
  std::vector<double> values;
  for (const auto& v : raw) {
    if (v == "inf" || v == "unlimited") {
      values.push_back(bhlb::kUnlimitedBackhaul);
      continue;
    }
    try {
      values.push_back(std::stod(v));
    } catch (const std::exception&) {
      throw bhlb::ConfigError(fmt::format("sweep value '{}' is not a number", v));
    }
  }
  const auto results = bhlb::sweep(cfg, p, values, cfg.run.seed);
  const std::filesystem::path root = cfg.run.out_dir;
  for (std::size_t i = 0; i < results.size(); ++i)
    bhlb::write_outputs(results[i].output, root / fmt::format("{}_{}", bhlb::to_string(p), i));
  std::filesystem::create_directories(root);
  const auto table = bhlb::sweep_summary_csv(p, results);
  std::ofstream(root / "sweep.csv") << table;
  std::cout << table;
  return kExitOk;
}

int cmd_validate(const Common& c) {
  if (!c.config.empty()) resolve(c);
  const auto report = bhlb::validate_suite();
  std::cout << report.text();
  return report.passed() ? kExitOk : kExitValidation;
}

int cmd_map_dump(const Common& c) {
  const auto cfg = resolve(c);
  const auto built = bhlb::build_scenario(cfg);
  std::vector<double> cio;
  for (const auto& tc : built.traffic_cells) cio.push_back(tc.cio_db);
  std::vector<bhlb::SpatialLayer> layers;
  for (const auto& l : built.layers) layers.push_back(l.spatial);
  const auto csv = bhlb::attachment_map_csv(built.radio->map(cio, layers));
  if (c.out) {
    std::filesystem::create_directories(*c.out);
    std::ofstream(std::filesystem::path(*c.out) / "attachment_map.csv") << csv;
  } else {
    std::cout << csv;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flow-level HetNet simulator with backhaul-aware load balancing"};
  app.set_version_flag("--version", bhlb::kVersion);
  app.require_subcommand(1);

  Common run_opts, sweep_opts, validate_opts, map_opts;
  std::string sweep_param;
  std::vector<std::string> sweep_values;

  auto* run = app.add_subcommand("run", "simulate one scenario and write its outputs");
  add_common(run, run_opts);
  auto* sw = app.add_subcommand("sweep", "one run per parameter value");
  add_common(sw, sweep_opts);
  sw->add_option("--param", sweep_param, "backhaul_capacity|epsilon|lambda")->required();
  sw->add_option("--values", sweep_values, "values to sweep")->required()->expected(1, -1)->delimiter(',');
  auto* val = app.add_subcommand("validate", "run the built-in property suite");
  add_common(val, validate_opts, false);
  auto* map = app.add_subcommand("map-dump", "write the attachment map as CSV");
  add_common(map, map_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_opts);
    if (*sw) return cmd_sweep(sweep_opts, sweep_param, sweep_values);
    if (*val) return cmd_validate(validate_opts);
    if (*map) return cmd_map_dump(map_opts);
  } catch (const bhlb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
