#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "bhlb/runner.hpp"

using namespace bhlb;

namespace {

const std::string kCell = R"(name: cell
layout:
  type: fixed_rate
  peak_rate_mbps: 20
  backhaul_mbps: 10
traffic:
  - {name: files, kind: elastic, region: cluster, arrival_rate: 1.0}
son:
  enabled: false
  update_period_s: 60
run:
  duration_s: 300
  seed: 4
)";

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::size_t columns(const std::string& line) { return std::count(line.begin(), line.end(), ',') + 1; }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream b;
  b << in.rdbuf();
  return b.str();
}

}  // namespace

TEST(Run, WindowsCsvSchemaAndShape) {
  const auto out = run_scenario(parse_scenario(kCell));
  EXPECT_EQ(out.window_count(), 5);
  const auto rows = lines(out.windows_csv());
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0],
            "window,time_s,cell_id,cell_kind,cio_db,scheduler_load,busy_load,global_load,"
            "analytic_local,analytic_global,completed,mean_ftt_s,mut_mbps,cet_mbps,"
            "backhaul_occupancy,mean_active_flows");
  for (const auto& r : rows) EXPECT_EQ(columns(r), 16u) << r;
  EXPECT_EQ(lines(out.cluster_csv())[0], "window,time_s,completed,mut_mbps,cet_mbps,mean_ftt_s");
  EXPECT_EQ(lines(out.flows_csv())[0],
            "flow_id,cell_id,arrival_s,completion_s,volume_mbit,ftt_s,throughput_mbps");
}

TEST(Run, AnalyticColumnsMatchClosedForm) {
  // 1 user/s x 4 Mbit: local 4/20, global 4/min(10, 20).
  const auto out = run_scenario(parse_scenario(kCell));
  for (const auto& r : out.windows) {
    ASSERT_TRUE(r.analytic_local && r.analytic_global);
    EXPECT_NEAR(*r.analytic_local, 0.2, 1e-9);
    EXPECT_NEAR(*r.analytic_global, 0.4, 1e-9);
  }
}

TEST(Run, IdleWindowHasZeroLoadsAndNullKpis) {
  auto cfg = parse_scenario(kCell);
  cfg.traffic[0].arrival_rate = 0.0;
  cfg.run.duration_s = 60.0;
  const auto out = run_scenario(cfg);
  ASSERT_EQ(out.windows.size(), 1u);
  const auto& r = out.windows[0];
  EXPECT_DOUBLE_EQ(r.scheduler_load, 0.0);
  EXPECT_DOUBLE_EQ(r.busy_load, 0.0);
  EXPECT_DOUBLE_EQ(r.global_load, 0.0);
  EXPECT_DOUBLE_EQ(out.final_cio_db.at(0), 0.0);
  const auto row = lines(out.windows_csv())[1];
  EXPECT_NE(row.find(",0,NA,NA,NA,"), std::string::npos) << row;
  const auto cluster = lines(out.cluster_csv())[1];
  EXPECT_EQ(cluster.substr(cluster.find(",0,")), ",0,NA,NA,NA");
}

TEST(Run, SameSeedByteIdentical) {
  const auto cfg = parse_scenario(kCell);
  const auto a = run_scenario(cfg);
  const auto b = run_scenario(cfg);
  EXPECT_EQ(a.windows_csv(), b.windows_csv());
  EXPECT_EQ(a.flows_csv(), b.flows_csv());
  EXPECT_EQ(a.cluster_csv(), b.cluster_csv());
  auto other = cfg;
  other.run.seed = 5;
  EXPECT_NE(run_scenario(other).flows_csv(), a.flows_csv());
}

TEST(Run, PartialFinalWindow) {
  auto cfg = parse_scenario(kCell);
  cfg.run.duration_s = 150.0;
  const auto out = run_scenario(cfg);
  EXPECT_EQ(out.window_count(), 3);
  EXPECT_NEAR(out.windows.back().time_s, 150.0, 1e-9);
}

TEST(Run, ProgressCallback) {
  int last = 0, total = 0;
  run_scenario(parse_scenario(kCell), [&](int w, int n) {
    EXPECT_EQ(w, last + 1);
    last = w;
    total = n;
  });
  EXPECT_EQ(last, 5);
  EXPECT_EQ(total, 5);
}

TEST(Outputs, WrittenToDisk) {
  const auto dir = std::filesystem::temp_directory_path() / "bhlb_runner_outputs";
  std::filesystem::remove_all(dir);
  const auto cfg = parse_scenario(kCell);
  const auto out = run_scenario(cfg);
  write_outputs(out, dir);
  for (const char* f : {"windows.csv", "cluster.csv", "flows.csv", "summary.json", "manifest.json"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  EXPECT_EQ(slurp(dir / "windows.csv"), out.windows_csv());
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["config_sha256"], sha256_hex(cfg.canonical()));
  EXPECT_EQ(manifest["seed"], 4);
  EXPECT_EQ(manifest["version"], kVersion);
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(summary["windows"], 5);
  EXPECT_TRUE(summary["tail"].contains("0"));
  std::filesystem::remove_all(dir);
}

TEST(Sweep, SeedDerivationAndValues) {
  const auto cfg = parse_scenario(kCell);
  const auto res = sweep(cfg, SweepParameter::Lambda, {0.5, 1.0}, 12);
  ASSERT_EQ(res.size(), 2u);
  EXPECT_EQ(res[0].output.seed, 12u);
  EXPECT_EQ(res[1].output.seed, 13u);
  EXPECT_DOUBLE_EQ(res[1].output.config.traffic[0].arrival_rate, 1.0);
  const auto table = lines(sweep_summary_csv(SweepParameter::Lambda, res));
  EXPECT_EQ(table.size(), 3u);
  EXPECT_EQ(table[0].substr(0, 12), "lambda,seed,");
}

TEST(Sweep, SingleValueEqualsRun) {
  auto cfg = parse_scenario(kCell);
  const auto res = sweep(cfg, SweepParameter::BackhaulCapacity, {10.0}, cfg.run.seed);
  EXPECT_EQ(res[0].output.windows_csv(), run_scenario(cfg).windows_csv());
}

TEST(Sweep, Errors) {
  const auto cfg = parse_scenario(kCell);
  EXPECT_THROW(sweep(cfg, SweepParameter::Epsilon, {}, 1), ConfigError);
  EXPECT_THROW(with_parameter(cfg, SweepParameter::BackhaulCapacity, 0.0), ConfigError);
  EXPECT_THROW(with_parameter(cfg, SweepParameter::Epsilon, -1.0), ConfigError);
  EXPECT_THROW(parse_sweep_parameter("bandwidth"), ConfigError);
  EXPECT_EQ(parse_sweep_parameter("backhaul_capacity"), SweepParameter::BackhaulCapacity);
  EXPECT_TRUE(std::isinf(with_parameter(cfg, SweepParameter::BackhaulCapacity, kUnlimitedBackhaul)
                             .fixed.backhaul_mbps));
}

TEST(Validate, ShippedSuitePasses) {
  const auto rep = validate_suite();
  EXPECT_TRUE(rep.passed()) << rep.text();
  EXPECT_GE(rep.checks.size(), 8u);
  EXPECT_NE(rep.text().find("validation passed"), std::string::npos);
}
