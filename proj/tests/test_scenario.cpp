#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "bhlb/scenario.hpp"

using namespace bhlb;

namespace {

const std::string kFixed = R"(name: tiny
layout:
  type: fixed_rate
  peak_rate_mbps: 20
  backhaul_mbps: 10
traffic:
  - {name: files, kind: elastic, region: cluster, arrival_rate: 1.0}
son:
  enabled: false
run:
  duration_s: 120
  seed: 9
)";

std::string error_of(const std::string& text) {
  try {
    parse_scenario(text, "cfg.yaml");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  if (at == std::string::npos) throw std::logic_error("pattern not found: " + from);
  return s.replace(at, from.size(), to);
}

}  // namespace

TEST(Parse, FixedRateScenario) {
  const auto c = parse_scenario(kFixed);
  EXPECT_EQ(c.name, "tiny");
  EXPECT_EQ(c.layout, LayoutType::FixedRate);
  EXPECT_DOUBLE_EQ(c.fixed.peak_rate_mbps, 20.0);
  EXPECT_DOUBLE_EQ(c.fixed.backhaul_mbps, 10.0);
  ASSERT_EQ(c.traffic.size(), 1u);
  EXPECT_DOUBLE_EQ(c.traffic[0].arrival_rate, 1.0);
  EXPECT_DOUBLE_EQ(c.traffic[0].file_size_mbit, 4.0);
  EXPECT_FALSE(c.son_enabled);
  EXPECT_EQ(c.run.seed, 9u);
  EXPECT_DOUBLE_EQ(c.run.slot_s, 0.01);
}

TEST(Parse, InfinityTokens) {
  for (const char* tok : {"inf", "unlimited", ".inf"}) {
    const auto c = parse_scenario(replace(kFixed, "backhaul_mbps: 10", std::string("backhaul_mbps: ") + tok));
    EXPECT_TRUE(std::isinf(c.fixed.backhaul_mbps)) << tok;
  }
}

TEST(Parse, UnknownKeyReportsLine) {
  const auto err = error_of(replace(kFixed, "  seed: 9", "  sead: 9"));
  EXPECT_NE(err.find("cfg.yaml:12:"), std::string::npos) << err;
  EXPECT_NE(err.find("sead"), std::string::npos) << err;
}

TEST(Parse, BadNumberReportsLine) {
  const auto err = error_of(replace(kFixed, "peak_rate_mbps: 20", "peak_rate_mbps: fast"));
  EXPECT_NE(err.find("cfg.yaml:4:"), std::string::npos) << err;
}

TEST(Parse, SyntaxErrorReportsLine) {
  const auto err = error_of("name: x\nlayout: [unclosed\n");
  EXPECT_NE(err.find("cfg.yaml:"), std::string::npos) << err;
}

TEST(Parse, ZeroBandwidthRejected) {
  const auto err = error_of("environment:\n  bandwidth_mhz: 0\n" + kFixed);
  EXPECT_NE(err.find("bandwidth"), std::string::npos) << err;
}

TEST(Parse, SemanticErrors) {
  EXPECT_NE(error_of(replace(kFixed, "kind: elastic", "kind: video")), "");
  EXPECT_NE(error_of("layout:\n  type: trisector\n  small_cells: []\n"
                     "traffic:\n  - {kind: elastic, region: hotspot, arrival_rate: 1}\n"),
            "");
  EXPECT_NE(error_of(replace(kFixed, "region: cluster", "region: cluster, spread: site")), "");
  EXPECT_NE(error_of(replace(kFixed, "type: fixed_rate", "type: hexagon")), "");
  EXPECT_NE(error_of(replace(kFixed, "enabled: false", "enabled: true\n  update_period_s: 600")), "");
  EXPECT_NE(error_of(replace(kFixed, "enabled: false", "enabled: true\n  variant: fancy")), "");
  EXPECT_NE(error_of(replace(kFixed, "enabled: false", "enabled: maybe")), "");
  EXPECT_NE(error_of(replace(kFixed, "seed: 9", "seed: -1")), "");
  EXPECT_NE(error_of("name: x\n"), "");
}

TEST(Parse, MissingFile) {
  EXPECT_THROW(load_scenario("/nonexistent/config.yaml"), ConfigError);
}

TEST(Canonical, StableAndSensitive) {
  const auto a = parse_scenario(kFixed);
  const auto b = parse_scenario("# comment\n" + kFixed);
  EXPECT_EQ(a.canonical(), b.canonical());
  const auto c = parse_scenario(replace(kFixed, "arrival_rate: 1.0", "arrival_rate: 1.5"));
  EXPECT_NE(a.canonical(), c.canonical());
}

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Build, FixedRateCell) {
  const auto b = build_scenario(parse_scenario(kFixed));
  EXPECT_EQ(b.radio->traffic_ids(), std::vector<int>{0});
  EXPECT_DOUBLE_EQ(b.backhaul_mbps.at(0), 10.0);
  ASSERT_EQ(b.layers.size(), 1u);
  EXPECT_EQ(b.layers[0].kind, FlowKind::Elastic);
}

TEST(Build, ShippedPresetLoads) {
  const auto c = load_scenario(std::string(BHLB_SOURCE_DIR) + "/configs/paper_table1.yaml");
  EXPECT_EQ(c.layout, LayoutType::Trisector);
  EXPECT_EQ(c.trisector.small_cells.size(), 4u);
  EXPECT_DOUBLE_EQ(c.trisector.intersite_distance_m, 500.0);
  EXPECT_DOUBLE_EQ(c.env.bandwidth_mhz, 20.0);
  EXPECT_DOUBLE_EQ(c.env.noise_density_dbm_hz, -174.0);
  for (const auto& s : c.trisector.small_cells) EXPECT_DOUBLE_EQ(s.backhaul_mbps, 10.0);
  EXPECT_TRUE(std::isinf(c.trisector.macro_backhaul_mbps));
  const auto b = build_scenario(c);
  EXPECT_EQ(b.traffic_cells.size(), 5u);
  EXPECT_EQ(b.traffic_cells[0].kind, CellKind::MacroSector);
}
