#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "bhlb/loadcalc.hpp"

using namespace bhlb;

namespace {

MeasurementWindow constant(SlotObservation s, int n) {
  MeasurementWindow w;
  w.slots.assign(static_cast<std::size_t>(n), s);
  return w;
}

// A map whose pixels all belong to cell 0 (unless stated) with the given
// rates; each pixel is 1 m^2 so density equals per-pixel arrivals.
struct ToyMap {
  AttachmentMap map;
  ToyMap(std::vector<double> rates, std::vector<int> cells = {}) {
    map.pixel_area_m2 = 1.0;
    for (std::size_t i = 0; i < rates.size(); ++i)
      map.pixels.push_back({{double(i), 0.0}, cells.empty() ? 0 : cells[i], rates[i], false});
  }
  // demand_mbps per pixel with E(sigma) = 1 Mbit.
  AnalyticScenario scenario(std::vector<double> demand_mbps) const {
    AnalyticScenario s;
    s.map = &map;
    s.mean_file_size_mbit = 1.0;
    s.elastic_density = std::move(demand_mbps);
    return s;
  }
};

}  // namespace

TEST(SchedulerLoad, Examples) {
  EXPECT_DOUBLE_EQ(scheduler_load(constant({1.0, 1, 0, 0}, 10)), 1.0);
  EXPECT_DOUBLE_EQ(scheduler_load(constant({0.5, 1, 0, 0}, 10)), 0.5);
  MeasurementWindow w;
  for (double u : {1.0, 0.0, 0.5, 0.5}) w.slots.push_back({u, 1, 0, 0});
  EXPECT_DOUBLE_EQ(scheduler_load(w), 0.5);
}

TEST(BusyLoad, Examples) {
  EXPECT_DOUBLE_EQ(busy_load(constant({0, 0, 0, 0}, 60)), 0.0);
  EXPECT_DOUBLE_EQ(busy_load(constant({0, 3, 0, 0}, 60)), 1.0);
  MeasurementWindow w;
  for (int i = 0; i < 60; ++i) w.slots.push_back({0.0, i < 45 ? 2 : 0, 0, 0});
  EXPECT_DOUBLE_EQ(busy_load(w), 0.75);
}

TEST(GlobalLoad, Examples) {
  EXPECT_DOUBLE_EQ(global_load(constant({0.2, 1, 0.3, 0.1}, 60)), 1.0);
  EXPECT_NEAR(global_load(constant({0, 0, 0.0, 0.3}, 60)), 0.3, 1e-12);
  MeasurementWindow w;
  for (int i = 0; i < 60; ++i)
    w.slots.push_back(i < 30 ? SlotObservation{0.9, 1, 0, 0} : SlotObservation{0.4, 0, 0.4, 0.1});
  EXPECT_NEAR(global_load(w), 0.7, 1e-15);
}

TEST(Estimators, EmptyWindowThrows) {
  const MeasurementWindow w;
  EXPECT_THROW(scheduler_load(w), std::invalid_argument);
  EXPECT_THROW(busy_load(w), std::invalid_argument);
  EXPECT_THROW(global_load(w), std::invalid_argument);
}

TEST(Estimators, RangeDominanceAndReduction) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> n(0, 4), len(1, 300);
  for (int trial = 0; trial < 1000; ++trial) {
    MeasurementWindow w, bare;
    const int L = len(rng);
    for (int i = 0; i < L; ++i) {
      const int k = n(rng) == 0 ? 0 : n(rng);
      w.slots.push_back({u(rng), k, u(rng), u(rng)});
      bare.slots.push_back({u(rng), k, 0.0, 0.0});
    }
    const double s = scheduler_load(w), b = busy_load(w), g = global_load(w);
    for (double v : {s, b, g}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_GE(g, b);
    EXPECT_DOUBLE_EQ(global_load(bare), busy_load(bare));
  }
}

TEST(AnalyticElastic, ConstantRateCell) {
  // 4 Mbps spread over ten 10 Mbps pixels.
  ToyMap t(std::vector<double>(10, 10.0));
  const auto s = t.scenario(std::vector<double>(10, 0.4));
  EXPECT_NEAR(analytic_load_elastic(s, 0), 0.4, 1e-12);
  EXPECT_NEAR(s.elastic_demand_mbps(0), 4.0, 1e-12);
}

TEST(AnalyticElastic, CappedAtOne) {
  ToyMap t({10.0, 10.0});
  EXPECT_DOUBLE_EQ(analytic_load_elastic(t.scenario({10.0, 10.0}), 0), 1.0);
}

TEST(AnalyticElastic, TwoPixelCell) {
  ToyMap t({10.0, 20.0});
  EXPECT_NEAR(analytic_load_elastic(t.scenario({1.0, 2.0}), 0), 0.2, 1e-12);
}

TEST(AnalyticElastic, ZeroRatePixelIsCoverageHole) {
  ToyMap t({10.0, 0.0});
  EXPECT_THROW(analytic_load_elastic(t.scenario({1.0, 1.0}), 0), CoverageHoleError);
}

TEST(AnalyticElastic, CellWithoutPixelsRejected) {
  ToyMap t({10.0});
  EXPECT_THROW(analytic_load_elastic(t.scenario({1.0}), 5), std::invalid_argument);
}

TEST(AnalyticGbr, Examples) {
  ToyMap t({10.0, 10.0});
  auto s = t.scenario({1.0, 1.0});
  EXPECT_DOUBLE_EQ(analytic_load_gbr(s, 0), analytic_load_elastic(s, 0));
  s.cells[0].gbr_radio_fraction = 0.5;
  EXPECT_NEAR(analytic_load_gbr(s, 0), 0.9, 1e-12);
  s.cells[0].gbr_radio_fraction = 1.0;
  EXPECT_DOUBLE_EQ(analytic_load_gbr(s, 0), 1.0);
}

TEST(AnalyticGlobalElastic, Examples) {
  ToyMap t(std::vector<double>(4, 50.0));
  auto s = t.scenario({1.0, 1.0, 1.0, 1.0});
  EXPECT_DOUBLE_EQ(analytic_global_elastic(s, 0), analytic_load_elastic(s, 0));
  s.cells[0].backhaul_mbps = 60.0;
  EXPECT_DOUBLE_EQ(analytic_global_elastic(s, 0), analytic_load_elastic(s, 0));
  s.cells[0].backhaul_mbps = 10.0;
  EXPECT_NEAR(analytic_global_elastic(s, 0), 0.4, 1e-12);
  s.elastic_density.assign(4, 3.0);
  EXPECT_DOUBLE_EQ(analytic_global_elastic(s, 0), 1.0);
}

TEST(AnalyticGlobalGbr, Examples) {
  // R = 10 with rho_GBR = 0.2 leaves 8 Mbps of radio.
  ToyMap t({10.0, 10.0, 10.0});
  auto s = t.scenario({1.0, 1.0, 1.0});
  EXPECT_DOUBLE_EQ(analytic_global_gbr(s, 0), analytic_global_elastic(s, 0));
  auto& p = s.cells[0];
  p.backhaul_mbps = 10.0;
  p.gbr_demand_mbps = 4.0;
  p.gbr_radio_fraction = 0.2;
  EXPECT_NEAR(analytic_global_gbr(s, 0), 0.9, 1e-12);
  p.gbr_demand_mbps = 10.0;
  EXPECT_DOUBLE_EQ(analytic_global_gbr(s, 0), 1.0);
  p.gbr_demand_mbps = 12.0;
  EXPECT_DOUBLE_EQ(analytic_global_gbr(s, 0), 1.0);
}

TEST(Analytic, RangeMonotonicityAndReduction) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> rate(0.5, 96.0), dem(0.0, 0.8), c(1.0, 120.0), g(0.0, 0.9);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> rates(20), demand(20);
    std::vector<int> cells(20);
    for (int i = 0; i < 20; ++i) {
      rates[i] = rate(rng);
      demand[i] = dem(rng);
      cells[i] = i % 3;
    }
    ToyMap t(rates, cells);
    auto s = t.scenario(demand);
    for (int cell = 0; cell < 3; ++cell) {
      const double le = analytic_load_elastic(s, cell);
      EXPECT_DOUBLE_EQ(analytic_global_gbr(s, cell), le);
      EXPECT_DOUBLE_EQ(analytic_global_elastic(s, cell), le);
      s.cells[cell] = {c(rng), g(rng), c(rng) * 0.3};
      const double lg = analytic_load_gbr(s, cell);
      const double ge = analytic_global_elastic(s, cell);
      const double gg = analytic_global_gbr(s, cell);
      for (double v : {le, lg, ge, gg}) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
      EXPECT_GE(ge, le);
    }
  }
}

TEST(AnalyticScenario, FromMapSumsLayers) {
  ToyMap t({10.0, 10.0});
  t.map.layer_density = {{0.5, 0.5}, {0.25, 0.0}};
  const auto s = AnalyticScenario::from_map(t.map, 4.0);
  EXPECT_DOUBLE_EQ(s.elastic_density[0], 0.75);
  EXPECT_DOUBLE_EQ(s.elastic_density[1], 0.5);
  EXPECT_DOUBLE_EQ(s.elastic_demand_mbps(0), 5.0);
}
