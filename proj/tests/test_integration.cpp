#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "bhlb/runner.hpp"

using namespace bhlb;

namespace {

ScenarioConfig preset() {
  return load_scenario(std::string(BHLB_SOURCE_DIR) + "/configs/paper_table1.yaml");
}

double mean_small_cio(const RunOutput& out) {
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < out.traffic_ids.size(); ++i) {
    if (out.windows[i].kind != CellKind::Small) continue;
    sum += out.final_cio_db[i];
    ++n;
  }
  return sum / n;
}

// Mean over the last `tail` windows of one cell's global load.
double tail_global(const RunOutput& out, int cell, int tail = 10) {
  const auto rows = out.cell_rows(cell);
  double s = 0.0;
  for (std::size_t i = rows.size() - tail; i < rows.size(); ++i) s += rows[i].global_load;
  return s / tail;
}

}  // namespace

TEST(Trisector, HotspotArrivalsLandOnSmallCellPixels) {
  const auto built = build_scenario(preset());
  const auto& radio = *built.radio;
  const std::vector<double> cio(radio.traffic_ids().size(), 0.0);
  TrafficLayer layer;
  layer.spatial = {2000.0, LayerRegion::Hotspot};
  Rng rng(3);
  std::uint64_t next = 0;
  int spawned = 0, on_macro = 0;
  for (int slot = 0; slot < 50; ++slot) {
    for (const auto& f : spawn_arrivals(layer, slot * 0.01, 0.01, radio, cio, rng, next)) {
      EXPECT_TRUE(radio.in_hotspot(f.position));
      on_macro += f.serving_cell == 0;
      EXPECT_GT(f.peak_rate_mbps, 0.0);
      ++spawned;
    }
  }
  EXPECT_GT(spawned, 500);
  // Membership is per pixel, attachment per exact position: only pixel edges differ.
  EXPECT_LT(on_macro, spawned / 50);
}

TEST(Trisector, FlowsKeepServingCellAcrossCioChange) {
  const auto cfg = preset();
  const auto built = build_scenario(cfg);
  World world(built.radio, built.backhaul_mbps, built.layers, cfg.run.slot_s, 11);
  world.run_for(20.0);
  std::map<std::uint64_t, int> before;
  for (const auto& c : world.cells())
    for (const auto& f : c.flows) before[f.id] = c.id;
  ASSERT_FALSE(before.empty());
  for (int id : built.radio->traffic_ids())
    if (id != 0) world.set_cio_db(id, 12.0);
  world.run_for(0.5);
  int still_active = 0;
  for (const auto& c : world.cells())
    for (const auto& f : c.flows) {
      const auto it = before.find(f.id);
      if (it == before.end()) continue;
      EXPECT_EQ(it->second, c.id);
      EXPECT_EQ(f.serving_cell, c.id);
      ++still_active;
    }
  EXPECT_GT(still_active, 0);
}

TEST(Trisector, ShortRunInvariants) {
  auto cfg = preset();
  cfg.run.duration_s = 300.0;
  const auto out = run_scenario(cfg);
  EXPECT_EQ(out.window_count(), 5);
  for (const auto& r : out.windows) {
    for (double v : {r.scheduler_load, r.busy_load, r.global_load}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_GE(r.global_load + 1e-12, r.busy_load);
    EXPECT_GE(r.cio_db, 0.0);
    EXPECT_LE(r.cio_db, 12.0);
    ASSERT_TRUE(r.analytic_local && r.analytic_global);
    EXPECT_GE(*r.analytic_global + 1e-12, *r.analytic_local);
    if (r.kind == CellKind::MacroSector) {
      EXPECT_DOUBLE_EQ(r.cio_db, 0.0);
      // No backhaul limit on the macro.
      EXPECT_DOUBLE_EQ(r.global_load, r.busy_load);
    }
  }
  EXPECT_GT(out.flows.size(), 100u);
}

TEST(Trisector, LocalVariantIgnoresBackhaul) {
  auto cfg = preset();
  cfg.run.duration_s = 600.0;
  cfg.son.variant = SonVariant::Local;
  const auto local = run_scenario(cfg);
  cfg.son.variant = SonVariant::Global;
  const auto global = run_scenario(cfg);
  // Same arrivals, different steering.
  EXPECT_NE(local.windows_csv(), global.windows_csv());
  EXPECT_GT(mean_small_cio(local), mean_small_cio(global));
}

TEST(Sweep, LargerBackhaulAllowsLargerOffsets) {
  const auto res = sweep(preset(), SweepParameter::BackhaulCapacity, {10.0, 50.0, kUnlimitedBackhaul}, 1);
  ASSERT_EQ(res.size(), 3u);
  const double c10 = mean_small_cio(res[0].output);
  const double c50 = mean_small_cio(res[1].output);
  const double cinf = mean_small_cio(res[2].output);
  EXPECT_LT(c10, c50);
  EXPECT_LE(c50, cinf + 0.5);
  EXPECT_LT(c10, cinf);
}

TEST(Sweep, StepSizesReachTheSameBalance) {
  const auto res = sweep(preset(), SweepParameter::Epsilon, {1.0, 2.0}, 1);
  for (const auto& r : res) {
    const auto& out = r.output;
    const double macro = tail_global(out, 0);
    double small = 0.0;
    int n = 0;
    for (int id : out.traffic_ids)
      if (id != 0) {
        small += tail_global(out, id);
        ++n;
      }
    EXPECT_LT(std::abs(macro - small / n), 0.15) << "eps " << r.value;
  }
}
