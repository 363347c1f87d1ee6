#include "bhlb/loadcalc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace bhlb {

namespace {

void require_nonempty(const MeasurementWindow& w) {
  if (w.slots.empty()) throw std::invalid_argument("measurement window is empty");
}

template <typename F>
double window_mean(const MeasurementWindow& w, F&& per_slot) {
  require_nonempty(w);
  double sum = 0.0;
  for (const auto& s : w.slots) sum += per_slot(s);
  return sum / static_cast<double>(w.slots.size());
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

const CellLoadParams kDefaultParams{};

// Sum over the cell's pixels of density * area * E(sigma) / rate_of(peak).
// Throws CoverageHoleError on a zero-rate pixel and std::invalid_argument when
// the cell owns no pixel.
template <typename RateOf>
double demand_over_rate(const AnalyticScenario& s, int cell, RateOf&& rate_of) {
  if (s.map == nullptr) throw std::invalid_argument("analytic scenario has no map");
  const auto& px = s.map->pixels;
  if (s.elastic_density.size() != px.size())
    throw std::invalid_argument("elastic density does not match map size");
  double sum = 0.0;
  std::size_t owned = 0;
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (px[i].serving_cell != cell) continue;
    ++owned;
    if (!(px[i].peak_rate_mbps > 0.0))
      throw CoverageHoleError(fmt::format("cell {} has a zero-rate pixel", cell));
    const double demand = s.elastic_density[i] * s.map->pixel_area_m2 * s.mean_file_size_mbit;
    if (demand == 0.0) continue;
    sum += demand / rate_of(px[i].peak_rate_mbps);
  }
  if (owned == 0) throw std::invalid_argument(fmt::format("cell {} owns no pixel", cell));
  return sum;
}

}  // namespace

double scheduler_load(const MeasurementWindow& window) {
  return window_mean(window, [](const SlotObservation& s) { return s.used_resource_fraction; });
}

double busy_load(const MeasurementWindow& window) {
  return window_mean(window,
                     [](const SlotObservation& s) { return s.elastic_active_count > 0 ? 1.0 : 0.0; });
}

double global_load(const MeasurementWindow& window) {
  return window_mean(window, [](const SlotObservation& s) {
    if (s.elastic_active_count > 0) return 1.0;
    return std::max(s.gbr_resource_fraction, s.backhaul_occupancy);
  });
}

AnalyticScenario AnalyticScenario::from_map(const AttachmentMap& map, double mean_file_size_mbit) {
  AnalyticScenario s;
  s.map = &map;
  s.mean_file_size_mbit = mean_file_size_mbit;
  s.elastic_density.assign(map.pixels.size(), 0.0);
  for (std::size_t i = 0; i < map.pixels.size(); ++i) s.elastic_density[i] = map.total_density(i);
  return s;
}

const CellLoadParams& AnalyticScenario::params(int cell) const {
  const auto it = cells.find(cell);
  return it == cells.end() ? kDefaultParams : it->second;
}

double AnalyticScenario::elastic_demand_mbps(int cell) const {
  return demand_over_rate(*this, cell, [](double) { return 1.0; });
}

double analytic_load_elastic(const AnalyticScenario& s, int cell) {
  return clamp01(demand_over_rate(s, cell, [](double r) { return r; }));
}

double analytic_load_gbr(const AnalyticScenario& s, int cell) {
  const double rho_gbr = clamp01(s.params(cell).gbr_radio_fraction);
  if (rho_gbr >= 1.0) return 1.0;
  const double scale = 1.0 - rho_gbr;
  return clamp01(rho_gbr + demand_over_rate(s, cell, [scale](double r) { return scale * r; }));
}

double analytic_global_elastic(const AnalyticScenario& s, int cell) {
  const double c_bh = s.params(cell).backhaul_mbps;
  if (!(c_bh > 0.0)) throw std::invalid_argument("backhaul capacity must be > 0");
  return clamp01(demand_over_rate(s, cell, [c_bh](double r) { return std::min(c_bh, r); }));
}

double analytic_global_gbr(const AnalyticScenario& s, int cell) {
  const auto& p = s.params(cell);
  if (!(p.backhaul_mbps > 0.0)) throw std::invalid_argument("backhaul capacity must be > 0");
  const double rho_gbr = clamp01(p.gbr_radio_fraction);
  const double residual_bh = std::max(0.0, p.backhaul_mbps - p.gbr_demand_mbps);
  const double rho_gbr_g =
      std::max(std::isinf(p.backhaul_mbps) ? 0.0 : p.gbr_demand_mbps / p.backhaul_mbps, rho_gbr);

  if (residual_bh == 0.0 || rho_gbr >= 1.0) {
    // No capacity left for elastic traffic: saturated as soon as there is demand.
    const double demand = s.elastic_demand_mbps(cell);
    return demand > 0.0 ? 1.0 : clamp01(rho_gbr_g);
  }
  const double scale = 1.0 - rho_gbr;
  return clamp01(rho_gbr_g + demand_over_rate(s, cell, [&](double r) {
                   return std::min(residual_bh, scale * r);
                 }));
}

}  // namespace bhlb
