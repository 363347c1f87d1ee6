#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "bhlb/geometry.hpp"

namespace bhlb {

/// Per-slot observables a base station can measure.
struct SlotObservation {
  double used_resource_fraction = 0.0;  // K_t / K
  int elastic_active_count = 0;
  double gbr_resource_fraction = 0.0;
  double backhaul_occupancy = 0.0;
};

struct MeasurementWindow {
  std::vector<SlotObservation> slots;
  double slot_duration_s = 0.01;

  std::size_t length() const { return slots.size(); }
  double duration_s() const { return slot_duration_s * static_cast<double>(slots.size()); }
};

// Measurement-based estimators. All throw std::invalid_argument on an empty window.

/// Mean fraction of radio resources the scheduler used.
double scheduler_load(const MeasurementWindow& window);

/// Fraction of slots with at least one elastic flow present.
double busy_load(const MeasurementWindow& window);

/// Busy indicator on elastic-active slots, max(GBR radio share, backhaul
/// occupancy) on the others.
double global_load(const MeasurementWindow& window);

/// Per-cell parameters the analytic loads need beyond the attachment map.
struct CellLoadParams {
  double backhaul_mbps = kUnlimitedBackhaul;
  double gbr_radio_fraction = 0.0;
  double gbr_demand_mbps = 0.0;
};

/// Inputs for the integral load definitions, discretized on the attachment
/// map. `elastic_density` is users/s/m^2 per map pixel.
struct AnalyticScenario {
  const AttachmentMap* map = nullptr;
  std::vector<double> elastic_density;
  double mean_file_size_mbit = 4.0;
  std::map<int, CellLoadParams> cells;

  /// Sums all map layers as elastic density.
  static AnalyticScenario from_map(const AttachmentMap& map, double mean_file_size_mbit);

  const CellLoadParams& params(int cell) const;
  /// Elastic traffic demand of `cell`, Mbps.
  double elastic_demand_mbps(int cell) const;
};

double analytic_load_elastic(const AnalyticScenario& s, int cell);
double analytic_load_gbr(const AnalyticScenario& s, int cell);
double analytic_global_elastic(const AnalyticScenario& s, int cell);
double analytic_global_gbr(const AnalyticScenario& s, int cell);

}  // namespace bhlb
