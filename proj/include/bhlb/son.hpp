#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bhlb/geometry.hpp"
#include "bhlb/loadcalc.hpp"

namespace bhlb {

enum class SonVariant {
  Local,   // feeds the scheduler-resource estimator
  Global,  // feeds the backhaul-aware estimator
};

enum class ReferenceRule { NearestMacro, MostLoaded };

const char* to_string(SonVariant v);
const char* to_string(ReferenceRule r);
SonVariant parse_son_variant(const std::string& s);
ReferenceRule parse_reference_rule(const std::string& s);

struct SonConfig {
  double step_db = 1.0;  // dB per unit load difference
  double update_period_s = 60.0;
  double cio_min_db = 0.0;
  double cio_max_db = 12.0;
  SonVariant variant = SonVariant::Global;
  ReferenceRule reference_rule = ReferenceRule::NearestMacro;

  void validate() const;
};

struct ControlledCell {
  int cell = -1;
  double cio_db = 0.0;
  int reference = -1;
};

struct SonState {
  std::vector<ControlledCell> cells;
  long iteration = 0;

  const ControlledCell& find(int cell) const;
};

class SonConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LoadReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reference cell for `controlled`.
/// NearestMacro: macro sector whose site is closest to the controlled cell.
/// MostLoaded: argmax of `loads` over all reporting cells.
/// Ties go to the lowest id.
int select_reference(const CellConfig& controlled, std::span<const CellConfig> cells,
                     const std::map<int, double>& loads, ReferenceRule rule);

/// Which measurement the variant balances.
double reported_load(const MeasurementWindow& window, SonVariant variant);

/// One stochastic-approximation step on every controlled cell:
/// cio += step * (load_ref - load_self), clamped to the configured range.
SonState son_update(const SonState& state, const std::map<int, double>& load_reports,
                    const SonConfig& config);

/// Controlled cells are the small cells, starting from their current CIO.
/// Nearest-macro references are fixed here; most-loaded ones are refreshed
/// per update by the caller through `refresh_references`.
SonState initial_son_state(std::span<const CellConfig> traffic_cells, const SonConfig& config);

void refresh_references(SonState& state, std::span<const CellConfig> traffic_cells,
                        const std::map<int, double>& loads, ReferenceRule rule);

/// Deterministic two-cell system: a fixed demand split between a reference
/// cell and a controlled cell, the controlled share being a logistic function
/// of its CIO. Loads are demand over capacity, capped at 1.
struct TwoCellModel {
  double demand_mbps = 10.0;
  double reference_capacity_mbps = 20.0;
  double controlled_capacity_mbps = 10.0;
  double midpoint_db = 3.0;
  double width_db = 2.0;

  double controlled_share(double cio_db) const;
  double reference_load(double cio_db) const;
  double controlled_load(double cio_db) const;
};

}  // namespace bhlb
