#include "bhlb/son.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace bhlb {

const char* to_string(SonVariant v) { return v == SonVariant::Local ? "local" : "global"; }

const char* to_string(ReferenceRule r) {
  return r == ReferenceRule::NearestMacro ? "nearest-macro" : "most-loaded";
}

SonVariant parse_son_variant(const std::string& s) {
  if (s == "local") return SonVariant::Local;
  if (s == "global") return SonVariant::Global;
  throw SonConfigError(fmt::format("unknown SON variant '{}' (expected local|global)", s));
}

ReferenceRule parse_reference_rule(const std::string& s) {
  if (s == "nearest-macro") return ReferenceRule::NearestMacro;
  if (s == "most-loaded") return ReferenceRule::MostLoaded;
  throw SonConfigError(
      fmt::format("unknown reference rule '{}' (expected nearest-macro|most-loaded)", s));
}

void SonConfig::validate() const {
  if (!(step_db > 0.0) || !std::isfinite(step_db)) throw SonConfigError("step size must be > 0");
  if (!(update_period_s > 0.0)) throw SonConfigError("update period must be > 0");
  if (!(cio_min_db <= cio_max_db)) throw SonConfigError("cio_min must not exceed cio_max");
}

const ControlledCell& SonState::find(int cell) const {
  const auto it = std::find_if(cells.begin(), cells.end(),
                               [cell](const ControlledCell& c) { return c.cell == cell; });
  if (it == cells.end()) throw std::out_of_range(fmt::format("cell {} is not controlled", cell));
  return *it;
}

int select_reference(const CellConfig& controlled, std::span<const CellConfig> cells,
                     const std::map<int, double>& loads, ReferenceRule rule) {
  int best = -1;
  if (rule == ReferenceRule::NearestMacro) {
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& c : cells) {
      if (c.kind != CellKind::MacroSector) continue;
      const double d = distance_m(c.site, controlled.site);
      if (d < best_d || (d == best_d && c.id < best)) {
        best_d = d;
        best = c.id;
      }
    }
    if (best < 0) throw SonConfigError("nearest-macro reference needs at least one macro cell");
    return best;
  }
  double best_load = -1.0;
  for (const auto& [id, load] : loads) {  // ascending ids: strict > keeps the lowest
    if (load > best_load) {
      best_load = load;
      best = id;
    }
  }
  if (best < 0) throw LoadReportError("most-loaded reference needs at least one load report");
  return best;
}

double reported_load(const MeasurementWindow& window, SonVariant variant) {
  return variant == SonVariant::Local ? scheduler_load(window) : global_load(window);
}

namespace {

double checked_load(const std::map<int, double>& reports, int cell) {
  const auto it = reports.find(cell);
  if (it == reports.end()) throw LoadReportError(fmt::format("no load report for cell {}", cell));
  const double v = it->second;
  if (!(v >= 0.0 && v <= 1.0))
    throw LoadReportError(fmt::format("cell {} reported load {} outside [0, 1]", cell, v));
  return v;
}

}  // namespace

SonState son_update(const SonState& state, const std::map<int, double>& load_reports,
                    const SonConfig& config) {
  // Validate everything before touching any CIO.
  for (const auto& [id, v] : load_reports) checked_load(load_reports, id);

  SonState next = state;
  for (auto& c : next.cells) {
    if (c.cell == c.reference) continue;
    const double gap = checked_load(load_reports, c.reference) - checked_load(load_reports, c.cell);
    c.cio_db = std::clamp(c.cio_db + config.step_db * gap, config.cio_min_db, config.cio_max_db);
  }
  ++next.iteration;
  return next;
}

SonState initial_son_state(std::span<const CellConfig> traffic_cells, const SonConfig& config) {
  config.validate();
  SonState s;
  const std::map<int, double> no_loads;
  for (const auto& c : traffic_cells) {
    if (c.kind != CellKind::Small) continue;
    ControlledCell cc;
    cc.cell = c.id;
    cc.cio_db = std::clamp(c.cio_db, config.cio_min_db, config.cio_max_db);
    cc.reference = config.reference_rule == ReferenceRule::NearestMacro
                       ? select_reference(c, traffic_cells, no_loads, ReferenceRule::NearestMacro)
                       : -1;
    s.cells.push_back(cc);
  }
  return s;
}

void refresh_references(SonState& state, std::span<const CellConfig> traffic_cells,
                        const std::map<int, double>& loads, ReferenceRule rule) {
  for (auto& c : state.cells) {
    const auto it = std::find_if(traffic_cells.begin(), traffic_cells.end(),
                                 [&](const CellConfig& t) { return t.id == c.cell; });
    if (it == traffic_cells.end()) throw std::out_of_range("controlled cell missing from layout");
    c.reference = select_reference(*it, traffic_cells, loads, rule);
  }
}

double TwoCellModel::controlled_share(double cio_db) const {
  return 1.0 / (1.0 + std::exp(-(cio_db - midpoint_db) / width_db));
}

double TwoCellModel::reference_load(double cio_db) const {
  return std::min(1.0, demand_mbps * (1.0 - controlled_share(cio_db)) / reference_capacity_mbps);
}

double TwoCellModel::controlled_load(double cio_db) const {
  return std::min(1.0, demand_mbps * controlled_share(cio_db) / controlled_capacity_mbps);
}

}  // namespace bhlb
