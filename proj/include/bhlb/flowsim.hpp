#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "bhlb/geometry.hpp"
#include "bhlb/loadcalc.hpp"

namespace bhlb {

using Rng = std::mt19937_64;

enum class FlowKind { Elastic, Gbr };

struct Flow {
  std::uint64_t id = 0;
  FlowKind kind = FlowKind::Elastic;
  Position position;
  int serving_cell = -1;
  double arrival_time_s = 0.0;
  double peak_rate_mbps = 0.0;
  // elastic
  double volume_mbit = 0.0;
  double remaining_mbit = 0.0;
  double service_integral_mbit = 0.0;  // sum of rate * slot, unclipped
  // gbr
  double guaranteed_rate_mbps = 0.0;
  double departure_time_s = 0.0;
};

struct TrafficLayer {
  FlowKind kind = FlowKind::Elastic;
  SpatialLayer spatial;
  double file_size_mean_mbit = 4.0;
  double gbr_rate_mbps = 0.0;
  double gbr_mean_holding_s = 0.0;
};

struct Attachment {
  int cell = -1;
  double peak_rate_mbps = 0.0;
};

/// What the simulator needs from the radio side: where users land, who
/// serves them, and the analytic attachment map for the current CIOs.
class RadioAccess {
 public:
  virtual ~RadioAccess() = default;

  /// Traffic-carrying cell ids, ascending. CIO vectors follow this order.
  virtual const std::vector<int>& traffic_ids() const = 0;
  virtual Attachment locate(Position pos, std::span<const double> cio_db) const = 0;
  virtual Position sample_position(LayerRegion region, Rng& rng) const = 0;
  virtual double region_area_m2(LayerRegion region) const = 0;
  /// True if `pos` falls on a pixel whose zero-CIO server is a small cell.
  virtual bool in_hotspot(Position pos) const = 0;
  virtual AttachmentMap map(std::span<const double> cio_db,
                            std::span<const SpatialLayer> layers) const = 0;
};

/// Geometry-backed radio: exact-position attachment and SINR, pixel-based
/// sampling and analytic map.
class GridRadio final : public RadioAccess {
 public:
  GridRadio(Network net, RadioEnvironment env);

  const std::vector<int>& traffic_ids() const override { return grid_.traffic_ids(); }
  Attachment locate(Position pos, std::span<const double> cio_db) const override;
  Position sample_position(LayerRegion region, Rng& rng) const override;
  double region_area_m2(LayerRegion region) const override;
  bool in_hotspot(Position pos) const override;
  AttachmentMap map(std::span<const double> cio_db,
                    std::span<const SpatialLayer> layers) const override;

  const Network& network() const { return net_; }
  const RadioEnvironment& environment() const { return env_; }
  const CoverageGrid& grid() const { return grid_; }

 private:
  std::optional<std::size_t> pixel_at(Position pos) const;

  Network net_;
  RadioEnvironment env_;
  CoverageGrid grid_;
  std::vector<std::size_t> hotspot_pixels_;
  // Dense raster over the bounding box; -1 outside the studied area.
  std::vector<long> raster_to_pixel_;
  double raster_x0_ = 0.0;
  double raster_y0_ = 0.0;
  long raster_steps_ = 0;
};

/// One cell of constant peak rate over a square area; the analytic and
/// queueing oracles are exact for it.
class FixedRateRadio final : public RadioAccess {
 public:
  FixedRateRadio(double peak_rate_mbps, double side_m = 100.0, double pitch_m = 10.0);

  const std::vector<int>& traffic_ids() const override { return ids_; }
  Attachment locate(Position pos, std::span<const double> cio_db) const override;
  Position sample_position(LayerRegion region, Rng& rng) const override;
  double region_area_m2(LayerRegion) const override { return side_m_ * side_m_; }
  bool in_hotspot(Position) const override { return true; }
  AttachmentMap map(std::span<const double> cio_db,
                    std::span<const SpatialLayer> layers) const override;

 private:
  double rate_;
  double side_m_;
  double pitch_m_;
  std::vector<int> ids_{0};
};

/// Draws one slot's arrivals of `layer`. Serving cell and peak rate are fixed
/// at arrival.
std::vector<Flow> spawn_arrivals(const TrafficLayer& layer, double now_s, double slot_duration_s,
                                 const RadioAccess& radio, std::span<const double> cio_db, Rng& rng,
                                 std::uint64_t& next_flow_id);

struct CellState {
  int id = -1;
  double backhaul_mbps = kUnlimitedBackhaul;
  std::vector<Flow> flows;
  std::vector<SlotObservation> pending;  // observations since the last window cut
  double pending_gbr_mbit = 0.0;          // GBR volume carried since the last cut
};

struct Allocation {
  std::vector<double> rates_mbps;  // aligned with CellState::flows
  SlotObservation observation;
  double total_rate_mbps = 0.0;
  double gbr_rate_mbps = 0.0;
};

/// GBR first (clamped to what radio and backhaul can still carry), then
/// egalitarian time sharing of the joint radio/backhaul bottleneck among
/// elastic flows.
Allocation allocate_rates(const CellState& cell);

struct CompletedFlow {
  std::uint64_t id = 0;
  int cell = -1;
  double arrival_s = 0.0;
  double completion_s = 0.0;
  double volume_mbit = 0.0;
  double service_integral_mbit = 0.0;

  double ftt_s() const { return completion_s - arrival_s; }
  double throughput_mbps() const { return volume_mbit / ftt_s(); }
};

struct KpiRecord {
  std::size_t completed = 0;
  std::optional<double> mut_mbps;
  std::optional<double> cet_mbps;
  std::map<int, double> mean_ftt_s;
  std::map<int, double> mut_by_cell_mbps;
  std::map<int, double> cet_by_cell_mbps;
};

/// Nearest-rank percentile, p in (0, 100]. Throws on empty input.
double percentile_nearest_rank(std::vector<double> values, double p);

KpiRecord collect_kpis(std::span<const CompletedFlow> flows);

class World {
 public:
  World(std::shared_ptr<const RadioAccess> radio, std::map<int, double> backhaul_mbps,
        std::vector<TrafficLayer> layers, double slot_duration_s, std::uint64_t seed);

  void step();
  void run_for(double seconds);

  double now_s() const { return now_s_; }
  std::uint64_t slot_index() const { return slot_; }
  double slot_duration_s() const { return slot_s_; }

  const RadioAccess& radio() const { return *radio_; }
  const std::vector<TrafficLayer>& layers() const { return layers_; }
  std::span<const CellState> cells() const { return cells_; }
  const CellState& cell(int id) const;

  std::vector<double> cio_db() const { return cio_; }
  double cio_db(int cell) const;
  void set_cio_db(int cell, double value);

  struct CellWindow {
    MeasurementWindow window;
    double mean_gbr_rate_mbps = 0.0;
  };

  /// Observations recorded since the previous call, per cell.
  CellWindow take_window(int cell);
  std::vector<CompletedFlow> take_completed();

 private:
  CellState& mutable_cell(int id);
  std::size_t slot_of(int id) const;

  std::shared_ptr<const RadioAccess> radio_;
  std::vector<TrafficLayer> layers_;
  double slot_s_;
  Rng rng_;
  std::vector<CellState> cells_;
  std::vector<double> cio_;
  std::vector<CompletedFlow> completed_;
  double now_s_ = 0.0;
  std::uint64_t slot_ = 0;
  std::uint64_t next_flow_id_ = 0;
};

}  // namespace bhlb
