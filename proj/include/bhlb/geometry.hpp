#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bhlb {

inline constexpr double kUnlimitedBackhaul = std::numeric_limits<double>::infinity();

struct Position {
  double x_m = 0.0;
  double y_m = 0.0;
};

double distance_m(Position a, Position b);

enum class CellKind { MacroSector, Small };

const char* to_string(CellKind kind);

struct CellConfig {
  int id = 0;
  CellKind kind = CellKind::Small;
  Position site;
  double azimuth_deg = 0.0;  // macro sectors only
  double tx_power_dbm = 30.0;
  double cio_db = 0.0;
  double backhaul_mbps = kUnlimitedBackhaul;
  // Interference-only cells radiate but never serve traffic.
  bool serves_traffic = true;
};

struct RadioEnvironment {
  double bandwidth_mhz = 20.0;
  double noise_density_dbm_hz = -174.0;
  double spectral_efficiency_cap = 6.0;  // bit/s/Hz
  double bandwidth_efficiency = 0.8;
  double min_coupling_distance_m = 10.0;
  double grid_pitch_m = 5.0;

  // Throws std::invalid_argument naming the first offending field.
  void validate() const;
};

class CoverageHoleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Distance-dependent pathloss of the two cell classes, d in km.
/// Distances below `min_distance_km` are clamped to it.
double pathloss_db(CellKind kind, double distance_km, double min_distance_km = 0.010);

/// Horizontal pattern: omni for small cells, parabolic with 65 deg
/// half-power beamwidth and 20 dB floor for macro sectors.
double antenna_gain_db(const CellConfig& cell, Position pos);

double received_power_dbm(const CellConfig& cell, Position pos, const RadioEnvironment& env);

double noise_power_mw(const RadioEnvironment& env);

/// CIO-biased strongest-pilot rule. Ties go to the lowest cell id.
/// Cells with serves_traffic == false are still eligible; callers pick the candidate list.
int attach(Position pos, std::span<const CellConfig> cells, const RadioEnvironment& env);

/// Signal over noise plus full-power interference from every other cell in `cells`.
double sinr_linear(Position pos, int serving_id, std::span<const CellConfig> cells,
                   const RadioEnvironment& env);

/// Truncated Shannon mapping.
double peak_rate_mbps(double sinr, const RadioEnvironment& env);
double peak_rate_mbps(Position pos, int serving_id, std::span<const CellConfig> cells,
                      const RadioEnvironment& env);

inline double max_peak_rate_mbps(const RadioEnvironment& env) {
  return env.bandwidth_efficiency * env.bandwidth_mhz * env.spectral_efficiency_cap;
}

// ---------------------------------------------------------------------------
// Spatial layers and the attachment map

enum class LayerRegion {
  Cluster,  // every pixel of the studied area
  Hotspot,  // pixels served by a small cell when all CIOs are zero
};

const char* to_string(LayerRegion region);

struct SpatialLayer {
  double arrivals_per_s = 0.0;
  LayerRegion region = LayerRegion::Cluster;
  // Area over which `arrivals_per_s` is spread. Zero means the layer's own
  // region; a larger value dilutes the density (only the share landing in the
  // studied area is kept).
  double spread_area_m2 = 0.0;
};

struct MapPixel {
  Position center;
  int serving_cell = -1;
  double peak_rate_mbps = 0.0;
  bool hotspot = false;
};

struct AttachmentMap {
  double pixel_area_m2 = 0.0;
  std::vector<MapPixel> pixels;
  // layer_density[layer][pixel], users/s/m^2
  std::vector<std::vector<double>> layer_density;

  double total_density(std::size_t pixel) const;
  std::size_t pixel_count(int cell) const;
};

struct Network {
  std::vector<CellConfig> cells;  // ids equal indices
  // Site of the macro whose sectors delimit the studied area.
  Position anchor_site;
  double region_half_width_m = 600.0;

  std::vector<CellConfig> traffic_cells() const;
  std::vector<double> cio_vector() const;  // per traffic cell, in traffic-cell order
};

/// CIO-independent precomputation over the studied area: per pixel, the
/// received power and would-be peak rate for every traffic cell.
///
/// The studied area is the set of pixels whose strongest cell at zero CIO is
/// a traffic cell. The hotspot region is the subset where that cell is small.
class CoverageGrid {
 public:
  static CoverageGrid build(const Network& net, const RadioEnvironment& env);

  std::size_t size() const { return centers_.size(); }
  double pitch_m() const { return pitch_m_; }
  double pixel_area_m2() const { return pitch_m_ * pitch_m_; }
  const std::vector<int>& traffic_ids() const { return traffic_ids_; }
  Position center(std::size_t px) const { return centers_[px]; }
  bool hotspot(std::size_t px) const { return hotspot_[px] != 0; }
  std::size_t hotspot_count() const;
  // Pixels anywhere in the raster whose strongest cell sits at the anchor site
  // or is a traffic cell.
  std::size_t site_pixel_count() const { return site_pixels_; }

  /// Index into traffic_ids() of the serving cell for this pixel under `cio_db`.
  std::size_t serving_slot(std::size_t px, std::span<const double> cio_db) const;
  double rate_if_served(std::size_t px, std::size_t slot) const {
    return rates_[px * traffic_ids_.size() + slot];
  }

  /// Per-pixel serving cell and peak rate for the given traffic-cell CIOs.
  /// Throws CoverageHoleError if a pixel gets zero peak rate.
  AttachmentMap attach_all(std::span<const double> cio_db,
                           std::span<const SpatialLayer> layers) const;

 private:
  double pitch_m_ = 0.0;
  std::vector<int> traffic_ids_;
  std::vector<Position> centers_;
  std::vector<double> rx_dbm_;  // [px][slot] without CIO
  std::vector<double> rates_;   // [px][slot]
  std::vector<char> hotspot_;
  std::size_t site_pixels_ = 0;
};

AttachmentMap build_attachment_map(const Network& net, const RadioEnvironment& env,
                                   std::span<const SpatialLayer> layers);

std::string attachment_map_csv(const AttachmentMap& map);

// ---------------------------------------------------------------------------
// Layout presets

struct SmallCellPlacement {
  double distance_m = 0.0;
  double bearing_deg = 0.0;  // relative to the studied sector boresight
  double tx_power_dbm = 30.0;
  double backhaul_mbps = 10.0;
};

struct TrisectorLayout {
  double intersite_distance_m = 500.0;
  double macro_tx_power_dbm = 46.0;
  double macro_backhaul_mbps = kUnlimitedBackhaul;
  double studied_azimuth_deg = 0.0;
  bool interfering_ring = true;
  std::vector<SmallCellPlacement> small_cells;
};

/// Studied macro sector gets id 0, small cells 1..n, then the two other
/// sectors of the central site and the 6x3 interfering ring.
Network make_trisector_network(const TrisectorLayout& layout);

}  // namespace bhlb
