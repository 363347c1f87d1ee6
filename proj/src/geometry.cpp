#include "bhlb/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

namespace bhlb {

namespace {

constexpr double kPatternBeamwidthDeg = 65.0;
constexpr double kPatternFloorDb = 20.0;

double db_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

double wrap_deg(double deg) {
  double w = std::fmod(deg + 180.0, 360.0);
  if (w < 0.0) w += 360.0;
  return w - 180.0;
}

bool same_site(Position a, Position b) { return distance_m(a, b) < 1e-6; }

}  // namespace

double distance_m(Position a, Position b) { return std::hypot(a.x_m - b.x_m, a.y_m - b.y_m); }

const char* to_string(CellKind kind) {
  return kind == CellKind::MacroSector ? "macro" : "small";
}

const char* to_string(LayerRegion region) {
  return region == LayerRegion::Cluster ? "cluster" : "hotspot";
}

void RadioEnvironment::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(std::isfinite(bandwidth_mhz) && bandwidth_mhz > 0.0, "bandwidth_mhz must be > 0");
  require(std::isfinite(noise_density_dbm_hz), "noise_density_dbm_hz must be finite");
  require(std::isfinite(spectral_efficiency_cap) && spectral_efficiency_cap > 0.0,
          "spectral_efficiency_cap must be > 0");
  require(bandwidth_efficiency > 0.0 && bandwidth_efficiency <= 1.0,
          "bandwidth_efficiency must be in (0, 1]");
  require(std::isfinite(min_coupling_distance_m) && min_coupling_distance_m > 0.0,
          "min_coupling_distance_m must be > 0");
  require(std::isfinite(grid_pitch_m) && grid_pitch_m > 0.0, "grid_pitch_m must be > 0");
}

double pathloss_db(CellKind kind, double distance_km, double min_distance_km) {
  const double d = std::max(distance_km, min_distance_km);
  if (kind == CellKind::MacroSector) return 128.0 + 36.4 * std::log10(d);
  return 140.7 + 36.7 * std::log10(d);
}

double antenna_gain_db(const CellConfig& cell, Position pos) {
  if (cell.kind == CellKind::Small) return 0.0;
  const double dx = pos.x_m - cell.site.x_m;
  const double dy = pos.y_m - cell.site.y_m;
  if (dx == 0.0 && dy == 0.0) return 0.0;
  const double bearing = std::atan2(dy, dx) * 180.0 / std::numbers::pi;
  const double off = wrap_deg(bearing - cell.azimuth_deg) / kPatternBeamwidthDeg;
  return -std::min(12.0 * off * off, kPatternFloorDb);
}

double received_power_dbm(const CellConfig& cell, Position pos, const RadioEnvironment& env) {
  const double d_km = distance_m(cell.site, pos) / 1000.0;
  return cell.tx_power_dbm + antenna_gain_db(cell, pos) -
         pathloss_db(cell.kind, d_km, env.min_coupling_distance_m / 1000.0);
}

double noise_power_mw(const RadioEnvironment& env) {
  return db_to_mw(env.noise_density_dbm_hz + 10.0 * std::log10(env.bandwidth_mhz * 1e6));
}

int attach(Position pos, std::span<const CellConfig> cells, const RadioEnvironment& env) {
  if (cells.empty()) throw std::invalid_argument("attach: no candidate cells");
  int best_id = -1;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& c : cells) {
    const double v = c.cio_db + received_power_dbm(c, pos, env);
    if (v > best || (v == best && c.id < best_id)) {
      best = v;
      best_id = c.id;
    }
  }
  return best_id;
}

double sinr_linear(Position pos, int serving_id, std::span<const CellConfig> cells,
                   const RadioEnvironment& env) {
  double signal = -1.0;
  double interference = 0.0;
  for (const auto& c : cells) {
    const double p = db_to_mw(received_power_dbm(c, pos, env));
    if (c.id == serving_id)
      signal = p;
    else
      interference += p;
  }
  if (signal < 0.0) throw std::invalid_argument("sinr_linear: serving cell not in list");
  return signal / (noise_power_mw(env) + interference);
}

double peak_rate_mbps(double sinr, const RadioEnvironment& env) {
  const double se = std::min(std::log2(1.0 + std::max(sinr, 0.0)), env.spectral_efficiency_cap);
  return env.bandwidth_efficiency * env.bandwidth_mhz * se;
}

double peak_rate_mbps(Position pos, int serving_id, std::span<const CellConfig> cells,
                      const RadioEnvironment& env) {
  return peak_rate_mbps(sinr_linear(pos, serving_id, cells, env), env);
}

double AttachmentMap::total_density(std::size_t pixel) const {
  double sum = 0.0;
  for (const auto& layer : layer_density) sum += layer[pixel];
  return sum;
}

std::size_t AttachmentMap::pixel_count(int cell) const {
  return static_cast<std::size_t>(std::count_if(
      pixels.begin(), pixels.end(), [cell](const MapPixel& p) { return p.serving_cell == cell; }));
}

std::vector<CellConfig> Network::traffic_cells() const {
  std::vector<CellConfig> out;
  std::copy_if(cells.begin(), cells.end(), std::back_inserter(out),
               [](const CellConfig& c) { return c.serves_traffic; });
  return out;
}

std::vector<double> Network::cio_vector() const {
  std::vector<double> out;
  for (const auto& c : cells)
    if (c.serves_traffic) out.push_back(c.cio_db);
  return out;
}

// ---------------------------------------------------------------------------

CoverageGrid CoverageGrid::build(const Network& net, const RadioEnvironment& env) {
  env.validate();
  if (net.cells.empty()) throw std::invalid_argument("network has no cells");
  for (std::size_t i = 0; i < net.cells.size(); ++i)
    if (net.cells[i].id != static_cast<int>(i))
      throw std::invalid_argument("cell ids must equal their index");

  CoverageGrid g;
  g.pitch_m_ = env.grid_pitch_m;
  std::vector<std::size_t> traffic_idx;
  for (const auto& c : net.cells)
    if (c.serves_traffic) {
      g.traffic_ids_.push_back(c.id);
      traffic_idx.push_back(static_cast<std::size_t>(c.id));
    }
  if (g.traffic_ids_.empty()) throw std::invalid_argument("network has no traffic cells");

  const std::size_t n_cells = net.cells.size();
  const std::size_t n_traffic = traffic_idx.size();
  const double noise = noise_power_mw(env);
  const auto steps = static_cast<long>(std::floor(2.0 * net.region_half_width_m / env.grid_pitch_m));
  const double x0 = net.anchor_site.x_m - net.region_half_width_m + 0.5 * env.grid_pitch_m;
  const double y0 = net.anchor_site.y_m - net.region_half_width_m + 0.5 * env.grid_pitch_m;

  std::vector<double> rx(n_cells);
  std::vector<double> lin(n_cells);
  for (long iy = 0; iy < steps; ++iy) {
    for (long ix = 0; ix < steps; ++ix) {
      const Position p{x0 + static_cast<double>(ix) * env.grid_pitch_m,
                       y0 + static_cast<double>(iy) * env.grid_pitch_m};
      std::size_t best = 0;
      double total = noise;
      for (std::size_t c = 0; c < n_cells; ++c) {
        // All CIOs are zero for the region definition.
        rx[c] = received_power_dbm(net.cells[c], p, env);
        lin[c] = db_to_mw(rx[c]);
        total += lin[c];
        if (rx[c] > rx[best]) best = c;
      }
      const auto& strongest = net.cells[best];
      if (strongest.serves_traffic || same_site(strongest.site, net.anchor_site)) ++g.site_pixels_;
      if (!strongest.serves_traffic) continue;

      g.centers_.push_back(p);
      g.hotspot_.push_back(strongest.kind == CellKind::Small ? 1 : 0);
      for (std::size_t s = 0; s < n_traffic; ++s) {
        const std::size_t c = traffic_idx[s];
        g.rx_dbm_.push_back(rx[c]);
        g.rates_.push_back(peak_rate_mbps(lin[c] / (total - lin[c]), env));
      }
    }
  }
  if (g.centers_.empty()) throw CoverageHoleError("studied area is empty");
  return g;
}

std::size_t CoverageGrid::hotspot_count() const {
  return static_cast<std::size_t>(std::count(hotspot_.begin(), hotspot_.end(), 1));
}

std::size_t CoverageGrid::serving_slot(std::size_t px, std::span<const double> cio_db) const {
  const std::size_t n = traffic_ids_.size();
  const double* rx = &rx_dbm_[px * n];
  std::size_t best = 0;
  double best_v = rx[0] + cio_db[0];
  for (std::size_t s = 1; s < n; ++s) {
    const double v = rx[s] + cio_db[s];
    if (v > best_v) {  // traffic ids ascend, so strict > keeps the lowest id on ties
      best_v = v;
      best = s;
    }
  }
  return best;
}

AttachmentMap CoverageGrid::attach_all(std::span<const double> cio_db,
                                       std::span<const SpatialLayer> layers) const {
  if (cio_db.size() != traffic_ids_.size())
    throw std::invalid_argument("attach_all: one CIO per traffic cell required");
  AttachmentMap map;
  map.pixel_area_m2 = pixel_area_m2();
  map.pixels.reserve(size());
  for (std::size_t px = 0; px < size(); ++px) {
    const std::size_t slot = serving_slot(px, cio_db);
    const double rate = rate_if_served(px, slot);
    if (!(rate > 0.0))
      throw CoverageHoleError(fmt::format("zero peak rate at ({:.1f}, {:.1f}) m", centers_[px].x_m,
                                          centers_[px].y_m));
    map.pixels.push_back({centers_[px], traffic_ids_[slot], rate, hotspot(px)});
  }

  const double area = pixel_area_m2();
  const std::size_t n_hot = hotspot_count();
  for (const auto& layer : layers) {
    const std::size_t n_region = layer.region == LayerRegion::Cluster ? size() : n_hot;
    const double spread = layer.spread_area_m2 > 0.0 ? layer.spread_area_m2
                                                     : static_cast<double>(n_region) * area;
    const double density = n_region == 0 ? 0.0 : layer.arrivals_per_s / spread;
    std::vector<double> d(size(), 0.0);
    for (std::size_t px = 0; px < size(); ++px)
      if (layer.region == LayerRegion::Cluster || hotspot(px)) d[px] = density;
    map.layer_density.push_back(std::move(d));
  }
  return map;
}

AttachmentMap build_attachment_map(const Network& net, const RadioEnvironment& env,
                                   std::span<const SpatialLayer> layers) {
  const auto grid = CoverageGrid::build(net, env);
  const auto cio = net.cio_vector();
  return grid.attach_all(cio, layers);
}

std::string attachment_map_csv(const AttachmentMap& map) {
  std::ostringstream out;
  out << "x_m,y_m,serving_cell,peak_rate_mbps\n";
  for (const auto& p : map.pixels)
    out << fmt::format("{:.2f},{:.2f},{},{:.6f}\n", p.center.x_m, p.center.y_m, p.serving_cell,
                       p.peak_rate_mbps);
  return out.str();
}

// ---------------------------------------------------------------------------

Network make_trisector_network(const TrisectorLayout& layout) {
  Network net;
  net.anchor_site = {0.0, 0.0};
  const double az0 = layout.studied_azimuth_deg;
  auto polar = [](Position origin, double r, double deg) {
    const double a = deg * std::numbers::pi / 180.0;
    return Position{origin.x_m + r * std::cos(a), origin.y_m + r * std::sin(a)};
  };

  int next = 0;
  net.cells.push_back({next++, CellKind::MacroSector, net.anchor_site, az0,
                       layout.macro_tx_power_dbm, 0.0, layout.macro_backhaul_mbps, true});
  for (const auto& sc : layout.small_cells) {
    net.cells.push_back({next++, CellKind::Small,
                         polar(net.anchor_site, sc.distance_m, az0 + sc.bearing_deg), 0.0,
                         sc.tx_power_dbm, 0.0, sc.backhaul_mbps, true});
  }
  for (double off : {120.0, 240.0})
    net.cells.push_back({next++, CellKind::MacroSector, net.anchor_site, az0 + off,
                         layout.macro_tx_power_dbm, 0.0, kUnlimitedBackhaul, false});
  if (layout.interfering_ring) {
    // Neighbour sites sit between sector boresights on the hexagonal lattice.
    for (int k = 0; k < 6; ++k) {
      const Position site = polar(net.anchor_site, layout.intersite_distance_m, az0 + 30.0 + 60.0 * k);
      for (double off : {0.0, 120.0, 240.0})
        net.cells.push_back({next++, CellKind::MacroSector, site, az0 + off,
                             layout.macro_tx_power_dbm, 0.0, kUnlimitedBackhaul, false});
    }
  }
  net.region_half_width_m = 1.2 * layout.intersite_distance_m;
  return net;
}

}  // namespace bhlb
