#include "bhlb/flowsim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace bhlb {

// ---------------------------------------------------------------------------
// GridRadio

GridRadio::GridRadio(Network net, RadioEnvironment env)
    : net_(std::move(net)), env_(env), grid_(CoverageGrid::build(net_, env_)) {
  for (std::size_t px = 0; px < grid_.size(); ++px)
    if (grid_.hotspot(px)) hotspot_pixels_.push_back(px);

  raster_x0_ = net_.anchor_site.x_m - net_.region_half_width_m;
  raster_y0_ = net_.anchor_site.y_m - net_.region_half_width_m;
  raster_steps_ = static_cast<long>(std::floor(2.0 * net_.region_half_width_m / env_.grid_pitch_m));
  raster_to_pixel_.assign(static_cast<std::size_t>(raster_steps_ * raster_steps_), -1);
  for (std::size_t px = 0; px < grid_.size(); ++px) {
    const auto c = grid_.center(px);
    const auto ix = static_cast<long>(std::floor((c.x_m - raster_x0_) / env_.grid_pitch_m));
    const auto iy = static_cast<long>(std::floor((c.y_m - raster_y0_) / env_.grid_pitch_m));
    raster_to_pixel_[static_cast<std::size_t>(iy * raster_steps_ + ix)] = static_cast<long>(px);
  }
}

std::optional<std::size_t> GridRadio::pixel_at(Position pos) const {
  const auto ix = static_cast<long>(std::floor((pos.x_m - raster_x0_) / env_.grid_pitch_m));
  const auto iy = static_cast<long>(std::floor((pos.y_m - raster_y0_) / env_.grid_pitch_m));
  if (ix < 0 || iy < 0 || ix >= raster_steps_ || iy >= raster_steps_) return std::nullopt;
  const long px = raster_to_pixel_[static_cast<std::size_t>(iy * raster_steps_ + ix)];
  if (px < 0) return std::nullopt;
  return static_cast<std::size_t>(px);
}

Attachment GridRadio::locate(Position pos, std::span<const double> cio_db) const {
  const auto& ids = grid_.traffic_ids();
  if (cio_db.size() != ids.size()) throw std::invalid_argument("locate: CIO vector size mismatch");
  std::vector<CellConfig> candidates;
  candidates.reserve(ids.size());
  for (std::size_t s = 0; s < ids.size(); ++s) {
    auto c = net_.cells[static_cast<std::size_t>(ids[s])];
    c.cio_db = cio_db[s];
    candidates.push_back(c);
  }
  const int cell = attach(pos, candidates, env_);
  return {cell, peak_rate_mbps(pos, cell, net_.cells, env_)};
}

Position GridRadio::sample_position(LayerRegion region, Rng& rng) const {
  const std::size_t n = region == LayerRegion::Cluster ? grid_.size() : hotspot_pixels_.size();
  if (n == 0) throw std::logic_error("sample_position: empty region");
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);
  const std::size_t k = pick(rng);
  const std::size_t px = region == LayerRegion::Cluster ? k : hotspot_pixels_[k];
  const auto c = grid_.center(px);
  const double dx = jitter(rng);
  const double dy = jitter(rng);
  return {c.x_m + dx * grid_.pitch_m(), c.y_m + dy * grid_.pitch_m()};
}

double GridRadio::region_area_m2(LayerRegion region) const {
  const std::size_t n = region == LayerRegion::Cluster ? grid_.size() : hotspot_pixels_.size();
  return static_cast<double>(n) * grid_.pixel_area_m2();
}

bool GridRadio::in_hotspot(Position pos) const {
  const auto px = pixel_at(pos);
  return px.has_value() && grid_.hotspot(*px);
}

AttachmentMap GridRadio::map(std::span<const double> cio_db,
                             std::span<const SpatialLayer> layers) const {
  return grid_.attach_all(cio_db, layers);
}

// ---------------------------------------------------------------------------
// FixedRateRadio

FixedRateRadio::FixedRateRadio(double peak_rate_mbps, double side_m, double pitch_m)
    : rate_(peak_rate_mbps), side_m_(side_m), pitch_m_(pitch_m) {
  if (!(rate_ > 0.0)) throw std::invalid_argument("fixed peak rate must be > 0");
  if (!(side_m_ > 0.0) || !(pitch_m_ > 0.0)) throw std::invalid_argument("bad fixed-rate area");
}

Attachment FixedRateRadio::locate(Position, std::span<const double>) const { return {0, rate_}; }

Position FixedRateRadio::sample_position(LayerRegion, Rng& rng) const {
  std::uniform_real_distribution<double> u(0.0, side_m_);
  const double x = u(rng);
  return {x, u(rng)};
}

AttachmentMap FixedRateRadio::map(std::span<const double>,
                                  std::span<const SpatialLayer> layers) const {
  AttachmentMap m;
  const auto n = static_cast<long>(std::round(side_m_ / pitch_m_));
  const double pitch = side_m_ / static_cast<double>(n);
  m.pixel_area_m2 = pitch * pitch;
  for (long iy = 0; iy < n; ++iy)
    for (long ix = 0; ix < n; ++ix)
      m.pixels.push_back({{(static_cast<double>(ix) + 0.5) * pitch,
                           (static_cast<double>(iy) + 0.5) * pitch},
                          0, rate_, true});
  for (const auto& layer : layers) {
    const double spread =
        layer.spread_area_m2 > 0.0 ? layer.spread_area_m2 : side_m_ * side_m_;
    m.layer_density.emplace_back(m.pixels.size(), layer.arrivals_per_s / spread);
  }
  return m;
}

// ---------------------------------------------------------------------------

std::vector<Flow> spawn_arrivals(const TrafficLayer& layer, double now_s, double slot_duration_s,
                                 const RadioAccess& radio, std::span<const double> cio_db, Rng& rng,
                                 std::uint64_t& next_flow_id) {
  if (!(slot_duration_s > 0.0)) throw std::invalid_argument("slot duration must be > 0");
  std::vector<Flow> out;
  double rate = layer.spatial.arrivals_per_s;
  if (layer.spatial.spread_area_m2 > 0.0)
    rate *= std::min(1.0, radio.region_area_m2(layer.spatial.region) / layer.spatial.spread_area_m2);
  if (!(rate > 0.0)) return out;

  std::poisson_distribution<int> count(rate * slot_duration_s);
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    Flow f;
    f.id = next_flow_id++;
    f.kind = layer.kind;
    f.position = radio.sample_position(layer.spatial.region, rng);
    f.arrival_time_s = now_s;
    const auto a = radio.locate(f.position, cio_db);
    f.serving_cell = a.cell;
    f.peak_rate_mbps = a.peak_rate_mbps;
    if (layer.kind == FlowKind::Elastic) {
      std::exponential_distribution<double> size(1.0 / layer.file_size_mean_mbit);
      f.volume_mbit = size(rng);
      f.remaining_mbit = f.volume_mbit;
    } else {
      std::exponential_distribution<double> hold(1.0 / layer.gbr_mean_holding_s);
      f.guaranteed_rate_mbps = std::min(layer.gbr_rate_mbps, f.peak_rate_mbps);
      f.departure_time_s = now_s + hold(rng);
    }
    out.push_back(f);
  }
  return out;
}

Allocation allocate_rates(const CellState& cell) {
  Allocation a;
  a.rates_mbps.assign(cell.flows.size(), 0.0);
  const double c_bh = cell.backhaul_mbps;

  double radio_left = 1.0;
  double bh_left = c_bh;
  double gbr_fraction = 0.0;
  std::size_t n_elastic = 0;
  for (std::size_t i = 0; i < cell.flows.size(); ++i) {
    const auto& f = cell.flows[i];
    if (f.kind != FlowKind::Gbr) {
      ++n_elastic;
      continue;
    }
    const double g = std::max(
        0.0, std::min({f.guaranteed_rate_mbps, radio_left * f.peak_rate_mbps, bh_left}));
    a.rates_mbps[i] = g;
    a.gbr_rate_mbps += g;
    const double frac = g / f.peak_rate_mbps;
    radio_left = std::max(0.0, radio_left - frac);
    bh_left = std::max(0.0, bh_left - g);
    gbr_fraction += frac;
  }

  double used = gbr_fraction;
  if (n_elastic > 0 && radio_left > 0.0 && bh_left > 0.0) {
    const double share = 1.0 / static_cast<double>(n_elastic);
    for (std::size_t i = 0; i < cell.flows.size(); ++i) {
      const auto& f = cell.flows[i];
      if (f.kind != FlowKind::Elastic) continue;
      const double r = std::min(radio_left * f.peak_rate_mbps, bh_left) * share;
      a.rates_mbps[i] = r;
      used += r / f.peak_rate_mbps;
    }
  }
  a.total_rate_mbps = std::accumulate(a.rates_mbps.begin(), a.rates_mbps.end(), 0.0);

  auto& o = a.observation;
  o.used_resource_fraction = std::min(1.0, used);
  o.elastic_active_count = static_cast<int>(n_elastic);
  o.gbr_resource_fraction = std::min(1.0, gbr_fraction);
  o.backhaul_occupancy = std::isinf(c_bh) ? 0.0 : std::min(1.0, a.total_rate_mbps / c_bh);
  return a;
}

double percentile_nearest_rank(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of empty sample");
  if (!(p > 0.0 && p <= 100.0)) throw std::invalid_argument("percentile must be in (0, 100]");
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
  return values[std::max<std::size_t>(rank, 1) - 1];
}

KpiRecord collect_kpis(std::span<const CompletedFlow> flows) {
  constexpr double kCellEdgePercentile = 5.0;
  KpiRecord k;
  k.completed = flows.size();
  if (flows.empty()) return k;

  std::vector<double> tput;
  std::map<int, std::vector<double>> tput_by_cell;
  std::map<int, std::pair<double, std::size_t>> ftt;
  for (const auto& f : flows) {
    tput.push_back(f.throughput_mbps());
    tput_by_cell[f.cell].push_back(f.throughput_mbps());
    auto& acc = ftt[f.cell];
    acc.first += f.ftt_s();
    ++acc.second;
  }
  k.mut_mbps = std::accumulate(tput.begin(), tput.end(), 0.0) / static_cast<double>(tput.size());
  k.cet_mbps = percentile_nearest_rank(tput, kCellEdgePercentile);
  for (const auto& [cell, acc] : ftt) k.mean_ftt_s[cell] = acc.first / static_cast<double>(acc.second);
  for (const auto& [cell, v] : tput_by_cell) {
    k.mut_by_cell_mbps[cell] = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    k.cet_by_cell_mbps[cell] = percentile_nearest_rank(v, kCellEdgePercentile);
  }
  return k;
}

// ---------------------------------------------------------------------------
// World

World::World(std::shared_ptr<const RadioAccess> radio, std::map<int, double> backhaul_mbps,
             std::vector<TrafficLayer> layers, double slot_duration_s, std::uint64_t seed)
    : radio_(std::move(radio)), layers_(std::move(layers)), slot_s_(slot_duration_s), rng_(seed) {
  if (!radio_) throw std::invalid_argument("world needs a radio model");
  if (!(slot_s_ > 0.0)) throw std::invalid_argument("slot duration must be > 0");
  for (int id : radio_->traffic_ids()) {
    CellState c;
    c.id = id;
    if (const auto it = backhaul_mbps.find(id); it != backhaul_mbps.end()) c.backhaul_mbps = it->second;
    if (!(c.backhaul_mbps > 0.0))
      throw std::invalid_argument(fmt::format("cell {}: backhaul capacity must be > 0", id));
    cells_.push_back(std::move(c));
  }
  cio_.assign(cells_.size(), 0.0);
}

std::size_t World::slot_of(int id) const {
  const auto& ids = radio_->traffic_ids();
  const auto it = std::lower_bound(ids.begin(), ids.end(), id);
  if (it == ids.end() || *it != id) throw std::out_of_range(fmt::format("unknown cell {}", id));
  return static_cast<std::size_t>(it - ids.begin());
}

const CellState& World::cell(int id) const { return cells_[slot_of(id)]; }
CellState& World::mutable_cell(int id) { return cells_[slot_of(id)]; }

double World::cio_db(int cell) const { return cio_[slot_of(cell)]; }
void World::set_cio_db(int cell, double value) { cio_[slot_of(cell)] = value; }

void World::step() {
  for (const auto& layer : layers_) {
    for (auto& f : spawn_arrivals(layer, now_s_, slot_s_, *radio_, cio_, rng_, next_flow_id_))
      mutable_cell(f.serving_cell).flows.push_back(f);
  }

  const double end_s = now_s_ + slot_s_;
  for (auto& c : cells_) {
    const auto alloc = allocate_rates(c);
    for (std::size_t i = 0; i < c.flows.size(); ++i) {
      auto& f = c.flows[i];
      if (f.kind != FlowKind::Elastic) continue;
      const double r = alloc.rates_mbps[i];
      if (r <= 0.0) continue;
      const double served = r * slot_s_;
      f.service_integral_mbit += served;
      if (served >= f.remaining_mbit) {
        completed_.push_back({f.id, c.id, f.arrival_time_s, now_s_ + f.remaining_mbit / r,
                              f.volume_mbit, f.service_integral_mbit});
        f.remaining_mbit = 0.0;
      } else {
        f.remaining_mbit -= served;
      }
    }
    std::erase_if(c.flows, [end_s](const Flow& f) {
      if (f.kind == FlowKind::Elastic) return f.remaining_mbit <= 0.0;
      return f.departure_time_s <= end_s;
    });
    c.pending.push_back(alloc.observation);
    c.pending_gbr_mbit += alloc.gbr_rate_mbps * slot_s_;
  }
  ++slot_;
  now_s_ = static_cast<double>(slot_) * slot_s_;
}

void World::run_for(double seconds) {
  const auto n = static_cast<std::uint64_t>(std::llround(seconds / slot_s_));
  for (std::uint64_t i = 0; i < n; ++i) step();
}

World::CellWindow World::take_window(int cell) {
  auto& c = mutable_cell(cell);
  CellWindow w;
  w.window.slot_duration_s = slot_s_;
  w.window.slots = std::move(c.pending);
  c.pending.clear();
  const double span = w.window.duration_s();
  w.mean_gbr_rate_mbps = span > 0.0 ? c.pending_gbr_mbit / span : 0.0;
  c.pending_gbr_mbit = 0.0;
  return w;
}

std::vector<CompletedFlow> World::take_completed() {
  std::vector<CompletedFlow> out;
  out.swap(completed_);
  return out;
}

}  // namespace bhlb
