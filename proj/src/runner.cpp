#include "bhlb/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "bhlb/loadcalc.hpp"
#include "bhlb/son.hpp"

namespace bhlb {

namespace {

std::string num(double v) { return fmt::format("{:.6f}", v); }
std::string opt(const std::optional<double>& v) { return v ? num(*v) : kNullToken; }

nlohmann::json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

double mean_of(const MeasurementWindow& w, double SlotObservation::*field) {
  if (w.slots.empty()) return 0.0;
  double s = 0.0;
  for (const auto& o : w.slots) s += o.*field;
  return s / static_cast<double>(w.slots.size());
}

double mean_active(const MeasurementWindow& w) {
  if (w.slots.empty()) return 0.0;
  double s = 0.0;
  for (const auto& o : w.slots) s += o.elastic_active_count;
  return s / static_cast<double>(w.slots.size());
}

}  // namespace

// ---------------------------------------------------------------------------

RunOutput run_scenario(const ScenarioConfig& config, const ProgressFn& progress) {
  const auto built = build_scenario(config);
  World world(built.radio, built.backhaul_mbps, built.layers, config.run.slot_s, config.run.seed);

  SonState son;
  if (config.son_enabled) {
    son = initial_son_state(built.traffic_cells, config.son);
    for (const auto& c : son.cells) world.set_cio_db(c.cell, c.cio_db);
  }

  // Analytic loads use elastic demand density (Mbit/s/m^2), so file sizes may differ per layer.
  std::vector<SpatialLayer> elastic_layers;
  std::vector<double> elastic_file_mbit;
  for (const auto& l : built.layers) {
    if (l.kind != FlowKind::Elastic) continue;
    elastic_layers.push_back(l.spatial);
    elastic_file_mbit.push_back(l.file_size_mean_mbit);
  }

  const double period = config.son.update_period_s;
  const auto slots_per_window = static_cast<std::uint64_t>(std::llround(period / config.run.slot_s));
  const auto total_slots = static_cast<std::uint64_t>(std::llround(config.run.duration_s / config.run.slot_s));
  const auto n_windows = static_cast<int>((total_slots + slots_per_window - 1) / slots_per_window);

  RunOutput out;
  out.config = config;
  out.seed = config.run.seed;
  out.traffic_ids = built.radio->traffic_ids();

  std::uint64_t done = 0;
  for (int w = 0; w < n_windows; ++w) {
    const std::uint64_t len = std::min(slots_per_window, total_slots - done);
    for (std::uint64_t i = 0; i < len; ++i) world.step();
    done += len;

    const auto cio = world.cio_db();
    const auto map = built.radio->map(cio, elastic_layers);
    auto analytic = AnalyticScenario::from_map(map, 1.0);
    for (std::size_t px = 0; px < map.pixels.size(); ++px) {
      double d = 0.0;
      for (std::size_t l = 0; l < elastic_layers.size(); ++l)
        d += map.layer_density[l][px] * elastic_file_mbit[l];
      analytic.elastic_density[px] = d;
    }

    const auto completed = world.take_completed();
    const auto kpi = collect_kpis(completed);
    out.cluster.push_back({w, world.now_s(), kpi.completed, kpi.mut_mbps, kpi.cet_mbps,
                           completed.empty()
                               ? std::optional<double>{}
                               : std::optional<double>{std::accumulate(
                                     completed.begin(), completed.end(), 0.0,
                                     [](double a, const CompletedFlow& f) { return a + f.ftt_s(); }) /
                                                       static_cast<double>(completed.size())}});

    std::map<int, double> reports;
    for (const auto& tc : built.traffic_cells) {
      const auto cw = world.take_window(tc.id);
      WindowRow row;
      row.window = w;
      row.time_s = world.now_s();
      row.cell = tc.id;
      row.kind = tc.kind;
      row.cio_db = world.cio_db(tc.id);
      row.scheduler_load = scheduler_load(cw.window);
      row.busy_load = busy_load(cw.window);
      row.global_load = global_load(cw.window);
      row.backhaul_occupancy = mean_of(cw.window, &SlotObservation::backhaul_occupancy);
      row.mean_active_flows = mean_active(cw.window);

      auto& p = analytic.cells[tc.id];
      p.backhaul_mbps = tc.backhaul_mbps;
      p.gbr_radio_fraction = mean_of(cw.window, &SlotObservation::gbr_resource_fraction);
      p.gbr_demand_mbps = cw.mean_gbr_rate_mbps;
      if (map.pixel_count(tc.id) > 0) {
        row.analytic_local = analytic_load_gbr(analytic, tc.id);
        row.analytic_global = analytic_global_gbr(analytic, tc.id);
      }

      std::vector<CompletedFlow> mine;
      std::copy_if(completed.begin(), completed.end(), std::back_inserter(mine),
                   [&](const CompletedFlow& f) { return f.cell == tc.id; });
      row.completed = mine.size();
      if (!mine.empty()) {
        const auto k = collect_kpis(mine);
        row.mean_ftt_s = k.mean_ftt_s.at(tc.id);
        row.mut_mbps = k.mut_mbps;
        row.cet_mbps = k.cet_mbps;
      }
      reports[tc.id] = config.son_enabled ? reported_load(cw.window, config.son.variant) : 0.0;
      out.windows.push_back(row);
    }

    if (config.son_enabled && len == slots_per_window) {
      if (config.son.reference_rule == ReferenceRule::MostLoaded)
        refresh_references(son, built.traffic_cells, reports, ReferenceRule::MostLoaded);
      son = son_update(son, reports, config.son);
      for (const auto& c : son.cells) world.set_cio_db(c.cell, c.cio_db);
    }
    out.flows.insert(out.flows.end(), completed.begin(), completed.end());
    if (progress) progress(w + 1, n_windows);
  }
  out.final_cio_db = world.cio_db();
  return out;
}

// ---------------------------------------------------------------------------
// Emission

std::vector<WindowRow> RunOutput::cell_rows(int cell) const {
  std::vector<WindowRow> rows;
  std::copy_if(windows.begin(), windows.end(), std::back_inserter(rows),
               [cell](const WindowRow& r) { return r.cell == cell; });
  return rows;
}

int RunOutput::window_count() const { return static_cast<int>(cluster.size()); }

std::string RunOutput::windows_csv() const {
  std::ostringstream o;
  o << "window,time_s,cell_id,cell_kind,cio_db,scheduler_load,busy_load,global_load,"
       "analytic_local,analytic_global,completed,mean_ftt_s,mut_mbps,cet_mbps,"
       "backhaul_occupancy,mean_active_flows\n";
  for (const auto& r : windows)
    o << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.window, num(r.time_s),
                     r.cell, to_string(r.kind), num(r.cio_db), num(r.scheduler_load),
                     num(r.busy_load), num(r.global_load), opt(r.analytic_local),
                     opt(r.analytic_global), r.completed, opt(r.mean_ftt_s), opt(r.mut_mbps),
                     opt(r.cet_mbps), num(r.backhaul_occupancy), num(r.mean_active_flows));
  return o.str();
}

std::string RunOutput::cluster_csv() const {
  std::ostringstream o;
  o << "window,time_s,completed,mut_mbps,cet_mbps,mean_ftt_s\n";
  for (const auto& r : cluster)
    o << fmt::format("{},{},{},{},{},{}\n", r.window, num(r.time_s), r.completed, opt(r.mut_mbps),
                     opt(r.cet_mbps), opt(r.mean_ftt_s));
  return o.str();
}

std::string RunOutput::flows_csv() const {
  std::ostringstream o;
  o << "flow_id,cell_id,arrival_s,completion_s,volume_mbit,ftt_s,throughput_mbps\n";
  for (const auto& f : flows)
    o << fmt::format("{},{},{},{},{},{},{}\n", f.id, f.cell, num(f.arrival_s), num(f.completion_s),
                     num(f.volume_mbit), num(f.ftt_s()), num(f.throughput_mbps()));
  return o.str();
}

std::string RunOutput::summary_json() const {
  using nlohmann::json;
  json j;
  j["scenario"] = config.name;
  j["variant"] = config.son_enabled ? to_string(config.son.variant) : "off";
  j["seed"] = seed;
  j["windows"] = window_count();
  j["final_cio_db"] = json::object();
  for (std::size_t i = 0; i < traffic_ids.size(); ++i)
    j["final_cio_db"][std::to_string(traffic_ids[i])] = final_cio_db[i];

  const int tail = std::min(10, window_count());
  json cells = json::object();
  for (int id : traffic_ids) {
    const auto rows = cell_rows(id);
    double g = 0, s = 0, b = 0, ftt = 0;
    int n_ftt = 0;
    for (std::size_t i = rows.size() - static_cast<std::size_t>(tail); i < rows.size(); ++i) {
      g += rows[i].global_load;
      s += rows[i].scheduler_load;
      b += rows[i].busy_load;
      if (rows[i].mean_ftt_s) {
        ftt += *rows[i].mean_ftt_s;
        ++n_ftt;
      }
    }
    json c;
    c["kind"] = to_string(rows.front().kind);
    c["tail_windows"] = tail;
    c["global_load"] = g / tail;
    c["scheduler_load"] = s / tail;
    c["busy_load"] = b / tail;
    c["mean_ftt_s"] = n_ftt ? json(ftt / n_ftt) : json(nullptr);
    cells[std::to_string(id)] = c;
  }
  j["tail"] = cells;
  const auto k = collect_kpis(flows);
  j["completed_flows"] = k.completed;
  j["mut_mbps"] = opt_json(k.mut_mbps);
  j["cet_mbps"] = opt_json(k.cet_mbps);
  if (!cluster.empty()) {
    j["final_window_mut_mbps"] = opt_json(cluster.back().mut_mbps);
    j["final_window_cet_mbps"] = opt_json(cluster.back().cet_mbps);
  }
  return j.dump(2) + "\n";
}

std::string RunOutput::manifest_json() const {
  nlohmann::json j;
  j["version"] = kVersion;
  j["scenario"] = config.name;
  j["config_sha256"] = sha256_hex(config.canonical());
  j["seed"] = seed;
  j["duration_s"] = config.run.duration_s;
  j["slot_s"] = config.run.slot_s;
  j["variant"] = config.son_enabled ? to_string(config.son.variant) : "off";
  j["outputs"] = {"windows.csv", "cluster.csv", "flows.csv", "summary.json"};
  return j.dump(2) + "\n";
}

void write_outputs(const RunOutput& out, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto put = [&](const char* name, const std::string& body) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error(fmt::format("cannot write {}", (dir / name).string()));
    f << body;
  };
  put("windows.csv", out.windows_csv());
  put("cluster.csv", out.cluster_csv());
  put("flows.csv", out.flows_csv());
  put("summary.json", out.summary_json());
  put("manifest.json", out.manifest_json());
}

// ---------------------------------------------------------------------------
// Sweeps

SweepParameter parse_sweep_parameter(const std::string& s) {
  if (s == "backhaul_capacity") return SweepParameter::BackhaulCapacity;
  if (s == "epsilon") return SweepParameter::Epsilon;
  if (s == "lambda") return SweepParameter::Lambda;
  throw ConfigError(fmt::format("unknown sweep parameter '{}' (expected backhaul_capacity|epsilon|lambda)", s));
}

const char* to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::BackhaulCapacity: return "backhaul_capacity";
    case SweepParameter::Epsilon: return "epsilon";
    case SweepParameter::Lambda: return "lambda";
  }
  return "?";
}

ScenarioConfig with_parameter(const ScenarioConfig& config, SweepParameter p, double value) {
  ScenarioConfig c = config;
  switch (p) {
    case SweepParameter::BackhaulCapacity:
      if (!(value > 0.0)) throw ConfigError("backhaul capacity must be > 0");
      if (c.layout == LayoutType::Trisector) {
        if (c.trisector.small_cells.empty()) throw ConfigError("layout has no small cells to sweep");
        for (auto& sc : c.trisector.small_cells) sc.backhaul_mbps = value;
      } else {
        c.fixed.backhaul_mbps = value;
      }
      break;
    case SweepParameter::Epsilon:
      c.son.step_db = value;
      break;
    case SweepParameter::Lambda: {
      const auto it = std::find_if(c.traffic.begin(), c.traffic.end(), [](const LayerConfig& l) {
        return l.kind == FlowKind::Elastic && l.region == LayerRegion::Cluster;
      });
      if (it == c.traffic.end()) throw ConfigError("no cluster-wide elastic layer to sweep");
      it->arrival_rate = value;
      break;
    }
  }
  c.validate();
  return c;
}

std::vector<SweepResult> sweep(const ScenarioConfig& config, SweepParameter p,
                               const std::vector<double>& values, std::uint64_t seed) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<SweepResult> results;
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto c = with_parameter(config, p, values[i]);
    c.run.seed = seed ^ static_cast<std::uint64_t>(i);
    results.push_back({values[i], run_scenario(c)});
  }
  return results;
}

std::string sweep_summary_csv(SweepParameter p, const std::vector<SweepResult>& results) {
  std::ostringstream o;
  o << to_string(p) << ",seed,cell_id,final_cio_db,tail_global_load,tail_scheduler_load,"
                       "tail_mean_ftt_s,run_mut_mbps\n";
  for (const auto& r : results) {
    const auto& out = r.output;
    const auto mut = collect_kpis(out.flows).mut_mbps;
    const int tail = std::min(10, out.window_count());
    for (std::size_t i = 0; i < out.traffic_ids.size(); ++i) {
      const auto rows = out.cell_rows(out.traffic_ids[i]);
      double g = 0, s = 0, f = 0;
      int nf = 0;
      for (std::size_t k = rows.size() - static_cast<std::size_t>(tail); k < rows.size(); ++k) {
        g += rows[k].global_load;
        s += rows[k].scheduler_load;
        if (rows[k].mean_ftt_s) {
          f += *rows[k].mean_ftt_s;
          ++nf;
        }
      }
      o << fmt::format("{},{},{},{},{},{},{},{}\n",
                       std::isinf(r.value) ? std::string("inf") : fmt::format("{}", r.value), out.seed,
                       out.traffic_ids[i], num(out.final_cio_db[i]), num(g / tail), num(s / tail),
                       nf ? num(f / nf) : std::string(kNullToken), opt(mut));
    }
  }
  return o.str();
}

// ---------------------------------------------------------------------------
// Validation suite

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const ValidationCheck& c) { return c.passed; });
}

std::string ValidationReport::text() const {
  std::ostringstream o;
  for (const auto& c : checks)
    o << fmt::format("[{}] {}: {}\n", c.passed ? "PASS" : "FAIL", c.name, c.detail);
  o << (passed() ? "validation passed\n" : "validation FAILED\n");
  return o.str();
}

namespace {

ScenarioConfig single_cell(double rate, double backhaul, double arrivals, double duration_s) {
  ScenarioConfig c;
  c.name = "validate_single_cell";
  c.layout = LayoutType::FixedRate;
  c.fixed = {rate, 100.0, backhaul};
  c.traffic = {{"elastic", FlowKind::Elastic, LayerRegion::Cluster, LayerSpread::Region, arrivals, 4.0,
                0.0, 0.0}};
  c.son_enabled = false;
  c.run.duration_s = duration_s;
  c.run.seed = 20240601;
  return c;
}

// Mean of a per-window column across the whole run.
double run_mean(const RunOutput& out, double WindowRow::*field) {
  double s = 0.0;
  for (const auto& r : out.windows) s += r.*field;
  return s / static_cast<double>(out.windows.size());
}

template <typename F>
void check(ValidationReport& rep, const std::string& name, F&& body) {
  ValidationCheck c{name, false, ""};
  try {
    c.passed = body(c.detail);
  } catch (const std::exception& e) {
    c.passed = false;
    c.detail = fmt::format("threw: {}", e.what());
  }
  rep.checks.push_back(std::move(c));
}

MeasurementWindow window_of(std::initializer_list<SlotObservation> slots) {
  MeasurementWindow w;
  w.slots = slots;
  return w;
}

}  // namespace

ValidationReport validate_suite() {
  ValidationReport rep;

  check(rep, "estimators.hand_computed", [](std::string& d) {
    const auto sched = window_of({{1.0, 1, 0, 0}, {0.0, 0, 0, 0}, {0.5, 1, 0, 0}, {0.5, 1, 0, 0}});
    MeasurementWindow busy;
    for (int i = 0; i < 60; ++i) busy.slots.push_back({0.0, i < 45 ? 1 : 0, 0.0, 0.0});
    MeasurementWindow mixed;
    for (int i = 0; i < 60; ++i)
      mixed.slots.push_back(i < 30 ? SlotObservation{1.0, 2, 0.0, 0.0} : SlotObservation{0.0, 0, 0.4, 0.1});
    const double a = scheduler_load(sched), b = busy_load(busy), g = global_load(mixed);
    d = fmt::format("scheduler={:.4f} busy={:.4f} global={:.4f}", a, b, g);
    return std::abs(a - 0.5) < 1e-12 && std::abs(b - 0.75) < 1e-12 && std::abs(g - 0.7) < 1e-12;
  });

  check(rep, "estimators.range_and_dominance", [](std::string& d) {
    Rng rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> n(0, 3);
    for (int trial = 0; trial < 200; ++trial) {
      MeasurementWindow w;
      for (int i = 0; i < 50; ++i) w.slots.push_back({u(rng), n(rng), u(rng), u(rng)});
      const double s = scheduler_load(w), b = busy_load(w), g = global_load(w);
      if (s < 0 || s > 1 || b < 0 || b > 1 || g < 0 || g > 1 || g + 1e-15 < b) {
        d = fmt::format("trial {} violated: s={} b={} g={}", trial, s, b, g);
        return false;
      }
    }
    d = "200 random windows";
    return true;
  });

  check(rep, "analytic.constant_rate_cell", [](std::string& d) {
    const FixedRateRadio radio(10.0);
    const SpatialLayer layer{1.0, LayerRegion::Cluster, 0.0};  // 1 user/s x 4 Mbit = 4 Mbps
    const auto map = radio.map(std::vector<double>{0.0}, std::span(&layer, 1));
    auto s = AnalyticScenario::from_map(map, 4.0);
    const double local = analytic_load_elastic(s, 0), glob = analytic_global_gbr(s, 0);
    s.cells[0].backhaul_mbps = 5.0;
    const double limited = analytic_global_elastic(s, 0);
    d = fmt::format("local={:.4f} global(C=inf)={:.4f} global(C=5)={:.4f}", local, glob, limited);
    return std::abs(local - 0.4) < 1e-9 && std::abs(glob - 0.4) < 1e-9 && std::abs(limited - 0.8) < 1e-9;
  });

  check(rep, "flowsim.single_cell_ps_busy_probability", [](std::string& d) {
    // R = 20 Mbps, 2.5 users/s x 4 Mbit -> offered load 0.5
    const auto out = run_scenario(single_cell(20.0, kUnlimitedBackhaul, 2.5, 3600.0));
    const double busy = run_mean(out, &WindowRow::busy_load);
    d = fmt::format("busy_load={:.4f} expected 0.5 +/- 0.03", busy);
    return std::abs(busy - 0.5) <= 0.03;
  });

  check(rep, "flowsim.backhaul_limited_busy_probability", [](std::string& d) {
    const auto out = run_scenario(single_cell(20.0, 10.0, 1.0, 3600.0));
    const double busy = run_mean(out, &WindowRow::busy_load);
    const double analytic = *out.windows.front().analytic_global;
    d = fmt::format("busy_load={:.4f} analytic_global={:.4f} expected 0.4", busy, analytic);
    return std::abs(analytic - 0.4) < 1e-9 && std::abs(busy - 0.4) <= 0.03;
  });

  check(rep, "flowsim.backhaul_starvation_signature", [](std::string& d) {
    const auto out = run_scenario(single_cell(50.0, 10.0, 2.25, 3600.0));
    const double sched = run_mean(out, &WindowRow::scheduler_load);
    const double glob = run_mean(out, &WindowRow::global_load);
    d = fmt::format("scheduler_load={:.4f} global_load={:.4f}", sched, glob);
    return sched <= 0.35 && glob >= 0.85;
  });

  check(rep, "config.zero_bandwidth_rejected", [](std::string& d) {
    try {
      parse_scenario("environment: {bandwidth_mhz: 0}\ntraffic: [{arrival_rate: 1}]\n", "<canned>");
    } catch (const ConfigError& e) {
      d = e.what();
      return true;
    }
    d = "accepted a zero bandwidth";
    return false;
  });

  check(rep, "son.two_cell_convergence", [](std::string& d) {
    const TwoCellModel m;
    SonConfig cfg;
    cfg.cio_min_db = -20.0;
    cfg.cio_max_db = 20.0;
    for (double eps : {0.5, 1.0, 2.0}) {
      cfg.step_db = eps;
      SonState s;
      s.cells.push_back({1, 0.0, 0});
      for (int i = 0; i < 500; ++i) {
        const double c = s.cells[0].cio_db;
        s = son_update(s, {{0, m.reference_load(c)}, {1, m.controlled_load(c)}}, cfg);
      }
      const double c = s.cells[0].cio_db;
      const double gap = std::abs(m.reference_load(c) - m.controlled_load(c));
      if (gap >= 1e-3) {
        d = fmt::format("eps={} left gap {}", eps, gap);
        return false;
      }
    }
    d = "eps 0.5/1/2 balanced within 1e-3";
    return true;
  });

  return rep;
}

}  // namespace bhlb
