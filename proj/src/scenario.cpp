#include "bhlb/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

namespace bhlb {

namespace {

class Reader {
 public:
  explicit Reader(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& msg) const {
    const auto mark = node.Mark();
    if (mark.line >= 0) throw ConfigError(fmt::format("{}:{}: {}", origin_, mark.line + 1, msg));
    throw ConfigError(fmt::format("{}: {}", origin_, msg));
  }

  void expect_map(const YAML::Node& node, const std::string& what) const {
    if (!node.IsMap()) fail(node, fmt::format("'{}' must be a mapping", what));
  }

  void only_keys(const YAML::Node& node, std::initializer_list<const char*> keys) const {
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.contains(key)) fail(kv.first, fmt::format("unknown key '{}'", key));
    }
  }

  double number(const YAML::Node& node, const std::string& key) const {
    const auto scalar = node.Scalar();
    if (scalar == "inf" || scalar == "unlimited" || scalar == ".inf")
      return std::numeric_limits<double>::infinity();
    try {
      return node.as<double>();
    } catch (const YAML::Exception&) {
      fail(node, fmt::format("'{}' must be a number, got '{}'", key, scalar));
    }
  }

  void read(const YAML::Node& parent, const char* key, double& out) const {
    if (const auto n = parent[key]) out = number(n, key);
  }
  void read(const YAML::Node& parent, const char* key, bool& out) const {
    if (const auto n = parent[key]) {
      try {
        out = n.as<bool>();
      } catch (const YAML::Exception&) {
        fail(n, fmt::format("'{}' must be true or false", key));
      }
    }
  }
  void read(const YAML::Node& parent, const char* key, std::string& out) const {
    if (const auto n = parent[key]) {
      if (!n.IsScalar()) fail(n, fmt::format("'{}' must be a string", key));
      out = n.Scalar();
    }
  }
  void read(const YAML::Node& parent, const char* key, std::uint64_t& out) const {
    if (const auto n = parent[key]) {
      try {
        out = n.as<std::uint64_t>();
      } catch (const YAML::Exception&) {
        fail(n, fmt::format("'{}' must be a non-negative integer", key));
      }
    }
  }

  template <typename Check>
  void check(const YAML::Node& parent, const char* key, double value, Check&& ok,
             const char* requirement) const {
    if (!ok(value)) {
      const auto n = parent[key];
      fail(n ? n : parent, fmt::format("'{}' {}", key, requirement));
    }
  }

 private:
  std::string origin_;
};

const auto positive = [](double v) { return v > 0.0; };
const auto finite = [](double v) { return std::isfinite(v); };
const auto non_negative = [](double v) { return v >= 0.0; };

void parse_environment(const Reader& r, const YAML::Node& n, RadioEnvironment& env) {
  r.expect_map(n, "environment");
  r.only_keys(n, {"bandwidth_mhz", "noise_density_dbm_hz", "spectral_efficiency_cap",
                  "bandwidth_efficiency", "min_coupling_distance_m", "grid_pitch_m"});
  r.read(n, "bandwidth_mhz", env.bandwidth_mhz);
  r.read(n, "noise_density_dbm_hz", env.noise_density_dbm_hz);
  r.read(n, "spectral_efficiency_cap", env.spectral_efficiency_cap);
  r.read(n, "bandwidth_efficiency", env.bandwidth_efficiency);
  r.read(n, "min_coupling_distance_m", env.min_coupling_distance_m);
  r.read(n, "grid_pitch_m", env.grid_pitch_m);
  r.check(n, "bandwidth_mhz", env.bandwidth_mhz, [](double v) { return v > 0.0 && std::isfinite(v); },
          "must be > 0");
  r.check(n, "noise_density_dbm_hz", env.noise_density_dbm_hz, finite, "must be finite");
  r.check(n, "spectral_efficiency_cap", env.spectral_efficiency_cap,
          [](double v) { return v > 0.0 && std::isfinite(v); }, "must be > 0");
  r.check(n, "bandwidth_efficiency", env.bandwidth_efficiency,
          [](double v) { return v > 0.0 && v <= 1.0; }, "must be in (0, 1]");
  r.check(n, "min_coupling_distance_m", env.min_coupling_distance_m,
          [](double v) { return v > 0.0 && std::isfinite(v); }, "must be > 0");
  r.check(n, "grid_pitch_m", env.grid_pitch_m, [](double v) { return v > 0.0 && std::isfinite(v); },
          "must be > 0");
}

void parse_layout(const Reader& r, const YAML::Node& n, ScenarioConfig& cfg) {
  r.expect_map(n, "layout");
  std::string type = "trisector";
  r.read(n, "type", type);
  if (type == "trisector") {
    cfg.layout = LayoutType::Trisector;
    r.only_keys(n, {"type", "intersite_distance_m", "macro_tx_power_dbm", "macro_backhaul_mbps",
                    "studied_azimuth_deg", "interfering_ring", "small_cells"});
    auto& t = cfg.trisector;
    r.read(n, "intersite_distance_m", t.intersite_distance_m);
    r.read(n, "macro_tx_power_dbm", t.macro_tx_power_dbm);
    r.read(n, "macro_backhaul_mbps", t.macro_backhaul_mbps);
    r.read(n, "studied_azimuth_deg", t.studied_azimuth_deg);
    r.read(n, "interfering_ring", t.interfering_ring);
    r.check(n, "intersite_distance_m", t.intersite_distance_m,
            [](double v) { return v > 0.0 && std::isfinite(v); }, "must be > 0");
    r.check(n, "macro_tx_power_dbm", t.macro_tx_power_dbm, finite, "must be finite");
    r.check(n, "macro_backhaul_mbps", t.macro_backhaul_mbps, positive, "must be > 0 or inf");
    t.small_cells.clear();
    if (const auto list = n["small_cells"]) {
      if (!list.IsSequence()) r.fail(list, "'small_cells' must be a list");
      for (const auto& sc : list) {
        r.expect_map(sc, "small_cells entry");
        r.only_keys(sc, {"distance_m", "bearing_deg", "tx_power_dbm", "backhaul_mbps"});
        SmallCellPlacement p;
        r.read(sc, "distance_m", p.distance_m);
        r.read(sc, "bearing_deg", p.bearing_deg);
        r.read(sc, "tx_power_dbm", p.tx_power_dbm);
        r.read(sc, "backhaul_mbps", p.backhaul_mbps);
        r.check(sc, "distance_m", p.distance_m, [](double v) { return v >= 0.0 && std::isfinite(v); },
                "must be >= 0");
        r.check(sc, "tx_power_dbm", p.tx_power_dbm, finite, "must be finite");
        r.check(sc, "backhaul_mbps", p.backhaul_mbps, positive, "must be > 0 or inf");
        t.small_cells.push_back(p);
      }
    }
  } else if (type == "fixed_rate") {
    cfg.layout = LayoutType::FixedRate;
    r.only_keys(n, {"type", "peak_rate_mbps", "side_m", "backhaul_mbps"});
    r.read(n, "peak_rate_mbps", cfg.fixed.peak_rate_mbps);
    r.read(n, "side_m", cfg.fixed.side_m);
    r.read(n, "backhaul_mbps", cfg.fixed.backhaul_mbps);
    r.check(n, "peak_rate_mbps", cfg.fixed.peak_rate_mbps,
            [](double v) { return v > 0.0 && std::isfinite(v); }, "must be > 0");
    r.check(n, "side_m", cfg.fixed.side_m, [](double v) { return v > 0.0 && std::isfinite(v); },
            "must be > 0");
    r.check(n, "backhaul_mbps", cfg.fixed.backhaul_mbps, positive, "must be > 0 or inf");
  } else {
    r.fail(n["type"], fmt::format("unknown layout type '{}' (expected trisector|fixed_rate)", type));
  }
}

void parse_traffic(const Reader& r, const YAML::Node& n, ScenarioConfig& cfg) {
  if (!n.IsSequence()) r.fail(n, "'traffic' must be a list of layers");
  cfg.traffic.clear();
  for (const auto& item : n) {
    r.expect_map(item, "traffic entry");
    r.only_keys(item, {"name", "kind", "region", "spread", "arrival_rate", "file_size_mbit",
                       "gbr_rate_mbps", "gbr_holding_s"});
    LayerConfig l;
    l.name = fmt::format("layer{}", cfg.traffic.size());
    r.read(item, "name", l.name);
    std::string kind = "elastic", region = "cluster", spread = "region";
    r.read(item, "kind", kind);
    r.read(item, "region", region);
    r.read(item, "spread", spread);
    if (kind == "elastic")
      l.kind = FlowKind::Elastic;
    else if (kind == "gbr")
      l.kind = FlowKind::Gbr;
    else
      r.fail(item["kind"], fmt::format("unknown traffic kind '{}' (expected elastic|gbr)", kind));
    if (region == "cluster")
      l.region = LayerRegion::Cluster;
    else if (region == "hotspot")
      l.region = LayerRegion::Hotspot;
    else
      r.fail(item["region"], fmt::format("unknown region '{}' (expected cluster|hotspot)", region));
    if (spread == "region")
      l.spread = LayerSpread::Region;
    else if (spread == "site")
      l.spread = LayerSpread::Site;
    else
      r.fail(item["spread"], fmt::format("unknown spread '{}' (expected region|site)", spread));
    r.read(item, "arrival_rate", l.arrival_rate);
    r.read(item, "file_size_mbit", l.file_size_mbit);
    r.read(item, "gbr_rate_mbps", l.gbr_rate_mbps);
    r.read(item, "gbr_holding_s", l.gbr_holding_s);
    r.check(item, "arrival_rate", l.arrival_rate,
            [](double v) { return v >= 0.0 && std::isfinite(v); }, "must be >= 0");
    if (l.kind == FlowKind::Elastic) {
      r.check(item, "file_size_mbit", l.file_size_mbit,
              [](double v) { return v > 0.0 && std::isfinite(v); }, "must be > 0");
    } else {
      r.check(item, "gbr_rate_mbps", l.gbr_rate_mbps,
              [](double v) { return v > 0.0 && std::isfinite(v); }, "must be > 0 for gbr layers");
      r.check(item, "gbr_holding_s", l.gbr_holding_s,
              [](double v) { return v > 0.0 && std::isfinite(v); }, "must be > 0 for gbr layers");
    }
    cfg.traffic.push_back(l);
  }
}

void parse_son(const Reader& r, const YAML::Node& n, ScenarioConfig& cfg) {
  r.expect_map(n, "son");
  r.only_keys(n, {"enabled", "variant", "step_db", "update_period_s", "cio_min_db", "cio_max_db",
                  "reference"});
  r.read(n, "enabled", cfg.son_enabled);
  auto& s = cfg.son;
  std::string variant = to_string(s.variant), reference = to_string(s.reference_rule);
  r.read(n, "variant", variant);
  r.read(n, "reference", reference);
  try {
    s.variant = parse_son_variant(variant);
  } catch (const SonConfigError& e) {
    r.fail(n["variant"], e.what());
  }
  try {
    s.reference_rule = parse_reference_rule(reference);
  } catch (const SonConfigError& e) {
    r.fail(n["reference"], e.what());
  }
  r.read(n, "step_db", s.step_db);
  r.read(n, "update_period_s", s.update_period_s);
  r.read(n, "cio_min_db", s.cio_min_db);
  r.read(n, "cio_max_db", s.cio_max_db);
  r.check(n, "step_db", s.step_db, [](double v) { return v > 0.0 && std::isfinite(v); }, "must be > 0");
  r.check(n, "update_period_s", s.update_period_s,
          [](double v) { return v > 0.0 && std::isfinite(v); }, "must be > 0");
  r.check(n, "cio_min_db", s.cio_min_db, finite, "must be finite");
  r.check(n, "cio_max_db", s.cio_max_db, [&](double v) { return std::isfinite(v) && v >= s.cio_min_db; },
          "must be finite and >= cio_min_db");
}

void parse_run(const Reader& r, const YAML::Node& n, RunControl& run) {
  r.expect_map(n, "run");
  r.only_keys(n, {"duration_s", "slot_s", "seed", "out_dir"});
  r.read(n, "duration_s", run.duration_s);
  r.read(n, "slot_s", run.slot_s);
  r.read(n, "seed", run.seed);
  r.read(n, "out_dir", run.out_dir);
  r.check(n, "duration_s", run.duration_s, [](double v) { return v > 0.0 && std::isfinite(v); },
          "must be > 0");
  r.check(n, "slot_s", run.slot_s, [](double v) { return v > 0.0 && std::isfinite(v); }, "must be > 0");
}

std::string number_text(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

}  // namespace

void ScenarioConfig::validate() const {
  try {
    env.validate();
    son.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (!(run.slot_s > 0.0) || !(run.duration_s > 0.0))
    throw ConfigError("run duration and slot must be > 0");
  if (run.slot_s > son.update_period_s) throw ConfigError("slot_s must not exceed the SON period");
  if (son_enabled && run.duration_s + 1e-9 < son.update_period_s)
    throw ConfigError("duration_s must cover at least one SON update period");
  if (traffic.empty()) throw ConfigError("at least one traffic layer is required");
  if (layout == LayoutType::Trisector && trisector.small_cells.empty() &&
      std::any_of(traffic.begin(), traffic.end(),
                  [](const LayerConfig& l) { return l.region == LayerRegion::Hotspot; }))
    throw ConfigError("hotspot traffic needs at least one small cell");
  if (layout == LayoutType::FixedRate &&
      std::any_of(traffic.begin(), traffic.end(),
                  [](const LayerConfig& l) { return l.spread == LayerSpread::Site; }))
    throw ConfigError("site spread is only meaningful for trisector layouts");
}

std::string ScenarioConfig::canonical() const {
  std::ostringstream o;
  o << "name=" << name << '\n';
  o << fmt::format("env={},{},{},{},{},{}\n", number_text(env.bandwidth_mhz),
                   number_text(env.noise_density_dbm_hz), number_text(env.spectral_efficiency_cap),
                   number_text(env.bandwidth_efficiency), number_text(env.min_coupling_distance_m),
                   number_text(env.grid_pitch_m));
  if (layout == LayoutType::Trisector) {
    const auto& t = trisector;
    o << fmt::format("trisector={},{},{},{},{}\n", number_text(t.intersite_distance_m),
                     number_text(t.macro_tx_power_dbm), number_text(t.macro_backhaul_mbps),
                     number_text(t.studied_azimuth_deg), t.interfering_ring);
    for (const auto& sc : t.small_cells)
      o << fmt::format("small={},{},{},{}\n", number_text(sc.distance_m), number_text(sc.bearing_deg),
                       number_text(sc.tx_power_dbm), number_text(sc.backhaul_mbps));
  } else {
    o << fmt::format("fixed={},{},{}\n", number_text(fixed.peak_rate_mbps), number_text(fixed.side_m),
                     number_text(fixed.backhaul_mbps));
  }
  for (const auto& l : traffic)
    o << fmt::format("layer={},{},{},{},{},{},{},{}\n", l.name, static_cast<int>(l.kind),
                     to_string(l.region), static_cast<int>(l.spread), number_text(l.arrival_rate),
                     number_text(l.file_size_mbit), number_text(l.gbr_rate_mbps),
                     number_text(l.gbr_holding_s));
  o << fmt::format("son={},{},{},{},{},{},{}\n", son_enabled, to_string(son.variant),
                   number_text(son.step_db), number_text(son.update_period_s),
                   number_text(son.cio_min_db), number_text(son.cio_max_db),
                   to_string(son.reference_rule));
  o << fmt::format("run={},{},{}\n", number_text(run.duration_s), number_text(run.slot_s), run.seed);
  return o.str();
}

ScenarioConfig parse_scenario(const std::string& text, const std::string& origin) {
  const Reader r(origin);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(fmt::format("{}:{}: {}", origin, e.mark.line + 1, e.msg));
  }
  if (!root.IsMap()) throw ConfigError(fmt::format("{}: top level must be a mapping", origin));
  r.only_keys(root, {"name", "environment", "layout", "traffic", "son", "run"});

  ScenarioConfig cfg;
  r.read(root, "name", cfg.name);
  if (const auto n = root["environment"]) parse_environment(r, n, cfg.env);
  if (const auto n = root["layout"]) parse_layout(r, n, cfg);
  if (const auto n = root["traffic"])
    parse_traffic(r, n, cfg);
  else
    throw ConfigError(fmt::format("{}: missing 'traffic' section", origin));
  if (const auto n = root["son"]) parse_son(r, n, cfg);
  if (const auto n = root["run"]) parse_run(r, n, cfg.run);
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", origin, e.what()));
  }
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

BuiltScenario build_scenario(const ScenarioConfig& config) {
  config.validate();
  BuiltScenario b;
  double site_area = 0.0;
  if (config.layout == LayoutType::Trisector) {
    auto net = make_trisector_network(config.trisector);
    std::shared_ptr<const GridRadio> radio;
    try {
      radio = std::make_shared<const GridRadio>(net, config.env);
    } catch (const CoverageHoleError& e) {
      throw ConfigError(fmt::format("layout has a coverage hole: {}", e.what()));
    }
    site_area = static_cast<double>(radio->grid().site_pixel_count()) * radio->grid().pixel_area_m2();
    b.traffic_cells = radio->network().traffic_cells();
    b.radio = radio;
  } else {
    b.radio = std::make_shared<const FixedRateRadio>(config.fixed.peak_rate_mbps, config.fixed.side_m,
                                                     config.env.grid_pitch_m);
    b.traffic_cells.push_back({0, CellKind::Small, {config.fixed.side_m / 2, config.fixed.side_m / 2},
                               0.0, 0.0, 0.0, config.fixed.backhaul_mbps, true});
  }
  for (const auto& c : b.traffic_cells) b.backhaul_mbps[c.id] = c.backhaul_mbps;
  for (const auto& l : config.traffic) {
    TrafficLayer t;
    t.kind = l.kind;
    t.spatial.arrivals_per_s = l.arrival_rate;
    t.spatial.region = l.region;
    t.spatial.spread_area_m2 = l.spread == LayerSpread::Site ? site_area : 0.0;
    t.file_size_mean_mbit = l.file_size_mbit;
    t.gbr_rate_mbps = l.gbr_rate_mbps;
    t.gbr_mean_holding_s = l.gbr_holding_s;
    b.layers.push_back(t);
  }
  return b;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  std::string out;
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

}  // namespace bhlb
