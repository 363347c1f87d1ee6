#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "bhlb/flowsim.hpp"
#include "bhlb/geometry.hpp"
#include "bhlb/son.hpp"

namespace bhlb {

/// Raised for any malformed or inconsistent scenario. Messages carry the
/// source line when one is known.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LayoutType { Trisector, FixedRate };

struct FixedRateLayout {
  double peak_rate_mbps = 20.0;
  double side_m = 100.0;
  double backhaul_mbps = kUnlimitedBackhaul;
};

enum class LayerSpread {
  Region,  // arrivals spread over the layer's own region
  Site,    // spread over the whole anchor-site coverage; the studied area keeps its share
};

struct LayerConfig {
  std::string name;
  FlowKind kind = FlowKind::Elastic;
  LayerRegion region = LayerRegion::Cluster;
  LayerSpread spread = LayerSpread::Region;
  double arrival_rate = 0.0;  // users/s
  double file_size_mbit = 4.0;
  double gbr_rate_mbps = 0.0;
  double gbr_holding_s = 0.0;
};

struct RunControl {
  double duration_s = 1800.0;
  double slot_s = 0.01;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
};

struct ScenarioConfig {
  std::string name = "unnamed";
  RadioEnvironment env;
  LayoutType layout = LayoutType::Trisector;
  TrisectorLayout trisector;
  FixedRateLayout fixed;
  std::vector<LayerConfig> traffic;
  bool son_enabled = true;
  SonConfig son;
  RunControl run;

  /// Cross-field checks; throws ConfigError.
  void validate() const;
  /// Stable text form used for hashing and the manifest.
  std::string canonical() const;
};

ScenarioConfig parse_scenario(const std::string& text, const std::string& origin = "<string>");
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Everything a World needs, built from a validated config.
struct BuiltScenario {
  std::shared_ptr<const RadioAccess> radio;
  std::vector<CellConfig> traffic_cells;  // in traffic-id order
  std::map<int, double> backhaul_mbps;
  std::vector<TrafficLayer> layers;
};

BuiltScenario build_scenario(const ScenarioConfig& config);

/// SHA-256 of `bytes`, lowercase hex.
std::string sha256_hex(const std::string& bytes);

}  // namespace bhlb
