#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bhlb/flowsim.hpp"
#include "bhlb/scenario.hpp"

namespace bhlb {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kNullToken = "NA";

/// One row per traffic cell per SON window.
struct WindowRow {
  int window = 0;
  double time_s = 0.0;  // window end
  int cell = -1;
  CellKind kind = CellKind::Small;
  double cio_db = 0.0;  // CIO in force during the window
  double scheduler_load = 0.0;
  double busy_load = 0.0;
  double global_load = 0.0;
  std::optional<double> analytic_local;
  std::optional<double> analytic_global;
  std::size_t completed = 0;
  std::optional<double> mean_ftt_s;
  std::optional<double> mut_mbps;
  std::optional<double> cet_mbps;
  double backhaul_occupancy = 0.0;
  double mean_active_flows = 0.0;
};

/// Cluster-wide KPIs per window.
struct ClusterRow {
  int window = 0;
  double time_s = 0.0;
  std::size_t completed = 0;
  std::optional<double> mut_mbps;
  std::optional<double> cet_mbps;
  std::optional<double> mean_ftt_s;
};

struct RunOutput {
  ScenarioConfig config;
  std::uint64_t seed = 0;
  std::vector<WindowRow> windows;
  std::vector<ClusterRow> cluster;
  std::vector<CompletedFlow> flows;
  std::vector<double> final_cio_db;  // per traffic cell
  std::vector<int> traffic_ids;

  std::string windows_csv() const;
  std::string cluster_csv() const;
  std::string flows_csv() const;
  std::string summary_json() const;
  std::string manifest_json() const;

  /// Rows of one cell, in window order.
  std::vector<WindowRow> cell_rows(int cell) const;
  int window_count() const;
};

using ProgressFn = std::function<void(int window, int total)>;

/// Builds the scenario, simulates it with one SON step per window and
/// collects every output. Throws ConfigError for invalid configs.
RunOutput run_scenario(const ScenarioConfig& config, const ProgressFn& progress = {});

void write_outputs(const RunOutput& out, const std::filesystem::path& dir);

enum class SweepParameter { BackhaulCapacity, Epsilon, Lambda };

SweepParameter parse_sweep_parameter(const std::string& s);
const char* to_string(SweepParameter p);

/// Returns a copy of `config` with the parameter set to `value`.
/// BackhaulCapacity sets every small cell (or the fixed-rate cell); Lambda
/// sets the first cluster-wide elastic layer.
ScenarioConfig with_parameter(const ScenarioConfig& config, SweepParameter p, double value);

struct SweepResult {
  double value = 0.0;
  RunOutput output;
};

/// One independent run per value; run i uses seed ^ i.
std::vector<SweepResult> sweep(const ScenarioConfig& config, SweepParameter p,
                               const std::vector<double>& values, std::uint64_t seed);

std::string sweep_summary_csv(SweepParameter p, const std::vector<SweepResult>& results);

struct ValidationCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool passed() const;
  std::string text() const;
};

/// Canned property suite over the estimators, the analytic loads, the flow
/// simulator and the controller.
ValidationReport validate_suite();

}  // namespace bhlb
