#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "clg/scenario.hpp"

namespace clg::cli {

/// Every knob of a run. JSON keys are the long flag names with '-' replaced
/// by '_'; a config file may set any subset and flags override it.
struct RunConfig {
  std::string mode = "static";  // static | dynamic | benchmark | gamma | selftest
  int users = 8;
  int gain = 15;  // processing gain N
  int packet_size = 120;
  int info_symbols = 120;
  double rate = 1e5;  // bit/s
  int train = 80;
  double rho = 0.01;
  double lambda = 0.995;
  double epsilon = 1e-6;
  std::int64_t horizon = 0;  // 0 selects 2000 (static) or 2500 (dynamic)
  int realizations = 50;
  std::uint64_t seed = 1;
  std::vector<std::int64_t> arrivals;  // dynamic mode defaults to {1000, 1700}
  std::string out = "out";
  int jobs = 0;  // 0 selects the available hardware parallelism
  bool quick = false;
  double noise_psd = 1e-5;
  double pmax_db = 25.0;
  double d_min = 10.0;
  double d_max = 500.0;
  double initial_power_fraction = 0.01;
  bool clamp_negative_estimates = false;
  double max_failure_fraction = 0.0;

  /// Fills mode-dependent defaults (horizon, arrivals, jobs) and validates.
  void resolve();
};

nlohmann::json to_json(const RunConfig& cfg);

/// Accepts a flat object or a run manifest (uses its "config" member).
/// Unknown keys are rejected.
RunConfig from_json(const nlohmann::json& j);

/// Parses "1000,1700" into epochs.
std::vector<std::int64_t> parse_arrivals(const std::string& text);

ScenarioSpec scenario_of(const RunConfig& cfg);
AdaptiveConfig adaptive_of(const RunConfig& cfg, double gamma_bar);
EquilibriumConfig equilibrium_of(double gamma_bar);
EfficiencyParams efficiency_of(const RunConfig& cfg);

/// The CSV header, without a trailing newline.
extern const char* const kTrajectoryHeader;
extern const char* const kBenchmarkHeader;

void write_trajectory_csv(std::ostream& os, const Trajectory& t);
void write_benchmark_csv(std::ostream& os, const BenchmarkReport& report);

/// Entry point of the `clg` executable.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace clg::cli
