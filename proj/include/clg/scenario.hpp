#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "clg/adaptive.hpp"
#include "clg/equilibrium.hpp"

namespace clg {

/// Users entering the channel at `epoch` (first active symbol). Each gets a
/// random position, a fresh random code, a matched-filter receiver and the
/// initial power fraction of its cap.
struct Arrival {
  std::int64_t epoch = 0;
  int users = 1;
};

struct ScenarioSpec {
  int processing_gain = 15;
  int initial_users = 8;
  std::vector<Arrival> arrivals;  // strictly increasing epochs, all > 1
  double d_min = 10.0;            // m
  double d_max = 500.0;           // m
  double noise_psd = 1e-5;        // W/Hz
  double p_max_db = 25.0;         // dBW
  double initial_power_fraction = 0.01;
  std::uint64_t seed = 1;
  int realizations = 50;

  double p_max_watts() const { return from_db(p_max_db); }
  void validate() const;
};

/// Rayleigh amplitude with mean distance^-2 (fourth-power path loss on the
/// power gain), i.e. scale sigma = distance^-2 * sqrt(2/pi).
double sample_channel(double distance, Rng& rng);

/// N x K matrix with i.i.d. equiprobable entries +-1/sqrt(N).
Matrix sample_codes(int n, int k, Rng& rng);

/// Initial users of one realization: uniform distances in [d_min, d_max],
/// Rayleigh gains, random codes, powers at initial_power_fraction * p_max.
NetworkState build_state(const ScenarioSpec& spec, Rng& rng);

/// build_state followed by the users of every arrival, drawn from the same
/// generator after the initial ones.
Population build_population(const ScenarioSpec& spec, Rng& rng);

/// Generator for stream `stream` of realization `index`. Streams are derived
/// by counter from the master seed so results do not depend on scheduling.
Rng realization_rng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream);

/// User-averaged equilibrium figures, linear units.
struct BenchmarkPoint {
  double utility = 0.0;
  double sinr = 0.0;
  double power = 0.0;
};

struct BenchmarkReport {
  std::vector<EquilibriumResult> realizations;
  int non_converged = 0;
  /// Mean over converged realizations of the per-realization user means.
  BenchmarkPoint average;
  std::vector<std::string> diagnostics;
};

/// Solves the non-adaptive game on the initial users of every realization.
BenchmarkReport run_benchmark(const ScenarioSpec& spec, const EquilibriumConfig& cfg,
                              const EfficiencyParams& params, int jobs = 1);

/// Monte Carlo averages per symbol (index n - 1). Users are first averaged
/// within a realization, then across realizations; dB conversion is applied
/// to the averaged linear value.
struct Trajectory {
  std::vector<int> active_users;
  std::vector<double> avg_utility;    // bit/J
  std::vector<double> avg_sinr_db;
  std::vector<double> avg_power_dbw;
  std::vector<double> benchmark_utility;  // piecewise constant between arrivals
  std::vector<double> benchmark_sinr_db;
  std::vector<double> benchmark_power_dbw;
  /// Mean SINR (pooled over realizations) of incumbent users that are not
  /// power-limited at the benchmark equilibrium of the current user set.
  /// Incumbents are users active before the latest arrival at or before n.
  std::vector<double> tracked_sinr_db;

  /// Per-realization user means, linear: [realization][n - 1]. Diverged
  /// realizations are left empty.
  std::vector<std::vector<double>> realization_utility;
  std::vector<std::vector<double>> realization_sinr;
  std::vector<std::vector<double>> realization_power;
};

struct AdaptiveReport {
  Trajectory trajectory;
  int realizations = 0;
  int diverged = 0;
  int benchmark_failures = 0;  // realizations with any non-converged segment
  std::int64_t skipped_code_updates = 0;
  std::vector<std::string> diagnostics;
};

/// Runs the adaptive algorithm on every realization and pairs it with the
/// benchmark equilibrium of each user set the realization passes through.
AdaptiveReport run_adaptive_mc(const ScenarioSpec& spec, const AdaptiveConfig& adaptive_cfg,
                               const EquilibriumConfig& eq_cfg, const EfficiencyParams& params,
                               std::int64_t horizon, int jobs = 1);

}  // namespace clg
