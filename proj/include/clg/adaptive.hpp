#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "clg/efficiency.hpp"
#include "clg/model.hpp"

namespace clg {

/// Exponentially weighted RLS estimate of one user's MMSE filter.
struct RlsState {
  Matrix inv_corr;  // R^{-1}(n)
  Vector filter;    // d(n)
  double lambda = 0.995;
  double epsilon = 1e-6;  // R(0) = epsilon I

  /// R^{-1}(0) = I / epsilon, d(0) = initial_filter.
  static RlsState start(const Vector& initial_filter, double lambda, double epsilon);
};

/// One RLS update with observation r. With a reference symbol the error is
/// d^T(n-1) r - b (training); without one it is decision directed,
/// d^T(n-1) r - sign(d^T(n-1) r). Returns the a-priori error.
/// Throws NumericError on non-finite input or state.
double rls_step(RlsState& rls, const Vector& r, std::optional<int> reference);

/// How the per-symbol interference estimate scales with the channel gain.
/// `kLinearGain` divides by h_k instead of h_k^2; it is dimensionally wrong
/// and exists only so test sensitivity can be demonstrated.
enum class GainScaling { kSquared, kLinearGain };

struct AdaptiveConfig {
  int training = 80;       // T, symbols of known data after a user joins
  double rho = 0.01;       // LMS step size
  double gamma_bar = 0.0;  // target SINR, linear
  double lambda = 0.995;
  double epsilon = 1e-6;
  double p_floor = 1e-12;
  bool clamp_negative_estimates = false;
  GainScaling gain_scaling = GainScaling::kSquared;

  void validate() const;
};

struct AdaptiveUserState {
  RlsState rls;
  Vector code;
  double power = 0.0;
  double gain = 0.0;
  double p_max = 0.0;
  std::int64_t joined_at = 1;
};

/// s = d / ||d||, the closed form of (p h^2 d d^T + mu I)^{-1} sqrt(p) h d
/// under ||s|| = 1. Returns nullopt (code retained) for a zero filter.
std::optional<Vector> adaptive_code_update(const AdaptiveUserState& user);

/// Per-symbol estimate of the power user k needs to reach gamma_bar:
/// gamma_bar / (h^2 (d^T s)^2) * [ (d^T r)^2 - p h^2 (d^T s)^2 ].
/// Its mean over the noise and data equals interference_function()[k].
double stochastic_interference(const AdaptiveUserState& user, const Vector& r,
                               const AdaptiveConfig& cfg);

/// (1 - rho) p + rho I, clamped to [p_floor, p_max].
double lms_power_step(const AdaptiveUserState& user, double interference,
                      const AdaptiveConfig& cfg);

/// A user as it enters the channel.
struct UserProfile {
  Vector code;
  double gain = 0.0;
  double p_max = 0.0;
  double initial_power = 0.0;
  std::int64_t joins_at = 1;  // first active symbol (symbols are 1-based)
};

/// Everything a realization needs besides the RNG.
struct Population {
  int dim = 15;
  double noise_psd = 1e-5;
  std::vector<UserProfile> users;  // in order of joins_at
};

/// Per-symbol record of one adaptive realization. Per-user series are
/// indexed [symbol - 1][user] and hold NaN while the user is inactive.
struct RealizationTrace {
  std::vector<int> active;
  std::vector<std::vector<double>> sinr;
  std::vector<std::vector<double>> power;
  std::vector<std::vector<double>> utility;
  std::int64_t skipped_code_updates = 0;
};

/// Runs the decentralised algorithm for `horizon` symbols. Each user trains
/// its RLS receiver for T symbols after joining, then also updates its code
/// and LMS power from its own filter, code, power and gain plus the common
/// observation r(n). Metrics use the global state and are not visible to
/// the users.
RealizationTrace adaptive_run(const Population& population, const AdaptiveConfig& cfg,
                              const EfficiencyParams& params, std::int64_t horizon, Rng& rng);

}  // namespace clg
