#pragma once

#include <string>
#include <vector>

#include "clg/efficiency.hpp"
#include "clg/model.hpp"

namespace clg {

struct EquilibriumConfig {
  double gamma_bar = 0.0;            // target SINR, linear
  double code_receiver_tol = 1e-10;  // stop sweeping when TMSE drops by less
  double power_tol = 1e-8;           // max relative power change per sweep
  int max_inner_iters = 500;
  int max_power_iters = 500;
  int max_outer_iters = 100;
  bool adapt_codes = true;  // false gives the power+receiver-only game

  void validate() const;
};

struct FixedPointResult {
  Matrix codes;
  ReceiverBank receivers;
  std::vector<double> tmse_trace;  // entry 0 is the TMSE of the input
  bool converged = false;
  int sweeps = 0;
};

struct PowerIterationResult {
  Vector powers;
  std::vector<bool> clamped;
  bool converged = false;
  int iterations = 0;
};

struct EquilibriumResult {
  NetworkState state;
  ReceiverBank receivers;
  Vector sinr;
  Vector utility;
  std::vector<bool> clamped;
  bool converged = false;
  int outer_iterations = 0;
  int sweeps = 0;
  std::vector<std::vector<double>> tmse_traces;  // one per code/receiver stage
  std::string diagnostic;
};

/// sqrt(p_k) h_k M^{-1} s_k, the SINR-maximising (and MSE-minimising) filter.
/// Throws DegenerateUserError when p_k == 0.
Vector mmse_receiver(const NetworkState& state, int k);

/// Unit-norm code for user k minimising TMSE with every filter and every
/// other code held fixed. Solves (p h^2 D D^T + mu I) s = sqrt(p) h d_k with
/// ||s|| = 1 through the SVD of D, taking the global minimiser (including
/// the degenerate case where mu sits at the smallest eigenvalue of D D^T).
/// The sign is fixed so that d_k^T s >= 0.
Vector tmse_code_update(const NetworkState& state, int k, const ReceiverBank& receivers);

/// Gauss-Seidel sweeps (receiver, then code, for k = 0..K-1) at fixed powers.
/// Zero-power users keep their code and a matched filter.
FixedPointResult code_receiver_fixed_point(NetworkState state, ReceiverBank receivers,
                                           const EquilibriumConfig& cfg);

/// I_k(p) = gamma_bar / (h_k^2 (d_k^T s_k)^2) *
///          [ (N0/2)||d_k||^2 + sum_{i != k} p_i h_i^2 (d_k^T s_i)^2 ].
Vector interference_function(const NetworkState& state, const ReceiverBank& receivers,
                             double gamma_bar);

/// p <- min(I(p), p_max) from state.powers until the largest relative change
/// drops below cfg.power_tol.
PowerIterationResult power_iteration(const NetworkState& state, const ReceiverBank& receivers,
                                     const EquilibriumConfig& cfg);

/// Alternates code_receiver_fixed_point and power_iteration until neither
/// moves. Non-convergence is reported through `converged` and `diagnostic`.
EquilibriumResult solve_nash_equilibrium(NetworkState state, const EquilibriumConfig& cfg,
                                         const EfficiencyParams& params);

}  // namespace clg
