#pragma once

#include <functional>

#include "clg/common.hpp"

namespace clg {

/// Packet and rate constants entering the utility u = R (L/M) f(gamma) / p.
struct EfficiencyParams {
  int packet_symbols = 120;  // M
  int info_symbols = 120;    // L, 0 < L <= M
  double rate_bps = 1e5;     // R

  /// Throws DomainError unless 2 <= M, 0 < L <= M and R > 0.
  void validate() const;
};

/// f(gamma) = (1 - e^{-gamma})^M.
double efficiency(double gamma, int packet_symbols);

/// f'(gamma) = M (1 - e^{-gamma})^{M-1} e^{-gamma}.
double efficiency_derivative(double gamma, int packet_symbols);

/// BPSK packet success probability [1 - Q(sqrt(2 gamma))]^M. Only used for
/// comparison against the efficiency function; it does not vanish at zero
/// SINR (it tends to 2^{-M}).
double packet_success_probability(double gamma, int packet_symbols);

/// A smooth S-shaped efficiency curve and its first derivative.
struct EfficiencyCurve {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
};

EfficiencyCurve sigmoid_efficiency(int packet_symbols);

/// Positive root of f(gamma) = gamma f'(gamma) for an arbitrary curve, found
/// by bisection on [lo, hi] followed by a Newton polish. The sign change of
/// f - gamma f' must lie inside the bracket. Throws DomainError otherwise.
double solve_target_sinr(const EfficiencyCurve& curve, double lo = 1e-6, double hi = 50.0,
                         double tol = 1e-9);

/// Target SINR for the sigmoid efficiency; throws DomainError for M < 2,
/// where the only root is gamma = 0.
double solve_target_sinr(int packet_symbols);

/// Throughput per unit power in bit/J. Throws DomainError for power <= 0.
double utility(double power, double gamma, const EfficiencyParams& params);

}  // namespace clg
