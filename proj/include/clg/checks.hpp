#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "clg/adaptive.hpp"
#include "clg/scenario.hpp"

namespace clg::checks {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Random state for identity checks: Gaussian unit codes, p in [0.1, 10],
/// h in [0.5, 2], N0 in [0.2, 2], caps of 100 W.
NetworkState random_state(int n, int k, Rng& rng);

/// Random user-scale state drawn from the default field scenario
/// (N = 15, K = 8, 10-500 m, Rayleigh gains).
NetworkState field_state(Rng& rng);

CheckResult target_sinr();
CheckResult efficiency_shape();
CheckResult mse_forms(int instances, std::uint64_t seed);
CheckResult sinr_scale_invariance(int instances, std::uint64_t seed);
CheckResult mmse_identity(int instances, std::uint64_t seed);
CheckResult yates_axioms(int instances, std::uint64_t seed);
CheckResult closed_form_code_update(int instances, std::uint64_t seed);
CheckResult rls_direct_inverse(int dim, int steps, double epsilon, std::uint64_t seed);
CheckResult tmse_monotone(int instances, int n, int k, std::uint64_t seed);

/// Sample mean of the per-symbol interference estimate against the exact
/// interference map, on field states with MMSE filters. Passes when every
/// state is within `rel_tol`.
CheckResult estimator_unbiased(int states, int samples, double rel_tol, GainScaling scaling,
                               std::uint64_t seed);

/// Same experiment judged against the Monte Carlo standard error instead of
/// a fixed relative band: passes when every |z| <= z_max.
CheckResult estimator_unbiased_z(int states, int samples, double z_max, GainScaling scaling,
                                 std::uint64_t seed);

/// Equilibria of `realizations` field scenarios: every unclamped user
/// within tol_db of the target and every TMSE trace non-increasing.
CheckResult benchmark_equilibrium(int realizations, int users, double tol_db, std::uint64_t seed);

/// All of the above at sizes suited to an interactive run.
std::vector<CheckResult> selftest(bool quick, GainScaling scaling);

}  // namespace clg::checks
