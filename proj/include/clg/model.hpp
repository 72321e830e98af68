#pragma once

#include <span>

#include "clg/common.hpp"

namespace clg {

/// Snapshot of a synchronous DS/CDMA uplink after chip-matched filtering.
///
/// Column k of `codes` is the unit-norm signature s_k. `gains` holds channel
/// amplitudes h_k (not power gains); every formula squares them explicitly.
struct NetworkState {
  Matrix codes;      // N x K
  Vector powers;     // p_k in W
  Vector gains;      // h_k > 0
  Vector p_max;      // per-user power caps in W
  double noise_psd = 1e-5;  // N0 in W/Hz; noise covariance is (N0/2) I

  int dim() const { return static_cast<int>(codes.rows()); }
  int users() const { return static_cast<int>(codes.cols()); }
  double noise_variance() const { return 0.5 * noise_psd; }

  /// Throws DomainError when a shape or range invariant is violated.
  void validate() const;
};

/// Linear receive filters d_k, one per column. Defined up to positive scale.
struct ReceiverBank {
  Matrix filters;  // N x K

  Vector filter(int k) const { return filters.col(k); }
};

/// Matched-filter bank: d_k = s_k.
ReceiverBank matched_filters(const NetworkState& state);

/// M = sum_k p_k h_k^2 s_k s_k^T + (N0/2) I.
Matrix data_covariance(const NetworkState& state);

/// M_k = M - p_k h_k^2 s_k s_k^T.
Matrix user_excluded_covariance(const NetworkState& state, int k);

/// SINR of user k at the output of filter d. Scale invariant in d.
double sinr(const NetworkState& state, int k, const Vector& d);

/// E{(b_k - d^T r)^2} = 1 + d^T M d - 2 sqrt(p_k) h_k d^T s_k.
double mse(const NetworkState& state, int k, const Vector& d);

/// Sum of per-user MSEs.
double tmse(const NetworkState& state, const ReceiverBank& receivers);

/// One received chip vector r = sum_k sqrt(p_k) h_k b_k s_k + w with
/// w ~ N(0, (N0/2) I). `bits` must be +-1, one per user.
Vector synthesize_received(const NetworkState& state, std::span<const int> bits, Rng& rng);

/// sign(d^T r), with sign(0) := +1.
int detect(const Vector& d, const Vector& r);

}  // namespace clg
