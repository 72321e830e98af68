#include "clg/model.hpp"

#include <string>

namespace clg {

namespace {

void check_user(const NetworkState& state, int k) {
  if (k < 0 || k >= state.users()) {
    throw DomainError("user index " + std::to_string(k) + " out of range");
  }
}

}  // namespace

void NetworkState::validate() const {
  const auto K = codes.cols();
  if (powers.size() != K || gains.size() != K || p_max.size() != K) {
    throw DomainError("per-user vectors must have one entry per code column");
  }
  if (codes.rows() < 1) {
    throw DomainError("processing gain must be positive");
  }
  if (!(noise_psd > 0.0)) {
    throw DomainError("noise PSD must be positive");
  }
  for (Eigen::Index k = 0; k < K; ++k) {
    if (std::abs(codes.col(k).squaredNorm() - 1.0) > 1e-12) {
      throw DomainError("code " + std::to_string(k) + " is not unit norm");
    }
    if (!(gains[k] > 0.0)) {
      throw DomainError("channel gain must be positive");
    }
    if (!(powers[k] >= 0.0) || powers[k] > p_max[k] * (1.0 + 1e-12)) {
      throw DomainError("power of user " + std::to_string(k) + " outside [0, p_max]");
    }
  }
}

ReceiverBank matched_filters(const NetworkState& state) { return {state.codes}; }

Matrix data_covariance(const NetworkState& state) {
  const Vector weights = state.powers.cwiseProduct(state.gains.cwiseAbs2());
  Matrix cov = state.codes * weights.asDiagonal() * state.codes.transpose();
  cov.diagonal().array() += state.noise_variance();
  return 0.5 * (cov + cov.transpose());
}

Matrix user_excluded_covariance(const NetworkState& state, int k) {
  check_user(state, k);
  const double w = state.powers[k] * state.gains[k] * state.gains[k];
  const Vector s = state.codes.col(k);
  Matrix cov = data_covariance(state);
  cov.noalias() -= w * s * s.transpose();
  return cov;
}

double sinr(const NetworkState& state, int k, const Vector& d) {
  check_user(state, k);
  const double dd = d.squaredNorm();
  if (dd == 0.0) {
    throw DomainError("SINR undefined for a zero filter");
  }
  const Vector proj = state.codes.transpose() * d;  // d^T s_i for all i
  double interference = state.noise_variance() * dd;
  for (int i = 0; i < state.users(); ++i) {
    if (i == k) continue;
    interference += state.powers[i] * state.gains[i] * state.gains[i] * proj[i] * proj[i];
  }
  return state.powers[k] * state.gains[k] * state.gains[k] * proj[k] * proj[k] / interference;
}

double mse(const NetworkState& state, int k, const Vector& d) {
  check_user(state, k);
  const Matrix cov = data_covariance(state);
  return 1.0 + d.dot(cov * d) -
         2.0 * std::sqrt(state.powers[k]) * state.gains[k] * d.dot(state.codes.col(k));
}

double tmse(const NetworkState& state, const ReceiverBank& receivers) {
  const Matrix cov = data_covariance(state);
  double total = 0.0;
  for (int k = 0; k < state.users(); ++k) {
    const Vector d = receivers.filters.col(k);
    total += 1.0 + d.dot(cov * d) -
             2.0 * std::sqrt(state.powers[k]) * state.gains[k] * d.dot(state.codes.col(k));
  }
  return total;
}

Vector synthesize_received(const NetworkState& state, std::span<const int> bits, Rng& rng) {
  if (static_cast<int>(bits.size()) != state.users()) {
    throw DomainError("one bit per user required");
  }
  Vector r = Vector::Zero(state.dim());
  for (int k = 0; k < state.users(); ++k) {
    if (bits[k] != 1 && bits[k] != -1) {
      throw DomainError("bits must be +1 or -1");
    }
    r += (std::sqrt(state.powers[k]) * state.gains[k] * bits[k]) * state.codes.col(k);
  }
  if (state.noise_variance() > 0.0) {
    std::normal_distribution<double> noise(0.0, std::sqrt(state.noise_variance()));
    for (int i = 0; i < state.dim(); ++i) {
      r[i] += noise(rng);
    }
  }
  return r;
}

int detect(const Vector& d, const Vector& r) { return d.dot(r) >= 0.0 ? 1 : -1; }

}  // namespace clg
