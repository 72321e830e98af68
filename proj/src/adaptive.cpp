#include "clg/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace clg {

namespace {

bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace

RlsState RlsState::start(const Vector& initial_filter, double lambda, double epsilon) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw DomainError("forgetting factor must be in (0, 1]");
  if (!(epsilon > 0.0)) throw DomainError("RLS epsilon must be positive");
  const auto n = initial_filter.size();
  return {Matrix::Identity(n, n) / epsilon, initial_filter, lambda, epsilon};
}

double rls_step(RlsState& rls, const Vector& r, std::optional<int> reference) {
  if (!all_finite(r)) throw NumericError("non-finite observation fed to RLS");
  const Vector pr = rls.inv_corr * r;
  const double denom = rls.lambda + r.dot(pr);
  const Vector gain = pr / denom;
  rls.inv_corr.noalias() -= gain * pr.transpose();
  rls.inv_corr /= rls.lambda;
  rls.inv_corr = 0.5 * (rls.inv_corr + rls.inv_corr.transpose()).eval();

  const double output = rls.filter.dot(r);
  const double target = reference ? static_cast<double>(*reference) : (output >= 0.0 ? 1.0 : -1.0);
  const double error = output - target;
  rls.filter -= error * gain;
  if (!std::isfinite(error) || !all_finite(rls.filter) || !rls.inv_corr.allFinite()) {
    throw NumericError("RLS recursion diverged");
  }
  return error;
}

void AdaptiveConfig::validate() const {
  if (training < 0) throw DomainError("training length must be >= 0");
  if (!(rho > 0.0 && rho < 1.0)) throw DomainError("LMS step size must lie in (0, 1)");
  if (!(gamma_bar > 0.0)) throw DomainError("target SINR must be positive");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw DomainError("forgetting factor must be in (0, 1]");
  if (!(epsilon > 0.0)) throw DomainError("RLS epsilon must be positive");
  if (!(p_floor >= 0.0)) throw DomainError("power floor must be >= 0");
}

std::optional<Vector> adaptive_code_update(const AdaptiveUserState& user) {
  const double norm = user.rls.filter.norm();
  if (norm == 0.0 || !std::isfinite(norm)) return std::nullopt;
  return Vector(user.rls.filter / norm);
}

double stochastic_interference(const AdaptiveUserState& user, const Vector& r,
                               const AdaptiveConfig& cfg) {
  const Vector& d = user.rls.filter;
  const double alignment = d.dot(user.code);
  if (alignment == 0.0) throw UnservableUserError("d_k^T s_k = 0 in interference estimate");
  const double h2 = user.gain * user.gain;
  const double output = d.dot(r);
  const double own = user.power * h2 * alignment * alignment;
  const double scale = cfg.gain_scaling == GainScaling::kSquared ? h2 : user.gain;
  double estimate = cfg.gamma_bar / (scale * alignment * alignment) * (output * output - own);
  if (cfg.clamp_negative_estimates) estimate = std::max(estimate, 0.0);
  return estimate;
}

double lms_power_step(const AdaptiveUserState& user, double interference,
                      const AdaptiveConfig& cfg) {
  const double next = (1.0 - cfg.rho) * user.power + cfg.rho * interference;
  return std::clamp(next, cfg.p_floor, user.p_max);
}

RealizationTrace adaptive_run(const Population& population, const AdaptiveConfig& cfg,
                              const EfficiencyParams& params, std::int64_t horizon, Rng& rng) {
  cfg.validate();
  params.validate();
  const int total = static_cast<int>(population.users.size());
  const int n_dim = population.dim;
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

  std::vector<AdaptiveUserState> users;
  users.reserve(total);
  for (const auto& profile : population.users) {
    if (profile.code.size() != n_dim) throw DomainError("code length differs from processing gain");
    AdaptiveUserState u;
    u.rls = RlsState::start(profile.code, cfg.lambda, cfg.epsilon);
    u.code = profile.code;
    u.power = std::clamp(profile.initial_power, cfg.p_floor, profile.p_max);
    u.gain = profile.gain;
    u.p_max = profile.p_max;
    u.joined_at = profile.joins_at;
    users.push_back(std::move(u));
  }

  RealizationTrace trace;
  trace.active.reserve(horizon);
  trace.sinr.reserve(horizon);
  trace.power.reserve(horizon);
  trace.utility.reserve(horizon);

  std::bernoulli_distribution coin(0.5);
  std::vector<int> active;
  std::vector<int> bits;
  NetworkState snapshot;
  snapshot.noise_psd = population.noise_psd;
  auto refresh = [&] {
    const int n_active = static_cast<int>(active.size());
    snapshot.codes.resize(n_dim, n_active);
    snapshot.powers.resize(n_active);
    snapshot.gains.resize(n_active);
    snapshot.p_max.resize(n_active);
    for (int j = 0; j < n_active; ++j) {
      const auto& u = users[active[j]];
      snapshot.codes.col(j) = u.code;
      snapshot.powers[j] = u.power;
      snapshot.gains[j] = u.gain;
      snapshot.p_max[j] = u.p_max;
    }
  };

  for (std::int64_t n = 1; n <= horizon; ++n) {
    active.clear();
    for (int k = 0; k < total; ++k) {
      if (users[k].joined_at <= n) active.push_back(k);
    }
    const int n_active = static_cast<int>(active.size());

    // Every active user transmits with the code and power it holds now.
    refresh();
    bits.resize(n_active);
    for (int& b : bits) b = coin(rng) ? 1 : -1;
    const Vector r = synthesize_received(snapshot, bits, rng);

    try {
      for (int j = 0; j < n_active; ++j) {
        auto& u = users[active[j]];
        const std::int64_t local = n - u.joined_at + 1;
        const bool training = local <= cfg.training;
        rls_step(u.rls, r, training ? std::optional<int>(bits[j]) : std::nullopt);
        if (training) continue;
        // The estimate refers to the code and power that produced r(n).
        const double demand = stochastic_interference(u, r, cfg);
        const double next_power = lms_power_step(u, demand, cfg);
        if (auto code = adaptive_code_update(u)) {
          u.code = std::move(*code);
        } else {
          ++trace.skipped_code_updates;
        }
        u.power = next_power;
      }
    } catch (const NumericError& e) {
      throw NumericError(e.what(), n);
    } catch (const UnservableUserError& e) {
      throw NumericError(e.what(), n);
    }

    refresh();
    std::vector<double> sinr_row(total, kNaN), power_row(total, kNaN), utility_row(total, kNaN);
    for (int j = 0; j < n_active; ++j) {
      const int k = active[j];
      const double g = sinr(snapshot, j, users[k].rls.filter);
      if (!std::isfinite(g)) throw NumericError("non-finite SINR", n);
      sinr_row[k] = g;
      power_row[k] = users[k].power;
      utility_row[k] = utility(users[k].power, g, params);
    }
    trace.active.push_back(n_active);
    trace.sinr.push_back(std::move(sinr_row));
    trace.power.push_back(std::move(power_row));
    trace.utility.push_back(std::move(utility_row));
  }
  return trace;
}

}  // namespace clg
