#include "clg/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace clg {

void EquilibriumConfig::validate() const {
  if (!(gamma_bar > 0.0)) throw DomainError("target SINR must be positive");
  if (!(code_receiver_tol > 0.0) || !(power_tol > 0.0)) {
    throw DomainError("tolerances must be positive");
  }
  if (max_inner_iters < 1 || max_power_iters < 1 || max_outer_iters < 1) {
    throw DomainError("iteration caps must be >= 1");
  }
}

Vector mmse_receiver(const NetworkState& state, int k) {
  if (k < 0 || k >= state.users()) throw DomainError("user index out of range");
  if (!(state.powers[k] > 0.0)) {
    throw DegenerateUserError("MMSE filter undefined for a zero-power user");
  }
  const Eigen::LLT<Matrix> chol(data_covariance(state));
  const Vector x = chol.solve(state.codes.col(k));
  return std::sqrt(state.powers[k]) * state.gains[k] * x;
}

Vector tmse_code_update(const NetworkState& state, int k, const ReceiverBank& receivers) {
  if (k < 0 || k >= state.users()) throw DomainError("user index out of range");
  const double p = state.powers[k];
  if (!(p > 0.0)) throw DegenerateUserError("code update undefined for a zero-power user");
  const Matrix& filters = receivers.filters;
  const Vector dk = filters.col(k);
  if (dk.squaredNorm() == 0.0) throw DegenerateUserError("code update with a zero filter");

  const int n = state.dim();
  const double c = p * state.gains[k] * state.gains[k];
  const Vector b = std::sqrt(c) * dk;

  // c D D^T = U diag(lambda) U^T with U square; missing singular values are 0.
  const Eigen::JacobiSVD<Matrix> svd(filters, Eigen::ComputeFullU);
  const Matrix& u = svd.matrixU();
  Vector lambda = Vector::Zero(n);
  const Vector& sv = svd.singularValues();
  lambda.head(sv.size()) = c * sv.cwiseAbs2();
  const Vector beta = u.transpose() * b;
  const double lambda_min = lambda.minCoeff();
  const double lambda_max = lambda.maxCoeff();
  const double b_norm = b.norm();

  const Vector current = state.codes.col(k);
  auto finish = [&](Vector s) {
    s.normalize();
    if (dk.dot(s) < 0.0) s = -s;
    return s;
  };

  // Degenerate ("hard") case: b has no component on the bottom eigenspace and
  // the norm stays below one as mu approaches -lambda_min. The minimiser is
  // the pseudo-inverse solution plus a bottom-eigenspace component.
  const double edge_tol = 1e-12 * std::max(lambda_max, std::numeric_limits<double>::min());
  std::vector<int> bottom;
  double bottom_mass = 0.0;
  for (int i = 0; i < n; ++i) {
    if (lambda[i] <= lambda_min + edge_tol) {
      bottom.push_back(i);
      bottom_mass += beta[i] * beta[i];
    }
  }
  if (std::sqrt(bottom_mass) <= 1e-10 * b_norm) {
    Vector s = Vector::Zero(n);
    double norm2 = 0.0;
    for (int i = 0; i < n; ++i) {
      if (lambda[i] <= lambda_min + edge_tol) continue;
      const double coeff = beta[i] / (lambda[i] - lambda_min);
      s += coeff * u.col(i);
      norm2 += coeff * coeff;
    }
    if (norm2 <= 1.0) {
      Vector z = Vector::Zero(n);
      for (int i : bottom) z += u.col(i).dot(current) * u.col(i);
      if (z.norm() < 1e-12) z = u.col(bottom.front());
      z.normalize();
      s += std::sqrt(1.0 - norm2) * z;
      return finish(s);
    }
  }

  // Regular case: ||s(mu)|| = 1 has exactly one root on (-lambda_min, inf),
  // and ||s(mu)|| <= ||b|| / (lambda_min + mu) bounds it from above.
  auto solution_norm = [&](double mu) {
    return (beta.array() / (lambda.array() + mu)).matrix().norm();
  };
  double lo = -lambda_min;
  double hi = b_norm - lambda_min;
  double mu = hi;
  for (int it = 0; it < 300; ++it) {
    const double norm = solution_norm(mu);
    if (std::abs(norm - 1.0) < 1e-14) break;
    if (norm > 1.0) {
      lo = mu;
    } else {
      hi = mu;
    }
    // Newton on 1/||s|| - 1, which is close to linear in mu.
    const double cube = (beta.array().square() / (lambda.array() + mu).cube()).sum();
    const double slope = cube / (norm * norm * norm);
    double next = mu - (1.0 / norm - 1.0) / slope;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    if (next == mu) break;
    mu = next;
  }
  const Vector s = u * (beta.array() / (lambda.array() + mu)).matrix();
  return finish(s);
}

FixedPointResult code_receiver_fixed_point(NetworkState state, ReceiverBank receivers,
                                           const EquilibriumConfig& cfg) {
  FixedPointResult out;
  const int users = state.users();
  if (receivers.filters.rows() != state.dim() || receivers.filters.cols() != users) {
    throw DomainError("receiver bank shape does not match the state");
  }
  out.tmse_trace.push_back(tmse(state, receivers));
  for (int sweep = 1; sweep <= cfg.max_inner_iters; ++sweep) {
    for (int k = 0; k < users; ++k) {
      if (!(state.powers[k] > 0.0)) {
        receivers.filters.col(k) = state.codes.col(k);
        continue;
      }
      receivers.filters.col(k) = mmse_receiver(state, k);
      if (cfg.adapt_codes) {
        state.codes.col(k) = tmse_code_update(state, k, receivers);
      }
    }
    out.sweeps = sweep;
    const double value = tmse(state, receivers);
    const double drop = out.tmse_trace.back() - value;
    out.tmse_trace.push_back(value);
    if (drop < cfg.code_receiver_tol) {
      out.converged = true;
      break;
    }
  }
  out.codes = std::move(state.codes);
  out.receivers = std::move(receivers);
  return out;
}

Vector interference_function(const NetworkState& state, const ReceiverBank& receivers,
                             double gamma_bar) {
  const int users = state.users();
  Vector out(users);
  // proj(i, k) = d_k^T s_i
  const Matrix proj = state.codes.transpose() * receivers.filters;
  for (int k = 0; k < users; ++k) {
    const double own = proj(k, k);
    if (own == 0.0) {
      throw UnservableUserError("user " + std::to_string(k) + " has d_k^T s_k = 0");
    }
    double background = state.noise_variance() * receivers.filters.col(k).squaredNorm();
    for (int i = 0; i < users; ++i) {
      if (i == k) continue;
      background += state.powers[i] * state.gains[i] * state.gains[i] * proj(i, k) * proj(i, k);
    }
    out[k] = gamma_bar * background / (state.gains[k] * state.gains[k] * own * own);
  }
  return out;
}

PowerIterationResult power_iteration(const NetworkState& state, const ReceiverBank& receivers,
                                     const EquilibriumConfig& cfg) {
  PowerIterationResult out;
  NetworkState work = state;
  const int users = state.users();
  Vector demand = Vector::Zero(users);
  for (int it = 1; it <= cfg.max_power_iters; ++it) {
    demand = interference_function(work, receivers, cfg.gamma_bar);
    const Vector next = demand.cwiseMin(work.p_max);
    double change = 0.0;
    for (int k = 0; k < users; ++k) {
      const double scale = std::max(next[k], std::numeric_limits<double>::min());
      change = std::max(change, std::abs(next[k] - work.powers[k]) / scale);
    }
    work.powers = next;
    out.iterations = it;
    if (change < cfg.power_tol) {
      out.converged = true;
      break;
    }
  }
  out.powers = work.powers;
  out.clamped.resize(users);
  for (int k = 0; k < users; ++k) out.clamped[k] = demand[k] >= work.p_max[k];
  return out;
}

EquilibriumResult solve_nash_equilibrium(NetworkState state, const EquilibriumConfig& cfg,
                                         const EfficiencyParams& params) {
  state.validate();
  cfg.validate();
  params.validate();

  EquilibriumResult out;
  const int users = state.users();
  ReceiverBank receivers = matched_filters(state);
  bool fixed_point_ok = false;
  bool powers_ok = false;
  double last_change = std::numeric_limits<double>::infinity();
  PowerIterationResult powers;

  for (int outer = 1; outer <= cfg.max_outer_iters; ++outer) {
    FixedPointResult fp = code_receiver_fixed_point(state, receivers, cfg);
    state.codes = std::move(fp.codes);
    receivers = std::move(fp.receivers);
    out.sweeps += fp.sweeps;
    fixed_point_ok = fp.converged;
    out.tmse_traces.push_back(std::move(fp.tmse_trace));

    powers = power_iteration(state, receivers, cfg);
    powers_ok = powers.converged;
    last_change = 0.0;
    for (int k = 0; k < users; ++k) {
      const double scale = std::max(powers.powers[k], std::numeric_limits<double>::min());
      last_change = std::max(last_change, std::abs(powers.powers[k] - state.powers[k]) / scale);
    }
    state.powers = powers.powers;
    out.outer_iterations = outer;
    if (fixed_point_ok && powers_ok && last_change < cfg.power_tol) {
      out.converged = true;
      break;
    }
  }

  if (users == 0) out.converged = true;
  if (!out.converged) {
    std::ostringstream msg;
    msg << "no joint convergence after " << out.outer_iterations << " outer iterations"
        << " (code/receiver stage converged: " << fixed_point_ok
        << ", power stage converged: " << powers_ok << ", last relative power change "
        << last_change << ")";
    out.diagnostic = msg.str();
  }

  out.sinr.resize(users);
  out.utility.resize(users);
  out.clamped = powers.clamped;
  out.clamped.resize(users, false);
  for (int k = 0; k < users; ++k) {
    out.sinr[k] = sinr(state, k, receivers.filters.col(k));
    out.utility[k] = utility(state.powers[k], out.sinr[k], params);
  }
  out.state = std::move(state);
  out.receivers = std::move(receivers);
  return out;
}

}  // namespace clg
