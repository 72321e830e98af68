#include "clg/checks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace clg::checks {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

Vector gaussian_vector(int n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace

NetworkState random_state(int n, int k, Rng& rng) {
  NetworkState s;
  s.codes.resize(n, k);
  for (int j = 0; j < k; ++j) s.codes.col(j) = gaussian_vector(n, rng).normalized();
  s.powers.resize(k);
  s.gains.resize(k);
  for (int j = 0; j < k; ++j) {
    s.powers[j] = uniform(rng, 0.1, 10.0);
    s.gains[j] = uniform(rng, 0.5, 2.0);
  }
  s.p_max = Vector::Constant(k, 100.0);
  s.noise_psd = uniform(rng, 0.2, 2.0);
  return s;
}

NetworkState field_state(Rng& rng) { return build_state(ScenarioSpec{}, rng); }

CheckResult target_sinr() {
  const double g = solve_target_sinr(120);
  const bool ok = std::abs(g - 6.689) <= 1e-3 && std::abs(to_db(g) - 8.25) <= 0.01;
  return {"target SINR for M=120", ok, "gamma=" + fmt(g) + " (" + fmt(to_db(g)) + " dB)"};
}

CheckResult efficiency_shape() {
  double worst_residual = 0.0;
  for (int m : {2, 10, 100, 120, 1000}) {
    const double g = solve_target_sinr(m);
    worst_residual = std::max(worst_residual, std::abs(std::expm1(g) - m * g));
  }
  bool monotone = true;
  double prev = efficiency(0.0, 120);
  for (int i = 1; i <= 1000; ++i) {
    const double cur = efficiency(0.02 * i, 120);
    if (!(cur >= prev)) monotone = false;
    prev = cur;
  }
  const double gbar = solve_target_sinr(120);
  bool peak = true;
  const double top = efficiency(gbar, 120) / gbar;
  for (double delta : {1e-3, 1e-1, 1.0}) {
    peak = peak && top > efficiency(gbar + delta, 120) / (gbar + delta) &&
           top > efficiency(gbar - delta, 120) / (gbar - delta);
  }
  double worst_fd = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double g = 0.1 + (10.0 - 0.1) * i / 200.0;
    // Compared on log f to avoid cancellation where f is close to 1.
    const double h = 1e-5;
    const double fd =
        (std::log(efficiency(g + h, 120)) - std::log(efficiency(g - h, 120))) / (2 * h);
    const double exact = efficiency_derivative(g, 120) / efficiency(g, 120);
    worst_fd = std::max(worst_fd, std::abs(fd - exact) / exact);
  }
  const bool ok = worst_residual < 1e-6 && monotone && peak && worst_fd < 1e-6;
  return {"efficiency shape and target root", ok,
          "root residual " + fmt(worst_residual) + ", derivative rel err " + fmt(worst_fd)};
}

CheckResult mse_forms(int instances, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < instances; ++t) {
    const NetworkState s = random_state(uniform_int(rng, 1, 8), uniform_int(rng, 1, 6), rng);
    for (int k = 0; k < s.users(); ++k) {
      const Vector d = gaussian_vector(s.dim(), rng);
      const Vector sk = s.codes.col(k);
      const double w = s.powers[k] * s.gains[k] * s.gains[k];
      const Matrix own_plus_rest = w * sk * sk.transpose() + user_excluded_covariance(s, k);
      const double cross = 2.0 * std::sqrt(s.powers[k]) * s.gains[k] * d.dot(sk);
      const double split = 1.0 + d.dot(own_plus_rest * d) - cross;
      const double scale = 1.0 + std::abs(d.dot(own_plus_rest * d)) + std::abs(cross);
      worst = std::max(worst, std::abs(mse(s, k, d) - split) / scale);
    }
  }
  return {"MSE full-covariance vs user-excluded form", worst <= 1e-12,
          "max rel diff " + fmt(worst)};
}

CheckResult sinr_scale_invariance(int instances, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < instances; ++t) {
    const NetworkState s = random_state(uniform_int(rng, 1, 8), uniform_int(rng, 1, 6), rng);
    for (int k = 0; k < s.users(); ++k) {
      const Vector d = gaussian_vector(s.dim(), rng);
      const double base = sinr(s, k, d);
      for (double c : {-2.0, 0.5, 10.0}) {
        worst = std::max(worst, std::abs(sinr(s, k, c * d) - base) / base);
      }
    }
  }
  return {"SINR invariant to filter scaling", worst <= 1e-12, "max rel diff " + fmt(worst)};
}

CheckResult mmse_identity(int instances, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < instances; ++t) {
    const NetworkState s = random_state(uniform_int(rng, 1, 8), uniform_int(rng, 1, 6), rng);
    for (int k = 0; k < s.users(); ++k) {
      const Vector d = mmse_receiver(s, k);
      const double g = sinr(s, k, d);
      const double m = mse(s, k, d);
      worst = std::max(worst, std::abs(g - (1.0 - m) / m) / g);
    }
  }
  return {"MMSE SINR = (1 - MSE) / MSE", worst <= 1e-10, "max rel diff " + fmt(worst)};
}

CheckResult yates_axioms(int instances, std::uint64_t seed) {
  Rng rng(seed);
  int violations = 0;
  for (int t = 0; t < instances; ++t) {
    NetworkState s = random_state(uniform_int(rng, 1, 8), uniform_int(rng, 1, 6), rng);
    ReceiverBank bank{Matrix(s.dim(), s.users())};
    for (int k = 0; k < s.users(); ++k) bank.filters.col(k) = gaussian_vector(s.dim(), rng);
    const double gbar = uniform(rng, 0.5, 10.0);
    const Vector base = interference_function(s, bank, gbar);
    if (!(base.array() > 0.0).all()) ++violations;

    NetworkState more = s;
    for (int k = 0; k < s.users(); ++k) {
      if (rng() % 2 == 0) more.powers[k] += uniform(rng, 0.0, 5.0);
    }
    const Vector raised = interference_function(more, bank, gbar);
    if (!(base.array() <= raised.array()).all()) ++violations;

    for (double alpha : {1.5, 3.0}) {
      NetworkState scaled = s;
      scaled.powers *= alpha;
      const Vector lhs = alpha * base;
      const Vector rhs = interference_function(scaled, bank, gbar);
      if (!(lhs.array() > rhs.array()).all()) ++violations;
    }
  }
  return {"interference map is a standard function", violations == 0,
          std::to_string(violations) + " violations over " + std::to_string(instances) + " pairs"};
}

CheckResult closed_form_code_update(int instances, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < instances; ++t) {
    const int n = uniform_int(rng, 2, 15);
    AdaptiveUserState user;
    user.rls.filter = gaussian_vector(n, rng);
    user.power = uniform(rng, 0.1, 10.0);
    user.gain = uniform(rng, 0.1, 2.0);
    const Vector closed = *adaptive_code_update(user);

    // Solve ||sqrt(p) h (p h^2 d d^T + mu I)^{-1} d|| = 1 for mu numerically.
    const double c = user.power * user.gain * user.gain;
    const Vector& d = user.rls.filter;
    const Matrix a = c * d * d.transpose();
    const Vector b = std::sqrt(c) * d;
    const double top = Eigen::SelfAdjointEigenSolver<Matrix>(a).eigenvalues().maxCoeff();
    auto solve = [&](double mu) {
      const Matrix shifted = a + mu * Matrix::Identity(n, n);
      return Vector(shifted.partialPivLu().solve(b));
    };
    double lo = -top;
    double hi = b.norm();
    for (int it = 0; it < 400 && hi - lo > 0.0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      if (solve(mid).norm() > 1.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const Vector numeric = solve(0.5 * (lo + hi));
    worst = std::max(worst, (numeric - closed).cwiseAbs().maxCoeff());
  }
  return {"closed-form code update matches numeric mu solve", worst <= 1e-12,
          "max abs diff " + fmt(worst)};
}

CheckResult rls_direct_inverse(int dim, int steps, double epsilon, std::uint64_t seed) {
  Rng rng(seed);
  RlsState rls = RlsState::start(Vector::Zero(dim), 1.0, epsilon);
  Matrix accumulated = epsilon * Matrix::Identity(dim, dim);
  std::bernoulli_distribution coin(0.5);
  for (int t = 0; t < steps; ++t) {
    const Vector r = gaussian_vector(dim, rng);
    rls_step(rls, r, coin(rng) ? 1 : -1);
    accumulated += r * r.transpose();
  }
  const Matrix direct = accumulated.fullPivLu().inverse();
  const double diff = (rls.inv_corr - direct).cwiseAbs().maxCoeff();
  return {"RLS inverse equals direct inversion (lambda=1)", diff <= 1e-8,
          "max abs diff " + fmt(diff)};
}

CheckResult tmse_monotone(int instances, int n, int k, std::uint64_t seed) {
  Rng rng(seed);
  double worst_rise = 0.0;
  double worst_norm = 0.0;
  EquilibriumConfig cfg;
  cfg.gamma_bar = solve_target_sinr(120);
  cfg.max_inner_iters = 200;
  for (int t = 0; t < instances; ++t) {
    const NetworkState s = random_state(n, k, rng);
    const FixedPointResult fp = code_receiver_fixed_point(s, matched_filters(s), cfg);
    for (std::size_t i = 1; i < fp.tmse_trace.size(); ++i) {
      worst_rise = std::max(worst_rise, fp.tmse_trace[i] - fp.tmse_trace[i - 1]);
    }
    for (int j = 0; j < k; ++j) {
      worst_norm = std::max(worst_norm, std::abs(fp.codes.col(j).norm() - 1.0));
    }
  }
  return {"TMSE non-increasing over code/receiver sweeps",
          worst_rise <= 1e-10 && worst_norm <= 1e-12,
          "max rise " + fmt(worst_rise) + ", max |norm-1| " + fmt(worst_norm)};
}

namespace {

struct EstimatorStats {
  double exact = 0.0;
  double mean = 0.0;
  double std_error = 0.0;
};

EstimatorStats estimate(const NetworkState& s, int k, int samples, const AdaptiveConfig& cfg,
                        Rng& rng) {
  ReceiverBank bank = matched_filters(s);
  bank.filters.col(k) = mmse_receiver(s, k);
  AdaptiveUserState user;
  user.rls.filter = bank.filters.col(k);
  user.code = s.codes.col(k);
  user.power = s.powers[k];
  user.gain = s.gains[k];
  // The exact map is always evaluated with h^2.
  const double exact = interference_function(s, bank, cfg.gamma_bar)[k];
  std::bernoulli_distribution coin(0.5);
  std::vector<int> bits(s.users());
  double sum = 0.0, sum2 = 0.0;
  for (int t = 0; t < samples; ++t) {
    for (int& b : bits) b = coin(rng) ? 1 : -1;
    const double x = stochastic_interference(user, synthesize_received(s, bits, rng), cfg);
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / samples;
  const double var = std::max(0.0, sum2 / samples - mean * mean) * samples / (samples - 1.0);
  return {exact, mean, std::sqrt(var / samples)};
}

}  // namespace

CheckResult estimator_unbiased(int states, int samples, double rel_tol, GainScaling scaling,
                               std::uint64_t seed) {
  Rng rng(seed);
  AdaptiveConfig cfg;
  cfg.gamma_bar = solve_target_sinr(120);
  cfg.gain_scaling = scaling;
  double worst = 0.0;
  int failures = 0;
  for (int t = 0; t < states; ++t) {
    const NetworkState s = field_state(rng);
    const auto st = estimate(s, t % s.users(), samples, cfg, rng);
    const double rel = std::abs(st.mean - st.exact) / st.exact;
    worst = std::max(worst, rel);
    if (!(rel <= rel_tol)) ++failures;
  }
  return {"interference estimator mean within " + fmt(100 * rel_tol) + "%", failures == 0,
          std::to_string(failures) + "/" + std::to_string(states) +
              " states outside, worst rel err " + fmt(worst)};
}

CheckResult estimator_unbiased_z(int states, int samples, double z_max, GainScaling scaling,
                                 std::uint64_t seed) {
  Rng rng(seed);
  AdaptiveConfig cfg;
  cfg.gamma_bar = solve_target_sinr(120);
  cfg.gain_scaling = scaling;
  double worst = 0.0;
  for (int t = 0; t < states; ++t) {
    const NetworkState s = field_state(rng);
    const auto st = estimate(s, t % s.users(), samples, cfg, rng);
    worst = std::max(worst, std::abs(st.mean - st.exact) / st.std_error);
  }
  return {"interference estimator mean within " + fmt(z_max) + " standard errors",
          worst <= z_max, "worst |z| " + fmt(worst)};
}

CheckResult benchmark_equilibrium(int realizations, int users, double tol_db,
                                  std::uint64_t seed) {
  ScenarioSpec spec;
  spec.initial_users = users;
  spec.realizations = realizations;
  spec.seed = seed;
  EquilibriumConfig cfg;
  cfg.gamma_bar = solve_target_sinr(120);
  const BenchmarkReport report = run_benchmark(spec, cfg, EfficiencyParams{});
  const double target_db = to_db(cfg.gamma_bar);
  double worst_db = 0.0;
  double worst_rise = 0.0;
  int unclamped = 0;
  for (const auto& eq : report.realizations) {
    for (int k = 0; k < eq.state.users(); ++k) {
      if (eq.clamped[k]) continue;
      ++unclamped;
      worst_db = std::max(worst_db, std::abs(to_db(eq.sinr[k]) - target_db));
    }
    for (const auto& trace : eq.tmse_traces) {
      for (std::size_t i = 1; i < trace.size(); ++i) {
        worst_rise = std::max(worst_rise, trace[i] - trace[i - 1]);
      }
    }
  }
  const bool ok = report.non_converged == 0 && worst_db <= tol_db && worst_rise <= 1e-10;
  return {"benchmark equilibrium hits the target SINR", ok,
          std::to_string(unclamped) + " unclamped users, worst " + fmt(worst_db) +
              " dB off, max TMSE rise " + fmt(worst_rise) + ", non-converged " +
              std::to_string(report.non_converged)};
}

std::vector<CheckResult> selftest(bool quick, GainScaling scaling) {
  const int instances = quick ? 20 : 100;
  std::vector<CheckResult> out;
  out.push_back(target_sinr());
  out.push_back(efficiency_shape());
  out.push_back(mse_forms(instances, 11));
  out.push_back(sinr_scale_invariance(instances, 12));
  out.push_back(mmse_identity(instances, 13));
  out.push_back(yates_axioms(instances, 14));
  out.push_back(closed_form_code_update(instances, 15));
  out.push_back(rls_direct_inverse(15, 100, 1.0, 16));
  out.push_back(tmse_monotone(quick ? 3 : 10, 15, 6, 17));
  out.push_back(estimator_unbiased_z(quick ? 5 : 20, 10000, 5.0, scaling, 18));
  out.push_back(benchmark_equilibrium(quick ? 3 : 10, 8, 0.01, 19));
  return out;
}

}  // namespace clg::checks
