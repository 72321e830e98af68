#include <doctest.h>

#include <cmath>
#include <limits>

#include "clg/adaptive.hpp"
#include "clg/checks.hpp"
#include "clg/equilibrium.hpp"

using namespace clg;

namespace {

Vector gaussian(int n, Rng& rng) {
  std::normal_distribution<double> g;
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

AdaptiveConfig config() {
  AdaptiveConfig cfg;
  cfg.gamma_bar = solve_target_sinr(120);
  return cfg;
}

}  // namespace

TEST_CASE("RLS start state") {
  const RlsState rls = RlsState::start(Vector::Unit(3, 1), 0.99, 0.5);
  CHECK((rls.inv_corr - 2.0 * Matrix::Identity(3, 3)).norm() == 0.0);
  CHECK(rls.filter == Vector::Unit(3, 1));
  CHECK_THROWS_AS(RlsState::start(Vector::Zero(3), 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(RlsState::start(Vector::Zero(3), 1.0, 0.0), DomainError);
}

TEST_CASE("RLS inverse against direct inversion") {
  CHECK(checks::rls_direct_inverse(15, 100, 1.0, 101).passed);
  CHECK(checks::rls_direct_inverse(15, 100, 1e-2, 102).passed);
  CHECK(checks::rls_direct_inverse(4, 300, 10.0, 103).passed);
}

TEST_CASE("RLS with forgetting solves the weighted least-squares problem") {
  // d(n) minimises lambda^n eps ||d - d0||^2 + sum lambda^{n-i} (b_i - d^T r_i)^2.
  Rng rng(104);
  const int n = 5;
  const double lambda = 0.97, eps = 0.3;
  const Vector d0 = gaussian(n, rng);
  RlsState rls = RlsState::start(d0, lambda, eps);
  Matrix r_acc = eps * Matrix::Identity(n, n);
  Vector z_acc = eps * d0;
  std::bernoulli_distribution coin(0.5);
  for (int t = 0; t < 60; ++t) {
    const Vector r = gaussian(n, rng);
    const int b = coin(rng) ? 1 : -1;
    const double prior = rls.filter.dot(r) - b;
    CHECK(rls_step(rls, r, b) == doctest::Approx(prior).epsilon(1e-12));
    r_acc = lambda * r_acc + r * r.transpose();
    z_acc = lambda * z_acc + b * r;
  }
  const Vector direct = r_acc.ldlt().solve(z_acc);
  CHECK((rls.filter - direct).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((rls.inv_corr - r_acc.inverse()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("decision-directed RLS uses the sign of the output") {
  RlsState a = RlsState::start(Vector::Unit(2, 0), 1.0, 1.0);
  RlsState b = a;
  Vector r(2);
  r << -0.3, 0.4;
  const double e_dd = rls_step(a, r, std::nullopt);
  const double e_tr = rls_step(b, r, -1);
  CHECK(e_dd == doctest::Approx(-0.3 + 1.0));
  CHECK(e_tr == e_dd);
  CHECK((a.filter - b.filter).norm() == 0.0);
}

TEST_CASE("RLS rejects non-finite input") {
  RlsState rls = RlsState::start(Vector::Unit(2, 0), 1.0, 1.0);
  Vector r(2);
  r << std::numeric_limits<double>::quiet_NaN(), 1.0;
  CHECK_THROWS_AS(rls_step(rls, r, 1), NumericError);
}

TEST_CASE("adaptive code update") {
  AdaptiveUserState u;
  u.rls.filter = Vector::Zero(3);
  CHECK_FALSE(adaptive_code_update(u).has_value());
  u.rls.filter << 3.0, 0.0, -4.0;
  const auto s = adaptive_code_update(u);
  REQUIRE(s.has_value());
  CHECK((*s - Vector(u.rls.filter / 5.0)).norm() == 0.0);
  CHECK(checks::closed_form_code_update(100, 105).passed);
}

TEST_CASE("interference estimate formula and options") {
  AdaptiveUserState u;
  u.rls.filter = Vector::Unit(2, 0);
  u.code = Vector::Constant(2, std::sqrt(0.5));
  u.power = 2.0;
  u.gain = 0.5;
  AdaptiveConfig cfg = config();
  cfg.gamma_bar = 3.0;
  Vector r(2);
  r << 0.1, 7.0;
  // 3 / (0.25 * 0.5) * (0.01 - 2 * 0.25 * 0.5)
  const double expected = 24.0 * (0.01 - 0.25);
  CHECK(stochastic_interference(u, r, cfg) == doctest::Approx(expected));
  cfg.clamp_negative_estimates = true;
  CHECK(stochastic_interference(u, r, cfg) == 0.0);
  cfg.clamp_negative_estimates = false;
  cfg.gain_scaling = GainScaling::kLinearGain;
  CHECK(stochastic_interference(u, r, cfg) == doctest::Approx(expected * 0.5));
  u.rls.filter = Vector::Unit(2, 0) - Vector::Unit(2, 1);
  CHECK_THROWS_AS(stochastic_interference(u, r, cfg), UnservableUserError);
}

TEST_CASE("interference estimate is unbiased") {
  CHECK(checks::estimator_unbiased_z(8, 10000, 5.0, GainScaling::kSquared, 106).passed);
  CHECK_FALSE(checks::estimator_unbiased_z(3, 2000, 5.0, GainScaling::kLinearGain, 107).passed);
}

TEST_CASE("LMS power step") {
  AdaptiveUserState u;
  u.power = 1.0;
  u.p_max = 2.0;
  AdaptiveConfig cfg = config();
  cfg.rho = 0.1;
  CHECK(lms_power_step(u, 1.5, cfg) == doctest::Approx(1.05));
  CHECK(lms_power_step(u, 100.0, cfg) == 2.0);
  CHECK(lms_power_step(u, -100.0, cfg) == cfg.p_floor);
}

TEST_CASE("adaptive config validation") {
  AdaptiveConfig cfg = config();
  CHECK_NOTHROW(cfg.validate());
  cfg.rho = 1.0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = config();
  cfg.gamma_bar = 0.0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = config();
  cfg.training = -1;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
}

namespace {

Population lone_user(double gain, double noise_psd) {
  Population pop;
  pop.dim = 4;
  pop.noise_psd = noise_psd;
  UserProfile u;
  u.code = Vector::Constant(4, 0.5);
  u.gain = gain;
  u.p_max = 1e3;
  u.initial_power = 1.0;
  pop.users.push_back(u);
  return pop;
}

}  // namespace

TEST_CASE("a lone user settles at the power that meets the target") {
  const AdaptiveConfig cfg = config();
  const Population pop = lone_user(0.5, 0.2);
  Rng rng(111);
  const RealizationTrace tr = adaptive_run(pop, cfg, EfficiencyParams{}, 6000, rng);
  // Alone, s = d/||d|| gives SINR p h^2 / (N0/2), so p* = gamma_bar (N0/2) / h^2.
  const double p_star = cfg.gamma_bar * 0.1 / 0.25;
  double mean = 0.0;
  for (int n = 2000; n < 6000; ++n) mean += tr.power[n][0];
  mean /= 4000;
  CHECK(mean == doctest::Approx(p_star).epsilon(0.15));
  CHECK(tr.skipped_code_updates == 0);
}

TEST_CASE("training holds power and code") {
  AdaptiveConfig cfg = config();
  cfg.training = 50;
  const Population pop = lone_user(0.5, 0.2);
  Rng rng(112);
  const RealizationTrace tr = adaptive_run(pop, cfg, EfficiencyParams{}, 60, rng);
  for (int n = 0; n < 50; ++n) CHECK(tr.power[n][0] == 1.0);
  CHECK(tr.power[55][0] != 1.0);
}

TEST_CASE("late joiners and determinism") {
  Rng geo(113);
  const NetworkState s = checks::random_state(6, 3, geo);
  Population pop;
  pop.dim = 6;
  pop.noise_psd = s.noise_psd;
  for (int k = 0; k < 3; ++k) {
    pop.users.push_back({s.codes.col(k), s.gains[k], 100.0, 1.0, k == 2 ? 40 : 1});
  }
  Rng a(7), b(7);
  const RealizationTrace ta = adaptive_run(pop, config(), EfficiencyParams{}, 200, a);
  const RealizationTrace tb = adaptive_run(pop, config(), EfficiencyParams{}, 200, b);
  CHECK(ta.active[38] == 2);
  CHECK(ta.active[39] == 3);
  CHECK(std::isnan(ta.sinr[38][2]));
  CHECK(std::isfinite(ta.sinr[39][2]));
  CHECK(ta.power[110][2] == 1.0);  // still training (joined at 40, T = 80)
  for (int n = 0; n < 200; ++n) {
    for (int k = 0; k < 3; ++k) {
      const double x = ta.utility[n][k], y = tb.utility[n][k];
      CHECK(((std::isnan(x) && std::isnan(y)) || x == y));
    }
  }
}
