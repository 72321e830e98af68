#include "clg/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <thread>

namespace clg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Runs task(i) for i in [0, count) on up to `jobs` threads.
void parallel_for(int count, int jobs, const std::function<void(int)>& task) {
  jobs = std::clamp(jobs, 1, std::max(count, 1));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::jthread> workers;
  workers.reserve(jobs);
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (int i = next++; i < count; i = next++) task(i);
    });
  }
}

double mean_of(const Vector& v) { return v.size() == 0 ? kNaN : v.mean(); }

BenchmarkPoint point_of(const EquilibriumResult& eq) {
  return {mean_of(eq.utility), mean_of(eq.sinr), mean_of(eq.state.powers)};
}

NetworkState state_of(const Population& population, int users) {
  NetworkState state;
  state.noise_psd = population.noise_psd;
  state.codes.resize(population.dim, users);
  state.powers.resize(users);
  state.gains.resize(users);
  state.p_max.resize(users);
  for (int k = 0; k < users; ++k) {
    const auto& u = population.users[k];
    state.codes.col(k) = u.code;
    state.powers[k] = u.initial_power;
    state.gains[k] = u.gain;
    state.p_max[k] = u.p_max;
  }
  return state;
}

struct Segment {
  std::int64_t start = 1;
  int users = 0;
  std::int64_t incumbents_before = 1;  // incumbents joined strictly before this
};

std::vector<Segment> segments_of(const ScenarioSpec& spec) {
  std::vector<Segment> out{{1, spec.initial_users, std::numeric_limits<std::int64_t>::max()}};
  int users = spec.initial_users;
  for (const auto& a : spec.arrivals) {
    users += a.users;
    out.push_back({a.epoch, users, a.epoch});
  }
  return out;
}

struct RealizationOutcome {
  bool diverged = false;
  bool benchmark_ok = true;
  std::string message;
  std::vector<BenchmarkPoint> segment_points;
  std::vector<bool> segment_ok;
  std::vector<double> utility, sinr, power;
  std::vector<double> tracked_sum, tracked_count;
  std::int64_t skipped = 0;
};

}  // namespace

void ScenarioSpec::validate() const {
  if (processing_gain < 1) throw DomainError("processing gain must be positive");
  if (initial_users < 0) throw DomainError("initial user count must be >= 0");
  if (!(d_min > 0.0) || !(d_max >= d_min)) throw DomainError("distance range must satisfy 0 < d_min <= d_max");
  if (!(noise_psd > 0.0)) throw DomainError("noise PSD must be positive");
  if (!(initial_power_fraction > 0.0 && initial_power_fraction <= 1.0)) {
    throw DomainError("initial power fraction must lie in (0, 1]");
  }
  if (realizations < 1) throw DomainError("at least one realization required");
  std::int64_t last = 1;
  for (const auto& a : arrivals) {
    if (a.epoch <= last) throw DomainError("arrival epochs must be strictly increasing and > 1");
    if (a.users < 1) throw DomainError("an arrival must add at least one user");
    last = a.epoch;
  }
}

double sample_channel(double distance, Rng& rng) {
  if (!(distance > 0.0)) throw DomainError("distance must be positive");
  const double sigma = std::sqrt(2.0 / std::numbers::pi) / (distance * distance);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double h = 0.0;
  while (!(h > 0.0)) {
    // Inverse CDF of 1 - exp(-h^2 / (2 sigma^2)).
    h = sigma * std::sqrt(-2.0 * std::log1p(-unit(rng)));
  }
  return h;
}

Matrix sample_codes(int n, int k, Rng& rng) {
  if (n < 1 || k < 0) throw DomainError("invalid code matrix shape");
  std::bernoulli_distribution coin(0.5);
  const double chip = 1.0 / std::sqrt(static_cast<double>(n));
  Matrix codes(n, k);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < n; ++i) codes(i, j) = coin(rng) ? chip : -chip;
  }
  return codes;
}

NetworkState build_state(const ScenarioSpec& spec, Rng& rng) {
  spec.validate();
  const int users = spec.initial_users;
  NetworkState state;
  state.noise_psd = spec.noise_psd;
  state.codes = sample_codes(spec.processing_gain, users, rng);
  state.gains.resize(users);
  std::uniform_real_distribution<double> distance(spec.d_min, spec.d_max);
  for (int k = 0; k < users; ++k) state.gains[k] = sample_channel(distance(rng), rng);
  state.p_max = Vector::Constant(users, spec.p_max_watts());
  state.powers = spec.initial_power_fraction * state.p_max;
  return state;
}

Population build_population(const ScenarioSpec& spec, Rng& rng) {
  const NetworkState initial = build_state(spec, rng);
  Population out;
  out.dim = spec.processing_gain;
  out.noise_psd = spec.noise_psd;
  for (int k = 0; k < initial.users(); ++k) {
    out.users.push_back({initial.codes.col(k), initial.gains[k], initial.p_max[k],
                         initial.powers[k], 1});
  }
  std::uniform_real_distribution<double> distance(spec.d_min, spec.d_max);
  const double cap = spec.p_max_watts();
  for (const auto& arrival : spec.arrivals) {
    for (int j = 0; j < arrival.users; ++j) {
      UserProfile u;
      u.code = sample_codes(spec.processing_gain, 1, rng).col(0);
      u.gain = sample_channel(distance(rng), rng);
      u.p_max = cap;
      u.initial_power = spec.initial_power_fraction * cap;
      u.joins_at = arrival.epoch;
      out.users.push_back(std::move(u));
    }
  }
  return out;
}

Rng realization_rng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(stream)};
  return Rng(seq);
}

BenchmarkReport run_benchmark(const ScenarioSpec& spec, const EquilibriumConfig& cfg,
                              const EfficiencyParams& params, int jobs) {
  spec.validate();
  BenchmarkReport report;
  report.realizations.resize(spec.realizations);
  parallel_for(spec.realizations, jobs, [&](int r) {
    Rng rng = realization_rng(spec.seed, r, 0);
    report.realizations[r] = solve_nash_equilibrium(build_state(spec, rng), cfg, params);
  });

  BenchmarkPoint sum;
  int included = 0;
  for (int r = 0; r < spec.realizations; ++r) {
    const auto& eq = report.realizations[r];
    if (!eq.converged) {
      ++report.non_converged;
      report.diagnostics.push_back("realization " + std::to_string(r) + ": " + eq.diagnostic);
      continue;
    }
    const BenchmarkPoint p = point_of(eq);
    sum.utility += p.utility;
    sum.sinr += p.sinr;
    sum.power += p.power;
    ++included;
  }
  if (included > 0) {
    report.average = {sum.utility / included, sum.sinr / included, sum.power / included};
  } else {
    report.average = {kNaN, kNaN, kNaN};
  }
  return report;
}

AdaptiveReport run_adaptive_mc(const ScenarioSpec& spec, const AdaptiveConfig& adaptive_cfg,
                               const EquilibriumConfig& eq_cfg, const EfficiencyParams& params,
                               std::int64_t horizon, int jobs) {
  spec.validate();
  adaptive_cfg.validate();
  if (horizon < 1) throw DomainError("horizon must be >= 1");
  const auto segments = segments_of(spec);
  const std::size_t steps = static_cast<std::size_t>(horizon);
  auto segment_at = [&](std::int64_t n) {
    std::size_t s = 0;
    while (s + 1 < segments.size() && segments[s + 1].start <= n) ++s;
    return s;
  };

  std::vector<RealizationOutcome> outcomes(spec.realizations);
  parallel_for(spec.realizations, jobs, [&](int r) {
    RealizationOutcome& out = outcomes[r];
    Rng geometry = realization_rng(spec.seed, r, 0);
    Rng symbols = realization_rng(spec.seed, r, 1);
    const Population population = build_population(spec, geometry);

    std::vector<std::vector<bool>> unclamped;
    for (const auto& seg : segments) {
      const EquilibriumResult eq =
          solve_nash_equilibrium(state_of(population, seg.users), eq_cfg, params);
      out.segment_points.push_back(point_of(eq));
      out.segment_ok.push_back(eq.converged);
      if (!eq.converged) {
        out.benchmark_ok = false;
        out.message += "benchmark segment at n=" + std::to_string(seg.start) + ": " +
                       eq.diagnostic + "; ";
      }
      std::vector<bool> free(seg.users);
      for (int k = 0; k < seg.users; ++k) free[k] = !eq.clamped[k];
      unclamped.push_back(std::move(free));
    }

    RealizationTrace trace;
    try {
      trace = adaptive_run(population, adaptive_cfg, params, horizon, symbols);
    } catch (const NumericError& e) {
      out.diverged = true;
      out.message += e.what();
      return;
    }
    out.skipped = trace.skipped_code_updates;
    out.utility.resize(steps);
    out.sinr.resize(steps);
    out.power.resize(steps);
    out.tracked_sum.assign(steps, 0.0);
    out.tracked_count.assign(steps, 0.0);
    const int total = static_cast<int>(population.users.size());
    for (std::size_t i = 0; i < steps; ++i) {
      const std::int64_t n = static_cast<std::int64_t>(i) + 1;
      const std::size_t s = segment_at(n);
      double u = 0.0, g = 0.0, p = 0.0;
      int active = 0;
      for (int k = 0; k < total; ++k) {
        if (std::isnan(trace.sinr[i][k])) continue;
        u += trace.utility[i][k];
        g += trace.sinr[i][k];
        p += trace.power[i][k];
        ++active;
        const bool incumbent = population.users[k].joins_at < segments[s].incumbents_before;
        if (incumbent && unclamped[s][k]) {
          out.tracked_sum[i] += trace.sinr[i][k];
          out.tracked_count[i] += 1.0;
        }
      }
      out.utility[i] = active > 0 ? u / active : kNaN;
      out.sinr[i] = active > 0 ? g / active : kNaN;
      out.power[i] = active > 0 ? p / active : kNaN;
    }
  });

  AdaptiveReport report;
  report.realizations = spec.realizations;
  Trajectory& t = report.trajectory;
  t.active_users.resize(steps);
  for (auto* series : {&t.avg_utility, &t.avg_sinr_db, &t.avg_power_dbw, &t.benchmark_utility,
                       &t.benchmark_sinr_db, &t.benchmark_power_dbw, &t.tracked_sinr_db}) {
    series->assign(steps, kNaN);
  }

  for (int r = 0; r < spec.realizations; ++r) {
    const auto& o = outcomes[r];
    if (o.diverged) ++report.diverged;
    if (!o.benchmark_ok) ++report.benchmark_failures;
    if (!o.message.empty()) {
      report.diagnostics.push_back("realization " + std::to_string(r) + ": " + o.message);
    }
    report.skipped_code_updates += o.skipped;
  }

  // Benchmark lines, one value per user set.
  std::vector<BenchmarkPoint> seg_avg(segments.size(), {kNaN, kNaN, kNaN});
  for (std::size_t s = 0; s < segments.size(); ++s) {
    BenchmarkPoint sum;
    int count = 0;
    for (const auto& o : outcomes) {
      if (!o.segment_ok[s]) continue;
      sum.utility += o.segment_points[s].utility;
      sum.sinr += o.segment_points[s].sinr;
      sum.power += o.segment_points[s].power;
      ++count;
    }
    if (count > 0) seg_avg[s] = {sum.utility / count, sum.sinr / count, sum.power / count};
  }

  for (std::size_t i = 0; i < steps; ++i) {
    const std::int64_t n = static_cast<std::int64_t>(i) + 1;
    const std::size_t s = segment_at(n);
    t.active_users[i] = segments[s].users;
    t.benchmark_utility[i] = seg_avg[s].utility;
    t.benchmark_sinr_db[i] = to_db(seg_avg[s].sinr);
    t.benchmark_power_dbw[i] = to_db(seg_avg[s].power);

    double u = 0.0, g = 0.0, p = 0.0, tracked = 0.0, tracked_n = 0.0;
    int count = 0;
    for (const auto& o : outcomes) {
      if (o.diverged) continue;
      u += o.utility[i];
      g += o.sinr[i];
      p += o.power[i];
      ++count;
      if (o.benchmark_ok) {
        tracked += o.tracked_sum[i];
        tracked_n += o.tracked_count[i];
      }
    }
    if (count > 0) {
      t.avg_utility[i] = u / count;
      t.avg_sinr_db[i] = to_db(g / count);
      t.avg_power_dbw[i] = to_db(p / count);
    }
    if (tracked_n > 0.0) t.tracked_sinr_db[i] = to_db(tracked / tracked_n);
  }

  t.realization_utility.resize(spec.realizations);
  t.realization_sinr.resize(spec.realizations);
  t.realization_power.resize(spec.realizations);
  for (int r = 0; r < spec.realizations; ++r) {
    t.realization_utility[r] = std::move(outcomes[r].utility);
    t.realization_sinr[r] = std::move(outcomes[r].sinr);
    t.realization_power[r] = std::move(outcomes[r].power);
  }
  return report;
}

}  // namespace clg
