// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "clg/checks.hpp"
#include "clg/cli.hpp"

using namespace clg;
namespace fs = std::filesystem;

namespace {

struct Line {
  int id;
  bool passed;
  std::string text;
};

std::string f(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

int jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

Line target() {
  const auto r = checks::target_sinr();
  return {1, r.passed, "target SINR 6.689 (1e-3) / 8.25 dB (0.01 dB): " + r.detail};
}

Line benchmark() {
  const auto r = checks::benchmark_equilibrium(50, 8, 0.01, 1);
  return {2, r.passed, "benchmark N=15 K=8, 50 scenarios: " + r.detail};
}

Line adaptive_gap() {
  ScenarioSpec spec;  // N=15, K=8, 50 realizations
  const double gbar = solve_target_sinr(120);
  AdaptiveConfig acfg;
  acfg.gamma_bar = gbar;
  acfg.training = 80;
  acfg.rho = 0.01;
  EquilibriumConfig ecfg;
  ecfg.gamma_bar = gbar;
  const auto report = run_adaptive_mc(spec, acfg, ecfg, EfficiencyParams{}, 2000, jobs());
  const Trajectory& t = report.trajectory;
  const std::size_t i = 1999;
  const double sinr_gap = t.avg_sinr_db[i] - t.benchmark_sinr_db[i];
  const double power_gap = t.avg_power_dbw[i] - t.benchmark_power_dbw[i];
  const double ratio = t.avg_utility[i] / t.benchmark_utility[i];
  const bool ok = std::abs(sinr_gap) <= 1.0 && power_gap >= 0.0 && power_gap <= 5.0 &&
                  ratio >= 0.6 && report.diverged == 0 && report.benchmark_failures == 0;
  return {3, ok,
          "adaptive vs benchmark at n=2000: SINR gap " + f("%+.3f", sinr_gap) +
              " dB (|.|<=1), power gap " + f("%+.3f", power_gap) + " dB (in [0,5]), utility ratio " +
              f("%.3f", ratio) + " (>=0.6), diverged " + std::to_string(report.diverged)};
}

Line tracking() {
  ScenarioSpec spec;
  spec.arrivals = {{1000, 1}, {1700, 1}};
  const double gbar = solve_target_sinr(120);
  AdaptiveConfig acfg;
  acfg.gamma_bar = gbar;
  EquilibriumConfig ecfg;
  ecfg.gamma_bar = gbar;
  const auto report = run_adaptive_mc(spec, acfg, ecfg, EfficiencyParams{}, 2500, jobs());
  const Trajectory& t = report.trajectory;
  const double target_db = to_db(gbar);
  bool ok = report.diverged == 0 && report.benchmark_failures == 0;
  std::string detail;
  for (std::int64_t a : {1000, 1700}) {
    // Incumbent SINR averaged over the last 50 symbols of the 500-symbol window.
    double sum = 0.0;
    for (std::int64_t n = a + 451; n <= a + 500; ++n) sum += t.tracked_sinr_db[n - 1];
    const double window = sum / 50.0;
    ok = ok && std::isfinite(window) && std::abs(window - target_db) <= 1.0;
    detail += " arrival " + std::to_string(a) + ": " + f("%.3f", window) + " dB at n in [" +
              std::to_string(a + 451) + "," + std::to_string(a + 500) + "];";
  }
  return {4, ok, "incumbent SINR within 1 dB of " + f("%.2f", target_db) + " dB:" + detail};
}

Line estimator() {
  const auto r = checks::estimator_unbiased(20, 10000, 0.02, GainScaling::kSquared, 5);
  const auto z = checks::estimator_unbiased_z(20, 10000, 4.0, GainScaling::kSquared, 5);
  return {5, r.passed,
          "estimator mean, 20 states x 1e4 symbols, 2% rel: " + r.detail + " (same draws: " +
              z.detail + ")"};
}

Line rls() {
  const auto r = checks::rls_direct_inverse(15, 100, 1e-6, 6);
  const auto r1 = checks::rls_direct_inverse(15, 100, 1.0, 6);
  return {6, r.passed && r1.passed,
          "RLS vs direct inverse, N=15, 100 steps, 1e-8: eps=1e-6 " + r.detail + "; eps=1 " +
              r1.detail};
}

Line mmse() {
  const auto r = checks::mmse_identity(100, 7);
  return {7, r.passed, "MMSE identity, 100 instances, 1e-10 rel: " + r.detail};
}

Line yates() {
  const auto r = checks::yates_axioms(100, 8);
  return {8, r.passed, "Yates axioms, alpha in {1.5, 3}: " + r.detail};
}

Line code_update() {
  const auto r = checks::closed_form_code_update(100, 9);
  return {9, r.passed, "closed-form code update, 100 inputs, 1e-12: " + r.detail};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"clg"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return cli::run(static_cast<int>(argv.size()), argv.data(), out, err) == 0;
}

Line determinism() {
  const fs::path root = fs::temp_directory_path() / "clg_acceptance_determinism";
  fs::remove_all(root);
  bool ok = true;
  std::string detail;
  const std::vector<std::vector<std::string>> cases = {
      {"--mode", "static", "--realizations", "6", "--horizon", "400", "--seed", "7"},
      {"--mode", "dynamic", "--arrivals", "150,300", "--realizations", "6", "--horizon", "400",
       "--seed", "7"}};
  for (std::size_t c = 0; c < cases.size(); ++c) {
    std::vector<std::string> csvs;
    for (const char* j : {"1", "1", "4"}) {
      const fs::path dir = root / (std::to_string(c) + "_" + std::to_string(csvs.size()));
      auto args = cases[c];
      args.insert(args.end(), {"--jobs", j, "--out", dir.string()});
      ok = ok && run_cli(args);
      csvs.push_back(slurp(dir / "trajectory.csv"));
    }
    const bool same = !csvs[0].empty() && csvs[0] == csvs[1] && csvs[0] == csvs[2];
    ok = ok && same;
    detail += " " + cases[c][1] + (same ? " identical" : " DIFFERENT") + ";";
  }
  return {10, ok, "byte-identical CSV across runs and --jobs 1/4:" + detail};
}

}  // namespace

int main() {
  const std::vector<std::function<Line()>> criteria = {target, benchmark, adaptive_gap, tracking,
                                                       estimator, rls, mmse, yates, code_update,
                                                       determinism};
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    const Line l = c();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %2d %s  %s [%.1f s]\n", l.id, l.passed ? "PASS" : "FAIL",
                l.text.c_str(), secs);
    std::fflush(stdout);
    failed += l.passed ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
