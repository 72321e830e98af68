#include "clg/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "clg/checks.hpp"

#ifndef CLG_VERSION
#define CLG_VERSION "0.1.0"
#endif

namespace clg::cli {

using nlohmann::json;

const char* const kTrajectoryHeader =
    "n,active_users,avg_utility_bit_per_joule,avg_sinr_db,avg_power_dbw,"
    "benchmark_utility,benchmark_sinr_db,benchmark_power_dbw";

const char* const kBenchmarkHeader =
    "realization,converged,outer_iterations,sweeps,clamped_users,"
    "avg_utility_bit_per_joule,avg_sinr_db,avg_power_dbw";

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool fault_injected() {
  const char* v = std::getenv("CLG_FAULT_INJECT");
  return v != nullptr && *v != '\0' && std::string(v) != "0";
}

}  // namespace

void RunConfig::resolve() {
  static const std::vector<std::string> modes = {"static", "dynamic", "benchmark", "gamma",
                                                 "selftest"};
  if (std::find(modes.begin(), modes.end(), mode) == modes.end()) {
    throw DomainError("unknown mode '" + mode + "'");
  }
  if (mode == "dynamic" && arrivals.empty()) arrivals = {1000, 1700};
  if (mode != "dynamic" && !arrivals.empty()) {
    throw DomainError("--arrivals only applies to --mode dynamic");
  }
  if (horizon == 0) horizon = mode == "dynamic" ? 2500 : 2000;
  if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (horizon < 1) throw DomainError("horizon must be positive");
  if (!(max_failure_fraction >= 0.0 && max_failure_fraction <= 1.0)) {
    throw DomainError("max_failure_fraction must lie in [0, 1]");
  }
  if (mode == "gamma" || mode == "selftest") return;
  scenario_of(*this).validate();
  efficiency_of(*this).validate();
  AdaptiveConfig probe = adaptive_of(*this, 1.0);
  probe.validate();
}

json to_json(const RunConfig& c) {
  return json{{"mode", c.mode},
              {"users", c.users},
              {"gain", c.gain},
              {"packet_size", c.packet_size},
              {"info_symbols", c.info_symbols},
              {"rate", c.rate},
              {"train", c.train},
              {"rho", c.rho},
              {"lambda", c.lambda},
              {"epsilon", c.epsilon},
              {"horizon", c.horizon},
              {"realizations", c.realizations},
              {"seed", c.seed},
              {"arrivals", c.arrivals},
              {"out", c.out},
              {"jobs", c.jobs},
              {"quick", c.quick},
              {"noise_psd", c.noise_psd},
              {"pmax_db", c.pmax_db},
              {"d_min", c.d_min},
              {"d_max", c.d_max},
              {"initial_power_fraction", c.initial_power_fraction},
              {"clamp_negative_estimates", c.clamp_negative_estimates},
              {"max_failure_fraction", c.max_failure_fraction}};
}

RunConfig from_json(const json& in) {
  const json& j = in.contains("config") && in.at("config").is_object() ? in.at("config") : in;
  if (!j.is_object()) throw DomainError("config must be a JSON object");
  RunConfig c;
  const json known = to_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw DomainError("unknown config key '" + key + "'");
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("mode", c.mode);
  get("users", c.users);
  get("gain", c.gain);
  get("packet_size", c.packet_size);
  get("info_symbols", c.info_symbols);
  get("rate", c.rate);
  get("train", c.train);
  get("rho", c.rho);
  get("lambda", c.lambda);
  get("epsilon", c.epsilon);
  get("horizon", c.horizon);
  get("realizations", c.realizations);
  get("seed", c.seed);
  get("arrivals", c.arrivals);
  get("out", c.out);
  get("jobs", c.jobs);
  get("quick", c.quick);
  get("noise_psd", c.noise_psd);
  get("pmax_db", c.pmax_db);
  get("d_min", c.d_min);
  get("d_max", c.d_max);
  get("initial_power_fraction", c.initial_power_fraction);
  get("clamp_negative_estimates", c.clamp_negative_estimates);
  get("max_failure_fraction", c.max_failure_fraction);
  return c;
}

std::vector<std::int64_t> parse_arrivals(const std::string& text) {
  std::vector<std::int64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw DomainError("bad arrival epoch '" + item + "'");
    out.push_back(v);
  }
  return out;
}

ScenarioSpec scenario_of(const RunConfig& c) {
  ScenarioSpec s;
  s.processing_gain = c.gain;
  s.initial_users = c.users;
  for (std::int64_t e : c.arrivals) s.arrivals.push_back({e, 1});
  s.d_min = c.d_min;
  s.d_max = c.d_max;
  s.noise_psd = c.noise_psd;
  s.p_max_db = c.pmax_db;
  s.initial_power_fraction = c.initial_power_fraction;
  s.seed = c.seed;
  s.realizations = c.realizations;
  return s;
}

AdaptiveConfig adaptive_of(const RunConfig& c, double gamma_bar) {
  AdaptiveConfig a;
  a.training = c.train;
  a.rho = c.rho;
  a.gamma_bar = gamma_bar;
  a.lambda = c.lambda;
  a.epsilon = c.epsilon;
  a.clamp_negative_estimates = c.clamp_negative_estimates;
  return a;
}

EquilibriumConfig equilibrium_of(double gamma_bar) {
  EquilibriumConfig e;
  e.gamma_bar = gamma_bar;
  return e;
}

EfficiencyParams efficiency_of(const RunConfig& c) {
  return {c.packet_size, c.info_symbols, c.rate};
}

void write_trajectory_csv(std::ostream& os, const Trajectory& t) {
  os << kTrajectoryHeader << '\n';
  for (std::size_t i = 0; i < t.active_users.size(); ++i) {
    os << i + 1 << ',' << t.active_users[i] << ',' << num(t.avg_utility[i]) << ','
       << num(t.avg_sinr_db[i]) << ',' << num(t.avg_power_dbw[i]) << ','
       << num(t.benchmark_utility[i]) << ',' << num(t.benchmark_sinr_db[i]) << ','
       << num(t.benchmark_power_dbw[i]) << '\n';
  }
}

void write_benchmark_csv(std::ostream& os, const BenchmarkReport& report) {
  os << kBenchmarkHeader << '\n';
  for (std::size_t r = 0; r < report.realizations.size(); ++r) {
    const EquilibriumResult& eq = report.realizations[r];
    const int k = eq.state.users();
    int clamped = 0;
    for (bool c : eq.clamped) clamped += c ? 1 : 0;
    os << r << ',' << (eq.converged ? 1 : 0) << ',' << eq.outer_iterations << ',' << eq.sweeps
       << ',' << clamped << ',' << num(eq.utility.sum() / k) << ','
       << num(to_db(eq.sinr.sum() / k)) << ',' << num(to_db(eq.state.powers.sum() / k)) << '\n';
  }
}

namespace {

struct Outcome {
  int failures = 0;
  int realizations = 0;
  json summary;
  std::vector<std::string> diagnostics;
};

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

int cmd_gamma(const RunConfig& c, std::ostream& out) {
  const double g = solve_target_sinr(c.packet_size);
  out << std::fixed << std::setprecision(3) << g << "  " << std::setprecision(2) << to_db(g)
      << " dB\n";
  return 0;
}

int cmd_selftest(const RunConfig& c, std::ostream& out) {
  const GainScaling scaling = fault_injected() ? GainScaling::kLinearGain : GainScaling::kSquared;
  const auto start = std::chrono::steady_clock::now();
  const auto results = checks::selftest(c.quick, scaling);
  int failed = 0;
  for (const auto& r : results) {
    out << (r.passed ? "PASS" : "FAIL") << "  " << std::left << std::setw(52) << r.name << "  "
        << r.detail << '\n';
    failed += r.passed ? 0 : 1;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out << results.size() - failed << "/" << results.size() << " checks passed in "
      << std::setprecision(3) << secs << " s\n";
  return failed == 0 ? 0 : 1;
}

int cmd_run(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const std::string started = utc_now();
  const double gamma_bar = solve_target_sinr(c.packet_size);
  const ScenarioSpec spec = scenario_of(c);
  const EfficiencyParams params = efficiency_of(c);
  const EquilibriumConfig eq_cfg = equilibrium_of(gamma_bar);

  std::ostringstream csv;
  Outcome o;
  std::string csv_name;
  if (c.mode == "benchmark") {
    const BenchmarkReport report = run_benchmark(spec, eq_cfg, params, c.jobs);
    write_benchmark_csv(csv, report);
    csv_name = "benchmark.csv";
    o.failures = report.non_converged;
    o.realizations = static_cast<int>(report.realizations.size());
    o.diagnostics = report.diagnostics;
    o.summary = {{"non_converged", report.non_converged},
                 {"avg_utility_bit_per_joule", report.average.utility},
                 {"avg_sinr_db", to_db(report.average.sinr)},
                 {"avg_power_dbw", to_db(report.average.power)}};
  } else {
    const AdaptiveReport report =
        run_adaptive_mc(spec, adaptive_of(c, gamma_bar), eq_cfg, params, c.horizon, c.jobs);
    write_trajectory_csv(csv, report.trajectory);
    csv_name = "trajectory.csv";
    o.failures = report.diverged + report.benchmark_failures;
    o.realizations = report.realizations;
    o.diagnostics = report.diagnostics;
    o.summary = {{"diverged", report.diverged},
                 {"benchmark_failures", report.benchmark_failures},
                 {"skipped_code_updates", report.skipped_code_updates}};
  }

  const std::filesystem::path dir(c.out);
  std::filesystem::create_directories(dir);
  const auto csv_path = dir / csv_name;
  const auto manifest_path = dir / "manifest.json";
  write_file(csv_path, csv.str());

  json manifest = {{"config", to_json(c)},
                   {"version", CLG_VERSION},
                   {"seed", c.seed},
                   {"gamma_bar", gamma_bar},
                   {"started_at", started},
                   {"finished_at", utc_now()},
                   {"outputs", {{"csv", csv_path.string()}, {"manifest", manifest_path.string()}}},
                   {"summary", o.summary}};
  write_file(manifest_path, manifest.dump(2) + "\n");
  out << "wrote " << csv_path.string() << " and " << manifest_path.string() << '\n';

  for (const auto& d : o.diagnostics) err << "diagnostic: " << d << '\n';
  const double allowed = c.max_failure_fraction * o.realizations;
  if (o.failures > allowed) {
    err << "error: " << o.failures << " of " << o.realizations
        << " realizations failed (allowed fraction " << c.max_failure_fraction << ")\n";
    return 2;
  }
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Energy-efficient joint code, receiver and power control for DS/CDMA uplinks"};
  app.footer(
      "Units: SINR in dB is 10*log10(gamma); powers are in dBW (10*log10 of watts);\n"
      "utility is in bit/J. A JSON config file takes the long flag names with '-'\n"
      "replaced by '_' as flat keys; flags given on the command line override it.\n"
      "A manifest.json written by a previous run is also accepted as a config.\n"
      "Set CLG_FAULT_INJECT=1 to make selftest use a deliberately wrong estimator.");

  RunConfig f;
  std::string config_path;
  std::string arrivals_text;
  app.add_option("--config", config_path, "JSON config file (flat keys or a run manifest)");
  app.add_option("--mode", f.mode, "static | dynamic | benchmark | gamma | selftest")
      ->check(CLI::IsMember({"static", "dynamic", "benchmark", "gamma", "selftest"}));
  app.add_option("--users", f.users, "Users present from the first symbol (K)");
  app.add_option("--gain", f.gain, "Processing gain N (code length)");
  app.add_option("--packet-size", f.packet_size, "Packet length M in symbols");
  app.add_option("--info-symbols", f.info_symbols, "Information symbols per packet L");
  app.add_option("--rate", f.rate, "Transmission rate R in bit/s");
  app.add_option("--train", f.train, "Training symbols T after a user joins");
  app.add_option("--rho", f.rho, "LMS power step size");
  app.add_option("--lambda", f.lambda, "RLS forgetting factor");
  app.add_option("--epsilon", f.epsilon, "RLS initial correlation R(0) = epsilon I");
  app.add_option("--horizon", f.horizon, "Symbols per realization (0: 2000 static, 2500 dynamic)");
  app.add_option("--realizations", f.realizations, "Monte Carlo realizations");
  app.add_option("--seed", f.seed, "Master seed");
  app.add_option("--arrivals", arrivals_text, "Comma-separated arrival epochs (dynamic mode)");
  app.add_option("--out", f.out, "Output directory");
  app.add_option("--jobs", f.jobs, "Worker threads (0: available parallelism)");
  app.add_flag("--quick", f.quick, "Reduced-size selftest");
  app.add_option("--noise-psd", f.noise_psd, "Noise PSD N0 in W/Hz");
  app.add_option("--pmax-db", f.pmax_db, "Per-user power cap in dBW");
  app.add_option("--d-min", f.d_min, "Minimum user distance in m");
  app.add_option("--d-max", f.d_max, "Maximum user distance in m");
  app.add_option("--initial-power-fraction", f.initial_power_fraction,
                 "Initial power as a fraction of the cap");
  app.add_flag("--clamp-negative-estimates", f.clamp_negative_estimates,
               "Clamp negative per-symbol interference estimates to zero");
  app.add_option("--max-failure-fraction", f.max_failure_fraction,
                 "Tolerated fraction of failed realizations before a nonzero exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    json merged = to_json(RunConfig{});
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw DomainError("cannot read config file " + config_path);
      merged = to_json(from_json(json::parse(in)));
    }
    if (!arrivals_text.empty()) f.arrivals = parse_arrivals(arrivals_text);
    const json flags = to_json(f);
    for (const auto& [key, value] : flags.items()) {
      std::string flag = "--" + key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      if (app.count(flag) > 0) merged[key] = value;
    }
    RunConfig c = from_json(merged);
    c.resolve();

    if (c.mode == "gamma") return cmd_gamma(c, out);
    if (c.mode == "selftest") return cmd_selftest(c, out);
    return cmd_run(c, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace clg::cli
