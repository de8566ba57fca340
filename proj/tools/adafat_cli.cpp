// Command-line front end: factor-adjusted multiple testing on CSV panels,
// Monte Carlo comparisons of the procedures, and calibration from returns.
//
// Exit codes: 0 success, 1 unexpected failure, 2 invalid input, 3 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adafat/adafat.hpp"
#include "adafat/error.hpp"
#include "adafat/io.hpp"
#include "adafat/simgen.hpp"
#include "adafat/testing.hpp"

namespace {

using adafat::Error;
using adafat::Method;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

enum class LogLevel { Quiet, Info, Debug };

LogLevel log_level() {
  const char* env = std::getenv("ADAFAT_LOG");
  if (!env) return LogLevel::Info;
  const std::string v(env);
  if (v == "quiet" || v == "0") return LogLevel::Quiet;
  if (v == "debug" || v == "2") return LogLevel::Debug;
  return LogLevel::Info;
}

void log(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) <= static_cast<int>(log_level())) std::cerr << msg << '\n';
}

struct CommonOptions {
  double tau = 0.1;
  double nu = 0.5;
  int kappa = 8;
  std::string penalty = "bai-ng";
  bool clip_pi0 = false;
  int max_iter = 50;
};

void add_common(CLI::App& app, CommonOptions& o) {
  app.add_option("--tau", o.tau, "target FDR level in (0,1)")->capture_default_str();
  app.add_option("--nu", o.nu, "Storey tuning parameter in [0,1)")->capture_default_str();
  app.add_option("--kappa", o.kappa, "upper bound for the factor count")->capture_default_str();
  app.add_option("--penalty", o.penalty, "IC penalty")
      ->check(CLI::IsMember({"bai-ng"}))
      ->capture_default_str();
  app.add_flag("--clip-pi0", o.clip_pi0, "use min(pi0_hat, 1)");
  app.add_option("--max-iter", o.max_iter, "AdaFAT iteration cap")->capture_default_str();
}

adafat::TestingConfig testing_config(const CommonOptions& o) {
  adafat::TestingConfig c;
  c.tau = o.tau;
  c.nu = o.nu;
  c.clip_pi0 = o.clip_pi0;
  c.factor.kappa = o.kappa;
  c.max_iter = o.max_iter;
  c.validate();
  return c;
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const std::string& raw : names) {
    std::stringstream ss(raw);
    std::string name;
    while (std::getline(ss, name, ',')) {
      if (name.empty()) continue;
      const auto m = adafat::parse_method(name);
      if (!m) throw Error(adafat::ErrorCode::BadSpec, "unknown method '" + name + "'");
      if (std::find(out.begin(), out.end(), *m) == out.end()) out.push_back(*m);
    }
  }
  if (out.empty()) throw Error(adafat::ErrorCode::BadSpec, "no method given");
  return out;
}

void require_file(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw Error(adafat::ErrorCode::Io, "input file not found: " + path);
  }
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw Error(adafat::ErrorCode::Io, "cannot write " + out_path);
  out << text;
}

// ---------------------------------------------------------------------------

struct TestCommand {
  std::string y_path;
  std::string x_path;
  std::vector<std::string> methods{"adafat"};
  std::string truth_path;
  std::string out_path;
  bool trace = false;
  bool emit_pvalues = false;
  bool csv = false;
  CommonOptions common;
};

int run_test(const TestCommand& cmd) {
  const adafat::TestingConfig config = testing_config(cmd.common);
  const std::vector<Method> methods = parse_methods(cmd.methods);
  const bool wants_oracle = std::find(methods.begin(), methods.end(), Method::ORA) != methods.end();
  if (wants_oracle && cmd.truth_path.empty()) {
    throw Error(adafat::ErrorCode::MissingOracle, "oracle requires simulation truth (--truth)");
  }

  require_file(cmd.y_path);
  std::optional<adafat::MatrixXd> X;
  if (!cmd.x_path.empty()) {
    require_file(cmd.x_path);
    X = adafat::io::read_csv_matrix(cmd.x_path);
  }
  const adafat::Dataset data = adafat::validate_dataset(adafat::io::read_csv_matrix(cmd.y_path), X);
  log(LogLevel::Debug, "loaded n=" + std::to_string(data.n()) + " m=" + std::to_string(data.m()) +
                           " p=" + std::to_string(data.p()));

  std::optional<adafat::SimulationTruth> truth;
  if (!cmd.truth_path.empty()) {
    require_file(cmd.truth_path);
    truth = adafat::io::read_truth_bundle(cmd.truth_path, data.n(), data.m());
  }

  std::vector<adafat::TestOutcome> outcomes;
  std::optional<adafat::AdaFatTrace> trace;
  for (const Method method : methods) {
    if (method == Method::ADAFAT) {
      adafat::AdaFatResult r = adafat::adafat_run(data, config);
      outcomes.push_back(std::move(r.outcome));
      trace = std::move(r.trace);
    } else {
      outcomes.push_back(adafat::run_procedure(method, data, config, truth ? &*truth : nullptr));
    }
    for (const std::string& w : outcomes.back().warnings) log(LogLevel::Info, "warning: " + w);
  }

  if (cmd.csv) {
    std::ostringstream os;
    adafat::io::write_outcome_csv(os, outcomes);
    emit(cmd.out_path, os.str());
    return kExitOk;
  }
  json j;
  j["schema_version"] = adafat::io::kSchemaVersion;
  j["config"] = adafat::io::to_json(config);
  j["config"]["emit_pvalues"] = cmd.emit_pvalues;
  j["data"] = {{"n", data.n()}, {"m", data.m()}, {"p", data.p()}};
  j["outcomes"] = json::array();
  for (const auto& o : outcomes) j["outcomes"].push_back(adafat::io::to_json(o, cmd.emit_pvalues));
  if (cmd.trace && trace) j["trace"] = adafat::io::to_json(*trace);
  emit(cmd.out_path, j.dump(2) + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SimulateCommand {
  std::string config_path;
  std::vector<std::string> methods{"ori,ora,fatdw,fatld,adafat"};
  std::optional<long> m, n, q, p, reps;
  std::optional<double> pi1, mu_z_scale, alpha_magnitude, mu_x;
  std::optional<std::uint64_t> seed;
  std::string dist;
  std::string mu_z_mode;
  int jobs = 1;
  std::string out_path;
  std::string csv_path;
  std::string dump_dir;
  bool timing = false;
  CommonOptions common;
  CLI::App* app = nullptr;
};

int run_simulate(const SimulateCommand& cmd) {
  adafat::SimConfig config;
  if (!cmd.config_path.empty()) {
    require_file(cmd.config_path);
    std::ifstream in(cmd.config_path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw Error(adafat::ErrorCode::Io, cmd.config_path + ": " + e.what());
    }
    adafat::io::apply_json(j, config);
  }
  auto given = [&](const char* flag) { return cmd.app->count(flag) > 0; };
  if (cmd.m) config.m = *cmd.m;
  if (cmd.n) config.n = *cmd.n;
  if (cmd.q) config.q = *cmd.q;
  if (cmd.p) {
    config.p = *cmd.p;
    config.mu_x = adafat::VectorXd::Constant(config.p, config.mu_x.size() ? config.mu_x(0) : 0.5);
    config.sigma_x = adafat::VectorXd::Ones(config.p);
  }
  if (cmd.mu_x) config.mu_x = adafat::VectorXd::Constant(config.p, *cmd.mu_x);
  if (cmd.reps) config.reps = static_cast<int>(*cmd.reps);
  if (cmd.pi1) config.pi1 = *cmd.pi1;
  if (cmd.mu_z_scale) config.mu_z_scale = *cmd.mu_z_scale;
  if (cmd.alpha_magnitude) config.alpha_magnitude = *cmd.alpha_magnitude;
  if (cmd.seed) config.seed = *cmd.seed;
  if (!cmd.dist.empty()) config.error_dist = *adafat::parse_error_dist(cmd.dist);
  if (!cmd.mu_z_mode.empty()) {
    config.mu_z_mode = cmd.mu_z_mode == "factor-mean" ? adafat::SimConfig::MuZMode::FactorMean
                                                      : adafat::SimConfig::MuZMode::AlphaShift;
  }
  if (given("--tau")) config.testing.tau = cmd.common.tau;
  if (given("--nu")) config.testing.nu = cmd.common.nu;
  if (given("--kappa")) config.testing.factor.kappa = cmd.common.kappa;
  if (given("--clip-pi0")) config.testing.clip_pi0 = cmd.common.clip_pi0;
  if (given("--max-iter")) config.testing.max_iter = cmd.common.max_iter;
  config.validate();
  const std::vector<Method> methods = parse_methods(cmd.methods);

  if (!cmd.dump_dir.empty()) {
    std::filesystem::create_directories(cmd.dump_dir);
    const adafat::SimDraw draw = adafat::generate(config, 0);
    const std::filesystem::path dir(cmd.dump_dir);
    adafat::io::write_csv_matrix((dir / "y.csv").string(), draw.data.Y());
    if (draw.data.has_x()) adafat::io::write_csv_matrix((dir / "x.csv").string(), draw.data.X());
    std::ofstream((dir / "truth.json").string()) << adafat::io::truth_json(draw.truth).dump() << '\n';
    log(LogLevel::Info, "wrote replication 0 to " + cmd.dump_dir);
  }

  const adafat::SimReport report = adafat::run_monte_carlo(config, methods, cmd.jobs);
  json j = adafat::io::to_json(report);
  if (cmd.timing) j["elapsed_seconds"] = report.elapsed_seconds;
  if (!cmd.out_path.empty()) emit(cmd.out_path, j.dump(2) + "\n");
  if (!cmd.csv_path.empty()) {
    std::ostringstream os;
    adafat::io::write_report_csv(os, report);
    emit(cmd.csv_path, os.str());
  }
  std::ostringstream table;
  adafat::io::write_summary_table(table, report);
  std::cout << table.str();
  if (cmd.out_path.empty() && cmd.csv_path.empty()) log(LogLevel::Debug, j.dump());
  log(LogLevel::Debug, "elapsed " + std::to_string(report.elapsed_seconds) + " s");
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct CalibrateCommand {
  std::string returns_path;
  std::string market_path;
  std::string out_path;
  std::optional<double> pi1;
  std::optional<long> reps;
  std::optional<std::uint64_t> seed;
  CommonOptions common;
};

int run_calibrate(const CalibrateCommand& cmd) {
  require_file(cmd.returns_path);
  require_file(cmd.market_path);
  adafat::SimConfig overrides;
  overrides.testing = testing_config(cmd.common);
  if (cmd.pi1) overrides.pi1 = *cmd.pi1;
  if (cmd.reps) overrides.reps = static_cast<int>(*cmd.reps);
  if (cmd.seed) overrides.seed = *cmd.seed;
  const adafat::Calibration cal =
      adafat::calibrate_from_returns(cmd.returns_path, cmd.market_path, overrides);
  log(LogLevel::Info, "calibrated q_hat=" + std::to_string(cal.q_hat));
  emit(cmd.out_path, adafat::io::calibration_json(cal).dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Factor-adjusted large-scale multiple testing (FAT-DW, AdaFAT)"};
  app.require_subcommand(1);

  TestCommand test;
  CLI::App* test_app = app.add_subcommand("test", "run testing procedures on a CSV panel");
  test_app->add_option("--y", test.y_path, "n x m response CSV (headerless)")->required();
  test_app->add_option("--x", test.x_path, "n x p explanatory CSV (no intercept column)");
  test_app->add_option("--method,--methods", test.methods,
                       "ori, ora, fatdw, fatld, adafat, bh (comma separated)")
      ->capture_default_str();
  test_app->add_option("--truth", test.truth_path, "simulation truth bundle (needed by ora)");
  test_app->add_option("--out", test.out_path, "output path (stdout by default)");
  test_app->add_flag("--trace", test.trace, "include the AdaFAT iteration trace");
  test_app->add_flag("--emit-pvalues", test.emit_pvalues, "include p-values and t-scores");
  test_app->add_flag("--csv", test.csv, "write the CSV row form instead of JSON");
  add_common(*test_app, test.common);

  SimulateCommand sim;
  CLI::App* sim_app = app.add_subcommand("simulate", "Monte Carlo comparison of procedures");
  sim.app = sim_app;
  sim_app->add_option("--config", sim.config_path, "JSON config (flags override it)");
  sim_app->add_option("--method,--methods", sim.methods, "methods to compare")
      ->capture_default_str();
  sim_app->add_option("--m", sim.m, "number of tests");
  sim_app->add_option("--n", sim.n, "number of observations");
  sim_app->add_option("--q", sim.q, "number of latent factors");
  sim_app->add_option("--p", sim.p, "number of explanatory variables");
  sim_app->add_option("--pi1", sim.pi1, "true false proportion in [0,1)");
  sim_app->add_option("--mu-z-scale", sim.mu_z_scale, "mu_z = s * mu_x[0] * 1_q");
  sim_app->add_option("--mu-x", sim.mu_x, "mean of every explanatory variable");
  sim_app->add_option("--mu-z-mode", sim.mu_z_mode, "how mu_z enters: alpha-shift or factor-mean")
      ->check(CLI::IsMember({"alpha-shift", "factor-mean"}));
  sim_app->add_option("--alpha-magnitude", sim.alpha_magnitude, "scale of nonzero alpha");
  sim_app->add_option("--reps", sim.reps, "replications");
  sim_app->add_option("--seed", sim.seed, "64-bit seed");
  sim_app->add_option("--dist", sim.dist, "error distribution")->check(CLI::IsMember({"normal", "t3"}));
  sim_app->add_option("--jobs", sim.jobs, "worker threads (0 = all cores)")->capture_default_str();
  sim_app->add_option("--out", sim.out_path, "JSON report path");
  sim_app->add_option("--csv", sim.csv_path, "long-form CSV path (rep,method,fdp,pow)");
  sim_app->add_option("--dump-data", sim.dump_dir, "write replication 0 (y.csv, x.csv, truth.json)");
  sim_app->add_flag("--timing", sim.timing, "record elapsed time in the JSON report");
  add_common(*sim_app, sim.common);

  CalibrateCommand cal;
  CLI::App* cal_app = app.add_subcommand("calibrate", "fit a simulation config from returns");
  cal_app->add_option("--returns", cal.returns_path, "n x m returns CSV")->required();
  cal_app->add_option("--market", cal.market_path, "n x p market factor CSV")->required();
  cal_app->add_option("--out", cal.out_path, "config JSON path (stdout by default)");
  cal_app->add_option("--pi1", cal.pi1, "true false proportion for later simulation");
  cal_app->add_option("--reps", cal.reps, "replications for later simulation");
  cal_app->add_option("--seed", cal.seed, "seed for later simulation");
  add_common(*cal_app, cal.common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*test_app) return run_test(test);
    if (*sim_app) return run_simulate(sim);
    if (*cal_app) return run_calibrate(cal);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return adafat::is_validation_error(e.code()) ? kExitValidation : kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
