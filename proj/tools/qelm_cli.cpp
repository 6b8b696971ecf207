// Command-line driver: NMSE sweeps for χ / λ estimation and the invariant
// self-test.

#include "qelm/qelm.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace {

struct RunOptions {
  std::string config_path;
  std::optional<std::size_t> realizations;
  std::optional<std::size_t> steps;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> extensions;
  std::optional<std::size_t> grid;
  std::optional<std::string> out;
  std::optional<std::string> threads;
  bool emit_gnuplot = false;
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::size_t resolve_threads(const RunOptions& opt) {
  std::string value;
  if (opt.threads) {
    value = *opt.threads;
  } else if (const char* env = std::getenv("QELM_THREADS")) {
    value = env;
  } else {
    value = "auto";
  }
  if (value == "auto") return std::max(1U, std::thread::hardware_concurrency());
  std::size_t pos = 0;
  unsigned long n = 0;
  try {
    n = std::stoul(value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != value.size() || n == 0)
    throw std::invalid_argument("--threads: expected a positive integer or 'auto', got '" + value + "'");
  return n;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

/// Config file (if any) with command-line overrides applied, as JSON text.
nlohmann::json merged_config(const RunOptions& opt, qelm::Task task) {
  nlohmann::json cfg = nlohmann::json::object();
  if (!opt.config_path.empty()) {
    try {
      cfg = nlohmann::json::parse(read_file(opt.config_path));
    } catch (const nlohmann::json::parse_error& e) {
      throw std::invalid_argument(opt.config_path + ": malformed JSON: " + e.what());
    }
  }
  if (!cfg.is_object()) throw std::invalid_argument("config: top level must be an object");
  auto& exp = cfg["experiment"];
  if (exp.is_null()) exp = nlohmann::json::object();
  exp["task"] = qelm::to_string(task);
  if (opt.realizations) exp["realizations"] = *opt.realizations;
  if (opt.steps) exp["steps"] = *opt.steps;
  if (opt.seed) exp["master_seed"] = *opt.seed;
  if (opt.extensions) exp["extensions"] = split_csv(*opt.extensions);
  if (opt.grid) exp["grid_size"] = *opt.grid;
  if (opt.out) exp["output_path"] = *opt.out;
  return cfg;
}

int run_tasks(const RunOptions& opt, const std::vector<qelm::Task>& tasks) {
  std::vector<qelm::ExperimentSpec> specs;
  for (auto task : tasks) {
    auto cfg = merged_config(opt, task);
    if (tasks.size() > 1 &&
        (cfg["experiment"].contains("fixed_values") || cfg["experiment"].contains("grid_range")))
      throw std::invalid_argument(
          "sweep: fixed_values and grid_range are task specific; run estimate-chi and "
          "estimate-lambda separately to override them");
    specs.push_back(qelm::parse_spec(cfg.dump()));
  }
  const std::size_t threads = resolve_threads(opt);
  const std::string out_path = specs.front().output_path;

  std::vector<qelm::NmseResult> all;
  for (const auto& spec : specs) {
    const auto start = std::chrono::steady_clock::now();
    auto rows = qelm::run_experiment(spec, threads);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    std::cerr << qelm::to_string(spec.task) << ": " << spec.realizations << " realizations, "
              << rows.size() << " rows, " << elapsed.count() << " s on " << threads
              << " thread(s)\n";
    all.insert(all.end(), rows.begin(), rows.end());
  }
  qelm::write_csv(all, out_path);
  std::cerr << "wrote " << out_path << "\n";
  if (opt.emit_gnuplot) {
    const std::string gp_path = out_path + ".gp";
    std::ofstream gp(gp_path);
    if (!gp) throw std::runtime_error("cannot write '" + gp_path + "'");
    gp << qelm::gnuplot_script(all, out_path);
    std::cerr << "wrote " << gp_path << "\n";
  }
  return 0;
}

int run_selftest() {
  bool ok = true;
  for (const auto& r : qelm::run_selftest()) {
    std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name;
    if (!r.passed) std::cout << ": " << r.detail;
    std::cout << "\n";
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

void add_run_flags(CLI::App* cmd, RunOptions& opt) {
  cmd->add_option("--config", opt.config_path, "JSON experiment configuration")->check(CLI::ExistingFile);
  cmd->add_option("--realizations", opt.realizations, "number of coupling realizations R");
  cmd->add_option("--steps", opt.steps, "collision steps K");
  cmd->add_option("--seed", opt.seed, "master seed");
  cmd->add_option("--extensions", opt.extensions,
                  "comma-separated list of none,past_step,fixed_step:<k>,extra_observable");
  cmd->add_option("--grid", opt.grid, "number of target-parameter grid points");
  cmd->add_option("--out", opt.out, "output CSV path");
  cmd->add_option("--threads", opt.threads, "worker threads (integer or 'auto'; env QELM_THREADS)");
  cmd->add_flag("--emit-gnuplot", opt.emit_gnuplot, "also write <out>.gp plotting the CSV");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collision-model QELM parameter estimation"};
  app.require_subcommand(1);

  RunOptions chi_opt, lambda_opt, sweep_opt;
  auto* chi = app.add_subcommand("estimate-chi", "estimate the partial-swap strength chi at fixed lambda");
  auto* lam = app.add_subcommand("estimate-lambda", "estimate the depolarization rate lambda at fixed chi");
  auto* sweep = app.add_subcommand("sweep", "run both estimation tasks into one CSV");
  auto* self = app.add_subcommand("selftest", "run the invariant self-test suite");
  add_run_flags(chi, chi_opt);
  add_run_flags(lam, lambda_opt);
  add_run_flags(sweep, sweep_opt);

  if (argc <= 1) {
    std::cerr << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code == 0) return 0;
    std::cerr << app.help();
    return code;
  }

  try {
    if (*chi) return run_tasks(chi_opt, {qelm::Task::estimate_chi});
    if (*lam) return run_tasks(lambda_opt, {qelm::Task::estimate_lambda});
    if (*sweep) return run_tasks(sweep_opt, {qelm::Task::estimate_chi, qelm::Task::estimate_lambda});
    if (*self) return run_selftest();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
