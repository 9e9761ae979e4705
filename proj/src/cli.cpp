#include "daur/cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>
#include <vector>

#include "daur/daur.hpp"
#include "daur/io.hpp"
#include "daur/scenario.hpp"

namespace daur::cli {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr Baseline kBaselines[] = {Baseline::RUCAA, Baseline::GUCAA, Baseline::AAUCO,
                                   Baseline::GUCRO};

struct MethodRun {
  std::string method;
  double dpe = 0;
  int iterations = 0;
  double wall_seconds = 0;
  bool flagged = false;
  Allocation alloc;
  IterationTrace trace; // DAUR only
};

void merge_tolerances(SolverSettings& s, const SolverSettings& ov) {
  if (ov.tol_outer > 0) s.tol_outer = ov.tol_outer;
  if (ov.tol_fp > 0) s.tol_fp = ov.tol_fp;
  if (ov.tol_qcqp > 0) s.tol_qcqp = ov.tol_qcqp;
}

// Runs DAUR then the baselines, stopping early (flagged) once the deadline
// passes; completed methods keep their results.
std::vector<MethodRun> run_all_methods(const ScenarioParams& params, std::uint64_t seed,
                                       const SolverSettings& settings,
                                       Clock::time_point deadline, bool* out_of_budget) {
  std::vector<MethodRun> out;
  {
    const auto t0 = Clock::now();
    const DaurResult r = run_daur(params, settings);
    MethodRun mr{"DAUR", r.dpe, r.outer_iterations,
                 std::chrono::duration<double>(Clock::now() - t0).count(), r.flagged,
                 r.alloc, r.trace};
    out.push_back(std::move(mr));
  }
  for (Baseline k : kBaselines) {
    if (Clock::now() > deadline) {
      if (out_of_budget) *out_of_budget = true;
      break;
    }
    const auto t0 = Clock::now();
    const BaselineResult r = run_baseline(k, params, seed, settings);
    out.push_back({baseline_name(k), r.dpe, r.iterations,
                   std::chrono::duration<double>(Clock::now() - t0).count(), r.flagged,
                   r.alloc, {}});
  }
  return out;
}

const std::map<std::string, std::string>& sweep_param_keys() {
  static const std::map<std::string, std::string> keys = {
      {"bandwidth", "bandwidth_hz"},   {"server_freq", "server_freq_hz"},
      {"user_freq", "user_freq_hz"},   {"user_power", "user_power_w"},
      {"weight_ratio", "omega_t"},     {"preference", "preference"},
  };
  return keys;
}

// Applies one sweep grid value to the scenario overrides.
// weight_ratio v means (omega_t, omega_e) = (v, 1-v); preference v is the
// multiplier a in c = a/(5e5).
void apply_sweep_value(const std::string& param, double v, OverrideMap& ov) {
  if (param == "weight_ratio") {
    if (v <= 0 || v >= 1)
      throw ConfigError("weight_ratio sweep values must lie in (0,1)");
    ov["omega_t"] = v;
    ov["omega_e"] = 1.0 - v;
  } else if (param == "preference") {
    ov["preference"] = v / 5e5;
  } else {
    ov[sweep_param_keys().at(param)] = v;
  }
}

int cmd_run(const std::string& config_path, std::int64_t seed_override,
            const std::string& out_dir, const SolverSettings& tol_override,
            double max_minutes) {
  Config cfg = load_config(config_path);
  merge_tolerances(cfg.solver, tol_override);
  if (seed_override >= 0) cfg.topology.seed = static_cast<std::uint64_t>(seed_override);
  const ScenarioParams params = generate_scenario(cfg.topology, cfg.overrides);
  fs::create_directories(out_dir);

  bool out_of_budget = false;
  const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                           std::chrono::duration<double>(max_minutes * 60.0));
  const auto runs =
      run_all_methods(params, cfg.topology.seed, cfg.solver, deadline, &out_of_budget);
  std::ostringstream summary;
  summary << "method,dpe,iterations,wall_seconds\n";
  bool flagged = false;
  for (const auto& r : runs) {
    summary << r.method << "," << format_double(r.dpe) << "," << r.iterations << ","
            << format_double(r.wall_seconds) << "\n";
    flagged = flagged || r.flagged;
    write_file(out_dir + "/alloc_" + r.method + ".csv", allocation_to_csv(r.alloc));
    if (r.method == "DAUR") write_file(out_dir + "/trace.csv", r.trace.to_csv());
  }
  write_file(out_dir + "/summary.csv", summary.str());
  return (flagged || out_of_budget) ? 2 : 0;
}

struct SweepJob {
  double value = 0;
  std::uint64_t seed = 0;
};

int cmd_sweep(const std::string& config_path, std::string param, double from, double to,
              int steps, int seeds, const std::string& out_dir, bool chart,
              const SolverSettings& tol_override, double max_minutes) {
  Config cfg = load_config(config_path);
  merge_tolerances(cfg.solver, tol_override);
  if (param.empty()) {
    if (cfg.sweep.parameter.empty())
      throw ConfigError("no sweep parameter given (flag --param or config sweep_param)");
    param = cfg.sweep.parameter;
    from = cfg.sweep.from;
    to = cfg.sweep.to;
    steps = cfg.sweep.steps;
    seeds = cfg.sweep.seeds;
  }
  if (!sweep_param_keys().count(param))
    throw ConfigError("unknown sweep parameter '" + param + "'");
  if (steps < 1 || seeds < 1) throw ConfigError("sweep needs steps >= 1 and seeds >= 1");

  std::vector<double> grid(steps);
  for (int i = 0; i < steps; ++i)
    grid[i] = (steps == 1) ? from : from + (to - from) * i / (steps - 1);

  std::vector<SweepJob> jobs;
  for (double v : grid)
    for (int s = 0; s < seeds; ++s)
      jobs.push_back({v, cfg.topology.seed + static_cast<std::uint64_t>(s)});

  struct JobResult {
    bool done = false;
    bool flagged = false;
    std::map<std::string, double> dpe;
  };
  std::vector<JobResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> out_of_budget{false};
  const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                           std::chrono::duration<double>(max_minutes * 60.0));

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      if (Clock::now() > deadline) {
        out_of_budget = true;
        return;
      }
      try {
        OverrideMap ov = cfg.overrides;
        apply_sweep_value(param, jobs[i].value, ov);
        TopologySpec spec = cfg.topology;
        spec.seed = jobs[i].seed;
        const ScenarioParams params = generate_scenario(spec, ov);
        bool over = false;
        const auto runs = run_all_methods(params, spec.seed, cfg.solver, deadline, &over);
        if (over) {
          out_of_budget = true;
          continue; // partial job, dropped from the averages
        }
        for (const auto& r : runs) {
          results[i].dpe[r.method] = r.dpe;
          results[i].flagged = results[i].flagged || r.flagged;
        }
        results[i].done = true;
      } catch (const std::exception& e) {
        std::cerr << "sweep job " << i << " failed: " << e.what() << "\n";
        results[i].flagged = true;
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned n_threads = std::min<std::size_t>(hw, jobs.size());
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  // deterministic merge by (value, seed) job order
  std::vector<std::string> methods = {"DAUR"};
  for (Baseline k : kBaselines) methods.push_back(baseline_name(k));
  std::ostringstream csv;
  csv << "param,value,method,mean_dpe,std_dpe,seeds\n";
  std::vector<SweepSeries> series(methods.size());
  bool flagged = out_of_budget.load();
  for (int gi = 0; gi < steps; ++gi) {
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      double sum = 0, sum2 = 0;
      int count = 0;
      for (int s = 0; s < seeds; ++s) {
        const auto& jr = results[gi * seeds + s];
        if (!jr.done) continue;
        const double v = jr.dpe.at(methods[mi]);
        sum += v;
        sum2 += v * v;
        ++count;
        flagged = flagged || jr.flagged;
      }
      if (count == 0) continue;
      const double mean = sum / count;
      const double var = std::max(0.0, sum2 / count - mean * mean);
      csv << param << "," << format_double(grid[gi]) << "," << methods[mi] << ","
          << format_double(mean) << "," << format_double(std::sqrt(var)) << "," << count
          << "\n";
      series[mi].label = methods[mi];
      series[mi].x.push_back(grid[gi]);
      series[mi].y.push_back(mean);
    }
  }
  fs::create_directories(out_dir);
  write_file(out_dir + "/sweep.csv", csv.str());
  if (chart) write_file(out_dir + "/sweep.svg",
                        sweep_chart_svg(param, "mean DPE", series));
  return flagged ? 2 : 0;
}

} // namespace

int run_main(int argc, const char* const* argv) {
  CLI::App app{"DPE-aware user association and resource allocation experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  std::int64_t seed_override = -1;
  SolverSettings tol_override;
  tol_override.tol_outer = tol_override.tol_fp = tol_override.tol_qcqp = -1;
  double max_minutes = 10.0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config file")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--tol-outer", tol_override.tol_outer, "outer loop tolerance");
    sub->add_option("--tol-fp", tol_override.tol_fp, "FP loop tolerance");
    sub->add_option("--tol-qcqp", tol_override.tol_qcqp, "QCQP loop tolerance");
    sub->add_option("--max-minutes", max_minutes, "wall-clock budget");
  };

  CLI::App* run = app.add_subcommand("run", "single scenario: DAUR plus all baselines");
  add_common(run);
  run->add_option("--seed", seed_override, "override the config seed");

  CLI::App* sweep = app.add_subcommand("sweep", "parameter sweep averaged over seeds");
  add_common(sweep);
  std::string param;
  std::string range;
  int seeds = 1;
  bool chart = false;
  sweep->add_option("--param", param,
                    "bandwidth|server_freq|user_freq|user_power|weight_ratio|preference");
  sweep->add_option("--range", range, "from:to:steps");
  sweep->add_option("--seeds", seeds, "seeds per grid point");
  sweep->add_flag("--chart", chart, "also write sweep.svg");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 1 : 0;
  }

  try {
    if (run->parsed())
      return cmd_run(config_path, seed_override, out_dir, tol_override, max_minutes);
    double from = 0, to = 0;
    int steps = 0;
    if (!range.empty()) {
      std::istringstream rs(range);
      std::string a, b, c;
      if (!std::getline(rs, a, ':') || !std::getline(rs, b, ':') || !std::getline(rs, c))
        throw ConfigError("--range must be from:to:steps");
      from = std::stod(a);
      to = std::stod(b);
      steps = std::stoi(c);
    }
    return cmd_sweep(config_path, param, from, to, steps, seeds, out_dir, chart,
                     tol_override, max_minutes);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

} // namespace daur::cli
