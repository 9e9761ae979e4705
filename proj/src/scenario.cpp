#include "daur/scenario.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace daur {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

} // namespace

double StreamRng::uniform(Kind kind, std::uint64_t i, std::uint64_t j,
                          std::uint64_t draw) const {
  std::uint64_t s = seed_;
  for (std::uint64_t part : {static_cast<std::uint64_t>(kind), i, j, draw})
    s = splitmix64(s ^ part);
  std::mt19937_64 gen(s);
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

double StreamRng::exponential(Kind kind, std::uint64_t i, std::uint64_t j,
                              std::uint64_t draw) const {
  const double u = uniform(kind, i, j, draw);
  return -std::log1p(-u);
}

namespace {

struct Point {
  double x, y;
};

Point disk_point(const StreamRng& rng, StreamRng::Kind kind, std::uint64_t idx,
                 double radius, std::uint64_t attempt) {
  const double u1 = rng.uniform(kind, idx, 0, 2 * attempt);
  const double u2 = rng.uniform(kind, idx, 0, 2 * attempt + 1);
  const double r = radius * std::sqrt(u1);
  const double a = 2.0 * M_PI * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

double get(const OverrideMap& ov, const ScenarioDefaults&, const std::string& key,
           double fallback) {
  auto it = ov.find(key);
  return it == ov.end() ? fallback : it->second;
}

} // namespace

ScenarioParams generate_scenario(const TopologySpec& spec, const OverrideMap& overrides) {
  if (spec.radius_m <= 0) throw std::invalid_argument("generate_scenario: radius must be positive");
  if (spec.n_users < 1 || spec.n_servers < 1)
    throw std::invalid_argument("generate_scenario: counts must be >= 1");
  static const std::set<std::string> known = {
      "bandwidth_hz",      "noise_dbm_per_hz", "user_power_w",
      "user_freq_hz",      "server_freq_hz",   "cycles_per_bit_user",
      "cycles_per_bit_server", "cycles_per_bit_blockgen", "use_blockgen_cycles",
      "verify_cycles",     "kappa_user",       "kappa_server",
      "task_bytes_min",    "task_bytes_max",   "block_size_bytes",
      "wired_rate_bps",    "omega_b",          "omega_t",
      "omega_e",           "preference",       "pin_fading"};
  for (const auto& [k, v] : overrides) {
    if (!known.count(k))
      throw std::invalid_argument("generate_scenario: unknown override '" + k + "'");
    if (k != "noise_dbm_per_hz" && k != "pin_fading" && k != "use_blockgen_cycles" && v <= 0)
      throw std::invalid_argument("generate_scenario: override '" + k + "' must be positive");
  }

  const ScenarioDefaults def;
  const int N = spec.n_users, M = spec.n_servers;
  const StreamRng rng(spec.seed);
  const bool pin_fading = get(overrides, def, "pin_fading", 0.0) != 0.0;

  ScenarioParams p;
  p.n_users = N;
  p.n_servers = M;
  const double eta_u = get(overrides, def, "cycles_per_bit_user", def.cycles_per_bit_user);
  const double eta_s = get(overrides, def, "cycles_per_bit_server", def.cycles_per_bit_server);
  const double eta_bg =
      get(overrides, def, "cycles_per_bit_blockgen", def.cycles_per_bit_blockgen);
  p.eta_u = VectorXd::Constant(N, eta_u);
  p.f_u = VectorXd::Constant(N, get(overrides, def, "user_freq_hz", def.user_freq_hz));
  p.p_u = VectorXd::Constant(N, get(overrides, def, "user_power_w", def.user_power_w));
  p.kappa_u = VectorXd::Constant(N, get(overrides, def, "kappa_user", def.kappa_user));
  const double pref = get(overrides, def, "preference", def.preference);
  p.c_u = VectorXd::Constant(N, pref);
  p.eta_s = VectorXd::Constant(M, eta_s);
  p.eta_bgen = VectorXd::Constant(M, eta_bg);
  p.f_s = VectorXd::Constant(M, get(overrides, def, "server_freq_hz", def.server_freq_hz));
  p.b_s = VectorXd::Constant(M, get(overrides, def, "bandwidth_hz", def.bandwidth_hz));
  p.kappa_s = VectorXd::Constant(M, get(overrides, def, "kappa_server", def.kappa_server));
  p.r_wired = VectorXd::Constant(M, get(overrides, def, "wired_rate_bps", def.wired_rate_bps));
  p.c_us = MatrixXd::Constant(N, M, pref);
  p.noise_psd =
      std::pow(10.0, (get(overrides, def, "noise_dbm_per_hz", def.noise_dbm_per_hz) - 30.0) / 10.0);
  p.block_size_bits = 8.0 * get(overrides, def, "block_size_bytes", def.block_size_bytes);
  p.eta_v = get(overrides, def, "verify_cycles", def.verify_cycles);
  p.omega_b = get(overrides, def, "omega_b", def.omega_b);
  p.omega_t = get(overrides, def, "omega_t", def.omega_t);
  p.omega_e = get(overrides, def, "omega_e", def.omega_e);
  p.use_bgen_cycles =
      get(overrides, def, "use_blockgen_cycles", def.use_blockgen_cycles ? 1.0 : 0.0) != 0.0;

  const double bytes_min = get(overrides, def, "task_bytes_min", def.task_bytes_min);
  const double bytes_max = get(overrides, def, "task_bytes_max", def.task_bytes_max);
  if (bytes_max < bytes_min)
    throw std::invalid_argument("generate_scenario: task_bytes_max < task_bytes_min");
  p.d.resize(N);
  for (int n = 0; n < N; ++n) {
    const double u = rng.uniform(StreamRng::kTaskSize, n, 0, 0);
    p.d(n) = 8.0 * (bytes_min + u * (bytes_max - bytes_min));
  }

  std::vector<Point> users(N), servers(M);
  for (int n = 0; n < N; ++n) users[n] = disk_point(rng, StreamRng::kUserPos, n, spec.radius_m, 0);
  for (int m = 0; m < M; ++m)
    servers[m] = disk_point(rng, StreamRng::kServerPos, m, spec.radius_m, 0);

  p.gain.resize(N, M);
  for (int n = 0; n < N; ++n) {
    for (int m = 0; m < M; ++m) {
      double dx = users[n].x - servers[m].x, dy = users[n].y - servers[m].y;
      double dist = std::hypot(dx, dy);
      // zero-distance pairs are resampled (user moves; keeps server draws intact)
      for (std::uint64_t attempt = 1; dist == 0.0; ++attempt) {
        users[n] = disk_point(rng, StreamRng::kUserPos, n, spec.radius_m, attempt);
        dx = users[n].x - servers[m].x;
        dy = users[n].y - servers[m].y;
        dist = std::hypot(dx, dy);
      }
      const double pl_db = 128.1 + 37.6 * std::log10(dist / 1000.0);
      const double fade = pin_fading ? 1.0 : rng.exponential(StreamRng::kFading, n, m, 0);
      p.gain(n, m) = std::pow(10.0, -pl_db / 10.0) * fade;
    }
  }

  p.validate();
  return p;
}

namespace {

const std::set<std::string>& scenario_keys() {
  static const std::set<std::string> keys = {
      "bandwidth_hz",      "noise_dbm_per_hz", "user_power_w",
      "user_freq_hz",      "server_freq_hz",   "cycles_per_bit_user",
      "cycles_per_bit_server", "cycles_per_bit_blockgen", "use_blockgen_cycles",
      "verify_cycles",     "kappa_user",       "kappa_server",
      "task_bytes_min",    "task_bytes_max",   "block_size_bytes",
      "wired_rate_bps",    "omega_b",          "omega_t",
      "omega_e",           "preference"};
  return keys;
}

[[noreturn]] void config_fail(const std::string& origin, int line, const std::string& what) {
  std::ostringstream os;
  os << origin << ":" << line << ": " << what;
  throw ConfigError(os.str());
}

} // namespace

Config parse_config_text(const std::string& text, const std::string& origin) {
  Config cfg;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  bool seen_seed = false;
  std::set<std::string> seen;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw.substr(0, raw.find('#'));
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) config_fail(origin, lineno, "expected key = value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty()) config_fail(origin, lineno, "empty key or value");
    if (!seen.insert(key).second) config_fail(origin, lineno, "duplicate key '" + key + "'");

    auto parse_num = [&](double lo, double hi) {
      std::size_t pos = 0;
      double v = 0;
      try {
        v = std::stod(val, &pos);
      } catch (const std::exception&) {
        config_fail(origin, lineno, "cannot parse value '" + val + "' for '" + key + "'");
      }
      if (pos != val.size())
        config_fail(origin, lineno, "trailing characters in value '" + val + "'");
      if (v < lo || v > hi)
        config_fail(origin, lineno, "value " + val + " for '" + key + "' outside [" +
                                        std::to_string(lo) + ", " + std::to_string(hi) + "]");
      return v;
    };
    auto parse_bool = [&]() {
      if (val == "true" || val == "1") return true;
      if (val == "false" || val == "0") return false;
      config_fail(origin, lineno, "expected true/false for '" + key + "'");
    };

    const double inf = std::numeric_limits<double>::infinity();
    if (key == "seed") {
      cfg.topology.seed = static_cast<std::uint64_t>(parse_num(0, 1.8e19));
      seen_seed = true;
    } else if (key == "users") {
      cfg.topology.n_users = static_cast<int>(parse_num(1, 10000));
    } else if (key == "servers") {
      cfg.topology.n_servers = static_cast<int>(parse_num(1, 1000));
    } else if (key == "radius_m") {
      cfg.topology.radius_m = parse_num(1e-6, inf);
    } else if (key == "tol_outer") {
      cfg.solver.tol_outer = parse_num(1e-12, 1);
    } else if (key == "tol_fp") {
      cfg.solver.tol_fp = parse_num(1e-12, 1);
    } else if (key == "tol_qcqp") {
      cfg.solver.tol_qcqp = parse_num(1e-12, 1);
    } else if (key == "max_outer") {
      cfg.solver.max_outer = static_cast<int>(parse_num(1, 1e6));
    } else if (key == "max_fp") {
      cfg.solver.max_fp = static_cast<int>(parse_num(1, 1e6));
    } else if (key == "max_qcqp") {
      cfg.solver.max_qcqp = static_cast<int>(parse_num(1, 1e6));
    } else if (key == "max_minutes") {
      cfg.solver.max_minutes = parse_num(1e-6, inf);
    } else if (key == "argmax_rounding") {
      cfg.solver.argmax_rounding = parse_bool();
    } else if (key == "uniform_average") {
      cfg.solver.uniform_average = parse_bool();
    } else if (key == "sweep_param") {
      cfg.sweep.parameter = val;
    } else if (key == "sweep_from") {
      cfg.sweep.from = parse_num(-inf, inf);
    } else if (key == "sweep_to") {
      cfg.sweep.to = parse_num(-inf, inf);
    } else if (key == "sweep_steps") {
      cfg.sweep.steps = static_cast<int>(parse_num(1, 100000));
    } else if (key == "sweep_seeds") {
      cfg.sweep.seeds = static_cast<int>(parse_num(1, 100000));
    } else if (key == "use_blockgen_cycles") {
      cfg.overrides[key] = parse_bool() ? 1.0 : 0.0;
    } else if (scenario_keys().count(key)) {
      // physical knobs: positive, except the per-Hz noise level in dBm
      const double lo = (key == "noise_dbm_per_hz") ? -inf : 1e-300;
      const double v = parse_num(lo, inf);
      if (key != "noise_dbm_per_hz" && v <= 0)
        config_fail(origin, lineno, "'" + key + "' must be positive");
      cfg.overrides[key] = v;
    } else {
      config_fail(origin, lineno, "unknown key '" + key + "'");
    }
  }
  if (!seen_seed) config_fail(origin, lineno + 1, "missing required key 'seed'");
  if (cfg.overrides.count("task_bytes_min") && cfg.overrides.count("task_bytes_max") &&
      cfg.overrides["task_bytes_max"] < cfg.overrides["task_bytes_min"])
    throw ConfigError(origin + ": task_bytes_max < task_bytes_min");
  if (!cfg.sweep.parameter.empty() && cfg.sweep.steps < 1)
    throw ConfigError(origin + ": sweep_param given without sweep_steps");
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

} // namespace daur
