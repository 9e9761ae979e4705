// scenario.hpp - seeded topology/channel/task generation and experiment
// configuration files.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "daur/model.hpp"

namespace daur {

struct TopologySpec {
  double radius_m = 1000.0;
  int n_users = 10;
  int n_servers = 2;
  std::uint64_t seed = 1;
};

// Deterministic stream-split RNG: every (kind, i, j) tuple owns an
// independent substream derived from the scenario seed by splitmix64 mixing,
// so adding users never perturbs server or fading draws of existing entities.
// Uniform doubles come from the top 53 bits of mt19937_64 output, which the
// standard pins down bit-for-bit across platforms.
class StreamRng {
 public:
  enum Kind : std::uint64_t {
    kUserPos = 1,
    kServerPos = 2,
    kFading = 3,
    kTaskSize = 4,
    kBaselineAssoc = 5,
  };
  explicit StreamRng(std::uint64_t seed) : seed_(seed) {}

  // u in [0,1)
  double uniform(Kind kind, std::uint64_t i, std::uint64_t j, std::uint64_t draw) const;
  // unit-mean exponential (Rayleigh power gain)
  double exponential(Kind kind, std::uint64_t i, std::uint64_t j, std::uint64_t draw) const;

 private:
  std::uint64_t seed_;
};

// Named defaults used when a config or override leaves a knob unset.
struct ScenarioDefaults {
  double bandwidth_hz = 10e6;
  double noise_dbm_per_hz = -134.0;
  double user_power_w = 0.2;
  double user_freq_hz = 1e9;
  double server_freq_hz = 20e9;
  double cycles_per_bit_user = 279.62;
  double cycles_per_bit_server = 279.62;
  double cycles_per_bit_blockgen = 737.5;
  bool use_blockgen_cycles = false;
  double verify_cycles = 1e6;
  double kappa_user = 1e-27;
  double kappa_server = 1e-27;
  double task_bytes_min = 500e3;
  double task_bytes_max = 2000e3;
  double block_size_bytes = 8e6;
  double wired_rate_bps = 15e6;
  double omega_b = 1.0;
  double omega_t = 0.5;
  double omega_e = 0.5;
  double preference = 1.0 / 5e5; // c_n and c_{n,m}
};

using OverrideMap = std::map<std::string, double>;

// Draws positions uniformly in the disk, applies the 128.1+37.6*log10(d_km)
// path loss with a unit-mean exponential fading draw per pair, scales task
// sizes from the configured byte range, and fills every other parameter from
// the defaults unless overridden. Overrides use the config-file keys; the
// test hook "pin_fading" (=1) replaces fading draws by 1. Identical
// (spec, overrides) inputs yield bit-identical output.
ScenarioParams generate_scenario(const TopologySpec& spec,
                                 const OverrideMap& overrides = {});

struct SolverSettings {
  double tol_outer = 1e-3; // eps3
  double tol_fp = 1e-3;    // eps1
  double tol_qcqp = 1e-3;  // eps2
  int max_outer = 20;
  int max_fp = 100;
  int max_qcqp = 60;
  double max_minutes = 10.0;
  bool argmax_rounding = false;   // plain argmax instead of Hungarian slots
  bool uniform_average = false;   // baselines split 1/N instead of 1/load
};

struct SweepPlan {
  std::string parameter; // empty when the config declares no sweep
  double from = 0, to = 0;
  int steps = 0;
  int seeds = 1;
};

struct Config {
  TopologySpec topology;
  OverrideMap overrides; // scenario knobs that differ from defaults
  SolverSettings solver;
  SweepPlan sweep;
};

// Parses the documented key=value schema. Unknown keys, missing units
// (wrong key spelling), parse failures, and out-of-range values throw
// ConfigError carrying the line number.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

Config load_config(const std::string& path);
Config parse_config_text(const std::string& text, const std::string& origin);

} // namespace daur
