#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "daur/cli.hpp"
#include "daur/io.hpp"
#include "daur/model.hpp"
#include "daur/scenario.hpp"

using namespace daur;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("daur_cli_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

int run_cli(std::initializer_list<std::string> args) {
  std::vector<const char*> argv = {"daur"};
  std::vector<std::string> hold(args);
  for (const auto& a : hold) argv.push_back(a.c_str());
  return cli::run_main(static_cast<int>(argv.size()), argv.data());
}

const char* kSmallConfig =
    "seed = 7\nusers = 4\nservers = 2\nradius_m = 1000\n";

} // namespace

TEST_CASE("run writes the five-method summary and is byte-deterministic") {
  TempDir tmp;
  const std::string cfg = (tmp.path / "run.cfg").string();
  write_file(cfg, kSmallConfig);
  const std::string out1 = (tmp.path / "out1").string();
  const std::string out2 = (tmp.path / "out2").string();
  REQUIRE(run_cli({"run", "--config", cfg, "--out", out1}) == 0);
  REQUIRE(run_cli({"run", "--config", cfg, "--out", out2}) == 0);

  const std::string summary = read_file(out1 + "/summary.csv");
  CHECK(summary.rfind("method,dpe,iterations,wall_seconds\n", 0) == 0);
  for (const char* m : {"DAUR", "RUCAA", "GUCAA", "AAUCO", "GUCRO"})
    CHECK(summary.find(m) != std::string::npos);

  // wall times differ between runs; every other artifact must be identical
  CHECK(read_file(out1 + "/trace.csv").substr(0, 40) ==
        read_file(out2 + "/trace.csv").substr(0, 40));
  for (const char* m : {"DAUR", "RUCAA", "GUCAA", "AAUCO", "GUCRO"}) {
    const std::string f = std::string("/alloc_") + m + ".csv";
    CHECK(read_file(out1 + f) == read_file(out2 + f));
  }
}

TEST_CASE("summary DPE values are reproducible from the serialized allocations") {
  TempDir tmp;
  const std::string cfg = (tmp.path / "run.cfg").string();
  write_file(cfg, kSmallConfig);
  const std::string out = (tmp.path / "out").string();
  REQUIRE(run_cli({"run", "--config", cfg, "--out", out}) == 0);

  const Config conf = load_config(cfg);
  const ScenarioParams params = generate_scenario(conf.topology, conf.overrides);
  const std::string summary = read_file(out + "/summary.csv");
  std::istringstream in(summary);
  std::string line;
  std::getline(in, line); // header
  while (std::getline(in, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    const std::string method = line.substr(0, c1);
    const double dpe = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    const Allocation a = allocation_from_csv(read_file(out + "/alloc_" + method + ".csv"));
    CHECK(dpe_objective(params, a) == doctest::Approx(dpe).epsilon(1e-12));
  }
}

TEST_CASE("seed flag overrides the config seed") {
  TempDir tmp;
  const std::string cfg = (tmp.path / "run.cfg").string();
  write_file(cfg, kSmallConfig);
  const std::string out1 = (tmp.path / "a").string();
  const std::string out2 = (tmp.path / "b").string();
  REQUIRE(run_cli({"run", "--config", cfg, "--out", out1, "--seed", "99"}) == 0);
  REQUIRE(run_cli({"run", "--config", cfg, "--out", out2}) == 0);
  CHECK(read_file(out1 + "/summary.csv") != read_file(out2 + "/summary.csv"));
}

TEST_CASE("config errors exit with code 1 and say which key") {
  TempDir tmp;
  const std::string cfg = (tmp.path / "bad.cfg").string();
  write_file(cfg, "seed = 1\nbandwidth_hz = -1\n");
  CHECK(run_cli({"run", "--config", cfg, "--out", (tmp.path / "o").string()}) == 1);
  const std::string missing = (tmp.path / "missing.cfg").string();
  write_file(missing, "users = 4\n");
  CHECK(run_cli({"run", "--config", missing, "--out", (tmp.path / "o2").string()}) == 1);
  CHECK(run_cli({"run", "--config", (tmp.path / "nofile.cfg").string(), "--out",
                 (tmp.path / "o3").string()}) == 1);
}

TEST_CASE("sweep produces the per-point per-method table and a chart") {
  TempDir tmp;
  const std::string cfg = (tmp.path / "sweep.cfg").string();
  write_file(cfg, "seed = 3\nusers = 3\nservers = 2\n");
  const std::string out = (tmp.path / "sw").string();
  REQUIRE(run_cli({"sweep", "--config", cfg, "--out", out, "--param", "bandwidth",
                   "--range", "5e6:10e6:2", "--seeds", "2", "--chart"}) == 0);
  const std::string csv = read_file(out + "/sweep.csv");
  CHECK(csv.rfind("param,value,method,mean_dpe,std_dpe,seeds\n", 0) == 0);
  CHECK(csv.find("bandwidth,5000000") != std::string::npos);
  CHECK(csv.find("DAUR") != std::string::npos);
  CHECK(csv.find("GUCRO") != std::string::npos);
  const std::string svg = read_file(out + "/sweep.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);

  // determinism across invocations (thread pool must not leak into output)
  const std::string out2 = (tmp.path / "sw2").string();
  REQUIRE(run_cli({"sweep", "--config", cfg, "--out", out2, "--param", "bandwidth",
                   "--range", "5e6:10e6:2", "--seeds", "2"}) == 0);
  CHECK(read_file(out + "/sweep.csv") == read_file(out2 + "/sweep.csv"));
}

TEST_CASE("sweep rejects unknown parameters") {
  TempDir tmp;
  const std::string cfg = (tmp.path / "sweep.cfg").string();
  write_file(cfg, "seed = 3\nusers = 2\nservers = 1\n");
  CHECK(run_cli({"sweep", "--config", cfg, "--out", (tmp.path / "o").string(), "--param",
                 "warp_factor", "--range", "1:2:2"}) == 1);
}

TEST_CASE("allocation CSV round-trips exactly") {
  TopologySpec spec;
  spec.seed = 4;
  spec.n_users = 3;
  spec.n_servers = 2;
  const ScenarioParams p = generate_scenario(spec);
  Allocation a;
  a.x = MatrixXd::Zero(3, 2);
  a.x(0, 1) = a.x(1, 0) = a.x(2, 1) = 1.0;
  a.phi_off = VectorXd::LinSpaced(3, 0.1, 0.9);
  a.gamma = MatrixXd::Constant(3, 2, 0.5);
  a.phi_bw = MatrixXd::Constant(3, 2, 1.0 / 7.0);
  a.rho = VectorXd::Constant(3, 0.123456789012345678);
  a.zeta = MatrixXd::Constant(3, 2, 0.25);
  a.psi = VectorXd::Ones(3);
  const Allocation b = allocation_from_csv(allocation_to_csv(a));
  CHECK(b.x == a.x);
  CHECK(b.phi_off == a.phi_off);
  CHECK(b.rho == a.rho);
  CHECK(dpe_objective(p, a) == dpe_objective(p, b));
}
