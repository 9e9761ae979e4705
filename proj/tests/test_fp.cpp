#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "daur/daur.hpp"
#include "daur/fp.hpp"
#include "daur/scenario.hpp"
#include "oracle.hpp"

using namespace daur;

namespace {

ScenarioParams make_params(int n_users, int n_servers, std::uint64_t seed) {
  TopologySpec spec;
  spec.n_users = n_users;
  spec.n_servers = n_servers;
  spec.seed = seed;
  return generate_scenario(spec);
}

Allocation random_feasible_alloc(const ScenarioParams& p, std::uint64_t seed) {
  const int N = p.n_users, M = p.n_servers;
  const StreamRng rng(seed);
  Allocation a;
  a.x = MatrixXd::Zero(N, M);
  a.phi_off.resize(N);
  a.gamma.resize(N, M);
  a.phi_bw.resize(N, M);
  a.rho.resize(N);
  a.zeta.resize(N, M);
  a.psi.resize(N);
  for (int n = 0; n < N; ++n) {
    const int m =
        std::min<int>(M - 1, static_cast<int>(rng.uniform(StreamRng::kBaselineAssoc, n, 0, 1) * M));
    a.x(n, m) = 1.0;
    a.phi_off(n) = 0.05 + 0.9 * rng.uniform(StreamRng::kBaselineAssoc, n, 1, 0);
    a.rho(n) = 0.05 + 0.95 * rng.uniform(StreamRng::kBaselineAssoc, n, 2, 0);
    a.psi(n) = 0.05 + 0.95 * rng.uniform(StreamRng::kBaselineAssoc, n, 3, 0);
    for (int mm = 0; mm < M; ++mm) {
      a.gamma(n, mm) = 0.05 + 0.9 * rng.uniform(StreamRng::kBaselineAssoc, n, 4, mm);
      a.phi_bw(n, mm) = (0.05 + 0.95 * rng.uniform(StreamRng::kBaselineAssoc, n, 5, mm)) / N;
      a.zeta(n, mm) = (0.05 + 0.95 * rng.uniform(StreamRng::kBaselineAssoc, n, 6, mm)) / N;
    }
  }
  return a;
}

} // namespace

TEST_CASE("alpha/theta at the hand-computed single-user point") {
  ScenarioParams p = make_params(1, 1, 2);
  p.d(0) = 8e6;
  Allocation a = initialize(p).first;
  const AuxState aux = update_alpha_theta(p, a);
  // cost_u = 1.11848 at phi=0.5, psi=1 (omega_t = omega_e = 0.5)
  CHECK(aux.alpha_u(0) == doctest::Approx(0.8940705242829554).epsilon(1e-3));
  CHECK(aux.theta_u(0) == doctest::Approx(7.152564194263644).epsilon(1e-3));
}

TEST_CASE("unit cost gives unit alpha") {
  ScenarioParams p = make_params(1, 1, 3);
  // with psi=1, phi=0: cost_u = (w_t eta/f + w_e kappa eta f^2) d = 2.7962e-7 d
  p.d(0) = 1.0 / 2.7962e-7;
  Allocation a = initialize(p).first;
  a.phi_off(0) = 0.0;
  const AuxState aux = update_alpha_theta(p, a);
  CHECK(aux.alpha_u(0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("theta_s is exactly zero for unconnected pairs") {
  ScenarioParams p = make_params(4, 2, 5);
  const auto [a, aux] = initialize(p);
  for (int n = 0; n < 4; ++n)
    for (int m = 0; m < 2; ++m)
      if (a.x(n, m) == 0.0) CHECK(aux.theta_s(n, m) == 0.0);
}

TEST_CASE("upsilon closed form and the transform identity") {
  ScenarioParams p = make_params(1, 1, 7);
  Allocation a = initialize(p).first;
  const MatrixXd ups = update_upsilon(p, a);
  const Allocation f = a.floored();
  const double chi = f.rho(0) * p.p_u(0) * f.phi_off(0) * p.d(0);
  const double r = transmission_rate(p, 0, 0, f.phi_bw(0, 0), f.rho(0));
  CHECK(ups(0, 0) == doctest::Approx(1.0 / (2.0 * chi * r)).epsilon(1e-12));
  CHECK(chi * chi * ups(0, 0) + 1.0 / (4.0 * r * r * ups(0, 0)) ==
        doctest::Approx(chi / r).epsilon(1e-12));

  // scalar example: chi=2, r=4 -> u = 1/16 and the identity gives 0.5
  const double u = 1.0 / (2.0 * 2.0 * 4.0);
  CHECK(u == doctest::Approx(1.0 / 16.0));
  CHECK(4.0 * u + 1.0 / (4.0 * 16.0 * u) == doctest::Approx(0.5).epsilon(1e-15));
  // chi=1, r=1
  CHECK(update_upsilon(p, a)(0, 0) > 0);
}

TEST_CASE("transformed cost equals cost_s at upsilon* on 1000 random allocations") {
  ScenarioParams p = make_params(5, 2, 11);
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const Allocation a = random_feasible_alloc(p, s);
    const MatrixXd ups = update_upsilon(p, a);
    const CostBreakdown c = evaluate_costs(p, a);
    for (int n = 0; n < 5; ++n)
      for (int m = 0; m < 2; ++m)
        if (a.x(n, m) > 0.5)
          CHECK(transformed_cost_s(p, a, ups, n, m) ==
                doctest::Approx(c.cost_s(n, m)).epsilon(1e-12));
  }
}

TEST_CASE("P3 objective vanishes right after the alpha/theta update") {
  ScenarioParams p = make_params(6, 2, 13);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Allocation a = random_feasible_alloc(p, 100 + s);
    const AuxState aux = update_alpha_theta(p, a);
    const double dpe = dpe_objective(p, a);
    CHECK(std::abs(p3_objective(p, a, aux)) <= 1e-9 * (1.0 + dpe));
    const double theta_sum = aux.theta_u.sum() + aux.theta_s.sum();
    CHECK(theta_sum == doctest::Approx(dpe).epsilon(1e-9));
  }
}

TEST_CASE("solve_p5 psi matches a fine 1-D grid on the user bracket") {
  ScenarioParams p = make_params(1, 1, 17);
  Allocation a = initialize(p).first;
  const AuxState aux = update_alpha_theta(p, a);
  const MatrixXd ups = update_upsilon(p, a);
  const P5Result r = solve_p5(p, a, aux, ups);
  REQUIRE(r.status == NlpStatus::Optimal);

  Allocation probe = r.alloc;
  double best_psi = 0, best_val = -1e300;
  for (int i = 1; i <= 1000; ++i) {
    probe.psi(0) = i / 1000.0;
    const double v = p5_objective_value(p, probe, aux, ups);
    if (v > best_val) {
      best_val = v;
      best_psi = probe.psi(0);
    }
  }
  CHECK(std::abs(r.alloc.psi(0) - best_psi) <= 1e-3 + 1e-9);
  CHECK(r.value >= best_val - 1e-6 * (1.0 + std::abs(best_val)));
}

TEST_CASE("identical users on one server get identical resources") {
  ScenarioParams p = make_params(2, 1, 19);
  p.d(1) = p.d(0);
  p.gain(1, 0) = p.gain(0, 0);
  Allocation a = initialize(p).first;
  a.x.setZero();
  a.x(0, 0) = a.x(1, 0) = 1.0;
  const AuxState aux = update_alpha_theta(p, a);
  const P5Result r = solve_p5(p, a, aux, update_upsilon(p, a));
  CHECK(r.alloc.phi_bw(0, 0) == doctest::Approx(r.alloc.phi_bw(1, 0)).epsilon(1e-6));
  CHECK(r.alloc.zeta(0, 0) == doctest::Approx(r.alloc.zeta(1, 0)).epsilon(1e-6));
  CHECK(r.alloc.psi(0) == doctest::Approx(r.alloc.psi(1)).epsilon(1e-6));
}

TEST_CASE("solve_p5 ascends from its start") {
  ScenarioParams p = make_params(4, 2, 23);
  const Allocation a = initialize(p).first;
  const AuxState aux = update_alpha_theta(p, a);
  const MatrixXd ups = update_upsilon(p, a);
  const double v0 = p5_objective_value(p, a, aux, ups);
  const P5Result r = solve_p5(p, a, aux, ups);
  CHECK(r.value >= v0 - 1e-9 * (1.0 + std::abs(v0)));
}

TEST_CASE("P5 analytic gradients agree with central differences") {
  ScenarioParams p = make_params(4, 2, 37);
  const Allocation a = initialize(p).first;
  const AuxState aux = update_alpha_theta(p, a);
  const MatrixXd ups = update_upsilon(p, a);
  const ConcaveProgram cp = build_p5_program(p, a, aux, ups);

  const StreamRng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    VectorXd v(cp.dim);
    for (int i = 0; i < cp.dim; ++i) {
      const double lo = cp.lower(i), hi = cp.upper(i);
      const double u = rng.uniform(StreamRng::kBaselineAssoc, trial, i, 9);
      v(i) = lo + (0.2 + 0.6 * u) * (hi - lo);
    }
    CHECK(oracle::finite_diff_check(cp.objective, v) <= 1e-4);
  }
}

TEST_CASE("fp_loop on the default scenario: monotone, converges within 50 iterations") {
  ScenarioParams p = make_params(10, 2, 29);
  const auto [a, aux] = initialize(p);
  const FpResult r = fp_loop(p, a, aux, 1e-3, 100);
  CHECK(r.converged);
  CHECK(r.iterations <= 50);
  for (std::size_t i = 1; i < r.value_trace.size(); ++i)
    CHECK(r.value_trace[i] >=
          r.value_trace[i - 1] - 1e-6 * (1.0 + std::abs(r.value_trace[i - 1])));
}

TEST_CASE("fp_loop terminates immediately from a converged start") {
  ScenarioParams p = make_params(3, 2, 31);
  const auto [a, aux] = initialize(p);
  const FpResult first = fp_loop(p, a, aux, 1e-3, 100);
  REQUIRE(first.converged);
  const FpResult again = fp_loop(p, first.alloc, aux, 1e-3, 100);
  CHECK(again.converged);
  CHECK(again.iterations == 1);
}

TEST_CASE("fp rejects fractional associations") {
  ScenarioParams p = make_params(2, 2, 43);
  Allocation a = initialize(p).first;
  a.x(0, 0) = a.x(0, 1) = 0.5;
  const AuxState aux = update_alpha_theta(p, a);
  CHECK_THROWS_AS(solve_p5(p, a, aux, update_upsilon(p, a)), std::invalid_argument);
}
