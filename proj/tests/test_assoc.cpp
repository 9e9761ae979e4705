#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "daur/assoc.hpp"
#include "daur/daur.hpp"
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

// Q vector for a given integral association + offloading choice
VectorXd pack_q(const QcqpLayout& lay, const MatrixXd& x, const VectorXd& phi) {
  VectorXd q = VectorXd::Zero(lay.q_len());
  for (int n = 0; n < lay.n_users; ++n) {
    q(lay.phi_index(n)) = phi(n);
    for (int m = 0; m < lay.n_servers; ++m) q(lay.x_index(n, m)) = x(n, m);
  }
  return q;
}

MatrixXd rank1_lift(const VectorXd& q) {
  VectorXd lifted(q.size() + 1);
  lifted << q, 1.0;
  return lifted * lifted.transpose();
}

Allocation with_q(const ScenarioParams& p, Allocation a, const VectorXd& q,
                  const QcqpLayout& lay) {
  for (int n = 0; n < p.n_users; ++n) {
    a.phi_off(n) = q(lay.phi_index(n));
    for (int m = 0; m < p.n_servers; ++m) a.x(n, m) = q(lay.x_index(n, m));
  }
  return a;
}

} // namespace

TEST_CASE("A_n reduces to alpha*c*d when theta is zero") {
  ScenarioParams p = make_params(2, 2, 3);
  Allocation a = initialize(p).first;
  AuxState aux = update_alpha_theta(p, a);
  aux.theta_u.setZero();
  const QcqpMatrices mats = assemble_coefficients(p, a, aux);
  for (int n = 0; n < 2; ++n)
    CHECK(mats.a_user(n) ==
          doctest::Approx(aux.alpha_u(n) * p.c_u(n) * p.d(n)).epsilon(1e-12));
}

TEST_CASE("symmetric users produce equal coefficients") {
  ScenarioParams p = make_params(2, 1, 5);
  p.d(1) = p.d(0);
  p.gain(1, 0) = p.gain(0, 0);
  Allocation a = initialize(p).first;
  a.x.setZero();
  a.x(0, 0) = a.x(1, 0) = 1.0;
  const AuxState aux = update_alpha_theta(p, a);
  const QcqpMatrices mats = assemble_coefficients(p, a, aux);
  CHECK(mats.a_user(0) == doctest::Approx(mats.a_user(1)).epsilon(1e-12));
  CHECK(mats.b_pair(0, 0) == doctest::Approx(mats.b_pair(1, 0)).epsilon(1e-12));
}

TEST_CASE("P8 objective equals minus the P3 objective at the same point") {
  // the scalar min form must be the exact negation of the max form it came
  // from, delay terms included
  ScenarioParams p = make_params(4, 2, 7);
  Allocation a = initialize(p).first;
  const AuxState aux = update_alpha_theta(p, a);
  const QcqpMatrices mats = assemble_coefficients(p, a, aux);
  const StreamRng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    MatrixXd x = MatrixXd::Zero(4, 2);
    VectorXd phi(4);
    for (int n = 0; n < 4; ++n) {
      x(n, rng.uniform(StreamRng::kBaselineAssoc, trial, n, 0) < 0.5 ? 0 : 1) = 1.0;
      phi(n) = rng.uniform(StreamRng::kBaselineAssoc, trial, n, 1);
    }
    const VectorXd q = pack_q(mats.layout, x, phi);
    const Allocation at = with_q(p, a, q, mats.layout);
    const double p8 = mats.objective(q);
    const double p3 = p3_objective(p, at, aux);
    CHECK(p8 == doctest::Approx(-p3).epsilon(1e-10));
  }
}

TEST_CASE("gamma optimum forms") {
  Allocation a = initialize(make_params(2, 2, 9)).first;
  CHECK_FALSE(set_gamma_optimal(a, 1.0));
  CHECK(a.gamma(0, 0) == 0.5);
  CHECK(set_gamma_optimal(a, 3.0)); // delay form flags the omega_b mismatch
  CHECK(a.gamma(1, 1) == doctest::Approx(0.25).epsilon(1e-15));
  // the energy form would be omega_b/(1+omega_b) = 0.75; they only agree at 1
  CHECK_THROWS_AS(set_gamma_optimal(a, 0.0), std::invalid_argument);
}

TEST_CASE("own-pair cost_s over a gamma grid is minimized near 1/2") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    ScenarioParams p = make_params(3, 2, seed);
    Allocation a = initialize(p).first;
    double best_gamma = -1, best_cost = 1e300;
    for (int i = 1; i <= 99; ++i) {
      const double g = i / 100.0;
      a.gamma(0, 0) = g;
      const double c = evaluate_costs(p, a).cost_s(0, 0);
      if (c < best_cost) {
        best_cost = c;
        best_gamma = g;
      }
    }
    CHECK(std::abs(best_gamma - 0.5) <= 0.01 + 1e-12);
  }
}

TEST_CASE("rank-1 lifts satisfy the constraint families exactly") {
  ScenarioParams p = make_params(3, 2, 13);
  Allocation a = initialize(p).first;
  const AuxState aux = update_alpha_theta(p, a);
  const QcqpMatrices mats = assemble_coefficients(p, a, aux);
  const SdpProblem prob = build_sdr(p, a, mats);

  const VectorXd q = pack_q(mats.layout, a.x, a.phi_off);
  const MatrixXd s = rank1_lift(q);

  // families are ordered: NM binary, N row-sum, 2N phi box, N phi diag,
  // 2M coupling, 1 homogenization
  const int NM = 6, N = 3, M = 2;
  int idx = 0;
  for (int i = 0; i < NM; ++i, ++idx) {
    const auto& c = prob.constraints[idx];
    CHECK(std::abs((c.a.array() * s.array()).sum() - c.rhs) <= 1e-12); // x in {0,1}
  }
  for (int i = 0; i < N; ++i, ++idx) {
    const auto& c = prob.constraints[idx];
    CHECK(std::abs((c.a.array() * s.array()).sum() - c.rhs) <= 1e-12); // row sums
  }
  for (int i = 0; i < 2 * N + N + 2 * M; ++i, ++idx) {
    const auto& c = prob.constraints[idx];
    CHECK((c.a.array() * s.array()).sum() <= c.rhs + 1e-9);
  }
  CHECK(std::abs((prob.constraints[idx].a.array() * s.array()).sum() - 1.0) <= 1e-12);

  // binary lift detects fractional entries
  VectorXd qf = q;
  qf(mats.layout.x_index(0, 0)) = 0.5;
  qf(mats.layout.x_index(0, 1)) = 0.5;
  const MatrixXd sf = rank1_lift(qf);
  const auto& c0 = prob.constraints[0]; // x_{0,0} binary lift
  CHECK(std::abs((c0.a.array() * sf.array()).sum()) > 1e-3);
}

TEST_CASE("lifted objective equals the scalar objective at rank-1 points") {
  ScenarioParams p = make_params(4, 2, 17);
  Allocation a = initialize(p).first;
  const AuxState aux = update_alpha_theta(p, a);
  const QcqpMatrices mats = assemble_coefficients(p, a, aux);
  const SdpProblem prob = build_sdr(p, a, mats);
  const StreamRng rng(19);
  for (int trial = 0; trial < 100; ++trial) {
    MatrixXd x = MatrixXd::Zero(4, 2);
    VectorXd phi(4);
    for (int n = 0; n < 4; ++n) {
      x(n, rng.uniform(StreamRng::kBaselineAssoc, trial, n, 0) < 0.5 ? 0 : 1) = 1.0;
      phi(n) = rng.uniform(StreamRng::kBaselineAssoc, trial, n, 1);
    }
    const VectorXd q = pack_q(mats.layout, x, phi);
    const double lifted = (prob.cost.array() * rank1_lift(q).array()).sum();
    CHECK(lifted == doctest::Approx(mats.objective(q)).epsilon(1e-10));
  }
}

TEST_CASE("extract_q recovers rank-1 structure") {
  ScenarioParams p = make_params(1, 2, 21);
  Allocation a = initialize(p).first;
  const AuxState aux = update_alpha_theta(p, a);
  const QcqpMatrices mats = assemble_coefficients(p, a, aux);

  VectorXd q(3);
  q << 0.5, 1.0, 0.0;
  const VectorXd got = extract_q(rank1_lift(q), mats);
  CHECK((got - q).cwiseAbs().maxCoeff() <= 1e-12);

  // diagonal S with unit corner has a zero last column
  MatrixXd diag = MatrixXd::Identity(4, 4);
  const VectorXd zero = extract_q(diag, mats);
  CHECK(zero.cwiseAbs().maxCoeff() == 0.0);

  MatrixXd notpsd = MatrixXd::Identity(4, 4);
  notpsd(0, 0) = -1.0;
  CHECK_THROWS_AS(extract_q(notpsd, mats), std::invalid_argument);
}

TEST_CASE("round_association basics") {
  MatrixXd x(2, 2);
  x << 0.9, 0.1, 0.2, 0.8;
  const MatrixXd r = round_association(x);
  CHECK(r(0, 0) == 1.0);
  CHECK(r(1, 1) == 1.0);
  CHECK(r.row(0).sum() == 1.0);
  CHECK(r.row(1).sum() == 1.0);
}

TEST_CASE("rows with sum above one are normalized before matching") {
  // row (0.5, 1.5) -> (0.25, 0.75); the second server must win for that user
  MatrixXd x(2, 2);
  x << 0.5, 1.5, 0.9, 0.05;
  const MatrixXd r = round_association(x);
  CHECK(r(0, 1) == 1.0);
  CHECK(r(1, 0) == 1.0);
}

TEST_CASE("capacity slots bound server loads and match the brute force") {
  // all-equal weights, N=3, M=2: ceil(3/2)=2 slots per server; any valid
  // assignment has loads {2,1} and the same total weight
  MatrixXd x = MatrixXd::Constant(3, 2, 0.5);
  const MatrixXd r = round_association(x);
  for (int n = 0; n < 3; ++n) CHECK(r.row(n).sum() == 1.0);
  const double load0 = r.col(0).sum(), load1 = r.col(1).sum();
  CHECK(std::max(load0, load1) == 2.0);
  CHECK(std::min(load0, load1) == 1.0);

  // brute force over the 2^3 assignments with loads <= 2
  double best = -1;
  for (int mask = 0; mask < 8; ++mask) {
    int l0 = 0;
    double tot = 0;
    for (int n = 0; n < 3; ++n) {
      const int m = (mask >> n) & 1;
      l0 += (m == 0);
      tot += x(n, m);
    }
    if (l0 <= 2 && 3 - l0 <= 2) best = std::max(best, tot);
  }
  double got = 0;
  for (int n = 0; n < 3; ++n)
    for (int m = 0; m < 2; ++m) got += r(n, m) * x(n, m);
  CHECK(got == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("argmax rounding mode") {
  MatrixXd x(3, 2);
  x << 0.9, 0.1, 0.8, 0.2, 0.7, 0.3;
  const MatrixXd r = round_association(x, true);
  // all three pile onto server 0 under argmax; Hungarian capacity would not
  CHECK(r.col(0).sum() == 3.0);
}

TEST_CASE("qcqp_loop on one user, one server") {
  ScenarioParams p = make_params(1, 1, 23);
  Allocation a = initialize(p).first;
  const AuxState aux = update_alpha_theta(p, a);
  const QcqpResult r = qcqp_loop(p, a, aux, 1e-3, 60);
  CHECK(r.alloc.x(0, 0) == 1.0);
  CHECK(r.converged);
  CHECK(r.alloc.feasible(true));

  // grid oracle on phi_off with the same resources; the DPE curve can be
  // nearly flat near its top, so the certified quantity is the value
  Allocation probe = r.alloc;
  double best_val = -1e300;
  for (int i = 0; i <= 1000; ++i) {
    probe.phi_off(0) = i / 1000.0;
    best_val = std::max(best_val, dpe_objective(p, probe));
  }
  CHECK(dpe_objective(p, r.alloc) >= best_val - 1e-2 * std::abs(best_val));
}

TEST_CASE("qcqp_loop output satisfies every P1 constraint on the default scenario") {
  ScenarioParams p = make_params(10, 2, 29);
  const auto [a, aux] = initialize(p);
  const QcqpResult r = qcqp_loop(p, a, aux, 1e-3, 60);
  CHECK(r.converged);
  CHECK(r.iterations <= 60);
  CHECK(r.alloc.feasible(true));
}
