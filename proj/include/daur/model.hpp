// model.hpp - system model: scenario parameters, decision variables, and the
// per-term delay/energy/cost evaluation behind the data-processing-efficiency
// objective.
#pragma once

#include <Eigen/Dense>
#include <string>

namespace daur {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Floor applied to every divisor variable (psi, rho, phi_bw, zeta) before the
// cost formulas; box constraints permit 0 but the formulas do not.
inline constexpr double kEpsFloor = 1e-6;

// Physical constants and per-user/per-server parameters of one scenario.
// Users are indexed n in [0,N), servers m in [0,M).
struct ScenarioParams {
  int n_users = 0;   // N
  int n_servers = 0; // M

  VectorXd d;      // per-user task size, bits
  VectorXd eta_u;  // per-user CPU cycles per bit
  VectorXd f_u;    // per-user max CPU frequency, cycles/s
  VectorXd p_u;    // per-user max transmit power, W
  VectorXd kappa_u;
  VectorXd c_u; // per-user DPE preference

  VectorXd eta_s;     // per-server cycles per bit, data processing
  VectorXd eta_bgen;  // per-server cycles per bit, block generation
  VectorXd f_s;       // per-server max CPU frequency, cycles/s
  VectorXd b_s;       // per-server total bandwidth, Hz
  VectorXd kappa_s;
  VectorXd r_wired; // per-server effective wired rate, bits/s (already min over peers)

  MatrixXd gain; // N x M linear channel gains
  MatrixXd c_us; // N x M pair preferences

  double noise_psd = 0;       // W/Hz
  double block_size_bits = 0; // S_b
  double eta_v = 0;           // cycles to verify a block
  double omega_b = 1, omega_t = 0.5, omega_e = 0.5;

  // When true, t_sg/e_sg use eta_bgen in place of omega_b*eta_s.
  bool use_bgen_cycles = false;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

// The seven decision-variable groups of the association/offloading problem.
struct Allocation {
  MatrixXd x;       // N x M association, {0,1} or relaxed [0,1]
  VectorXd phi_off; // per-user offload ratio, [0,1]
  MatrixXd gamma;   // N x M processing/generation split, (0,1)
  MatrixXd phi_bw;  // N x M bandwidth fraction, [0,1]
  VectorXd rho;     // per-user power usage ratio, [0,1]
  MatrixXd zeta;    // N x M server-CPU fraction, [0,1]
  VectorXd psi;     // per-user CPU usage ratio, [0,1]

  // Copy with psi/rho/phi_bw/zeta floored at kEpsFloor.
  Allocation floored() const;

  // Box constraints, coupling sums (14f)/(14h) within tol, and when
  // `integral` also x in {0,1} with unit row sums (14a)/(14b).
  bool feasible(bool integral, double tol = 1e-9) const;
  // Same checks, throwing with a named violation.
  void check_feasible(bool integral, double tol = 1e-9) const;
};

// Every delay/energy term of Eqs. 2-11 plus the composed costs and DPE terms.
// Server-side entries are per (n,m) pair and carry the x factor, so they
// vanish for unconnected pairs; t_bp/t_sv are pair properties without it.
struct CostBreakdown {
  VectorXd t_up, e_up; // per user
  MatrixXd t_ut, e_ut; // transmission
  MatrixXd t_sp, e_sp; // server processing
  MatrixXd t_sg, e_sg; // block generation
  MatrixXd t_bp;       // block propagation
  MatrixXd t_sv;       // block validation (max over other servers)
  VectorXd cost_u;     // omega_t*t_up + omega_e*e_up
  MatrixXd cost_s;     // omega_t*(t_ut+t_sp+t_sg+t_bp+t_sv) + omega_e*(e_ut+e_sp+e_sg)
  VectorXd dpe_user;   // c_n(1-phi)d / cost_u, 0/0 -> 0
  MatrixXd dpe_server; // c_{n,m} x phi d / cost_s, 0/0 -> 0
  double dpe_total = 0;
};

// Shannon rate of the (n,m) link at the given bandwidth/power fractions.
// Caller applies the epsilon floor first; zero fractions throw
// std::domain_error since they indicate a caller bug.
double transmission_rate(const ScenarioParams& params, int n, int m,
                         double phi_bw, double rho);

// Evaluates Eqs. 2-13 and the DPE terms at the (epsilon-floored) allocation.
// Throws std::runtime_error naming the first non-finite term.
CostBreakdown evaluate_costs(const ScenarioParams& params, const Allocation& alloc);

// The P1 objective: sum of user and server DPE ratios.
double dpe_objective(const ScenarioParams& params, const Allocation& alloc);

} // namespace daur
