// assoc.hpp - association/offloading stage: QCQP coefficient assembly with
// gamma pinned at its closed-form optimum, the semidefinite lift, relaxed
// solution extraction, and Hungarian rounding back to an integral
// association.
#pragma once

#include "daur/fp.hpp"
#include "daur/model.hpp"
#include "daur/sdp.hpp"

namespace daur {

// Q = (phi^T, x_1^T, ..., x_M^T)^T of length N+NM; the lift appends a
// homogenizing 1. x_m stacks users of server m.
struct QcqpLayout {
  int n_users = 0, n_servers = 0;
  int q_len() const { return n_users + n_users * n_servers; }
  int lift_dim() const { return q_len() + 1; }
  int phi_index(int n) const { return n; }
  int x_index(int n, int m) const { return n_users + m * n_users + n; }
};

struct QcqpMatrices {
  QcqpLayout layout;
  VectorXd a_user;  // A_n
  MatrixXd b_pair;  // B_{n,m}
  double c_scalar = 0;
  MatrixXd p0;      // quadratic part of the objective, (N+NM)^2, symmetric
  VectorXd w0;      // linear part
  VectorXd p_tu;    // T^(u) coupling: p_tu^T Q + p_tu_offset <= T^(u)
  double p_tu_offset = 0;
  MatrixXd p_ts;    // T^(s) coupling: Q^T p_ts Q + p_ts_offset <= T^(s)
  double p_ts_offset = 0;

  // Scalar P8/P9 objective with the T variables folded at their bounds.
  double objective(const VectorXd& q) const;
};

// A_n, B_{n,m}, C and the delay-coupling coefficients from the current
// resources and auxiliaries (gamma already fixed by set_gamma_optimal).
QcqpMatrices assemble_coefficients(const ScenarioParams& params, const Allocation& alloc,
                                   const AuxState& aux);

// gamma <- 1/(1+omega_b) for every pair (the delay-form optimum; the energy
// form omega_b/(1+omega_b) coincides at omega_b = 1). Returns true when the
// two forms disagree (omega_b != 1), which callers may surface as a warning.
bool set_gamma_optimal(Allocation& alloc, double omega_b);

// Lifts the folded objective and the constraint families into an SDP:
// binary lift equalities, row sums, phi box (both sides), the phi diagonal
// lift, per-server bandwidth/CPU coupling, and the homogenization entry.
SdpProblem build_sdr(const ScenarioParams& params, const Allocation& alloc,
                     const QcqpMatrices& mats);

// Q from the last column of S (scaled by the homogenization entry), clamped
// to [0,1]; falls back to the leading eigenvector when clamping moved any
// entry by more than 0.05 and it scores better. Throws on non-PSD input.
VectorXd extract_q(const MatrixXd& s, const QcqpMatrices& mats);

// Normalizes rows with sum > 1, replicates each server column into
// ceil(N/M) capacity slots, zero-pads to a square matrix and solves the
// maximum-weight matching. `argmax_rounding` short-circuits to per-row
// argmax (comparison mode).
MatrixXd round_association(const MatrixXd& x_relaxed, bool argmax_rounding = false);

struct QcqpResult {
  Allocation alloc;      // integral x, clamped phi_off, repaired couplings
  double sdr_value = 0;  // last relaxed objective
  double pre_round_dpe = 0;
  double post_round_dpe = 0;
  int iterations = 0;
  bool converged = false;
  SdpStatus last_status = SdpStatus::Optimal;
};

// Algorithm lines 18-25: iterate assemble -> lift -> solve -> extract with
// the auxiliaries refreshed at every relaxed iterate, then round and repair
// the per-server coupling sums under the new association.
QcqpResult qcqp_loop(const ScenarioParams& params, const Allocation& start,
                     const AuxState& aux_start, double eps2, int max_iterations = 60,
                     bool argmax_rounding = false);

} // namespace daur
