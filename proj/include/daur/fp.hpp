// fp.hpp - fractional-programming stage: the KKT auxiliary updates, the
// quadratic transform of the transmission-energy ratio, and the concave
// resource subproblem solved with x, phi_off, gamma held fixed.
#pragma once

#include "daur/model.hpp"
#include "daur/nlp.hpp"

namespace daur {

// Sum-of-ratios and quadratic-transform auxiliaries. t_u/t_s carry the
// binding delay values of the epigraph variables they replace.
struct AuxState {
  VectorXd alpha_u; // 1/cost_u
  MatrixXd alpha_s; // 1/cost_s
  VectorXd theta_u; // c_n(1-phi)d / cost_u
  MatrixXd theta_s; // c_{n,m} x phi d / cost_s, exactly 0 when x*phi = 0
  MatrixXd upsilon; // 1/(2 chi r); 0 for pairs with chi = 0
  VectorXd t_u;     // binding T^(u): the local processing delay
  MatrixXd t_s;     // binding T^(s): total server-path delay
};

// KKT-point updates of alpha and theta (and the binding T values) at the
// epsilon-floored allocation.
AuxState update_alpha_theta(const ScenarioParams& params, const Allocation& alloc);

// Quadratic-transform auxiliary per pair; pairs with chi = x*rho*p*phi*d = 0
// get the unused sentinel 0.
MatrixXd update_upsilon(const ScenarioParams& params, const Allocation& alloc);

// cost_s rewritten with the quadratic transform at the given upsilon; equals
// cost_s exactly at upsilon = 1/(2 chi r). Pairs with chi = 0 fall back to
// the direct form (their transmission terms vanish).
double transformed_cost_s(const ScenarioParams& params, const Allocation& alloc,
                          const MatrixXd& upsilon, int n, int m);

// The P3/P4 objective sum alpha*[numerator - theta*cost] at the allocation.
// Exactly 0 right after update_alpha_theta at that same allocation.
double p3_objective(const ScenarioParams& params, const Allocation& alloc,
                    const AuxState& aux);

struct P5Result {
  Allocation alloc;
  double value = 0; // V_P5 at the returned point with the given upsilon
  NlpStatus status = NlpStatus::Optimal;
};

// The packed concave P5 program over [psi | rho | phi_bw | zeta | slack]
// (one entry per user, connected pairs only), with T variables eliminated at
// their binding values and the validation delay carried by epigraph slacks.
// Exposed so tests can probe the exact objective/gradient pair the solver
// consumes.
ConcaveProgram build_p5_program(const ScenarioParams& params, const Allocation& start,
                                const AuxState& aux, const MatrixXd& upsilon);

// Maximizes the P5 program and unpacks the solution into the allocation.
P5Result solve_p5(const ScenarioParams& params, const Allocation& start,
                  const AuxState& aux, const MatrixXd& upsilon);

// V_P5 evaluated at the allocation (slacks at their binding values).
double p5_objective_value(const ScenarioParams& params, const Allocation& alloc,
                          const AuxState& aux, const MatrixXd& upsilon);

struct FpResult {
  Allocation alloc;
  double value = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> value_trace;
};

// Algorithm lines 8-12: alternate upsilon updates and P5 solves until the
// relative objective change drops below eps1 or the iteration cap is hit.
FpResult fp_loop(const ScenarioParams& params, const Allocation& start,
                 const AuxState& aux, double eps1, int max_iterations = 100);

} // namespace daur
