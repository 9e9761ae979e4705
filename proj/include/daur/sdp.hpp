// sdp.hpp - dense small-scale semidefinite programming:
//   minimize Tr(C*S)  s.t.  Tr(A_k*S) {=,<=} b_k,  S >= 0
// solved by an infeasible-start primal-dual interior-point method.
#pragma once

#include <Eigen/Dense>
#include <vector>

namespace daur {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class SdpSense { Equal, LessEqual };

struct SdpConstraint {
  MatrixXd a; // symmetrized on ingestion
  SdpSense sense = SdpSense::Equal;
  double rhs = 0;
};

struct SdpProblem {
  MatrixXd cost;
  std::vector<SdpConstraint> constraints;
};

enum class SdpStatus { Optimal, MaxIterations, NumericalFailure, Infeasible };

struct SdpResult {
  MatrixXd s;          // primal matrix
  double value = 0;    // Tr(cost * s)
  SdpStatus status = SdpStatus::Optimal;
  VectorXd y;          // constraint multipliers
  double dual_value = 0;
  double gap = 0;            // |primal - dual| / (1 + |primal|)
  double primal_infeas = 0;  // max constraint residual
  double dual_infeas = 0;
  int iterations = 0;
};

// Solves the program to tolerance `tol`: at an Optimal result the primal
// matrix is PSD up to -tol eigenvalue slack, constraints hold to tol, and
// the duality gap is at most tol*(1+|value|). Non-optimal statuses carry the
// best iterate found.
SdpResult solve_sdp(const SdpProblem& prob, double tol = 1e-8);

} // namespace daur
