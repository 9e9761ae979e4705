// nlp.hpp - smooth concave maximization over box + linear + smooth convex
// inequality constraints via a log-barrier interior scheme with damped
// Newton steps.
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace daur {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// g(v) <= 0, convex and smooth on the feasible set. `grad` may be null.
// `hess` is optional; when absent the solver differentiates the gradient.
struct SmoothConstraint {
  std::function<double(const VectorXd&, VectorXd* grad)> g;
  std::function<void(const VectorXd&, MatrixXd& h)> hess;
};

struct ConcaveProgram {
  int dim = 0;
  // Returns the objective value; fills *grad when non-null.
  std::function<double(const VectorXd&, VectorXd* grad)> objective;
  // Optional analytic Hessian; finite differences of the gradient otherwise.
  std::function<void(const VectorXd&, MatrixXd& h)> hessian;
  VectorXd lower, upper;       // box; +/-inf entries mean unbounded
  MatrixXd lin_a;              // lin_a * v <= lin_b (0 rows allowed)
  VectorXd lin_b;
  std::vector<SmoothConstraint> nonlinear;
  VectorXd start;              // strictly feasible
};

enum class NlpStatus { Optimal, MaxIterations, InfeasibleStart };

struct NlpResult {
  VectorXd point;
  double value = 0;
  NlpStatus status = NlpStatus::Optimal;
  int newton_steps = 0;
  // KKT stationarity residual with the barrier multipliers.
  double kkt_residual = 0;
};

// Maximizes prog over its feasible set. The returned point satisfies all
// constraints (interior path, residuals 0 up to roundoff) and first-order
// stationarity to tol*(1+|value|). Deterministic for identical inputs.
NlpResult maximize(const ConcaveProgram& prog, double tol);

} // namespace daur
