#include "daur/nlp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace daur {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Barrier {
  const ConcaveProgram& prog;
  int count = 0; // total number of log terms (the barrier parameter nu)

  explicit Barrier(const ConcaveProgram& p) : prog(p) {
    for (int i = 0; i < p.dim; ++i) {
      if (p.lower(i) > -kInf) ++count;
      if (p.upper(i) < kInf) ++count;
    }
    count += static_cast<int>(p.lin_b.size());
    count += static_cast<int>(p.nonlinear.size());
  }

  // Slack of every barrier term; any non-positive entry means infeasible.
  bool slacks(const VectorXd& v, std::vector<double>* out) const {
    if (out) out->clear();
    bool ok = true;
    auto push = [&](double s) {
      if (s <= 0) ok = false;
      if (out) out->push_back(s);
    };
    for (int i = 0; i < prog.dim; ++i) {
      if (prog.lower(i) > -kInf) push(v(i) - prog.lower(i));
      if (prog.upper(i) < kInf) push(prog.upper(i) - v(i));
    }
    for (int k = 0; k < prog.lin_b.size(); ++k)
      push(prog.lin_b(k) - prog.lin_a.row(k).dot(v));
    for (const auto& c : prog.nonlinear) push(-c.g(v, nullptr));
    return ok;
  }

  double log_sum(const VectorXd& v) const {
    std::vector<double> s;
    if (!slacks(v, &s)) return -kInf;
    double acc = 0;
    for (double si : s) acc += std::log(si);
    return acc;
  }

  // Gradient and Hessian of the log-barrier sum at a strictly feasible v.
  void derivatives(const VectorXd& v, VectorXd& grad, MatrixXd& hess) const {
    const int d = prog.dim;
    grad.setZero(d);
    hess.setZero(d, d);
    for (int i = 0; i < d; ++i) {
      if (prog.lower(i) > -kInf) {
        const double s = v(i) - prog.lower(i);
        grad(i) += 1.0 / s;
        hess(i, i) -= 1.0 / (s * s);
      }
      if (prog.upper(i) < kInf) {
        const double s = prog.upper(i) - v(i);
        grad(i) -= 1.0 / s;
        hess(i, i) -= 1.0 / (s * s);
      }
    }
    for (int k = 0; k < prog.lin_b.size(); ++k) {
      const double s = prog.lin_b(k) - prog.lin_a.row(k).dot(v);
      grad -= prog.lin_a.row(k).transpose() / s;
      hess -= (prog.lin_a.row(k).transpose() * prog.lin_a.row(k)) / (s * s);
    }
    for (const auto& c : prog.nonlinear) {
      VectorXd gg(d);
      const double gv = c.g(v, &gg);
      MatrixXd gh;
      if (c.hess) {
        c.hess(v, gh);
      } else {
        fd_hessian([&](const VectorXd& u, VectorXd* gr) { return c.g(u, gr); }, v, gh);
      }
      // d/dv log(-g) = g'/g ; d2 = g''/g - g'g'^T/g^2  (g < 0)
      grad += gg / gv;
      hess += gh / gv - (gg * gg.transpose()) / (gv * gv);
    }
  }

  static void fd_hessian(const std::function<double(const VectorXd&, VectorXd*)>& f,
                         const VectorXd& v, MatrixXd& h) {
    const int d = static_cast<int>(v.size());
    h.resize(d, d);
    VectorXd gp(d), gm(d);
    VectorXd u = v;
    for (int i = 0; i < d; ++i) {
      const double step = 1e-7 * (1.0 + std::abs(v(i)));
      u(i) = v(i) + step;
      f(u, &gp);
      u(i) = v(i) - step;
      f(u, &gm);
      u(i) = v(i);
      h.col(i) = (gp - gm) / (2.0 * step);
    }
    h = 0.5 * (h + h.transpose()).eval();
  }
};

} // namespace

NlpResult maximize(const ConcaveProgram& prog, double tol) {
  if (prog.dim <= 0 || !prog.objective || prog.start.size() != prog.dim ||
      prog.lower.size() != prog.dim || prog.upper.size() != prog.dim)
    throw std::invalid_argument("nlp::maximize: malformed program");
  if (tol <= 0) throw std::invalid_argument("nlp::maximize: tol must be positive");

  const Barrier barrier(prog);
  NlpResult res;
  res.point = prog.start;
  if (!barrier.slacks(res.point, nullptr)) {
    res.status = NlpStatus::InfeasibleStart;
    res.value = -kInf;
    return res;
  }
  if (barrier.count == 0) {
    // unconstrained concave maximization still runs through the same Newton
    // loop with t fixed
  }

  const int d = prog.dim;
  const double start_value = prog.objective(res.point, nullptr);
  double t = 1.0;
  const double mu_factor = 10.0; // barrier decrease factor
  const int max_stages = 40;
  const int max_newton_per_stage = 120;
  // Solve tighter than requested so downstream monotonicity checks see the
  // true ascent, not barrier suboptimality.
  const double gap_tol = std::min(tol, 1e-8);

  VectorXd v = res.point;
  VectorXd grad_f(d), grad_b(d), grad_phi(d), step(d);
  MatrixXd hess_f(d, d), hess_b(d, d), hess_phi(d, d);

  auto eval_phi = [&](const VectorXd& u) {
    const double lb = barrier.log_sum(u);
    if (lb == -kInf) return -kInf;
    return t * prog.objective(u, nullptr) + lb;
  };

  double fval = start_value;
  for (int stage = 0; stage < max_stages; ++stage) {
    // inner Newton tolerance tied to the current barrier weight
    const double inner_tol = std::max(1e-12, std::min(1e-6, 1e-3 * barrier.count / t));
    for (int it = 0; it < max_newton_per_stage; ++it) {
      fval = prog.objective(v, &grad_f);
      if (prog.hessian)
        prog.hessian(v, hess_f);
      else
        Barrier::fd_hessian(prog.objective, v, hess_f);
      barrier.derivatives(v, grad_b, hess_b);
      grad_phi = t * grad_f + grad_b;
      hess_phi = t * hess_f + hess_b;

      // solve (-H) step = grad, ridging until the factorization is PD
      MatrixXd neg_h = -hess_phi;
      double ridge = 0;
      Eigen::LLT<MatrixXd> llt(neg_h);
      while (llt.info() != Eigen::Success) {
        ridge = (ridge == 0) ? 1e-10 * (1.0 + neg_h.diagonal().cwiseAbs().maxCoeff())
                             : ridge * 100;
        if (!std::isfinite(ridge) || ridge > 1e20)
          throw std::runtime_error("nlp::maximize: Newton system not factorizable");
        llt.compute(neg_h + ridge * MatrixXd::Identity(d, d));
      }
      step = llt.solve(grad_phi);
      ++res.newton_steps;

      const double decrement2 = grad_phi.dot(step);
      if (decrement2 / 2.0 <= inner_tol) break;

      // fraction-to-boundary then Armijo backtracking on phi
      const double phi0 = t * fval + barrier.log_sum(v);
      double alpha = 1.0;
      {
        std::vector<double> s0;
        barrier.slacks(v, &s0);
        // cheap pre-shrink for box/linear terms; nonlinear handled by the
        // feasibility check inside the backtracking loop
        int idx = 0;
        for (int i = 0; i < d; ++i) {
          if (prog.lower(i) > -kInf) {
            if (step(i) < 0) alpha = std::min(alpha, -0.99 * s0[idx] / step(i));
            ++idx;
          }
          if (prog.upper(i) < kInf) {
            if (step(i) > 0) alpha = std::min(alpha, 0.99 * s0[idx] / step(i));
            ++idx;
          }
        }
        for (int k = 0; k < prog.lin_b.size(); ++k) {
          const double ds = prog.lin_a.row(k).dot(step);
          if (ds > 0) alpha = std::min(alpha, 0.99 * s0[idx] / ds);
          ++idx;
        }
      }
      bool moved = false;
      for (int bt = 0; bt < 60; ++bt) {
        const VectorXd cand = v + alpha * step;
        const double phic = eval_phi(cand);
        if (phic > phi0 + 1e-4 * alpha * decrement2 ||
            (phic > phi0 && alpha < 1e-8)) {
          v = cand;
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!moved) break; // stalled; accept the stage result
    }
    if (barrier.count / t <= gap_tol * (1.0 + std::abs(fval)) || barrier.count == 0) break;
    t *= mu_factor;
  }

  fval = prog.objective(v, &grad_f);
  barrier.derivatives(v, grad_b, hess_b);
  res.point = v;
  res.value = fval;
  // stationarity with the barrier-implied multipliers: grad f + grad_b/t
  res.kkt_residual = (grad_f + grad_b / t).lpNorm<Eigen::Infinity>();
  res.status = (barrier.count == 0 || barrier.count / t <= tol * (1.0 + std::abs(fval)))
                   ? NlpStatus::Optimal
                   : NlpStatus::MaxIterations;
  // Concavity makes the path end dominate every feasible point up to the gap;
  // the start point is kept as a fallback so ascent is exact.
  if (res.value < start_value) {
    res.point = prog.start;
    res.value = start_value;
  }
  return res;
}

} // namespace daur
