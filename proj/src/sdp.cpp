#include "daur/sdp.hpp"

#include <cmath>
#include <stdexcept>

namespace daur {

namespace {

// Largest alpha in (0, cap] with X + alpha*dX staying positive definite,
// via the scaled eigenvalue bound on L^-1 dX L^-T.
double max_step(const MatrixXd& x, const MatrixXd& dx, double cap) {
  Eigen::LLT<MatrixXd> llt(x);
  if (llt.info() != Eigen::Success) return 0.0;
  MatrixXd l = llt.matrixL();
  MatrixXd w = l.triangularView<Eigen::Lower>().solve(dx);
  w = l.triangularView<Eigen::Lower>().solve(w.transpose().eval());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (w + w.transpose()),
                                             Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin >= 0) return cap;
  return std::min(cap, -1.0 / lmin);
}

double max_step_vec(const VectorXd& t, const VectorXd& dt, double cap) {
  double a = cap;
  for (int i = 0; i < t.size(); ++i)
    if (dt(i) < 0) a = std::min(a, -t(i) / dt(i));
  return a;
}

} // namespace

SdpResult solve_sdp(const SdpProblem& prob, double tol) {
  const int dim = static_cast<int>(prob.cost.rows());
  const int n_con = static_cast<int>(prob.constraints.size());
  if (dim == 0 || prob.cost.cols() != dim)
    throw std::invalid_argument("solve_sdp: cost matrix must be square and non-empty");
  if (tol <= 0) throw std::invalid_argument("solve_sdp: tol must be positive");

  const MatrixXd c = 0.5 * (prob.cost + prob.cost.transpose());
  std::vector<MatrixXd> a(n_con);
  VectorXd b(n_con);
  std::vector<int> ineq; // indices of LessEqual rows
  for (int k = 0; k < n_con; ++k) {
    const auto& con = prob.constraints[k];
    if (con.a.rows() != dim || con.a.cols() != dim)
      throw std::invalid_argument("solve_sdp: constraint dimension mismatch");
    a[k] = 0.5 * (con.a + con.a.transpose());
    b(k) = con.rhs;
    if (con.sense == SdpSense::LessEqual) ineq.push_back(k);
  }
  const int n_ineq = static_cast<int>(ineq.size());
  std::vector<int> slack_of(n_con, -1);
  for (int j = 0; j < n_ineq; ++j) slack_of[ineq[j]] = j;

  // primal (X, t), dual (y, Z, z); slacks are 1x1 cone blocks
  const double scale_b = std::max(1.0, b.cwiseAbs().maxCoeff());
  const double scale_c = std::max(1.0, c.cwiseAbs().maxCoeff());
  MatrixXd x = 10.0 * scale_b * MatrixXd::Identity(dim, dim);
  MatrixXd z = 10.0 * scale_c * MatrixXd::Identity(dim, dim);
  VectorXd y = VectorXd::Zero(n_con);
  VectorXd t = VectorXd::Constant(std::max(n_ineq, 0), 10.0 * scale_b);
  VectorXd zs = VectorXd::Constant(std::max(n_ineq, 0), 10.0 * scale_c);

  SdpResult res;
  res.s = x;
  const int max_iters = 120;
  const double nu = dim + n_ineq;

  auto primal_value = [&](const MatrixXd& xx) { return (c.array() * xx.array()).sum(); };

  VectorXd rp(n_con);
  MatrixXd rd(dim, dim);
  VectorXd rds(n_ineq);
  MatrixXd zinv(dim, dim), xrz(dim, dim);
  std::vector<MatrixXd> u(n_con, MatrixXd(dim, dim));
  MatrixXd omega(n_con, n_con);
  double best_err = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < max_iters; ++iter) {
    // residuals
    for (int k = 0; k < n_con; ++k) {
      double lhs = (a[k].array() * x.array()).sum();
      if (slack_of[k] >= 0) lhs += t(slack_of[k]);
      rp(k) = b(k) - lhs;
    }
    rd = c - z;
    for (int k = 0; k < n_con; ++k) rd -= y(k) * a[k];
    for (int j = 0; j < n_ineq; ++j) rds(j) = -y(ineq[j]) - zs(j);

    const double mu = ((x.array() * z.array()).sum() + t.dot(zs)) / nu;
    const double pval = primal_value(x);
    const double dval = b.dot(y);
    const double gap = std::abs(pval - dval) / (1.0 + std::abs(pval));
    const double pinf = n_con ? rp.cwiseAbs().maxCoeff() / scale_b : 0.0;
    const double dinf =
        std::max(rd.cwiseAbs().maxCoeff(), n_ineq ? rds.cwiseAbs().maxCoeff() : 0.0) / scale_c;

    const double err = pinf + dinf + gap;
    const bool converged = pinf <= tol && dinf <= tol && gap <= tol;
    if (err < best_err || converged) {
      best_err = err;
      res.s = x;
      res.y = y;
      res.value = pval;
      res.dual_value = dval;
      res.gap = gap;
      res.primal_infeas = pinf * scale_b;
      res.dual_infeas = dinf;
      res.iterations = iter;
    }
    if (converged) {
      res.status = SdpStatus::Optimal;
      return res;
    }
    // a near-feasible low-gap iterate is still usable when progress dies
    auto bail = [&](SdpStatus hard) {
      res.status = best_err <= std::sqrt(tol) ? SdpStatus::MaxIterations : hard;
      return res;
    };
    if (!std::isfinite(err) || mu > 1e100) return bail(SdpStatus::NumericalFailure);
    if (std::abs(dval) > 1e12 * scale_c * scale_b && dinf <= 1e-6) {
      res.status = SdpStatus::Infeasible;
      return res;
    }

    // Schur complement (HKM): omega_kl = <A_k, X A_l Z^-1>, plus t/z on the
    // diagonal for slack rows
    Eigen::LLT<MatrixXd> zllt(z);
    if (zllt.info() != Eigen::Success) return bail(SdpStatus::NumericalFailure);
    zinv = zllt.solve(MatrixXd::Identity(dim, dim));
    for (int l = 0; l < n_con; ++l) u[l].noalias() = x * a[l] * zinv;
    for (int k = 0; k < n_con; ++k)
      for (int l = 0; l < n_con; ++l) omega(k, l) = (a[k].array() * u[l].array()).sum();
    for (int j = 0; j < n_ineq; ++j) omega(ineq[j], ineq[j]) += t(j) / zs(j);
    // tiny ridge keeps degenerate faces (flat optima) factorizable
    const double ridge = 1e-13 * std::max(1.0, omega.diagonal().cwiseAbs().maxCoeff());
    omega.diagonal().array() += ridge;

    Eigen::PartialPivLU<MatrixXd> lu(omega);

    xrz.noalias() = x * rd * zinv;
    // Complementarity linearization: dX = (sigma*mu*I - XZ - cross - X dZ)Z^-1
    // with cross = dXa*dZa in the corrector, then symmetrized.
    auto solve_direction = [&](double sigma_mu, const MatrixXd& cross,
                               const VectorXd& cross_s, MatrixXd& dx, MatrixXd& dz,
                               VectorXd& dy, VectorXd& dt, VectorXd& dzs) {
      const MatrixXd crz = cross * zinv;
      VectorXd rhs(n_con);
      for (int k = 0; k < n_con; ++k) {
        rhs(k) = rp(k) - sigma_mu * (a[k].array() * zinv.array()).sum() +
                 (a[k].array() * x.array()).sum() + (a[k].array() * xrz.array()).sum() +
                 (a[k].array() * crz.array()).sum();
        if (slack_of[k] >= 0) {
          const int j = slack_of[k];
          rhs(k) += -(sigma_mu - t(j) * zs(j) - cross_s(j)) / zs(j) +
                    (t(j) / zs(j)) * rds(j);
        }
      }
      dy = lu.solve(rhs);
      dz = rd;
      for (int k = 0; k < n_con; ++k) dz -= dy(k) * a[k];
      dx = sigma_mu * zinv - x - x * dz * zinv - crz;
      dx = 0.5 * (dx + dx.transpose()).eval();
      dzs.resize(n_ineq);
      dt.resize(n_ineq);
      for (int j = 0; j < n_ineq; ++j) {
        dzs(j) = rds(j) - dy(ineq[j]);
        dt(j) = (sigma_mu - t(j) * zs(j) - cross_s(j)) / zs(j) - (t(j) / zs(j)) * dzs(j);
      }
    };

    MatrixXd dx(dim, dim), dz(dim, dim);
    VectorXd dy(n_con), dt(n_ineq), dzs(n_ineq);
    const MatrixXd zero_cross = MatrixXd::Zero(dim, dim);
    const VectorXd zero_cross_s = VectorXd::Zero(n_ineq);

    // predictor
    solve_direction(0.0, zero_cross, zero_cross_s, dx, dz, dy, dt, dzs);
    double ap = max_step(x, dx, 1.0);
    double ad = max_step(z, dz, 1.0);
    ap = std::min(ap, max_step_vec(t, dt, 1.0));
    ad = std::min(ad, max_step_vec(zs, dzs, 1.0));
    const double mu_aff = (((x + ap * dx).array() * (z + ad * dz).array()).sum() +
                           (t + ap * dt).dot(zs + ad * dzs)) /
                          nu;
    double sigma = std::pow(std::max(0.0, std::min(1.0, mu_aff / mu)), 3.0);

    // corrector with the predictor cross terms
    MatrixXd cross = dx * dz;
    VectorXd cross_s = dt.cwiseProduct(dzs);
    solve_direction(sigma * mu, cross, cross_s, dx, dz, dy, dt, dzs);

    ap = 0.98 * max_step(x, dx, 1.0 / 0.98);
    ad = 0.98 * max_step(z, dz, 1.0 / 0.98);
    ap = std::min(ap, 0.98 * max_step_vec(t, dt, 1.0 / 0.98));
    ad = std::min(ad, 0.98 * max_step_vec(zs, dzs, 1.0 / 0.98));
    ap = std::min(ap, 1.0);
    ad = std::min(ad, 1.0);
    if (ap < 1e-10 && ad < 1e-10) {
      // stalled; a near-feasible low-gap iterate is still usable
      res.status = best_err <= std::sqrt(tol) ? SdpStatus::MaxIterations
                                              : SdpStatus::NumericalFailure;
      return res;
    }

    x += ap * dx;
    t += ap * dt;
    y += ad * dy;
    z += ad * dz;
    zs += ad * dzs;
  }
  res.status = SdpStatus::MaxIterations;
  return res;
}

} // namespace daur
