#include "daur/assoc.hpp"

#include <cmath>
#include <stdexcept>

#include "daur/hungarian.hpp"

namespace daur {

namespace {

double sq(double v) { return v * v; }

double blockgen_cycles(const ScenarioParams& p, int m) {
  return p.use_bgen_cycles ? p.eta_bgen(m) : p.omega_b * p.eta_s(m);
}

} // namespace

double QcqpMatrices::objective(const VectorXd& q) const {
  const double tu = p_tu.dot(q) + p_tu_offset;
  const double ts = q.dot(p_ts * q) + p_ts_offset;
  return q.dot(p0 * q) + w0.dot(q) + c_scalar + tu + ts;
}

QcqpMatrices assemble_coefficients(const ScenarioParams& params, const Allocation& alloc,
                                   const AuxState& aux) {
  const int N = params.n_users, M = params.n_servers;
  const Allocation a = alloc.floored();
  QcqpMatrices mats;
  mats.layout = QcqpLayout{N, M};
  const int L = mats.layout.q_len();
  mats.a_user.resize(N);
  mats.b_pair.resize(N, M);
  mats.p0 = MatrixXd::Zero(L, L);
  mats.w0 = VectorXd::Zero(L);
  mats.p_tu = VectorXd::Zero(L);
  mats.p_ts = MatrixXd::Zero(L, L);
  mats.c_scalar = 0;
  mats.p_tu_offset = 0;
  mats.p_ts_offset = 0;

  const CostBreakdown costs = evaluate_costs(params, a);

  for (int n = 0; n < N; ++n) {
    const double au = aux.alpha_u(n), thu = aux.theta_u(n);
    const double energy_u =
        au * thu * params.omega_e * params.kappa_u(n) * params.d(n) * params.eta_u(n) *
        sq(params.f_u(n)) * sq(a.psi(n));
    mats.a_user(n) = au * params.c_u(n) * params.d(n) - energy_u;
    mats.c_scalar += -au * params.c_u(n) * params.d(n) + energy_u;
    mats.w0(mats.layout.phi_index(n)) = mats.a_user(n);

    // T^(u): sum_n au*thu*omega_t*(1-phi_n)*d*eta/(psi f) as linear in phi
    const double tu_coef =
        au * thu * params.omega_t * params.d(n) * params.eta_u(n) / (a.psi(n) * params.f_u(n));
    mats.p_tu(mats.layout.phi_index(n)) = -tu_coef;
    mats.p_tu_offset += tu_coef;

    for (int m = 0; m < M; ++m) {
      const double as = aux.alpha_s(n, m), ths = aux.theta_s(n, m);
      const double rate = transmission_rate(params, n, m, a.phi_bw(n, m), a.rho(n));
      const double gam = a.gamma(n, m);
      const double gfac = sq(gam) * params.eta_s(m) + sq(1.0 - gam) * blockgen_cycles(params, m);
      mats.b_pair(n, m) =
          as * ths * params.omega_e * a.rho(n) * params.p_u(n) * params.d(n) / rate +
          as * ths * params.omega_e * params.kappa_s(m) * params.d(n) * gfac *
              sq(a.zeta(n, m)) * sq(params.f_s(m)) -
          as * params.c_us(n, m) * params.d(n);
      const int xi = mats.layout.x_index(n, m);
      const int pi = mats.layout.phi_index(n);
      mats.p0(pi, xi) += 0.5 * mats.b_pair(n, m);
      mats.p0(xi, pi) += 0.5 * mats.b_pair(n, m);

      // T^(s): the delay sum carries the alpha*theta*omega_t weight of
      // constraint (Ts); the per-bit part is bilinear in x*phi, the
      // propagation and validation delays are constants.
      const double w = as * ths * params.omega_t;
      const double delay_per_xphi =
          params.d(n) / rate +
          params.d(n) * params.eta_s(m) / (gam * a.zeta(n, m) * params.f_s(m)) +
          params.d(n) * blockgen_cycles(params, m) / ((1.0 - gam) * a.zeta(n, m) * params.f_s(m));
      mats.p_ts(pi, xi) += 0.5 * w * delay_per_xphi;
      mats.p_ts(xi, pi) += 0.5 * w * delay_per_xphi;
      mats.p_ts_offset += w * (costs.t_bp(n, m) + costs.t_sv(n, m));
    }
  }
  return mats;
}

bool set_gamma_optimal(Allocation& alloc, double omega_b) {
  if (omega_b <= 0) throw std::invalid_argument("set_gamma_optimal: omega_b must be positive");
  alloc.gamma.setConstant(alloc.gamma.rows(), alloc.gamma.cols(), 1.0 / (1.0 + omega_b));
  return omega_b != 1.0;
}

SdpProblem build_sdr(const ScenarioParams& params, const Allocation& alloc,
                     const QcqpMatrices& mats) {
  const QcqpLayout& lay = mats.layout;
  const int L = lay.q_len();
  const int D = lay.lift_dim();
  const int N = lay.n_users, M = lay.n_servers;

  SdpProblem prob;
  // cost: P1 with the T terms folded in (they appear with +1 in the
  // objective and bind at their trace bounds)
  prob.cost = MatrixXd::Zero(D, D);
  prob.cost.topLeftCorner(L, L) = mats.p0 + mats.p_ts;
  prob.cost.topRightCorner(L, 1) = 0.5 * (mats.w0 + mats.p_tu);
  prob.cost.bottomLeftCorner(1, L) = 0.5 * (mats.w0 + mats.p_tu).transpose();
  prob.cost(L, L) = mats.c_scalar + mats.p_tu_offset + mats.p_ts_offset;

  auto border = [&](const VectorXd& v, double corner) {
    MatrixXd p = MatrixXd::Zero(D, D);
    p.topRightCorner(L, 1) = 0.5 * v;
    p.bottomLeftCorner(1, L) = 0.5 * v.transpose();
    p(L, L) = corner;
    return p;
  };

  // binary lift x(x-1) = 0 per x entry
  for (int m = 0; m < M; ++m) {
    for (int n = 0; n < N; ++n) {
      const int xi = lay.x_index(n, m);
      MatrixXd p = MatrixXd::Zero(D, D);
      p(xi, xi) = 1.0;
      p(xi, L) = -0.5;
      p(L, xi) = -0.5;
      prob.constraints.push_back({p, SdpSense::Equal, 0.0});
    }
  }
  // row sums: sum_m x_{n,m} = 1
  for (int n = 0; n < N; ++n) {
    VectorXd v = VectorXd::Zero(L);
    for (int m = 0; m < M; ++m) v(lay.x_index(n, m)) = 1.0;
    prob.constraints.push_back({border(v, -1.0), SdpSense::Equal, 0.0});
  }
  // phi box: phi <= 1 and -phi <= 0
  for (int n = 0; n < N; ++n) {
    VectorXd v = VectorXd::Zero(L);
    v(lay.phi_index(n)) = 1.0;
    prob.constraints.push_back({border(v, -1.0), SdpSense::LessEqual, 0.0});
    prob.constraints.push_back({border(-v, 0.0), SdpSense::LessEqual, 0.0});
  }
  // phi diagonal lift phi^2 <= phi, keeping the relaxation bounded
  for (int n = 0; n < N; ++n) {
    const int pi = lay.phi_index(n);
    MatrixXd p = MatrixXd::Zero(D, D);
    p(pi, pi) = 1.0;
    p(pi, L) = -0.5;
    p(L, pi) = -0.5;
    prob.constraints.push_back({p, SdpSense::LessEqual, 0.0});
  }
  // per-server coupling with the fixed resource fractions
  for (int m = 0; m < M; ++m) {
    VectorXd vb = VectorXd::Zero(L), vz = VectorXd::Zero(L);
    for (int n = 0; n < N; ++n) {
      vb(lay.x_index(n, m)) = alloc.phi_bw(n, m);
      vz(lay.x_index(n, m)) = alloc.zeta(n, m);
    }
    prob.constraints.push_back({border(vb, -1.0), SdpSense::LessEqual, 0.0});
    prob.constraints.push_back({border(vz, -1.0), SdpSense::LessEqual, 0.0});
  }
  // homogenization
  {
    MatrixXd p = MatrixXd::Zero(D, D);
    p(L, L) = 1.0;
    prob.constraints.push_back({p, SdpSense::Equal, 1.0});
  }
  (void)params;
  return prob;
}

VectorXd extract_q(const MatrixXd& s, const QcqpMatrices& mats) {
  const int D = mats.layout.lift_dim();
  const int L = mats.layout.q_len();
  if (s.rows() != D || s.cols() != D) throw std::invalid_argument("extract_q: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (s + s.transpose()));
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -1e-6 * scale)
    throw std::invalid_argument("extract_q: input is not PSD");
  const double corner = s(L, L);
  if (corner <= 0) throw std::invalid_argument("extract_q: homogenization entry not positive");

  VectorXd q = s.col(L).head(L) / corner;
  VectorXd clamped = q.cwiseMax(0.0).cwiseMin(1.0);
  const double moved = (q - clamped).cwiseAbs().maxCoeff();
  if (moved > 0.05) {
    // rank-1 route: leading eigenvector scaled so its last entry is 1
    const VectorXd lead = es.eigenvectors().col(D - 1);
    if (std::abs(lead(L)) > 1e-12) {
      VectorXd q2 = (lead.head(L) / lead(L)).cwiseMax(0.0).cwiseMin(1.0);
      if (mats.objective(q2) < mats.objective(clamped)) return q2;
    }
  }
  return clamped;
}

MatrixXd round_association(const MatrixXd& x_relaxed, bool argmax_rounding) {
  const int N = static_cast<int>(x_relaxed.rows());
  const int M = static_cast<int>(x_relaxed.cols());
  if ((x_relaxed.array() < -1e-9).any())
    throw std::invalid_argument("round_association: negative entries");

  MatrixXd w = x_relaxed.cwiseMax(0.0);
  for (int n = 0; n < N; ++n) {
    const double row = w.row(n).sum();
    if (row > 1.0) w.row(n) /= row;
  }

  MatrixXd x = MatrixXd::Zero(N, M);
  if (argmax_rounding) {
    for (int n = 0; n < N; ++n) {
      int best = 0;
      w.row(n).maxCoeff(&best);
      x(n, best) = 1.0;
    }
    return x;
  }

  // ceil(N/M) capacity slots per server, padded square, max-weight matching
  const int slots_per_server = (N + M - 1) / M;
  const int total_slots = slots_per_server * M;
  const int dim = std::max(N, total_slots);
  MatrixXd cost = MatrixXd::Zero(dim, dim);
  for (int n = 0; n < N; ++n)
    for (int s = 0; s < total_slots; ++s) cost(n, s) = -w(n, s / slots_per_server);
  const std::vector<int> row_to_col = hungarian_min_cost(cost);
  for (int n = 0; n < N; ++n) {
    const int slot = row_to_col[n];
    if (slot < 0 || slot >= total_slots)
      throw std::logic_error("round_association: unmatched user");
    x(n, slot / slots_per_server) = 1.0;
  }
  return x;
}

QcqpResult qcqp_loop(const ScenarioParams& params, const Allocation& start,
                     const AuxState& aux_start, double eps2, int max_iterations,
                     bool argmax_rounding) {
  if (eps2 <= 0) throw std::invalid_argument("qcqp_loop: eps2 must be positive");
  const int N = params.n_users, M = params.n_servers;

  QcqpResult out;
  out.alloc = start;
  AuxState aux = aux_start;
  double v_prev = std::numeric_limits<double>::quiet_NaN();
  // The re-linearized iteration can limit-cycle between assignments (the
  // surrogate carries no delay term for pairs with theta = 0), so the loop
  // keeps the best iterate by true objective and stops on revisits.
  Allocation best = start;
  double best_dpe = dpe_objective(params, start);
  std::vector<VectorXd> seen;
  for (int it = 1; it <= max_iterations; ++it) {
    const QcqpMatrices mats = assemble_coefficients(params, out.alloc, aux);
    const SdpProblem prob = build_sdr(params, out.alloc, mats);
    const SdpResult sr = solve_sdp(prob, 1e-8);
    out.last_status = sr.status;
    out.iterations = it;
    if (sr.status != SdpStatus::Optimal && sr.status != SdpStatus::MaxIterations) break;

    const VectorXd q = extract_q(sr.s, mats);
    for (int n = 0; n < N; ++n) {
      out.alloc.phi_off(n) = q(mats.layout.phi_index(n));
      for (int m = 0; m < M; ++m) out.alloc.x(n, m) = q(mats.layout.x_index(n, m));
    }
    out.sdr_value = sr.value;
    aux = update_alpha_theta(params, out.alloc);
    const double dpe = dpe_objective(params, out.alloc);
    if (dpe > best_dpe) {
      best_dpe = dpe;
      best = out.alloc;
    }

    if (it > 1 && std::abs(sr.value - v_prev) <= eps2 * std::max(1.0, std::abs(v_prev))) {
      out.converged = true;
      break;
    }
    v_prev = sr.value;

    bool revisit = false;
    for (const VectorXd& old : seen)
      if ((old - q).lpNorm<Eigen::Infinity>() <= 1e-6) revisit = true;
    if (revisit) {
      out.converged = true; // periodic orbit; further rounds repeat it
      break;
    }
    seen.push_back(q);
  }

  out.alloc = best;
  out.pre_round_dpe = best_dpe;
  out.alloc.x = round_association(out.alloc.x, argmax_rounding);
  out.alloc.phi_off = out.alloc.phi_off.cwiseMax(0.0).cwiseMin(1.0);

  // repair: rescale each server's connected fractions so (14f)/(14h) hold
  // under the new association; the next FP pass re-optimizes them anyway
  for (int m = 0; m < M; ++m) {
    double load_bw = 0, load_z = 0;
    for (int n = 0; n < N; ++n) {
      if (out.alloc.x(n, m) < 0.5) continue;
      load_bw += out.alloc.phi_bw(n, m);
      load_z += out.alloc.zeta(n, m);
    }
    for (int n = 0; n < N; ++n) {
      if (out.alloc.x(n, m) < 0.5) continue;
      if (load_bw > 1.0) out.alloc.phi_bw(n, m) /= load_bw;
      if (load_z > 1.0) out.alloc.zeta(n, m) /= load_z;
    }
  }
  out.post_round_dpe = dpe_objective(params, out.alloc);
  return out;
}

} // namespace daur
