#include "daur/fp.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace daur {

namespace {

double sq(double v) { return v * v; }

// log2(1+z) and friends show up in every rate derivative
struct RateDerivs {
  double r, dr_rho, dr_phi, d2_rho2, d2_phi2, d2_rhophi;
};

RateDerivs rate_derivs(const ScenarioParams& p, int n, int m, double phi_bw, double rho) {
  const double b = p.b_s(m);
  const double k2 = p.gain(n, m) * p.p_u(n) / (p.noise_psd * b);
  const double z = k2 * rho / phi_bw;
  const double ln2 = std::log(2.0);
  RateDerivs d;
  d.r = phi_bw * b * std::log1p(z) / ln2;
  d.dr_rho = b * k2 / (ln2 * (1.0 + z));
  d.dr_phi = (b / ln2) * (std::log1p(z) - z / (1.0 + z));
  d.d2_rho2 = -b * k2 * k2 / (phi_bw * ln2 * sq(1.0 + z));
  d.d2_phi2 = -(b / ln2) * z * z / (phi_bw * sq(1.0 + z));
  d.d2_rhophi = b * k2 * z / (phi_bw * ln2 * sq(1.0 + z));
  return d;
}

double blockgen_cycles(const ScenarioParams& p, int m) {
  return p.use_bgen_cycles ? p.eta_bgen(m) : p.omega_b * p.eta_s(m);
}

int connected_server(const Allocation& a, int n) {
  int cm = -1;
  for (int m = 0; m < a.x.cols(); ++m) {
    if (a.x(n, m) > 0.5) {
      if (cm >= 0) throw std::invalid_argument("fp: association is not integral");
      cm = m;
    }
  }
  if (cm < 0) throw std::invalid_argument("fp: user without a server");
  return cm;
}

// Per-user constants of the P5 objective with x integral and T eliminated.
struct UserTerms {
  int server = 0;
  double const_part = 0; // alpha*c*bits terms and the fixed bp delay
  double ku_t = 0;       // user delay:     -ku_t / psi
  double ku_e = 0;       // user energy:    -ku_e * psi^2
  double st_rate = 0;    // rate delay:     -st_rate / r
  double kz_t = 0;       // server delays:  -kz_t / zeta
  double kz_e = 0;       // server energy:  -kz_e * zeta^2
  double ke = 0;         // transform:      -ke*(chi^2 ups + 1/(4 r^2 ups))
  double chi_rho = 0;    // chi = chi_rho * rho
  double slack_coef = 0; // -slack_coef * s
  double ups = 0;
  double slack_lo = 0;   // frozen t_sv bound
};

UserTerms user_terms(const ScenarioParams& p, const Allocation& a, const AuxState& aux,
                     const MatrixXd& upsilon, int n) {
  UserTerms t;
  const int m = connected_server(a, n);
  t.server = m;
  const double w_loc = (1.0 - a.phi_off(n)) * p.d(n);
  const double w_off = a.phi_off(n) * p.d(n);
  const double au = aux.alpha_u(n), thu = aux.theta_u(n);
  const double as = aux.alpha_s(n, m), ths = aux.theta_s(n, m);
  const double gam = a.gamma(n, m);
  const double bgen = blockgen_cycles(p, m);

  t.const_part = au * p.c_u(n) * w_loc + as * p.c_us(n, m) * w_off -
                 as * ths * p.omega_t * p.block_size_bits / p.r_wired(m);
  t.ku_t = au * thu * p.omega_t * w_loc * p.eta_u(n) / p.f_u(n);
  t.ku_e = au * thu * p.omega_e * p.kappa_u(n) * w_loc * p.eta_u(n) * sq(p.f_u(n));
  t.st_rate = as * ths * p.omega_t * w_off;
  t.kz_t = as * ths * p.omega_t * w_off *
           (p.eta_s(m) / (gam * p.f_s(m)) + bgen / ((1.0 - gam) * p.f_s(m)));
  t.kz_e = as * ths * p.omega_e * p.kappa_s(m) * w_off * sq(p.f_s(m)) *
           (p.eta_s(m) * sq(gam) + bgen * sq(1.0 - gam));
  t.ke = as * ths * p.omega_e;
  t.chi_rho = p.p_u(n) * w_off;
  t.slack_coef = as * ths * p.omega_t;
  t.ups = upsilon(n, m);

  // frozen validation delay: other servers' current splits for this user
  double sv = 0;
  for (int mp = 0; mp < p.n_servers; ++mp) {
    if (mp == m) continue;
    sv = std::max(sv, p.eta_v / ((1.0 - a.gamma(n, mp)) *
                                 std::max(a.zeta(n, mp), kEpsFloor) * p.f_s(mp)));
  }
  t.slack_lo = sv;
  return t;
}

} // namespace

AuxState update_alpha_theta(const ScenarioParams& params, const Allocation& alloc) {
  const CostBreakdown c = evaluate_costs(params, alloc);
  // alpha divides by the costs, which vanish at the phi_off box corners
  // (cost_u at phi=1); evaluate them with phi clamped into the interior so
  // the multipliers stay finite. theta keeps the exact guarded ratios, so
  // the theta-sum/DPE identity is untouched.
  Allocation interior = alloc;
  interior.phi_off = alloc.phi_off.cwiseMax(kEpsFloor).cwiseMin(1.0 - kEpsFloor);
  const CostBreakdown ci = evaluate_costs(params, interior);
  AuxState aux;
  aux.alpha_u = ci.cost_u.cwiseMax(1e-12).cwiseInverse();
  aux.alpha_s = ci.cost_s.cwiseMax(1e-12).cwiseInverse();
  aux.theta_u = c.dpe_user;   // c(1-phi)d/cost_u with the 0/0 guard
  aux.theta_s = c.dpe_server; // c x phi d/cost_s, 0 when x*phi = 0
  aux.t_u = c.t_up;
  aux.t_s = c.t_ut + c.t_sp + c.t_sg + c.t_bp + c.t_sv;
  aux.upsilon = update_upsilon(params, alloc);
  return aux;
}

MatrixXd update_upsilon(const ScenarioParams& params, const Allocation& alloc) {
  const int N = params.n_users, M = params.n_servers;
  const Allocation a = alloc.floored();
  MatrixXd ups = MatrixXd::Zero(N, M);
  for (int n = 0; n < N; ++n) {
    for (int m = 0; m < M; ++m) {
      const double chi = a.x(n, m) * a.rho(n) * params.p_u(n) * a.phi_off(n) * params.d(n);
      if (chi <= 0) continue;
      const double r = transmission_rate(params, n, m, a.phi_bw(n, m), a.rho(n));
      ups(n, m) = 1.0 / (2.0 * chi * r);
    }
  }
  return ups;
}

double transformed_cost_s(const ScenarioParams& params, const Allocation& alloc,
                          const MatrixXd& upsilon, int n, int m) {
  const Allocation a = alloc.floored();
  const CostBreakdown c = evaluate_costs(params, a);
  const double chi = a.x(n, m) * a.rho(n) * params.p_u(n) * a.phi_off(n) * params.d(n);
  double e_ut_tilde = c.e_ut(n, m);
  if (chi > 0 && upsilon(n, m) > 0) {
    const double r = transmission_rate(params, n, m, a.phi_bw(n, m), a.rho(n));
    e_ut_tilde = sq(chi) * upsilon(n, m) + 1.0 / (4.0 * sq(r) * upsilon(n, m));
  }
  return params.omega_t * (c.t_ut(n, m) + c.t_sp(n, m) + c.t_sg(n, m) + c.t_bp(n, m) +
                           c.t_sv(n, m)) +
         params.omega_e * (e_ut_tilde + c.e_sp(n, m) + c.e_sg(n, m));
}

double p3_objective(const ScenarioParams& params, const Allocation& alloc,
                    const AuxState& aux) {
  const CostBreakdown c = evaluate_costs(params, alloc);
  const Allocation a = alloc.floored();
  double v = 0;
  for (int n = 0; n < params.n_users; ++n) {
    v += aux.alpha_u(n) *
         (params.c_u(n) * (1.0 - a.phi_off(n)) * params.d(n) - aux.theta_u(n) * c.cost_u(n));
    for (int m = 0; m < params.n_servers; ++m)
      v += aux.alpha_s(n, m) * (params.c_us(n, m) * a.x(n, m) * a.phi_off(n) * params.d(n) -
                                aux.theta_s(n, m) * c.cost_s(n, m));
  }
  return v;
}

namespace {

// Decision vector: [psi | rho | phi_bw | zeta | slack], one entry per user.
struct P5Program {
  const ScenarioParams& p;
  std::vector<UserTerms> terms;
  int n = 0;

  int i_psi(int k) const { return k; }
  int i_rho(int k) const { return n + k; }
  int i_bw(int k) const { return 2 * n + k; }
  int i_zeta(int k) const { return 3 * n + k; }
  int i_s(int k) const { return 4 * n + k; }
  int dim() const { return 5 * n; }

  double eval(const VectorXd& v, VectorXd* grad, MatrixXd* hess) const {
    if (grad) grad->setZero(dim());
    if (hess) hess->setZero(dim(), dim());
    double val = 0;
    for (int k = 0; k < n; ++k) {
      const UserTerms& t = terms[k];
      const double psi = v(i_psi(k)), rho = v(i_rho(k)), bw = v(i_bw(k));
      const double zeta = v(i_zeta(k)), s = v(i_s(k));
      val += t.const_part - t.ku_t / psi - t.ku_e * sq(psi) - t.kz_t / zeta -
             t.kz_e * sq(zeta) - t.slack_coef * s;
      if (grad) {
        (*grad)(i_psi(k)) += t.ku_t / sq(psi) - 2.0 * t.ku_e * psi;
        (*grad)(i_zeta(k)) += t.kz_t / sq(zeta) - 2.0 * t.kz_e * zeta;
        (*grad)(i_s(k)) -= t.slack_coef;
      }
      if (hess) {
        (*hess)(i_psi(k), i_psi(k)) += -2.0 * t.ku_t / (sq(psi) * psi) - 2.0 * t.ku_e;
        (*hess)(i_zeta(k), i_zeta(k)) += -2.0 * t.kz_t / (sq(zeta) * zeta) - 2.0 * t.kz_e;
      }

      // ups == 0 means chi = 0 (no offloaded bits right now): the
      // transmission delay and energy vanish identically.
      if (t.ups > 0) {
        const RateDerivs rd = rate_derivs(p, k_user(k), t.server, bw, rho);
        const double chi = t.chi_rho * rho;
        val += -t.ke * (sq(chi) * t.ups + 1.0 / (4.0 * sq(rd.r) * t.ups));
        // f(r) = -st_rate/r - ke/(4 ups r^2)
        const double fp = t.st_rate / sq(rd.r) + t.ke / (2.0 * t.ups * sq(rd.r) * rd.r);
        const double fpp = -2.0 * t.st_rate / (sq(rd.r) * rd.r) -
                           1.5 * t.ke / (t.ups * sq(sq(rd.r)));
        val += -t.st_rate / rd.r;
        if (grad) {
          (*grad)(i_rho(k)) += fp * rd.dr_rho - 2.0 * t.ke * t.ups * chi * t.chi_rho;
          (*grad)(i_bw(k)) += fp * rd.dr_phi;
        }
        if (hess) {
          (*hess)(i_rho(k), i_rho(k)) +=
              fpp * sq(rd.dr_rho) + fp * rd.d2_rho2 - 2.0 * t.ke * t.ups * sq(t.chi_rho);
          (*hess)(i_bw(k), i_bw(k)) += fpp * sq(rd.dr_phi) + fp * rd.d2_phi2;
          const double cross = fpp * rd.dr_rho * rd.dr_phi + fp * rd.d2_rhophi;
          (*hess)(i_rho(k), i_bw(k)) += cross;
          (*hess)(i_bw(k), i_rho(k)) += cross;
        }
      }
    }
    return val;
  }

  std::vector<int> users; // packed user ids
  int k_user(int k) const { return users[k]; }
};

} // namespace

ConcaveProgram build_p5_program(const ScenarioParams& params, const Allocation& start,
                                const AuxState& aux, const MatrixXd& upsilon) {
  const int N = params.n_users;
  auto prog = std::make_shared<P5Program>(P5Program{params, {}, N, {}});
  prog->users.resize(N);
  prog->terms.reserve(N);
  for (int n = 0; n < N; ++n) {
    prog->users[n] = n;
    prog->terms.push_back(user_terms(params, start, aux, upsilon, n));
  }

  const int dim = prog->dim();
  ConcaveProgram cp;
  cp.dim = dim;
  cp.objective = [prog](const VectorXd& v, VectorXd* g) { return prog->eval(v, g, nullptr); };
  cp.hessian = [prog](const VectorXd& v, MatrixXd& h) { prog->eval(v, nullptr, &h); };
  cp.lower.setConstant(dim, kEpsFloor);
  cp.upper.setConstant(dim, 1.0);
  for (int k = 0; k < N; ++k) {
    const double lo = prog->terms[k].slack_lo;
    cp.lower(prog->i_s(k)) = lo;
    cp.upper(prog->i_s(k)) = lo + std::max(1.0, lo);
  }

  // per-server coupling over the connected pairs
  const int M = params.n_servers;
  cp.lin_a.setZero(2 * M, dim);
  cp.lin_b.setOnes(2 * M);
  for (int k = 0; k < N; ++k) {
    cp.lin_a(prog->terms[k].server, prog->i_bw(k)) = 1.0;
    cp.lin_a(M + prog->terms[k].server, prog->i_zeta(k)) = 1.0;
  }

  // strictly interior start from the current allocation
  cp.start.resize(dim);
  const Allocation fstart = start.floored();
  for (int k = 0; k < N; ++k) {
    const int m = prog->terms[k].server;
    auto interior = [](double v) {
      return std::min(std::max(v, kEpsFloor * (1.0 + 1e-3)), 1.0 - 1e-7);
    };
    cp.start(prog->i_psi(k)) = interior(fstart.psi(k));
    cp.start(prog->i_rho(k)) = interior(fstart.rho(k));
    cp.start(prog->i_bw(k)) = interior(fstart.phi_bw(k, m));
    cp.start(prog->i_zeta(k)) = interior(fstart.zeta(k, m));
    cp.start(prog->i_s(k)) =
        prog->terms[k].slack_lo + 0.5 * std::max(1.0, prog->terms[k].slack_lo);
  }
  // shrink any saturated coupling rows into the interior
  for (int m = 0; m < 2 * M; ++m) {
    const double row = cp.lin_a.row(m).dot(cp.start);
    if (row >= 1.0 - 1e-9) {
      const double scale = (1.0 - 1e-7) / row;
      for (int k = 0; k < dim; ++k)
        if (cp.lin_a(m, k) != 0)
          cp.start(k) = std::max(kEpsFloor * (1.0 + 1e-3), cp.start(k) * scale);
    }
  }
  return cp;
}

P5Result solve_p5(const ScenarioParams& params, const Allocation& start,
                  const AuxState& aux, const MatrixXd& upsilon) {
  const ConcaveProgram cp = build_p5_program(params, start, aux, upsilon);
  const NlpResult nr = maximize(cp, 1e-8);
  P5Result out;
  out.status = nr.status;
  out.alloc = start;
  const int N = params.n_users;
  for (int k = 0; k < N; ++k) {
    const int m = connected_server(start, k);
    out.alloc.psi(k) = nr.point(k);
    out.alloc.rho(k) = nr.point(N + k);
    out.alloc.phi_bw(k, m) = nr.point(2 * N + k);
    out.alloc.zeta(k, m) = nr.point(3 * N + k);
  }
  out.value = nr.value;
  return out;
}

double p5_objective_value(const ScenarioParams& params, const Allocation& alloc,
                          const AuxState& aux, const MatrixXd& upsilon) {
  const int N = params.n_users;
  P5Program prog{params, {}, N, {}};
  prog.users.resize(N);
  for (int n = 0; n < N; ++n) {
    prog.users[n] = n;
    prog.terms.push_back(user_terms(params, alloc, aux, upsilon, n));
  }
  VectorXd v(prog.dim());
  const Allocation fa = alloc.floored();
  for (int k = 0; k < N; ++k) {
    const int m = prog.terms[k].server;
    v(prog.i_psi(k)) = fa.psi(k);
    v(prog.i_rho(k)) = fa.rho(k);
    v(prog.i_bw(k)) = fa.phi_bw(k, m);
    v(prog.i_zeta(k)) = fa.zeta(k, m);
    v(prog.i_s(k)) = prog.terms[k].slack_lo; // binding
  }
  return prog.eval(v, nullptr, nullptr);
}

FpResult fp_loop(const ScenarioParams& params, const Allocation& start,
                 const AuxState& aux, double eps1, int max_iterations) {
  if (eps1 <= 0) throw std::invalid_argument("fp_loop: eps1 must be positive");
  FpResult out;
  out.alloc = start;
  MatrixXd ups = update_upsilon(params, out.alloc);
  double v_prev = p5_objective_value(params, out.alloc, aux, ups);
  out.value_trace.push_back(v_prev);
  for (int it = 1; it <= max_iterations; ++it) {
    const P5Result r = solve_p5(params, out.alloc, aux, ups);
    out.alloc = r.alloc;
    out.value = r.value;
    out.iterations = it;
    out.value_trace.push_back(r.value);
    if (std::abs(r.value - v_prev) <= eps1 * std::max(1.0, std::abs(v_prev))) {
      out.converged = true;
      break;
    }
    v_prev = r.value;
    ups = update_upsilon(params, out.alloc);
  }
  return out;
}

} // namespace daur
