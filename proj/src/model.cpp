#include "daur/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace daur {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("ScenarioParams: " + what);
}

bool all_positive(const VectorXd& v) { return (v.array() > 0).all(); }

void check_term(double v, const char* name, int n, int m) {
  if (std::isfinite(v)) return;
  std::ostringstream os;
  os << "evaluate_costs: non-finite term " << name << " at user " << n;
  if (m >= 0) os << ", server " << m;
  throw std::runtime_error(os.str());
}

} // namespace

void ScenarioParams::validate() const {
  require(n_users >= 1, "n_users must be >= 1");
  require(n_servers >= 1, "n_servers must be >= 1");
  require(d.size() == n_users && eta_u.size() == n_users && f_u.size() == n_users &&
              p_u.size() == n_users && kappa_u.size() == n_users && c_u.size() == n_users,
          "per-user vectors must have length N");
  require(eta_s.size() == n_servers && eta_bgen.size() == n_servers &&
              f_s.size() == n_servers && b_s.size() == n_servers &&
              kappa_s.size() == n_servers && r_wired.size() == n_servers,
          "per-server vectors must have length M");
  require(gain.rows() == n_users && gain.cols() == n_servers, "gain must be N x M");
  require(c_us.rows() == n_users && c_us.cols() == n_servers, "c_us must be N x M");
  require(all_positive(d), "task sizes must be positive");
  require(all_positive(eta_u) && all_positive(eta_s) && all_positive(eta_bgen),
          "cycle counts must be positive");
  require(all_positive(f_u) && all_positive(f_s), "frequencies must be positive");
  require(all_positive(p_u), "transmit powers must be positive");
  require(all_positive(b_s), "bandwidths must be positive");
  require(all_positive(kappa_u) && all_positive(kappa_s), "kappa must be positive");
  require(all_positive(r_wired), "wired rates must be positive");
  require(all_positive(c_u) && (c_us.array() > 0).all(), "preferences must be positive");
  require((gain.array() > 0).all(), "channel gains must be positive");
  require(noise_psd > 0, "noise_psd must be positive");
  require(block_size_bits > 0, "block_size_bits must be positive");
  require(eta_v > 0, "eta_v must be positive");
  require(omega_b > 0, "omega_b must be positive");
  require(omega_t >= 0 && omega_e >= 0 && omega_t + omega_e > 0,
          "omega_t + omega_e must be positive");
}

Allocation Allocation::floored() const {
  Allocation a = *this;
  a.psi = a.psi.cwiseMax(kEpsFloor);
  a.rho = a.rho.cwiseMax(kEpsFloor);
  a.phi_bw = a.phi_bw.cwiseMax(kEpsFloor);
  a.zeta = a.zeta.cwiseMax(kEpsFloor);
  return a;
}

bool Allocation::feasible(bool integral, double tol) const {
  try {
    check_feasible(integral, tol);
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

void Allocation::check_feasible(bool integral, double tol) const {
  const int n = static_cast<int>(phi_off.size());
  const int m = static_cast<int>(x.cols());
  auto fail = [](const std::string& what) {
    throw std::runtime_error("Allocation: " + what);
  };
  if (x.rows() != n || gamma.rows() != n || phi_bw.rows() != n || zeta.rows() != n ||
      rho.size() != n || psi.size() != n)
    fail("inconsistent dimensions");
  auto in_unit = [&](const auto& a) { return (a.array() >= -tol).all() && (a.array() <= 1 + tol).all(); };
  if (!in_unit(x)) fail("x outside [0,1]");
  if (!in_unit(phi_off)) fail("phi_off outside [0,1]");
  if (!in_unit(phi_bw)) fail("phi_bw outside [0,1]");
  if (!in_unit(rho)) fail("rho outside [0,1]");
  if (!in_unit(zeta)) fail("zeta outside [0,1]");
  if (!in_unit(psi)) fail("psi outside [0,1]");
  if (!((gamma.array() > 0).all() && (gamma.array() < 1).all())) fail("gamma outside (0,1)");
  for (int i = 0; i < n; ++i) {
    const double row = x.row(i).sum();
    if (integral) {
      if (std::abs(row - 1.0) > tol) fail("x row sum != 1 at user " + std::to_string(i));
      for (int j = 0; j < m; ++j)
        if (std::min(std::abs(x(i, j)), std::abs(x(i, j) - 1)) > tol)
          fail("x not 0/1 at (" + std::to_string(i) + "," + std::to_string(j) + ")");
    } else if (row > 1 + tol) {
      // relaxed mode: row sums at most 1 (the SDR iterates satisfy equality,
      // but extraction can clamp entries down)
      fail("relaxed x row sum > 1 at user " + std::to_string(i));
    }
  }
  for (int j = 0; j < m; ++j) {
    if ((x.col(j).array() * phi_bw.col(j).array()).sum() > 1 + tol)
      fail("bandwidth coupling violated at server " + std::to_string(j));
    if ((x.col(j).array() * zeta.col(j).array()).sum() > 1 + tol)
      fail("CPU coupling violated at server " + std::to_string(j));
  }
}

double transmission_rate(const ScenarioParams& params, int n, int m,
                         double phi_bw, double rho) {
  if (phi_bw <= 0 || rho <= 0)
    throw std::domain_error("transmission_rate: zero fraction after flooring");
  const double bw = phi_bw * params.b_s(m);
  const double snr = params.gain(n, m) * rho * params.p_u(n) / (params.noise_psd * bw);
  return bw * std::log2(1.0 + snr);
}

CostBreakdown evaluate_costs(const ScenarioParams& params, const Allocation& alloc_in) {
  const int N = params.n_users, M = params.n_servers;
  const Allocation a = alloc_in.floored();
  CostBreakdown c;
  c.t_up.resize(N);
  c.e_up.resize(N);
  c.cost_u.resize(N);
  c.dpe_user.resize(N);
  for (auto* mat : {&c.t_ut, &c.e_ut, &c.t_sp, &c.e_sp, &c.t_sg, &c.e_sg, &c.t_bp,
                    &c.t_sv, &c.cost_s, &c.dpe_server})
    mat->setZero(N, M);

  for (int n = 0; n < N; ++n) {
    const double local_bits = (1.0 - a.phi_off(n)) * params.d(n);
    const double fu = a.psi(n) * params.f_u(n);
    c.t_up(n) = local_bits * params.eta_u(n) / fu;
    c.e_up(n) = params.kappa_u(n) * local_bits * params.eta_u(n) * fu * fu;
    check_term(c.t_up(n), "t_up", n, -1);
    check_term(c.e_up(n), "e_up", n, -1);
    c.cost_u(n) = params.omega_t * c.t_up(n) + params.omega_e * c.e_up(n);

    for (int m = 0; m < M; ++m) {
      const double off_bits = a.x(n, m) * a.phi_off(n) * params.d(n);
      const double rate = transmission_rate(params, n, m, a.phi_bw(n, m), a.rho(n));
      const double fs = a.zeta(n, m) * params.f_s(m);
      const double gam = a.gamma(n, m);
      const double bgen = params.use_bgen_cycles ? params.eta_bgen(m)
                                                 : params.omega_b * params.eta_s(m);
      c.t_ut(n, m) = off_bits / rate;
      c.e_ut(n, m) = a.rho(n) * params.p_u(n) * c.t_ut(n, m);
      c.t_sp(n, m) = off_bits * params.eta_s(m) / (gam * fs);
      c.e_sp(n, m) = params.kappa_s(m) * off_bits * params.eta_s(m) * (gam * fs) * (gam * fs);
      c.t_sg(n, m) = off_bits * bgen / ((1.0 - gam) * fs);
      c.e_sg(n, m) = params.kappa_s(m) * off_bits * bgen * ((1.0 - gam) * fs) * ((1.0 - gam) * fs);
      c.t_bp(n, m) = params.block_size_bits / params.r_wired(m);
      // Validation delay: worst case over the other servers' current splits
      // for this user; empty when M == 1.
      double sv = 0;
      for (int mp = 0; mp < M; ++mp) {
        if (mp == m) continue;
        sv = std::max(sv, params.eta_v /
                              ((1.0 - a.gamma(n, mp)) * a.zeta(n, mp) * params.f_s(mp)));
      }
      c.t_sv(n, m) = sv;

      check_term(c.t_ut(n, m), "t_ut", n, m);
      check_term(c.e_ut(n, m), "e_ut", n, m);
      check_term(c.t_sp(n, m), "t_sp", n, m);
      check_term(c.e_sp(n, m), "e_sp", n, m);
      check_term(c.t_sg(n, m), "t_sg", n, m);
      check_term(c.e_sg(n, m), "e_sg", n, m);
      check_term(c.t_sv(n, m), "t_sv", n, m);

      c.cost_s(n, m) =
          params.omega_t * (c.t_ut(n, m) + c.t_sp(n, m) + c.t_sg(n, m) + c.t_bp(n, m) +
                            c.t_sv(n, m)) +
          params.omega_e * (c.e_ut(n, m) + c.e_sp(n, m) + c.e_sg(n, m));
    }
  }

  // DPE ratios with the 0/0 guard: zero processed bits contribute 0.
  double total = 0;
  for (int n = 0; n < N; ++n) {
    const double w = params.c_u(n) * (1.0 - a.phi_off(n)) * params.d(n);
    c.dpe_user(n) = (w == 0) ? 0.0 : w / c.cost_u(n);
    check_term(c.dpe_user(n), "dpe_user", n, -1);
    total += c.dpe_user(n);
    for (int m = 0; m < M; ++m) {
      const double ws = params.c_us(n, m) * a.x(n, m) * a.phi_off(n) * params.d(n);
      c.dpe_server(n, m) = (ws == 0) ? 0.0 : ws / c.cost_s(n, m);
      check_term(c.dpe_server(n, m), "dpe_server", n, m);
      total += c.dpe_server(n, m);
    }
  }
  c.dpe_total = total;
  return c;
}

double dpe_objective(const ScenarioParams& params, const Allocation& alloc) {
  return evaluate_costs(params, alloc).dpe_total;
}

} // namespace daur
