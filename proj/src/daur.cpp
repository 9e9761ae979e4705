#include "daur/daur.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace daur {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Allocation blank_allocation(const ScenarioParams& params) {
  const int N = params.n_users, M = params.n_servers;
  Allocation a;
  a.x = MatrixXd::Zero(N, M);
  a.phi_off = VectorXd::Constant(N, 0.5);
  a.gamma = MatrixXd::Constant(N, M, 0.5);
  a.phi_bw = MatrixXd::Constant(N, M, 1.0 / N);
  a.rho = VectorXd::Ones(N);
  a.zeta = MatrixXd::Constant(N, M, 1.0 / N);
  a.psi = VectorXd::Ones(N);
  return a;
}

// Even split of a server's bandwidth/CPU across its connected users
// (1/load), or the paper-literal 1/N when uniform is requested.
void average_split(const ScenarioParams& params, Allocation& a, bool uniform) {
  const int N = params.n_users, M = params.n_servers;
  for (int m = 0; m < M; ++m) {
    int load = 0;
    for (int n = 0; n < N; ++n)
      if (a.x(n, m) > 0.5) ++load;
    if (load == 0) continue;
    const double share = uniform ? 1.0 / N : 1.0 / load;
    for (int n = 0; n < N; ++n) {
      if (a.x(n, m) < 0.5) continue;
      a.phi_bw(n, m) = share;
      a.zeta(n, m) = share;
    }
  }
}

} // namespace

std::string IterationTrace::to_csv() const {
  std::ostringstream os;
  os << "outer,phase,objective,wall_seconds\n";
  os.precision(17);
  for (const auto& r : rows)
    os << r.outer << "," << r.phase << "," << r.objective << "," << r.wall_seconds << "\n";
  return os.str();
}

std::pair<Allocation, AuxState> initialize(const ScenarioParams& params) {
  const int N = params.n_users, M = params.n_servers;
  Allocation a = blank_allocation(params);
  for (int n = 0; n < N; ++n) a.x(n, n % M) = 1.0;
  const AuxState aux = update_alpha_theta(params, a);
  return {a, aux};
}

DaurResult run_daur(const ScenarioParams& params, const SolverSettings& settings) {
  const auto t0 = Clock::now();
  DaurResult out;
  auto [alloc, aux] = initialize(params);
  double dpe_prev = dpe_objective(params, alloc);
  out.trace.rows.push_back({0, "init", dpe_prev, seconds_since(t0)});

  for (int outer = 1; outer <= settings.max_outer; ++outer) {
    out.outer_iterations = outer;
    const double round_start = dpe_prev;

    const FpResult fp = fp_loop(params, alloc, aux, settings.tol_fp, settings.max_fp);
    alloc = fp.alloc;
    out.fp_iterations_total += fp.iterations;
    if (!fp.converged) out.flagged = true;
    out.trace.rows.push_back({outer, "fp", dpe_objective(params, alloc), seconds_since(t0)});

    const QcqpResult qc = qcqp_loop(params, alloc, aux, settings.tol_qcqp,
                                    settings.max_qcqp, settings.argmax_rounding);
    out.qcqp_iterations_total += qc.iterations;
    if (!qc.converged) out.flagged = true;
    out.trace.rows.push_back({outer, "qcqp_relaxed", qc.pre_round_dpe, seconds_since(t0)});
    out.trace.rows.push_back({outer, "qcqp_rounded", qc.post_round_dpe, seconds_since(t0)});
    // A rounding loss larger than the round's whole gain would walk the
    // objective downhill; keep the previous association in that case.
    if (qc.post_round_dpe >= round_start) alloc = qc.alloc;

    set_gamma_optimal(alloc, params.omega_b);
    aux = update_alpha_theta(params, alloc);
    const double dpe = dpe_objective(params, alloc);
    out.trace.rows.push_back({outer, "aux", dpe, seconds_since(t0)});

    if (std::abs(dpe - dpe_prev) <= settings.tol_outer * std::max(1.0, std::abs(dpe_prev))) {
      out.converged = true;
      dpe_prev = dpe;
      break;
    }
    dpe_prev = dpe;
  }
  if (!out.converged) out.flagged = true;

  out.alloc = alloc;
  out.dpe = dpe_objective(params, alloc); // recomputed from scratch
  return out;
}

std::string baseline_name(Baseline k) {
  switch (k) {
    case Baseline::RUCAA: return "RUCAA";
    case Baseline::GUCAA: return "GUCAA";
    case Baseline::AAUCO: return "AAUCO";
    case Baseline::GUCRO: return "GUCRO";
  }
  return "?";
}

BaselineResult run_baseline(Baseline kind, const ScenarioParams& params,
                            std::uint64_t seed, const SolverSettings& settings) {
  const int N = params.n_users, M = params.n_servers;
  BaselineResult out;
  Allocation a = blank_allocation(params);

  switch (kind) {
    case Baseline::RUCAA: {
      const StreamRng rng(seed);
      for (int n = 0; n < N; ++n) {
        const int m = std::min<int>(M - 1, static_cast<int>(
                                               rng.uniform(StreamRng::kBaselineAssoc, n, 0, 0) * M));
        a.x(n, m) = 1.0;
      }
      average_split(params, a, settings.uniform_average);
      break;
    }
    case Baseline::GUCAA: {
      for (int n = 0; n < N; ++n) {
        int best = 0;
        params.gain.row(n).maxCoeff(&best);
        a.x(n, best) = 1.0;
      }
      average_split(params, a, settings.uniform_average);
      break;
    }
    case Baseline::AAUCO: {
      for (int n = 0; n < N; ++n) a.x(n, n % M) = 1.0;
      average_split(params, a, settings.uniform_average);
      const AuxState aux = update_alpha_theta(params, a);
      const QcqpResult qc = qcqp_loop(params, a, aux, settings.tol_qcqp, settings.max_qcqp,
                                      settings.argmax_rounding);
      a = qc.alloc;
      out.iterations = qc.iterations;
      out.flagged = !qc.converged;
      break;
    }
    case Baseline::GUCRO: {
      for (int n = 0; n < N; ++n) {
        int best = 0;
        params.gain.row(n).maxCoeff(&best);
        a.x(n, best) = 1.0;
      }
      average_split(params, a, settings.uniform_average);
      const AuxState aux = update_alpha_theta(params, a);
      const FpResult fp = fp_loop(params, a, aux, settings.tol_fp, settings.max_fp);
      a = fp.alloc;
      out.iterations = fp.iterations;
      out.flagged = !fp.converged;
      break;
    }
  }

  out.alloc = a;
  out.dpe = dpe_objective(params, a);
  return out;
}

} // namespace daur
