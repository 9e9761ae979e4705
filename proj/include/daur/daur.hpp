// daur.hpp - outer alternation of the resource (FP) and association (QCQP)
// stages, plus the comparison baselines.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "daur/assoc.hpp"
#include "daur/fp.hpp"
#include "daur/model.hpp"
#include "daur/scenario.hpp"

namespace daur {

struct TraceRow {
  int outer = 0;
  std::string phase; // init | fp | qcqp_relaxed | qcqp_rounded | aux
  double objective = 0;
  double wall_seconds = 0;
};

struct IterationTrace {
  std::vector<TraceRow> rows;
  std::string to_csv() const;
};

// Round-robin association (user n -> server n mod M), phi_off = 1/2,
// phi_bw = zeta = 1/N, rho = psi = 1, gamma = 1/2, with the auxiliaries
// computed at that point.
std::pair<Allocation, AuxState> initialize(const ScenarioParams& params);

struct DaurResult {
  Allocation alloc;
  double dpe = 0;
  int outer_iterations = 0;
  int fp_iterations_total = 0;
  int qcqp_iterations_total = 0;
  bool converged = false;
  bool flagged = false; // a subloop hit its cap or failed
  IterationTrace trace;
};

// Full alternation: fp_loop, qcqp_loop (integral x after rounding), then the
// alpha/theta refresh; stops when the relative DPE change drops below
// eps3 or the outer cap is reached. The reported DPE is recomputed from the
// returned allocation.
DaurResult run_daur(const ScenarioParams& params, const SolverSettings& settings);

enum class Baseline { RUCAA, GUCAA, AAUCO, GUCRO };

std::string baseline_name(Baseline k);

struct BaselineResult {
  Allocation alloc;
  double dpe = 0;
  int iterations = 0;
  bool flagged = false;
};

// RUCAA: seeded uniform-random association, even resource split.
// GUCAA: association by strongest channel gain, even split.
// AAUCO: even split held fixed, association/offloading optimized (QCQP).
// GUCRO: greedy association, resources optimized (FP).
BaselineResult run_baseline(Baseline kind, const ScenarioParams& params,
                            std::uint64_t seed, const SolverSettings& settings);

} // namespace daur
