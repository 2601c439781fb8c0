#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qapdc/alm.hpp"
#include "qapdc/instance.hpp"
#include "qapdc/types.hpp"

namespace qapdc {

struct EpalmConfig {
  enum class Variant { Epalm, Epalm1 };

  int m = 100;
  int l_max = 1000;
  double rho_max = 1e5;
  double eps1 = 1e-5;
  double eps2 = 1e-5;
  double tau_floor = 1e-3;
  double tau1 = 0.5;
  double varsigma = 0.9;
  double rho0 = 1e-8;
  std::uint64_t seed = 1;
  Variant variant = Variant::Epalm;
  bool local_search = false;
  bool normalize_cost = true;
  double time_limit_s = std::numeric_limits<double>::infinity();
  bool keep_alm_trace = false;
  AlmConfig alm;

  // Penalty growth factor; slower while rho is still tiny.
  double sigma(double rho) const { return rho > 1e-3 ? 1.2 : 1.3; }

  std::string variant_name() const {
    if (variant == Variant::Epalm1) return "epalm1";
    return local_search ? "epalmls" : "epalm";
  }
};

struct ScheduleRecord {
  int l = 0;
  double rho = 0, tau = 0;
  double penalty_gap = 0;  // ||V||_F^2 - ||V||^2 after the subproblem
  double feas = 0;         // sqrt(||F(V)||^2 + ||min(V^T V,0)||_F^2)
  bool alm_certified = false;
  int alm_iters = 0;
};

struct SolveReport {
  std::string instance;
  std::string variant;
  std::uint64_t seed = 0;
  double obj = 0;
  std::optional<double> gap_pct;
  double infeas = 0;
  double time_s = 0;
  int rank_out = 0;
  double final_rho = 0;
  double final_penalty_gap = 0;
  double final_feas = 0;
  bool certified = false;   // outer eps1/eps2 test passed
  bool hit_time_limit = false;
  int outer_iters = 0;
  Permutation perm;
  Matrix x_raw;             // extraction before projection
  Matrix v_final;           // snapshot so invariants can be re-checked
  std::vector<ScheduleRecord> schedule;
  std::vector<AlmTraceRecord> alm_trace;  // populated when keep_alm_trace
};

// X_raw = mat(sigma1 * q1) with the sign flipped so the entry sum is
// nonnegative; perm is its Hungarian projection. No clamping: the raw matrix
// is kept for the infeasibility metric.
std::pair<Matrix, Permutation> extract_solution(const Matrix& V, int n);

// Outer relaxation: V0 ~ gaussian(seed); repeat alm_solve over the
// (rho_l, tau_l) schedule, warm-starting V and multipliers; stop when
// penalty_gap <= eps1 and the combined feasibility residual <= eps2.
SolveReport epalm_solve(const QapInstance& inst, const EpalmConfig& cfg);

// Same outer loop over the EPalm1 subproblem form.
SolveReport epalm1_solve(const QapInstance& inst, const EpalmConfig& cfg);

}  // namespace qapdc
