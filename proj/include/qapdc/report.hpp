#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qapdc/epalm.hpp"

namespace qapdc {

// Dispatch on cfg.variant.
SolveReport solve(const QapInstance& inst, const EpalmConfig& cfg);

// {instance, obj, gap_pct, infeas, time_s, seed, variant} plus run detail.
std::string report_to_json(const SolveReport& rep);

// Bench table mirroring the benchmark layout: one row per (instance, seed),
// columns Prob., Optval, Obj, gap%, infeas, time; gap rounded to 2 decimals,
// time to 1.
void write_bench_csv(std::ostream& out, const std::vector<SolveReport>& reps,
                     const std::vector<double>& optvals);

void write_bench_table(std::ostream& out,
                       const std::vector<SolveReport>& reps,
                       const std::vector<double>& optvals);

// One line-delimited JSON record per ALM iteration: k, beta, r1, r2, r3, phi.
void write_alm_trace(std::ostream& out, const std::vector<AlmTraceRecord>& t);

// Flat binary container for V and the EPalm multipliers.
// Header: magic "QDC1", u32 version, u32 m, u32 p; then row-major f64 blocks
// V (m x p), mu (2n+2), Lambda (p x p).
void save_checkpoint(const std::string& path, const Matrix& V,
                     const MultiplierState& mult);
struct Checkpoint {
  Matrix V;
  MultiplierState mult;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace qapdc
