#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "qapdc/instance.hpp"
#include "qapdc/types.hpp"

namespace qapdc {

// Exhaustive minimum over all n! permutations (lexicographic tie-break).
// Refuses n > 9.
std::pair<Permutation, double> brute_force(const QapInstance& inst);

// All lifted rank-one feasible points vec(X) for permutation matrices X,
// enumerated in lexicographic permutation order. Refuses n > 6.
std::vector<Vector> gamma_members(int n);

// dist(Y, Gamma) by enumeration; requires n <= 6.
double dist_to_gamma(const Matrix& Y, int n);

// Full eigendecomposition of a nonnegative symmetric matrix with the top
// eigenvector chosen entrywise nonnegative; when the top eigenvalue is
// multiple the eigenspace basis is repaired by Gram-Schmidt around the
// nonnegative representative.
struct PerronDecomposition {
  Vector eigenvalues;  // descending
  Matrix U;            // orthonormal columns aligned with eigenvalues
};
PerronDecomposition perron_decomposition(const Matrix& Y);

struct DistanceReport {
  double to_rank_one = 0;                    // dist(Y, R)
  double to_psd_rank_one = 0;                // dist(Y, S+ cap R)
  std::optional<double> to_Kp_rank_one;      // dist(Y, K_p cap R), needs Y >= 0
  std::optional<double> to_gamma;            // needs small n
};
DistanceReport distances(const Matrix& Y, int n, bool with_gamma = false);

// Dykstra's alternating projections onto Omega, L, C_p and the PSD cone.
Matrix dykstra_project(Matrix Y0, int n, int max_cycles = 2000,
                       double tol = 1e-10, bool* converged = nullptr);

struct ErrorBoundReport {
  int n = 0;
  int samples = 0;
  int kept = 0;         // samples with dist(Y, R) >= 1e-12
  bool all_feasible = false;
  bool all_finite = true;
  double max_ratio = 0;
  double median_ratio = 0;
  double kappa_first_half = 0;
  bool second_half_bounded = true;  // each ratio <= 2 * kappa_first_half
  std::vector<double> ratios;
};

// Samples points of Omega cap L cap K_p by Dykstra-projecting perturbed
// Gamma members, and reports the dist(Y,Gamma)/dist(Y,R) ratios.
ErrorBoundReport error_bound_probe(int n, int samples, std::uint64_t seed,
                                   double radius = 0.1);

struct PenaltySweepRow {
  double rho = 0;
  double best_value = 0;       // penalized objective at the best start
  double gap_at_best = 0;      // penalty_gap there
  double extracted_obj = 0;    // true objective of the extracted permutation
  bool matches_brute = false;
};

struct PenaltySweepReport {
  double brute_value = 0;
  std::vector<PenaltySweepRow> rows;
  // Smallest grid rho such that this and every larger rho matches brute
  // force; unset when none does.
  std::optional<double> threshold_rho;
};

// Multistart minimization of the penalty problem across a rho grid; marks
// from which rho onward the penalized minimizer extracts to the brute-force
// optimum. Requires n <= 4.
PenaltySweepReport exact_penalty_probe(const QapInstance& inst,
                                       std::vector<double> rho_grid,
                                       int multistarts, std::uint64_t seed);

}  // namespace qapdc
