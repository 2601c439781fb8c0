#pragma once

#include "qapdc/types.hpp"

namespace qapdc {

// Top singular triplet of the m x p factor V, computed through the m x m Gram
// matrix V V^T. sigma1 = ||V||, q1 = V^T p1 / sigma1. The `zero` flag marks
// V = 0, where the triplet is defined as sigma1 = 0.
struct SingularTriplet {
  double sigma1 = 0;
  Vector p1;
  Vector q1;
  bool zero = false;
};

// Deterministic power iteration on V V^T (tol 1e-10, at most 500 iterations,
// fixed perturbed all-ones start); falls back to a dense symmetric
// eigendecomposition when the iteration stalls. Sign convention: the first
// nonzero component of q1 is nonnegative.
SingularTriplet top_singular_triplet(const Matrix& V);

// ||V||_F^2 - sigma1^2 = sum of squared non-leading singular values; zero
// exactly when V has numerical rank one.
double penalty_gap(const Matrix& V);
double penalty_gap(const Matrix& V, const SingularTriplet& t);

// W = -2 V q1 q1^T, a subgradient of psi(V) = -||V||^2. W = 0 at V = 0.
Matrix psi_subgradient(const Matrix& V, const SingularTriplet& t);
Matrix psi_subgradient(const Matrix& V);

// Full singular spectrum (descending) from the Gram eigendecomposition.
Vector singular_values(const Matrix& V);

// Number of singular values above tol * sigma1.
int numerical_rank(const Matrix& V, double tol = 1e-8);

// Columns ind = 0..count-1 hold sigma_ind * q_ind, the scaled right singular
// directions used by the local-search hook. Signs follow the q1 convention.
Matrix scaled_right_directions(const Matrix& V, int count);

}  // namespace qapdc
