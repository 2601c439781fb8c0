#pragma once

#include <utility>

#include "qapdc/types.hpp"

namespace qapdc {

// Equality constraint map of the factorized problem, with V = [V_1 ... V_n],
// V_i the i-th n-column block. Component order is fixed so multiplier vectors
// stay position-stable across modules and checkpoints:
//   [0]        <D, V^T V>
//   [1]        <e_p e_p^T, V^T V> - p
//   [2..n+1]   ||V_i||_F^2 - 1
//   [n+2..2n+1] sum_t ||(V_t)_i||^2 - 1
// All entries are contractions computed matrix-free in O(m p).
Vector eval_F(const Matrix& V, int n);

// Weighted adjoint operator S(mu) = mu_0 D + mu_1 J + sum_i mu_{2+i} S_i
// + sum_i mu_{2+n+i} T_i (+ extra), exposed as the map V -> 2 V S(mu), which
// realizes grad F(V) mu. `extra` is the only dense p x p term ever applied.
class AdjointWeight {
 public:
  AdjointWeight(Vector mu, int n, const Matrix* extra = nullptr);

  Matrix apply(const Matrix& V) const;
  void add_apply(const Matrix& V, Matrix& out) const;  // out += 2 V S(mu)

 private:
  Vector mu_;
  int n_;
  const Matrix* extra_;
};

// ||min(V^T V, 0)||_F.
double neg_residual(const Matrix& V);

// min(Y, 0), materialized on demand for the ALM gradient.
Matrix neg_part(const Matrix& Y);

// Residual vectors of the two equivalent constraint systems on nonnegative
// symmetric Y: left stacks {sum_i Y^{ii} - I_n, <I_n, Y^{ij}> - delta_ij},
// right stacks {<D, Y>, <I, Y^{ii}> - 1, sum_t (Y^{tt})_{ii} - 1}.
std::pair<Vector, Vector> equiv_residuals(const Matrix& Y, int n);

// Dense operator materializations, for oracles and desk-scale probes only.
Matrix dense_D(int n);
Matrix dense_E(int n);
Matrix dense_J(int n);
Matrix dense_S(int n, int i);
Matrix dense_T(int n, int i);

}  // namespace qapdc
