#include "qapdc/localsearch.hpp"

#include <cmath>

#include "qapdc/assignment.hpp"
#include "qapdc/specfact.hpp"

namespace qapdc {

double swap_delta(const QapInstance& inst, const Permutation& perm,
                  SwapMove move) {
  const int n = inst.n;
  const int r = move.i, s = move.j;
  if (r == s || r < 0 || s < 0 || r >= n || s >= n)
    throw Error(ErrorKind::Usage, "swap_delta: invalid move");
  const auto& A = inst.A;
  const auto& B = inst.B;
  const auto& pi = perm.image;
  const int u = pi[r], v = pi[s];

  double d = inst.C(r, v) + inst.C(s, u) - inst.C(r, u) - inst.C(s, v);
  d += A(r, r) * (B(v, v) - B(u, u)) + A(s, s) * (B(u, u) - B(v, v));
  d += A(r, s) * (B(u, v) - B(v, u)) + A(s, r) * (B(v, u) - B(u, v));
  for (int k = 0; k < n; ++k) {
    if (k == r || k == s) continue;
    const int w = pi[k];
    d += A(r, k) * (B(w, v) - B(w, u));
    d += A(s, k) * (B(w, u) - B(w, v));
    d += A(k, r) * (B(v, w) - B(u, w));
    d += A(k, s) * (B(u, w) - B(v, w));
  }
  return d;
}

Permutation local_search(const QapInstance& inst, Permutation perm,
                         int max_sweeps) {
  const int n = inst.n;
  const double tol = 1e-12 * std::max(1.0, std::abs(objective(inst, perm)));
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double best_delta = 0;
    int best_i = -1, best_j = -1;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double d = swap_delta(inst, perm, {i, j});
        if (d < best_delta) {
          best_delta = d;
          best_i = i;
          best_j = j;
        }
      }
    if (best_i < 0 || best_delta >= -tol) break;
    std::swap(perm.image[best_i], perm.image[best_j]);
  }
  return perm;
}

void epalmls_hook(const Matrix& V, const QapInstance& inst, HookBest& best) {
  const int n = inst.n;
  if (V.squaredNorm() == 0.0)
    throw Error(ErrorKind::Usage, "epalmls_hook: V must be nonzero");
  const int rank = numerical_rank(V);
  const Matrix dirs = scaled_right_directions(V, rank);
  for (int ind = 0; ind < rank; ++ind) {
    Vector x = dirs.col(ind);
    if (x.sum() < 0) x = -x;
    Eigen::Map<const Matrix> X(x.data(), n, n);
    const Permutation start = permut_proj(X);
    const Permutation refined = local_search(inst, start, 100);
    const double value = objective(inst, refined);
    if (value < best.value) {
      best.value = value;
      best.perm = refined;
    }
  }
}

}  // namespace qapdc
