#pragma once

#include <limits>

#include "qapdc/instance.hpp"
#include "qapdc/types.hpp"

namespace qapdc {

struct SwapMove {
  int i = 0, j = 0;  // distinct positions in [0, n)
};

// objective(perm with i, j swapped) - objective(perm), in O(n); exact for
// general (asymmetric) A, B and nonzero C.
double swap_delta(const QapInstance& inst, const Permutation& perm,
                  SwapMove move);

// Best-improvement pairwise-exchange descent: each sweep scans all O(n^2)
// swaps and applies the single best strictly improving one; stops at a
// 2-swap local optimum or after max_sweeps moves.
Permutation local_search(const QapInstance& inst, Permutation perm,
                         int max_sweeps = 100);

struct HookBest {
  double value = std::numeric_limits<double>::infinity();
  Permutation perm;
};

// For each scaled right singular direction of V (one per numerical-rank
// index): reshape to n x n, project onto permutations, descend with
// local_search, and keep the best true objective seen so far.
void epalmls_hook(const Matrix& V, const QapInstance& inst, HookBest& best);

}  // namespace qapdc
