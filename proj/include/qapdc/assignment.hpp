#pragma once

#include "qapdc/types.hpp"

namespace qapdc {

// Minimize sum_i cost(i, pi(i)) over permutations; O(n^3) shortest augmenting
// paths with dual potentials. Ties break toward the lowest index so runs are
// reproducible. Non-finite entries are rejected.
Permutation hungarian(const Matrix& cost);

// argmin_{P permutation} ||P - M||_F = argmax_P <M, P>.
Permutation permut_proj(const Matrix& M);

}  // namespace qapdc
