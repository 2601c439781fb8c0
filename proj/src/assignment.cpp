#include "qapdc/assignment.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace qapdc {

Permutation hungarian(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n)
    throw Error(ErrorKind::Usage, "hungarian: cost matrix must be square");
  if (!cost.allFinite())
    throw Error(ErrorKind::Numerical, "hungarian: non-finite cost entry");

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based with a virtual column 0; p[j] = row matched to column j.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1, 0);

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  Permutation perm;
  perm.image.assign(n, -1);
  for (int j = 1; j <= n; ++j) perm.image[p[j] - 1] = j - 1;
  return perm;
}

Permutation permut_proj(const Matrix& M) { return hungarian(-M); }

}  // namespace qapdc
