#include "qapdc/constraints.hpp"

#include <cmath>

namespace qapdc {

Vector eval_F(const Matrix& V, int n) {
  const int p = n * n;
  if (V.cols() != p)
    throw Error(ErrorKind::Usage, "eval_F: expected " + std::to_string(p) +
                                      " columns, got " +
                                      std::to_string(V.cols()));
  const int m = static_cast<int>(V.rows());
  Vector f(2 * n + 2);

  // <D, V^T V> = sum_i ||V_i e||^2 - 2 sum_i ||V_i||_F^2 + ||sum_i V_i||_F^2.
  Matrix block_sum = Matrix::Zero(m, n);
  double row_sums = 0, fro_blocks = 0;
  for (int i = 0; i < n; ++i) {
    const auto Vi = V.middleCols(i * n, n);
    row_sums += (Vi * Vector::Ones(n)).squaredNorm();
    fro_blocks += Vi.squaredNorm();
    block_sum += Vi;
  }
  f(0) = row_sums - 2.0 * fro_blocks + block_sum.squaredNorm();

  // <J, V^T V> - p = ||V e_p||^2 - p.
  f(1) = (V * Vector::Ones(p)).squaredNorm() - static_cast<double>(p);

  for (int i = 0; i < n; ++i)
    f(2 + i) = V.middleCols(i * n, n).squaredNorm() - 1.0;

  for (int i = 0; i < n; ++i) {
    double s = 0;
    for (int t = 0; t < n; ++t) s += V.col(t * n + i).squaredNorm();
    f(2 + n + i) = s - 1.0;
  }
  return f;
}

AdjointWeight::AdjointWeight(Vector mu, int n, const Matrix* extra)
    : mu_(std::move(mu)), n_(n), extra_(extra) {
  if (mu_.size() != 2 * n_ + 2)
    throw Error(ErrorKind::Usage,
                "adjoint weight: multiplier vector must have length 2n+2");
}

void AdjointWeight::add_apply(const Matrix& V, Matrix& out) const {
  const int n = n_;
  const int p = n * n;
  const int m = static_cast<int>(V.rows());

  // D part: (V D)_j = (V_j e) e^T - 2 V_j + sum_i V_i.
  if (mu_(0) != 0.0) {
    Matrix block_sum = Matrix::Zero(m, n);
    for (int i = 0; i < n; ++i) block_sum += V.middleCols(i * n, n);
    const double c = 2.0 * mu_(0);
    for (int j = 0; j < n; ++j) {
      const auto Vj = V.middleCols(j * n, n);
      Vector rs = Vj * Vector::Ones(n);
      auto Oj = out.middleCols(j * n, n);
      Oj.noalias() += c * (rs * Eigen::RowVectorXd::Ones(n));
      Oj.noalias() += c * (block_sum - 2.0 * Vj);
    }
  }

  // J part: V J = (V e_p) e_p^T.
  if (mu_(1) != 0.0) {
    Vector rs = V * Vector::Ones(p);
    out.noalias() += (2.0 * mu_(1)) * (rs * Eigen::RowVectorXd::Ones(p));
  }

  // Block selectors S_i scale whole blocks; diagonal selectors T_i scale the
  // i-th column within every block.
  for (int i = 0; i < n; ++i) {
    const double ci = 2.0 * mu_(2 + i);
    if (ci != 0.0) out.middleCols(i * n, n) += ci * V.middleCols(i * n, n);
  }
  for (int i = 0; i < n; ++i) {
    const double ci = 2.0 * mu_(2 + n + i);
    if (ci == 0.0) continue;
    for (int t = 0; t < n; ++t) out.col(t * n + i) += ci * V.col(t * n + i);
  }

  if (extra_) out.noalias() += 2.0 * (V * (*extra_));
}

Matrix AdjointWeight::apply(const Matrix& V) const {
  Matrix out = Matrix::Zero(V.rows(), V.cols());
  add_apply(V, out);
  return out;
}

double neg_residual(const Matrix& V) {
  Matrix Y = Matrix::Zero(V.cols(), V.cols());
  Y.selfadjointView<Eigen::Lower>().rankUpdate(V.transpose());
  Y.triangularView<Eigen::StrictlyUpper>() = Y.transpose();
  return Y.cwiseMin(0.0).norm();
}

Matrix neg_part(const Matrix& Y) { return Y.cwiseMin(0.0); }

std::pair<Vector, Vector> equiv_residuals(const Matrix& Y, int n) {
  const int p = n * n;
  if (Y.rows() != p || Y.cols() != p)
    throw Error(ErrorKind::Usage, "equiv_residuals: Y must be p x p");
  if ((Y - Y.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, Y.cwiseAbs().maxCoeff()))
    throw Error(ErrorKind::Usage, "equiv_residuals: Y must be symmetric");
  if (Y.minCoeff() < -1e-12 * std::max(1.0, Y.cwiseAbs().maxCoeff()))
    throw Error(ErrorKind::Usage, "equiv_residuals: Y must be nonnegative");

  auto block = [&](int i, int j) { return Y.block(i * n, j * n, n, n); };

  Vector left(n * n + n * n);
  Matrix diag_sum = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) diag_sum += block(i, i);
  diag_sum -= Matrix::Identity(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) left(a * n + b) = diag_sum(b, a);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      left(n * n + i * n + j) =
          block(i, j).trace() - (i == j ? 1.0 : 0.0);

  Vector right(1 + 2 * n);
  double d = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j)
        d += (block(i, i).sum() - block(i, i).trace());
      else
        d += block(i, j).trace();
    }
  right(0) = d;
  for (int i = 0; i < n; ++i) right(1 + i) = block(i, i).trace() - 1.0;
  for (int i = 0; i < n; ++i) {
    double s = 0;
    for (int t = 0; t < n; ++t) s += block(t, t)(i, i);
    right(1 + n + i) = s - 1.0;
  }
  return {left, right};
}

Matrix dense_D(int n) {
  const int p = n * n;
  Matrix D = Matrix::Zero(p, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      auto blk = D.block(i * n, j * n, n, n);
      if (i == j)
        blk = Matrix::Ones(n, n) - Matrix::Identity(n, n);
      else
        blk = Matrix::Identity(n, n);
    }
  return D;
}

Matrix dense_E(int n) {
  const int p = n * n;
  Matrix E = Matrix::Zero(p, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) E.block(i * n, j * n, n, n) = Matrix::Identity(n, n);
  return E;
}

Matrix dense_J(int n) { return Matrix::Ones(n * n, n * n); }

Matrix dense_S(int n, int i) {
  const int p = n * n;
  Matrix S = Matrix::Zero(p, p);
  S.block(i * n, i * n, n, n) = Matrix::Identity(n, n);
  return S;
}

Matrix dense_T(int n, int i) {
  const int p = n * n;
  Matrix T = Matrix::Zero(p, p);
  for (int t = 0; t < n; ++t) T(t * n + i, t * n + i) = 1.0;
  return T;
}

}  // namespace qapdc
