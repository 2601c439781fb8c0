#include "qapdc/specfact.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace qapdc {

namespace {

Vector power_start(int m) {
  Vector v = Vector::Ones(m);
  for (int i = 0; i < m; ++i) v(i) += 1e-6 * (i + 1) / m;
  v.normalize();
  return v;
}

void fix_sign(Vector& q, Vector& p) {
  const double tiny = 1e-14 * std::max(1.0, q.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    if (std::abs(q(i)) > tiny) {
      if (q(i) < 0) {
        q = -q;
        p = -p;
      }
      return;
    }
  }
}

}  // namespace

SingularTriplet top_singular_triplet(const Matrix& V) {
  const int m = static_cast<int>(V.rows());
  SingularTriplet t;
  const double fro2 = V.squaredNorm();
  if (fro2 == 0.0) {
    t.sigma1 = 0;
    t.p1 = Vector::Zero(m);
    t.q1 = Vector::Zero(V.cols());
    t.zero = true;
    return t;
  }

  Matrix G(m, m);
  G.noalias() = V * V.transpose();

  Vector v = power_start(m);
  Vector w(m);
  double lam = 0;
  bool converged = false;
  for (int it = 0; it < 500; ++it) {
    w.noalias() = G * v;
    lam = v.dot(w);  // Rayleigh quotient, never exceeds lambda_1
    const double resid = (w - lam * v).norm();
    const double norm = w.norm();
    if (resid <= 1e-10 * std::max(1.0, lam)) {
      converged = true;
      break;
    }
    if (norm <= 1e-300) break;  // start is orthogonal to the range
    v = w / norm;
  }
  if (!converged) {
    // Stalled power iteration (tiny spectral gap); m is small, so a dense
    // eigendecomposition is fine.
    Eigen::SelfAdjointEigenSolver<Matrix> es(G);
    const int last = m - 1;
    lam = es.eigenvalues()(last);
    v = es.eigenvectors().col(last);
  }

  lam = std::max(lam, 0.0);
  t.sigma1 = std::sqrt(lam);
  t.p1 = v;
  if (t.sigma1 > 0) {
    t.q1 = V.transpose() * v / t.sigma1;
  } else {
    t.q1 = Vector::Zero(V.cols());
    t.zero = true;
  }
  fix_sign(t.q1, t.p1);
  return t;
}

double penalty_gap(const Matrix& V, const SingularTriplet& t) {
  return V.squaredNorm() - t.sigma1 * t.sigma1;
}

double penalty_gap(const Matrix& V) {
  return penalty_gap(V, top_singular_triplet(V));
}

Matrix psi_subgradient(const Matrix& V, const SingularTriplet& t) {
  if (t.zero || t.sigma1 == 0.0) return Matrix::Zero(V.rows(), V.cols());
  Matrix W(V.rows(), V.cols());
  W.noalias() = (-2.0 * (V * t.q1)) * t.q1.transpose();
  return W;
}

Matrix psi_subgradient(const Matrix& V) {
  return psi_subgradient(V, top_singular_triplet(V));
}

Vector singular_values(const Matrix& V) {
  const int m = static_cast<int>(V.rows());
  Matrix G(m, m);
  G.noalias() = V * V.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(G);
  Vector s(m);
  for (int i = 0; i < m; ++i)
    s(i) = std::sqrt(std::max(es.eigenvalues()(m - 1 - i), 0.0));
  return s;
}

int numerical_rank(const Matrix& V, double tol) {
  // Sequential deflation in factor space. Measuring the tail through
  // eigenvalues of V V^T alone cannot resolve singular values below
  // sqrt(eps) * sigma1 (the squared-precision floor), which is exactly the
  // 1e-8 threshold; deflating V itself keeps full linear precision.
  Matrix R = V;
  double sigma1 = -1;
  int rank = 0;
  for (int i = 0; i < V.rows(); ++i) {
    const SingularTriplet t = top_singular_triplet(R);
    if (t.zero || t.sigma1 <= 0.0) break;
    if (sigma1 < 0) sigma1 = t.sigma1;
    if (t.sigma1 <= tol * sigma1) break;
    ++rank;
    R.noalias() -= (R * t.q1) * t.q1.transpose();
  }
  return rank;
}

Matrix scaled_right_directions(const Matrix& V, int count) {
  const int m = static_cast<int>(V.rows());
  Matrix G(m, m);
  G.noalias() = V * V.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(G);
  count = std::min(count, m);
  Matrix out(V.cols(), count);
  for (int i = 0; i < count; ++i) {
    const double lam = std::max(es.eigenvalues()(m - 1 - i), 0.0);
    const double sigma = std::sqrt(lam);
    Vector p = es.eigenvectors().col(m - 1 - i);
    Vector q = sigma > 0 ? Vector(V.transpose() * p) : Vector::Zero(V.cols());
    // q already carries the sigma factor: V^T p has norm sigma.
    fix_sign(q, p);
    out.col(i) = q;
  }
  return out;
}

}  // namespace qapdc
