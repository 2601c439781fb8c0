#include "qapdc/oracle.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "qapdc/alm.hpp"
#include "qapdc/assignment.hpp"
#include "qapdc/constraints.hpp"
#include "qapdc/epalm.hpp"
#include "qapdc/rng.hpp"
#include "qapdc/specfact.hpp"

namespace qapdc {

std::pair<Permutation, double> brute_force(const QapInstance& inst) {
  if (inst.n > 9)
    throw Error(ErrorKind::Guard,
                "brute_force: refusing n = " + std::to_string(inst.n) +
                    " (guard: n <= 9)");
  Permutation cur = Permutation::identity(inst.n);
  Permutation best = cur;
  double best_val = objective(inst, cur);
  while (std::next_permutation(cur.image.begin(), cur.image.end())) {
    const double v = objective(inst, cur);
    if (v < best_val) {
      best_val = v;
      best = cur;
    }
  }
  return {best, best_val};
}

std::vector<Vector> gamma_members(int n) {
  if (n > 6)
    throw Error(ErrorKind::Guard,
                "gamma_members: refusing n = " + std::to_string(n) +
                    " (guard: n <= 6)");
  std::vector<Vector> out;
  Permutation cur = Permutation::identity(n);
  do {
    out.push_back(cur.vec());
  } while (std::next_permutation(cur.image.begin(), cur.image.end()));
  return out;
}

double dist_to_gamma(const Matrix& Y, int n) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vector& x : gamma_members(n)) {
    const double d = (Y - x * x.transpose()).norm();
    best = std::min(best, d);
  }
  return best;
}

PerronDecomposition perron_decomposition(const Matrix& Y) {
  const int p = static_cast<int>(Y.rows());
  if (Y.cols() != p)
    throw Error(ErrorKind::Usage, "perron_decomposition: Y must be square");
  const double scale = std::max(1.0, Y.cwiseAbs().maxCoeff());
  if ((Y - Y.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Error(ErrorKind::Usage, "perron_decomposition: Y must be symmetric");
  if (Y.minCoeff() < -1e-12 * scale)
    throw Error(ErrorKind::Usage,
                "perron_decomposition: Y must be entrywise nonnegative");

  Eigen::SelfAdjointEigenSolver<Matrix> es(Y);
  PerronDecomposition out;
  out.eigenvalues.resize(p);
  out.U.resize(p, p);
  for (int i = 0; i < p; ++i) {
    out.eigenvalues(i) = es.eigenvalues()(p - 1 - i);
    out.U.col(i) = es.eigenvectors().col(p - 1 - i);
  }

  // |u| of any top eigenvector is again a top eigenvector because Y >= 0
  // entrywise and lambda_1 maximizes the Rayleigh quotient.
  const double lam1 = out.eigenvalues(0);
  const double cluster_tol = 1e-10 * std::max(1.0, std::abs(lam1));
  int k = 1;
  while (k < p && out.eigenvalues(k) >= lam1 - cluster_tol) ++k;

  Vector u1 = out.U.col(0).cwiseAbs();
  const double norm = u1.norm();
  if (norm > 0) u1 /= norm;
  // Rebuild an orthonormal basis of the top eigenspace around u1.
  std::vector<Vector> basis;
  basis.push_back(u1);
  for (int j = 0; j < k && static_cast<int>(basis.size()) < k; ++j) {
    Vector w = out.U.col(j);
    for (const Vector& b : basis) w -= b.dot(w) * b;
    const double wn = w.norm();
    if (wn > 1e-8) basis.push_back(w / wn);
  }
  for (int j = 0; j < static_cast<int>(basis.size()); ++j)
    out.U.col(j) = basis[j];
  return out;
}

DistanceReport distances(const Matrix& Y, int n, bool with_gamma) {
  const int p = static_cast<int>(Y.rows());
  if (Y.cols() != p)
    throw Error(ErrorKind::Usage, "distances: Y must be square");
  Eigen::SelfAdjointEigenSolver<Matrix> es(Y);
  const Vector lam = es.eigenvalues();

  DistanceReport rep;
  // Largest |eigenvalue| wins; ties prefer the positive end.
  int j_abs = p - 1;
  for (int i = 0; i < p; ++i)
    if (std::abs(lam(i)) > std::abs(lam(j_abs))) j_abs = i;
  {
    const Vector u = es.eigenvectors().col(j_abs);
    rep.to_rank_one = (Y - lam(j_abs) * u * u.transpose()).norm();
  }
  {
    const double top = std::max(lam(p - 1), 0.0);
    const Vector u = es.eigenvectors().col(p - 1);
    rep.to_psd_rank_one = (Y - top * u * u.transpose()).norm();
  }
  const double scale = std::max(1.0, Y.cwiseAbs().maxCoeff());
  if (Y.minCoeff() >= -1e-12 * scale) {
    const PerronDecomposition pd = perron_decomposition(Y);
    const double top = std::max(pd.eigenvalues(0), 0.0);
    rep.to_Kp_rank_one =
        (Y - top * pd.U.col(0) * pd.U.col(0).transpose()).norm();
  }
  if (with_gamma) rep.to_gamma = dist_to_gamma(Y, n);
  return rep;
}

namespace {

void project_omega(Matrix& Y, int n) {
  for (int i = 0; i < n; ++i) {
    const double t = Y.block(i * n, i * n, n, n).trace();
    const double c = (t - 1.0) / n;
    for (int d = 0; d < n; ++d) Y(i * n + d, i * n + d) -= c;
  }
}

void project_L(Matrix& Y, int n) {
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      for (int d = 0; d < n; ++d) Y(i * n + d, j * n + d) = 0.0;
    }
}

void project_Cp(Matrix& Y) {
  Y = 0.5 * (Y + Y.transpose());
  Y = Y.cwiseMax(0.0);
}

void project_psd(Matrix& Y) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (Y + Y.transpose()));
  const Vector lam = es.eigenvalues().cwiseMax(0.0);
  Y = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

Matrix dykstra_project(Matrix Y0, int n, int max_cycles, double tol,
                       bool* converged) {
  const int p = n * n;
  if (Y0.rows() != p || Y0.cols() != p)
    throw Error(ErrorKind::Usage, "dykstra_project: Y0 must be p x p");
  Matrix X = 0.5 * (Y0 + Y0.transpose());
  std::vector<Matrix> corr(4, Matrix::Zero(p, p));
  if (converged) *converged = false;
  for (int cycle = 0; cycle < max_cycles; ++cycle) {
    const Matrix prev = X;
    for (int s = 0; s < 4; ++s) {
      Matrix Z = X + corr[s];
      switch (s) {
        case 0: project_omega(Z, n); break;
        case 1: project_L(Z, n); break;
        case 2: project_Cp(Z); break;
        case 3: project_psd(Z); break;
      }
      corr[s] = X + corr[s] - Z;
      X = Z;
    }
    if ((X - prev).norm() <= tol) {
      if (converged) *converged = true;
      break;
    }
  }
  return X;
}

ErrorBoundReport error_bound_probe(int n, int samples, std::uint64_t seed,
                                   double radius) {
  if (n > 4)
    throw Error(ErrorKind::Guard, "error_bound_probe: requires n <= 4");
  if (samples < 2)
    throw Error(ErrorKind::Usage, "error_bound_probe: need >= 2 samples");

  const auto members = gamma_members(n);
  const int p = n * n;

  ErrorBoundReport rep;
  rep.n = n;
  rep.samples = samples;

  std::vector<double> ratios;
  for (int s = 0; s < samples; ++s) {
    Rng rng(Rng::derive(seed, s));
    const int idx = rng.uniform_int(0, static_cast<int>(members.size()) - 1);
    const Vector& x = members[idx];
    Matrix Y0 = x * x.transpose();
    if (radius != 0.0) {
      Matrix P = rng.gaussian_matrix(p, p);
      Y0 += radius * 0.5 * (P + P.transpose());
    }
    const Matrix Y = dykstra_project(std::move(Y0), n);
    const double d_rank = distances(Y, n, false).to_rank_one;
    if (d_rank < 1e-12) continue;  // exact point, excluded
    const double d_gamma = dist_to_gamma(Y, n);
    const double ratio = d_gamma / d_rank;
    if (!std::isfinite(ratio)) rep.all_finite = false;
    ratios.push_back(ratio);
  }

  rep.kept = static_cast<int>(ratios.size());
  if (rep.kept == 0) {
    rep.all_feasible = true;
    return rep;
  }
  rep.ratios = ratios;
  rep.max_ratio = *std::max_element(ratios.begin(), ratios.end());
  std::vector<double> sorted = ratios;
  std::sort(sorted.begin(), sorted.end());
  rep.median_ratio = sorted[sorted.size() / 2];

  const int half = rep.kept / 2;
  if (half == 0) {
    rep.kappa_first_half = rep.max_ratio;
  } else {
    rep.kappa_first_half =
        *std::max_element(ratios.begin(), ratios.begin() + half);
    for (int i = half; i < rep.kept; ++i)
      if (ratios[i] > 2.0 * rep.kappa_first_half) {
        rep.second_half_bounded = false;
        break;
      }
  }
  return rep;
}

PenaltySweepReport exact_penalty_probe(const QapInstance& inst,
                                       std::vector<double> rho_grid,
                                       int multistarts, std::uint64_t seed) {
  if (inst.n > 4)
    throw Error(ErrorKind::Guard, "exact_penalty_probe: requires n <= 4");
  if (rho_grid.empty())
    for (int e = -3; e <= 3; ++e) rho_grid.push_back(std::pow(10.0, e));

  PenaltySweepReport rep;
  const auto [bf_perm, bf_val] = brute_force(inst);
  rep.brute_value = bf_val;

  auto [pre, shifts] = preprocess(inst);
  const LiftedCost cost(pre, true);
  const int n = inst.n;
  const int p = n * n;
  const int m = p;

  AlmConfig acfg;
  acfg.alm_max_iters = 300;

  for (std::size_t gi = 0; gi < rho_grid.size(); ++gi) {
    const double rho = rho_grid[gi];
    double best_value = std::numeric_limits<double>::infinity();
    Matrix best_V;
    for (int s = 0; s < multistarts; ++s) {
      Rng rng(Rng::derive(seed, gi * 1000 + s));
      Matrix V0 = rng.gaussian_matrix(m, p);
      EpalmModel model(cost, n);
      AlmResult ar = alm_solve(model, std::move(V0), rho, 1e-5, acfg);
      const double value =
          cost.inner(ar.V) + rho * penalty_gap(ar.V);
      if (value < best_value) {
        best_value = value;
        best_V = std::move(ar.V);
      }
    }
    PenaltySweepRow row;
    row.rho = rho;
    row.best_value = best_value;
    row.gap_at_best = penalty_gap(best_V);
    auto [x_raw, perm] = extract_solution(best_V, n);
    row.extracted_obj = objective(inst, perm);
    row.matches_brute = std::abs(row.extracted_obj - bf_val) <= 1e-6;
    rep.rows.push_back(row);
  }

  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    bool all = true;
    for (std::size_t j = i; j < rep.rows.size(); ++j)
      all = all && rep.rows[j].matches_brute;
    if (all) {
      rep.threshold_rho = rep.rows[i].rho;
      break;
    }
  }
  return rep;
}

}  // namespace qapdc
