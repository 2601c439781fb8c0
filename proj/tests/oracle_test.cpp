#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qapdc/constraints.hpp"
#include "qapdc/oracle.hpp"
#include "qapdc/specfact.hpp"
#include "qapdc/rng.hpp"

using namespace qapdc;
using namespace qapdc::testing;

namespace {

Matrix random_nonneg_sym(int p, Rng& rng) {
  Matrix M = rng.gaussian_matrix(p, p).cwiseAbs();
  return 0.5 * (M + M.transpose());
}

}  // namespace

TEST_CASE("brute force evaluates the toy instance") {
  std::istringstream in("2\n0 1\n1 0\n0 2\n2 0");
  const QapInstance inst = parse_dat(in, "toy2");
  const auto [perm, value] = brute_force(inst);
  CHECK(value == doctest::Approx(4.0));
}

TEST_CASE("brute force with identity data is permutation-invariant") {
  QapInstance inst;
  inst.n = 4;
  inst.A = Matrix::Identity(4, 4);
  inst.B = Matrix::Identity(4, 4);
  inst.C = Matrix::Zero(4, 4);
  const auto [perm, value] = brute_force(inst);
  CHECK(value == doctest::Approx(4.0));
  // Lexicographic tie-break keeps the identity.
  CHECK(perm == Permutation::identity(4));
}

TEST_CASE("brute force refuses large instances") {
  QapInstance inst;
  inst.n = 12;
  inst.A = Matrix::Zero(12, 12);
  inst.B = Matrix::Zero(12, 12);
  inst.C = Matrix::Zero(12, 12);
  try {
    brute_force(inst);
    FAIL("expected guard refusal");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Guard);
  }
}

TEST_CASE("brute force dominates any heuristic output") {
  Rng rng(311);
  for (int rep = 0; rep < 5; ++rep) {
    const QapInstance inst = random_integer_instance(5, rng, 0, 9);
    const auto [bf_perm, bf_val] = brute_force(inst);
    for (int t = 0; t < 10; ++t) {
      Permutation p = Permutation::identity(5);
      for (int i = 4; i > 0; --i)
        std::swap(p.image[i], p.image[rng.uniform_int(0, i)]);
      CHECK(bf_val <= objective(inst, p) + 1e-12);
    }
  }
}

TEST_CASE("perron decomposition basics") {
  Rng rng(313);
  SUBCASE("rank-one nonnegative") {
    Vector x = rng.gaussian_vector(6).cwiseAbs();
    const Matrix Y = x * x.transpose();
    const PerronDecomposition pd = perron_decomposition(Y);
    const Vector u = pd.U.col(0);
    CHECK((u - x / x.norm()).norm() <= 1e-8);
  }
  SUBCASE("identity has a degenerate top eigenspace") {
    const PerronDecomposition pd = perron_decomposition(Matrix::Identity(5, 5));
    CHECK(pd.eigenvalues(0) == doctest::Approx(1.0));
    CHECK(pd.U.col(0).minCoeff() >= -1e-10);
    // Still a valid eigendecomposition.
    CHECK((pd.U * pd.U.transpose() - Matrix::Identity(5, 5)).norm() <= 1e-9);
  }
  SUBCASE("random nonnegative matrices") {
    for (int rep = 0; rep < 20; ++rep) {
      const Matrix Y = random_nonneg_sym(6, rng);
      const PerronDecomposition pd = perron_decomposition(Y);
      const Vector u = pd.U.col(0);
      CHECK(u.minCoeff() >= -1e-10);
      CHECK((Y * u - pd.eigenvalues(0) * u).norm() <= 1e-8);
    }
  }
  SUBCASE("engineered multiplicity still yields a nonnegative top vector") {
    // Two disjoint blocks with identical spectra make lambda_1 multiple.
    Matrix Y = Matrix::Zero(6, 6);
    Matrix blk(3, 3);
    blk << 2, 1, 0, 1, 2, 1, 0, 1, 2;
    Y.block(0, 0, 3, 3) = blk;
    Y.block(3, 3, 3, 3) = blk;
    const PerronDecomposition pd = perron_decomposition(Y);
    CHECK(pd.eigenvalues(0) == doctest::Approx(pd.eigenvalues(1)));
    CHECK(pd.U.col(0).minCoeff() >= -1e-10);
    CHECK((Y * pd.U.col(0) - pd.eigenvalues(0) * pd.U.col(0)).norm() <= 1e-8);
    // Basis stays orthonormal after the repair.
    CHECK((pd.U.transpose() * pd.U - Matrix::Identity(6, 6)).norm() <= 1e-8);
  }
  SUBCASE("negative entries are rejected") {
    Matrix Y = Matrix::Identity(4, 4);
    Y(0, 1) = Y(1, 0) = -0.5;
    CHECK_THROWS_AS(perron_decomposition(Y), Error);
  }
}

TEST_CASE("distances") {
  Rng rng(317);
  SUBCASE("members of Gamma are at distance zero from everything") {
    for (const auto& perm : all_permutations(3)) {
      const Vector x = perm.vec();
      const Matrix Y = x * x.transpose();
      const DistanceReport d = distances(Y, 3, true);
      CHECK(d.to_rank_one <= 1e-10);
      CHECK(d.to_psd_rank_one <= 1e-10);
      REQUIRE(d.to_Kp_rank_one.has_value());
      CHECK(*d.to_Kp_rank_one <= 1e-10);
      REQUIRE(d.to_gamma.has_value());
      CHECK(*d.to_gamma <= 1e-10);
    }
  }
  SUBCASE("diag(2,1) embedding is at distance 1 from rank one") {
    Matrix Y = Matrix::Zero(4, 4);
    Y(0, 0) = 2;
    Y(1, 1) = 1;
    const DistanceReport d = distances(Y, 2, false);
    CHECK(d.to_rank_one == doctest::Approx(1.0));
  }
  SUBCASE("PSD-rank-one and Kp-rank-one agree on the nonnegative cone") {
    for (int rep = 0; rep < 50; ++rep) {
      const Matrix Y = random_nonneg_sym(9, rng);
      const DistanceReport d = distances(Y, 3, false);
      REQUIRE(d.to_Kp_rank_one.has_value());
      CHECK(std::abs(*d.to_Kp_rank_one - d.to_psd_rank_one) <= 1e-8);
    }
  }
  SUBCASE("gamma distance dominates rank-one distance") {
    for (int rep = 0; rep < 20; ++rep) {
      const Matrix Y = random_nonneg_sym(9, rng);
      const DistanceReport d = distances(Y, 3, true);
      REQUIRE(d.to_gamma.has_value());
      CHECK(*d.to_gamma >= d.to_rank_one - 1e-10);
    }
  }
}

TEST_CASE("Kp-rank-one distance matches a projected-gradient multistart oracle") {
  // Independent check of the Perron-based closed form: minimize
  // ||Y - z z^T||_F over z >= 0 by projected gradient from many starts.
  Rng rng(331);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix Y = random_nonneg_sym(9, rng);
    const DistanceReport d = distances(Y, 3, false);
    REQUIRE(d.to_Kp_rank_one.has_value());
    double best = std::numeric_limits<double>::infinity();
    for (int start = 0; start < 100; ++start) {
      Vector z = rng.gaussian_vector(9).cwiseAbs();
      double step = 0.05 / std::max(1.0, Y.norm());
      for (int it = 0; it < 400; ++it) {
        const Vector grad = 4.0 * ((z * z.transpose() - Y) * z);
        z = (z - step * grad).cwiseMax(0.0);
      }
      best = std::min(best, (Y - z * z.transpose()).norm());
    }
    CHECK(*d.to_Kp_rank_one <= best + 1e-4);
    CHECK(best <= *d.to_Kp_rank_one + 1e-4);
  }
}

TEST_CASE("dykstra projection") {
  Rng rng(337);
  const int n = 3, p = 9;
  SUBCASE("gamma members are fixed points") {
    const auto members = gamma_members(n);
    for (int k = 0; k < 3; ++k) {
      const Matrix Y0 = members[k] * members[k].transpose();
      bool converged = false;
      const Matrix Y = dykstra_project(Y0, n, 2000, 1e-10, &converged);
      CHECK(converged);
      CHECK((Y - Y0).norm() <= 1e-9);
    }
  }
  SUBCASE("convex combinations are fixed points") {
    const auto members = gamma_members(n);
    Matrix Y0 = Matrix::Zero(p, p);
    Y0 += 0.25 * members[0] * members[0].transpose();
    Y0 += 0.75 * members[4] * members[4].transpose();
    const Matrix Y = dykstra_project(Y0, n);
    CHECK((Y - Y0).norm() <= 1e-8);
  }
  SUBCASE("random symmetric input lands in all four sets") {
    for (int rep = 0; rep < 5; ++rep) {
      Matrix Y0 = rng.gaussian_matrix(p, p);
      Y0 = (0.5 * (Y0 + Y0.transpose())).eval();
      const Matrix Y = dykstra_project(Y0, n);
      // Omega residual.
      for (int i = 0; i < n; ++i)
        CHECK(std::abs(Y.block(i * n, i * n, n, n).trace() - 1.0) <= 1e-8);
      // L residual.
      CHECK((dense_E(n).array() * Y.array()).abs().maxCoeff() <= 1e-8);
      // Nonnegativity and PSD.
      CHECK(Y.minCoeff() >= -1e-8);
      Eigen::SelfAdjointEigenSolver<Matrix> es(Y);
      CHECK(es.eigenvalues().minCoeff() >= -1e-8);
    }
  }
}

TEST_CASE("error bound probe") {
  SUBCASE("zero radius reports all feasible") {
    const ErrorBoundReport rep = error_bound_probe(3, 10, 5, 0.0);
    CHECK(rep.all_feasible);
    CHECK(rep.kept == 0);
  }
  SUBCASE("radius 0.1 produces finite, reproducible ratios") {
    const ErrorBoundReport a = error_bound_probe(3, 30, 7, 0.1);
    const ErrorBoundReport b = error_bound_probe(3, 30, 7, 0.1);
    CHECK(a.all_finite);
    CHECK(a.kept > 0);
    CHECK(a.max_ratio == b.max_ratio);  // bitwise reproducible for the seed
    CHECK(a.max_ratio < 1e3);
    CHECK(a.second_half_bounded);
  }
  SUBCASE("guard refuses large n") {
    CHECK_THROWS_AS(error_bound_probe(6, 10, 1, 0.1), Error);
  }
}

TEST_CASE("exact penalty probe on a small instance") {
  Rng rng(347);
  const QapInstance inst = random_integer_instance(3, rng, 1, 9);
  const auto [bf_perm, bf_val] = brute_force(inst);
  const PenaltySweepReport rep =
      exact_penalty_probe(inst, {1e-2, 1.0, 1e2, 1e3}, 8, 11);
  CHECK(rep.brute_value == doctest::Approx(bf_val));
  REQUIRE(rep.rows.size() == 4);
  // The two largest rho values recover the combinatorial optimum.
  CHECK(rep.rows[2].matches_brute);
  CHECK(rep.rows[3].matches_brute);
  CHECK(rep.rows[2].gap_at_best <= 1e-8);
  CHECK(rep.rows[3].gap_at_best <= 1e-8);
  REQUIRE(rep.threshold_rho.has_value());
  CHECK(*rep.threshold_rho <= 1e2);
}

TEST_CASE("penalty probe keeps a feasible optimum optimal for every rho") {
  Rng rng(349);
  const QapInstance inst = random_integer_instance(3, rng, 1, 9);
  const auto [bf_perm, bf_val] = brute_force(inst);
  auto [pre, shifts] = preprocess(inst);
  const LiftedCost cost(pre, true);
  const Vector x = bf_perm.vec();
  Vector u = rng.gaussian_vector(9);
  u.normalize();
  const Matrix V = u * x.transpose();
  // The DC penalty term vanishes on Gamma, so the penalized objective at the
  // lifted optimum equals the plain objective for every rho.
  for (double rho : {0.0, 1e-3, 1.0, 1e3}) {
    const double value = cost.inner(V) + rho * penalty_gap(V);
    CHECK(value == doctest::Approx(cost.inner(V)).epsilon(1e-9));
  }
}
