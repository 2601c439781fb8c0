#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qapdc/alm.hpp"
#include "qapdc/constraints.hpp"
#include "qapdc/oracle.hpp"
#include "qapdc/rng.hpp"
#include "qapdc/specfact.hpp"

using namespace qapdc;
using namespace qapdc::testing;

namespace {

struct Setup {
  QapInstance inst;
  LiftedCost cost;
  int n;

  explicit Setup(int n_, std::uint64_t seed, bool normalize = true)
      : inst(make_inst(n_, seed)), cost(inst, normalize), n(n_) {}

  static QapInstance make_inst(int n, std::uint64_t seed) {
    Rng rng(seed);
    return random_integer_instance(n, rng, 0, 9, false, true);
  }
};

MultiplierState random_mult(int n, Rng& rng) {
  MultiplierState m = MultiplierState::zeros(n);
  const int p = n * n;
  Matrix L = rng.gaussian_matrix(p, p).cwiseAbs();
  m.Lambda = 0.5 * (L + L.transpose());
  m.mu = rng.gaussian_vector(2 * n + 2);
  return m;
}

}  // namespace

TEST_CASE("phi at a feasible lifted permutation with zero multipliers") {
  Setup s(3, 111);
  Rng rng(1);
  const Matrix V = lifted_permutation(Permutation::identity(3), 4, rng);
  const MultiplierState mult = MultiplierState::zeros(3);
  Matrix grad;
  const double val = phi_value_grad(V, mult, 2.0, s.cost, &grad);
  // All penalty terms vanish: F(V) = 0 and V^T V >= 0.
  CHECK(val == doctest::Approx(s.cost.inner(V)).epsilon(1e-10));
  Matrix expect;
  s.cost.apply_into(V, expect);
  CHECK((grad - 2.0 * expect).norm() <= 1e-9 * std::max(1.0, expect.norm()));
}

TEST_CASE("phi at V = 0 has the closed-form value") {
  Setup s(3, 112);
  const int n = 3, p = 9;
  const Matrix V = Matrix::Zero(4, p);
  MultiplierState mult = MultiplierState::zeros(n);
  Rng rng(2);
  mult.mu = rng.gaussian_vector(2 * n + 2);
  const double beta = 3.0;
  const Vector f0 = eval_F(V, n);
  const double expect = mult.mu.dot(f0) + 0.5 * beta * f0.squaredNorm();
  CHECK(phi_value_grad(V, mult, beta, s.cost, nullptr) ==
        doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("phi gradient matches central finite differences") {
  Setup s(3, 113);
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix V = rng.gaussian_matrix(3, 9);
    const MultiplierState mult = random_mult(3, rng);
    const double beta = 0.5 + rng.uniform() * 3.0;
    Matrix grad;
    phi_value_grad(V, mult, beta, s.cost, &grad);
    const Matrix fd = fd_gradient(
        [&](const Matrix& X) {
          return phi_value_grad(X, mult, beta, s.cost, nullptr);
        },
        V);
    CHECK((grad - fd).norm() <= 1e-6 * std::max(1.0, grad.norm()));
  }
}

TEST_CASE("phi-hat at a lifted permutation with zero multipliers") {
  Setup s(3, 114);
  Rng rng(4);
  const Matrix V = lifted_permutation(Permutation::identity(3), 4, rng);
  const Mult1State mult = Mult1State::zeros(3);
  const double val = phi_hat_value_grad(V, mult, 2.0, s.cost, nullptr);
  CHECK(val == doctest::Approx(s.cost.inner(V)).epsilon(1e-10));
}

TEST_CASE("phi-hat gradient matches central finite differences") {
  Setup s(3, 115);
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix V = rng.gaussian_matrix(3, 9);
    Mult1State mult = Mult1State::zeros(3);
    Matrix Z = rng.gaussian_matrix(3, 3);
    mult.Z = 0.5 * (Z + Z.transpose());
    Matrix G = rng.gaussian_matrix(3, 3);
    mult.Gam = 0.5 * (G + G.transpose());
    mult.lam = rng.gaussian();
    Matrix L = rng.gaussian_matrix(9, 9).cwiseAbs();
    mult.Lambda = 0.5 * (L + L.transpose());
    const double beta = 0.5 + rng.uniform() * 3.0;
    Matrix grad;
    phi_hat_value_grad(V, mult, beta, s.cost, &grad);
    const Matrix fd = fd_gradient(
        [&](const Matrix& X) {
          return phi_hat_value_grad(X, mult, beta, s.cost, nullptr);
        },
        V);
    CHECK((grad - fd).norm() <= 1e-6 * std::max(1.0, grad.norm()));
  }
}

TEST_CASE("phi-hat Z-term equals the dense block-diagonal expansion") {
  Setup s(3, 116);
  Rng rng(6);
  const Matrix V = rng.gaussian_matrix(4, 9);
  Matrix Zs = rng.gaussian_matrix(3, 3);
  Zs = (0.5 * (Zs + Zs.transpose())).eval();
  Mult1State with_z = Mult1State::zeros(3);
  with_z.Z = Zs;
  const Mult1State zero = Mult1State::zeros(3);
  const double beta = 1.7;
  Matrix g1, g0;
  phi_hat_value_grad(V, with_z, beta, s.cost, &g1);
  phi_hat_value_grad(V, zero, beta, s.cost, &g0);
  const Matrix expect = 2.0 * V * kron(Matrix::Identity(3, 3), Zs);
  CHECK((g1 - g0 - expect).norm() <= 1e-10 * std::max(1.0, expect.norm()));
}

TEST_CASE("majorizer is tangent at the anchor and dominates elsewhere") {
  Setup s(3, 117);
  Rng rng(7);
  const MultiplierState mult = random_mult(3, rng);
  const double beta = 2.0, rho = 0.7;
  PhiFn phi = [&](const Matrix& X, Matrix* g) {
    return phi_value_grad(X, mult, beta, s.cost, g);
  };
  auto L_value = [&](const Matrix& X) {
    return phi(X, nullptr) + rho * (X.squaredNorm() + dense_psi(X));
  };

  SUBCASE("value identity at the anchor") {
    for (int rep = 0; rep < 10; ++rep) {
      const Matrix anchor = rng.gaussian_matrix(3, 9);
      const SingularTriplet t = top_singular_triplet(anchor);
      const Matrix W = psi_subgradient(anchor, t);
      const double m = majorizer_value_grad(
          anchor, anchor, W, -t.sigma1 * t.sigma1, phi, rho, nullptr);
      CHECK(std::abs(m - L_value(anchor)) <= 1e-12 * std::max(1.0, std::abs(m)));
    }
  }
  SUBCASE("rho = 0 reduces to phi") {
    const Matrix anchor = rng.gaussian_matrix(3, 9);
    const Matrix W = psi_subgradient(anchor);
    const Matrix X = rng.gaussian_matrix(3, 9);
    const double m =
        majorizer_value_grad(X, anchor, W, dense_psi(anchor), phi, 0.0, nullptr);
    CHECK(m == doctest::Approx(phi(X, nullptr)).epsilon(1e-12));
  }
  SUBCASE("domination on 100 random points") {
    const Matrix anchor = rng.gaussian_matrix(3, 9);
    const SingularTriplet t = top_singular_triplet(anchor);
    const Matrix W = psi_subgradient(anchor, t);
    for (int rep = 0; rep < 100; ++rep) {
      const Matrix X = rng.gaussian_matrix(3, 9);
      const double m = majorizer_value_grad(X, anchor, W,
                                            -t.sigma1 * t.sigma1, phi, rho,
                                            nullptr);
      CHECK(m >= L_value(X) - 1e-10);
    }
  }
}

TEST_CASE("lbfgs on a convex quadratic") {
  Rng rng(8);
  const Matrix target = rng.gaussian_matrix(3, 9);
  ObjectiveFn fn = [&](const Matrix& X, Matrix& g) {
    g = X - target;
    return 0.5 * (X - target).squaredNorm();
  };
  const LbfgsResult res =
      lbfgs_minimize(rng.gaussian_matrix(3, 9), fn, 1e-9, 300);
  CHECK(res.converged);
  CHECK(res.iters <= 50);
  CHECK((res.V - target).norm() <= 1e-8);
}

TEST_CASE("lbfgs returns immediately from a stationary start") {
  Rng rng(9);
  const Matrix target = rng.gaussian_matrix(3, 9);
  ObjectiveFn fn = [&](const Matrix& X, Matrix& g) {
    g = X - target;
    return 0.5 * (X - target).squaredNorm();
  };
  const LbfgsResult res = lbfgs_minimize(target, fn, 1e-9, 300);
  CHECK(res.converged);
  CHECK(res.iters == 0);
}

TEST_CASE("lbfgs solves a Rosenbrock embed") {
  // f(x, y) = (1-x)^2 + 100 (y - x^2)^2 embedded in a 1 x 2 matrix.
  ObjectiveFn fn = [](const Matrix& X, Matrix& g) {
    const double x = X(0, 0), y = X(0, 1);
    g.resize(1, 2);
    g(0, 0) = -2.0 * (1 - x) - 400.0 * x * (y - x * x);
    g(0, 1) = 200.0 * (y - x * x);
    return (1 - x) * (1 - x) + 100.0 * (y - x * x) * (y - x * x);
  };
  Matrix start(1, 2);
  start << -1.2, 1.0;
  const LbfgsResult res = lbfgs_minimize(start, fn, 1e-10, 300);
  CHECK(std::abs(res.V(0, 0) - 1.0) <= 1e-5);
  CHECK(std::abs(res.V(0, 1) - 1.0) <= 1e-5);
}

TEST_CASE("multiplier update") {
  Rng rng(10);
  const int n = 3, p = 9;
  SUBCASE("Lambda clears when V^T V dominates") {
    MultiplierState hat = MultiplierState::zeros(n);
    hat.Lambda = Matrix::Ones(p, p) * 0.5;
    // V with strictly positive Gram matrix.
    Matrix V = rng.gaussian_matrix(4, p).cwiseAbs().array() + 1.0;
    const MultiplierState next = multiplier_update(hat, V, 10.0, n);
    CHECK(next.Lambda.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("feasible V leaves equality multipliers unchanged") {
    MultiplierState hat = MultiplierState::zeros(n);
    hat.mu = rng.gaussian_vector(2 * n + 2);
    const Matrix V = lifted_permutation(Permutation::identity(n), 4, rng);
    const MultiplierState next = multiplier_update(hat, V, 5.0, n);
    CHECK((next.mu - hat.mu).norm() <= 1e-10);
  }
  SUBCASE("random inputs match the elementwise formula") {
    const MultiplierState hat = random_mult(n, rng);
    const Matrix V = rng.gaussian_matrix(3, p);
    const double beta = 2.5;
    const MultiplierState next = multiplier_update(hat, V, beta, n);
    const Matrix Y = V.transpose() * V;
    const Matrix expect = (hat.Lambda - beta * Y).cwiseMax(0.0);
    CHECK((next.Lambda - expect).norm() <= 1e-12 * std::max(1.0, expect.norm()));
    CHECK((next.mu - (hat.mu + beta * eval_F(V, n))).norm() <= 1e-12);
    CHECK(next.Lambda.minCoeff() >= 0.0);
  }
}

TEST_CASE("safeguard is a ball projection") {
  Rng rng(11);
  MultiplierState mult = random_mult(3, rng);
  const double norm = mult.norm();
  SUBCASE("inside the ball: unchanged") {
    const MultiplierState out = safeguard(mult, norm * 2.0);
    CHECK(out.norm() == doctest::Approx(norm));
    CHECK((out.Lambda - mult.Lambda).norm() == 0.0);
  }
  SUBCASE("at twice the radius: halved") {
    const MultiplierState out = safeguard(mult, norm / 2.0);
    CHECK((out.mu - 0.5 * mult.mu).norm() <= 1e-12);
  }
  SUBCASE("projection lands exactly on the sphere") {
    const double radius = norm / 3.0;
    const MultiplierState out = safeguard(mult, radius);
    CHECK(std::abs(out.norm() - radius) <= 1e-12 * std::max(1.0, radius));
  }
}

namespace {

PhiFn make_phi(const LiftedCost& cost, const MultiplierState& mult,
               double beta) {
  return [&cost, mult, beta](const Matrix& X, Matrix* g) {
    return phi_value_grad(X, mult, beta, cost, g);
  };
}

}  // namespace

TEST_CASE("mm_solve returns an eps_k-approximate stationary point") {
  Setup s(3, 118);
  Rng rng(12);
  const MultiplierState mult = MultiplierState::zeros(3);
  const double beta = 1.0, rho = 0.05, eps_k = 1e-4;
  AlmConfig cfg;
  const PhiFn phi = make_phi(s.cost, mult, beta);
  for (int rep = 0; rep < 5; ++rep) {
    const Matrix V0 = rng.gaussian_matrix(4, 9);
    const MmResult res = mm_solve(V0, phi, rho, eps_k, cfg);
    REQUIRE(res.converged);
    // Direct evaluation of the nonsmooth stationarity residual.
    Matrix g;
    phi_value_grad(res.V, mult, beta, s.cost, &g);
    const Matrix W = psi_subgradient(res.V);
    const double direct = (g + rho * (2.0 * res.V + W)).norm();
    CHECK(direct <= eps_k * (1.0 + 1e-6));
    CHECK(res.residual == doctest::Approx(direct).epsilon(1e-6));
  }
}

TEST_CASE("mm_solve terminates in one cycle from a stationary rank-one start") {
  // Unconstrained-in-psi setting: rho = 0 makes any phi-stationary point a
  // fixed point; use a feasible lifted permutation with tiny rho and a start
  // that is already the mm output of a previous call.
  Setup s(3, 119);
  Rng rng(13);
  const MultiplierState mult = MultiplierState::zeros(3);
  AlmConfig cfg;
  const PhiFn phi = make_phi(s.cost, mult, 1.0);
  const Matrix V0 = rng.gaussian_matrix(4, 9);
  const MmResult first = mm_solve(V0, phi, 0.01, 1e-6, cfg);
  REQUIRE(first.converged);
  const MmResult again = mm_solve(first.V, phi, 0.01, 1e-6, cfg);
  CHECK(again.converged);
  CHECK(again.cycles == 1);
}

TEST_CASE("mm cycles are monotone in the nonsmooth objective") {
  Setup s(3, 120);
  Rng rng(14);
  const MultiplierState mult = MultiplierState::zeros(3);
  const double beta = 2.0, rho = 0.3;
  AlmConfig cfg;
  const PhiFn phi = make_phi(s.cost, mult, beta);
  auto L_value = [&](const Matrix& X) {
    return phi_value_grad(X, mult, beta, s.cost, nullptr) +
           rho * (X.squaredNorm() + dense_psi(X));
  };
  AlmConfig one_cycle = cfg;
  one_cycle.mm_max_cycles = 1;
  for (int seed = 0; seed < 10; ++seed) {
    Rng r2(200 + seed);
    Matrix V = r2.gaussian_matrix(4, 9);
    double prev = L_value(V);
    for (int cyc = 0; cyc < 8; ++cyc) {
      const MmResult res = mm_solve(V, phi, rho, 1e-10, one_cycle);
      V = res.V;
      const double cur = L_value(V);
      CHECK(cur <= prev + 1e-8);
      prev = cur;
    }
  }
}

TEST_CASE("alm_solve certifies from a lifted brute-force optimum") {
  Setup s(3, 121);
  const auto [best_perm, best_val] = brute_force(s.inst);
  Rng rng(15);
  const Matrix V0 = lifted_permutation(best_perm, 4, rng);
  EpalmModel model(s.cost, 3);
  AlmConfig cfg;
  const AlmResult res = alm_solve(model, V0, 1e-4, 1e-3, cfg);
  CHECK(res.certified);
  CHECK(res.cert.r1 <= 1e-3);
  CHECK(res.cert.r2 <= 1e-3);
  CHECK(res.cert.r3 <= 1e-3);
}

TEST_CASE("alm_solve reaches the residual targets from random starts") {
  Setup s(3, 122);
  Rng rng(16);
  EpalmModel model(s.cost, 3);
  const AlmResult res =
      alm_solve(model, rng.gaussian_matrix(9, 9), 1e-3, 1e-4, AlmConfig{});
  CHECK(res.certified);
  CHECK(res.cert.r1 <= 1e-4);
  CHECK(res.cert.r2 <= 1e-4);
  CHECK(model.multipliers().Lambda.minCoeff() >= 0.0);
}

TEST_CASE("alm certificate is sound against independent recomputation") {
  Setup s(3, 123);
  Rng rng(17);
  for (int seed = 0; seed < 3; ++seed) {
    Rng r2(300 + seed);
    EpalmModel model(s.cost, 3);
    const double rho = 1e-3, tau = 1e-4;
    const AlmResult res =
        alm_solve(model, r2.gaussian_matrix(9, 9), rho, tau, AlmConfig{});
    REQUIRE(res.certified);
    const StationarityCertificate cert =
        recompute_certificate(res.V, model.multipliers(), rho, s.cost, 3);
    CHECK(cert.r1 <= tau * (1 + 1e-9));
    CHECK(cert.r2 <= tau * (1 + 1e-9));
    CHECK(cert.r3 <= tau * (1 + 1e-6) + 1e-12);
  }
}

TEST_CASE("alm trace: beta nondecreasing, feasibility trends down") {
  Setup s(3, 124);
  int total_steps = 0, increases = 0;
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(400 + seed);
    EpalmModel model(s.cost, 3);
    std::vector<AlmTraceRecord> trace;
    const AlmResult res = alm_solve(model, rng.gaussian_matrix(9, 9), 1e-3,
                                    1e-4, AlmConfig{}, &trace);
    REQUIRE(res.certified);
    double prev_beta = 0;
    for (const auto& rec : trace) {
      CHECK(rec.beta >= prev_beta);
      CHECK(rec.beta <= AlmConfig{}.beta_max);
      prev_beta = rec.beta;
    }
    for (std::size_t k = 1; k < trace.size(); ++k) {
      ++total_steps;
      if (trace[k].r1 > trace[k - 1].r1 * (1 + 1e-12)) ++increases;
    }
    CHECK(trace.back().r1 <= 1e-4);
  }
  if (total_steps > 0)
    CHECK(increases <= (total_steps + 4) / 5);  // at most ~20% non-monotone
}
