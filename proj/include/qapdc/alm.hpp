#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "qapdc/constraints.hpp"
#include "qapdc/instance.hpp"
#include "qapdc/specfact.hpp"
#include "qapdc/types.hpp"

namespace qapdc {

// Dual state of the augmented Lagrangian: Lambda pairs with V^T V >= 0 and
// stays entrywise nonnegative; mu holds the 2n+2 equality multipliers in
// eval_F component order (D, J, then the two selector families).
struct MultiplierState {
  Matrix Lambda;
  Vector mu;

  static MultiplierState zeros(int n) {
    MultiplierState s;
    s.Lambda = Matrix::Zero(n * n, n * n);
    s.mu = Vector::Zero(2 * n + 2);
    return s;
  }

  double norm() const {
    return std::sqrt(Lambda.squaredNorm() + mu.squaredNorm());
  }
};

struct AlmConfig {
  double beta0 = 1.0;
  double gamma_beta = 1.05;
  double beta_max = 1e8;
  double inner_eps_factor = 0.9;  // eps_k = factor * tau_l
  int lbfgs_memory = 15;
  int lbfgs_max_iters = 300;
  int mm_max_cycles = 100;
  int alm_max_iters = 500;
  double safeguard_floor = 1e3;  // varpi_0 = max(floor, |<Ctil, V0^T V0>|)
};

// Eq-residual / nonnegativity-residual / stationarity-residual triple.
struct StationarityCertificate {
  double r1 = 0;  // ||F(V)||
  double r2 = 0;  // ||min(V^T V, 0)||_F
  double r3 = 0;  // stationarity residual norm

  bool accepted(double tau) const {
    return std::max({r1, r2, r3}) <= tau;
  }
};

struct AlmTraceRecord {
  int k = 0;
  double beta = 0, r1 = 0, r2 = 0, r3 = 0, phi = 0;
};

// Ball projection of the whole multiplier tuple.
MultiplierState safeguard(MultiplierState mult, double radius);

// Lambda+ = max(LambdaHat - beta V^T V, 0); mu+ = muHat + beta F(V).
MultiplierState multiplier_update(const MultiplierState& hat, const Matrix& V,
                                  double beta, int n);

// Phi_beta(V; Lambda, mu): the smooth augmented-Lagrangian part. The DC
// penalty rho(||V||_F^2 + psi(V)) is handled by the majorizer. Gradient:
// 2 V [Ctil + S(mu + beta F(V)) + beta min(V^T V - Lambda/beta, 0)].
double phi_value_grad(const Matrix& V, const MultiplierState& mult,
                      double beta, const LiftedCost& cost, Matrix* grad);

// EPalm1 multipliers: Z for sum_i V_i^T V_i = I_n, Gam for <V_i,V_j> =
// delta_ij, lam for <e_p e_p^T, V^T V> = p, Lambda for V^T V >= 0.
struct Mult1State {
  Matrix Z, Gam;
  double lam = 0;
  Matrix Lambda;

  static Mult1State zeros(int n) {
    Mult1State s;
    s.Z = Matrix::Zero(n, n);
    s.Gam = Matrix::Zero(n, n);
    s.Lambda = Matrix::Zero(n * n, n * n);
    return s;
  }

  double norm() const {
    return std::sqrt(Z.squaredNorm() + Gam.squaredNorm() + lam * lam +
                     Lambda.squaredNorm());
  }
};

double phi_hat_value_grad(const Matrix& V, const Mult1State& mult, double beta,
                          const LiftedCost& cost, Matrix* grad);

// Stacked equality residuals of the EPalm1 constraint system:
// [vec(sum_i V_i^T V_i - I); vec(Gram(V) - I); <J, V^T V> - p].
Vector eval_F_hat(const Matrix& V, int n);

Mult1State multiplier1_update(const Mult1State& hat, const Matrix& V,
                              double beta, int n);
Mult1State safeguard1(Mult1State mult, double radius);

// Objective-with-gradient callback: returns the value and fills grad.
using ObjectiveFn = std::function<double(const Matrix&, Matrix&)>;

struct LbfgsResult {
  Matrix V;
  Matrix grad;
  double value = 0;
  double grad_norm = 0;
  int iters = 0;
  bool converged = false;
  bool line_search_failed = false;
};

// Limited-memory BFGS with strong-Wolfe line search (c1 = 1e-4, c2 = 0.9).
// Stops at ||grad||_F <= eps or returns the best iterate after max_iters.
// Curvature pairs with y.s <= 1e-12 ||s||^2 are skipped; a failed line
// search falls back to a backtracking gradient step and sets the flag.
LbfgsResult lbfgs_minimize(Matrix start, const ObjectiveFn& fn, double eps,
                           int max_iters, int memory = 15);

// Smooth part of an ALM subproblem at fixed (safeguarded) multipliers and
// penalty beta; fills grad when non-null.
using PhiFn = std::function<double(const Matrix&, Matrix*)>;

// Smooth majorizer of Phi + rho (||.||_F^2 + psi) anchored at anchor_V with
// anchor_W in the psi subdifferential there:
//   M(V) = Phi(V) + rho (||V||_F^2 + <W, V - anchor> + psi(anchor)).
// Tangent to the nonsmooth objective at the anchor and above it elsewhere.
double majorizer_value_grad(const Matrix& V, const Matrix& anchor_V,
                            const Matrix& anchor_W, double psi_anchor,
                            const PhiFn& phi, double rho, Matrix* grad);

struct MmResult {
  Matrix V;
  double value = 0;     // Phi value at V
  double residual = 0;  // ||grad Phi + rho (2V + W)||_F at V
  int cycles = 0;
  bool converged = false;
};

// Majorization-minimization for min Phi(V) + rho (||V||_F^2 + psi(V)):
// linearize psi at the current point, minimize the smooth majorizer with
// L-BFGS to 0.1 eps_k, stop when the nonsmooth stationarity residual drops
// to eps_k.
MmResult mm_solve(Matrix V, const PhiFn& phi, double rho, double eps_k,
                  const AlmConfig& cfg);

// The constraint machinery behind one penalty subproblem; owns the multiplier
// state so outer iterations can warm-start it.
class AugLagModel {
 public:
  virtual ~AugLagModel() = default;
  virtual double phi(const Matrix& V, double beta, Matrix* grad) = 0;
  virtual void safeguard_multipliers(double radius) = 0;
  virtual void update_multipliers(const Matrix& V, double beta) = 0;
  virtual double feasibility(const Matrix& V) const = 0;  // ||F(V)||
  virtual double objective_inner(const Matrix& V) const = 0;
  virtual int n() const = 0;
};

class EpalmModel : public AugLagModel {
 public:
  EpalmModel(const LiftedCost& cost, int n)
      : cost_(&cost), n_(n), mult_(MultiplierState::zeros(n)) {}

  double phi(const Matrix& V, double beta, Matrix* grad) override {
    return phi_value_grad(V, mult_, beta, *cost_, grad);
  }
  void safeguard_multipliers(double radius) override {
    mult_ = safeguard(std::move(mult_), radius);
  }
  void update_multipliers(const Matrix& V, double beta) override {
    mult_ = multiplier_update(mult_, V, beta, n_);
  }
  double feasibility(const Matrix& V) const override {
    return eval_F(V, n_).norm();
  }
  double objective_inner(const Matrix& V) const override {
    return cost_->inner(V);
  }
  int n() const override { return n_; }

  const MultiplierState& multipliers() const { return mult_; }
  void set_multipliers(MultiplierState m) { mult_ = std::move(m); }

 private:
  const LiftedCost* cost_;
  int n_;
  MultiplierState mult_;
};

class Epalm1Model : public AugLagModel {
 public:
  Epalm1Model(const LiftedCost& cost, int n)
      : cost_(&cost), n_(n), mult_(Mult1State::zeros(n)) {}

  double phi(const Matrix& V, double beta, Matrix* grad) override {
    return phi_hat_value_grad(V, mult_, beta, *cost_, grad);
  }
  void safeguard_multipliers(double radius) override {
    mult_ = safeguard1(std::move(mult_), radius);
  }
  void update_multipliers(const Matrix& V, double beta) override {
    mult_ = multiplier1_update(mult_, V, beta, n_);
  }
  double feasibility(const Matrix& V) const override {
    return eval_F_hat(V, n_).norm();
  }
  double objective_inner(const Matrix& V) const override {
    return cost_->inner(V);
  }
  int n() const override { return n_; }

  const Mult1State& multipliers() const { return mult_; }

 private:
  const LiftedCost* cost_;
  int n_;
  Mult1State mult_;
};

struct AlmResult {
  Matrix V;
  StationarityCertificate cert;
  bool certified = false;
  int iters = 0;
  double beta_final = 0;
};

// Algorithm: safeguard multipliers, solve the subproblem with the MM method
// to eps_k = inner_eps_factor * tau, update multipliers, grow beta; stop as
// soon as max(r1, r2, r3) <= tau. r3 uses the freshly updated multipliers
// (identical to the subproblem residual by the ALM gradient identity).
AlmResult alm_solve(AugLagModel& model, Matrix V0, double rho, double tau,
                    const AlmConfig& cfg,
                    std::vector<AlmTraceRecord>* trace = nullptr);

// Independent certificate recomputation from a final (V, multipliers) pair;
// used to cross-check soundness of certified results.
StationarityCertificate recompute_certificate(const Matrix& V,
                                              const MultiplierState& mult,
                                              double rho,
                                              const LiftedCost& cost, int n);

}  // namespace qapdc
