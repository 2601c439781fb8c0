#include "qapdc/alm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qapdc {

MultiplierState safeguard(MultiplierState mult, double radius) {
  const double norm = mult.norm();
  if (norm > radius && norm > 0) {
    const double s = radius / norm;
    mult.Lambda *= s;
    mult.mu *= s;
  }
  return mult;
}

MultiplierState multiplier_update(const MultiplierState& hat, const Matrix& V,
                                  double beta, int n) {
  MultiplierState next;
  Matrix Y = Matrix::Zero(V.cols(), V.cols());
  Y.selfadjointView<Eigen::Lower>().rankUpdate(V.transpose());
  Y.triangularView<Eigen::StrictlyUpper>() = Y.transpose();
  next.Lambda = (hat.Lambda - beta * Y).cwiseMax(0.0);
  next.mu = hat.mu + beta * eval_F(V, n);
  return next;
}

double phi_value_grad(const Matrix& V, const MultiplierState& mult,
                      double beta, const LiftedCost& cost, Matrix* grad) {
  const int n = cost.n();
  Matrix Y = Matrix::Zero(V.cols(), V.cols());
  Y.selfadjointView<Eigen::Lower>().rankUpdate(V.transpose());
  Y.triangularView<Eigen::StrictlyUpper>() = Y.transpose();
  const Vector f = eval_F(V, n);
  Matrix VC;
  cost.apply_into(V, VC);

  double value = (VC.array() * V.array()).sum();
  value += mult.mu.dot(f) + 0.5 * beta * f.squaredNorm();
  Matrix Min = (Y - mult.Lambda / beta).cwiseMin(0.0);
  value += 0.5 * beta * Min.squaredNorm() -
           mult.Lambda.squaredNorm() / (2.0 * beta);

  if (grad) {
    grad->noalias() = 2.0 * VC;
    Min *= beta;
    const AdjointWeight S(mult.mu + beta * f, n, &Min);
    S.add_apply(V, *grad);
  }
  return value;
}

Vector eval_F_hat(const Matrix& V, int n) {
  const int p = n * n;
  if (V.cols() != p)
    throw Error(ErrorKind::Usage, "eval_F_hat: dimension mismatch");
  Matrix K = Matrix::Zero(n, n);
  Matrix G(n, n);
  for (int i = 0; i < n; ++i) {
    const auto Vi = V.middleCols(i * n, n);
    K.noalias() += Vi.transpose() * Vi;
    for (int j = 0; j <= i; ++j) {
      const double g = (Vi.array() * V.middleCols(j * n, n).array()).sum();
      G(i, j) = g;
      G(j, i) = g;
    }
  }
  K -= Matrix::Identity(n, n);
  G -= Matrix::Identity(n, n);
  Vector out(2 * p + 1);
  out.head(p) = Eigen::Map<const Vector>(K.data(), p);
  out.segment(p, p) = Eigen::Map<const Vector>(G.data(), p);
  out(2 * p) = (V * Vector::Ones(p)).squaredNorm() - static_cast<double>(p);
  return out;
}

double phi_hat_value_grad(const Matrix& V, const Mult1State& mult, double beta,
                          const LiftedCost& cost, Matrix* grad) {
  const int n = cost.n();
  const int p = n * n;
  Matrix Y = Matrix::Zero(p, p);
  Y.selfadjointView<Eigen::Lower>().rankUpdate(V.transpose());
  Y.triangularView<Eigen::StrictlyUpper>() = Y.transpose();

  Matrix K = Matrix::Zero(n, n);
  Matrix G(n, n);
  for (int i = 0; i < n; ++i) {
    const auto Vi = V.middleCols(i * n, n);
    K.noalias() += Vi.transpose() * Vi;
    for (int j = 0; j <= i; ++j) {
      const double g = (Vi.array() * V.middleCols(j * n, n).array()).sum();
      G(i, j) = g;
      G(j, i) = g;
    }
  }
  K -= Matrix::Identity(n, n);
  G -= Matrix::Identity(n, n);
  const double jres =
      (V * Vector::Ones(p)).squaredNorm() - static_cast<double>(p);

  Matrix VC;
  cost.apply_into(V, VC);
  double value = (VC.array() * V.array()).sum();
  value += (mult.Z.array() * K.array()).sum() +
           (mult.Gam.array() * G.array()).sum() + mult.lam * jres;
  value += 0.5 * beta * (K.squaredNorm() + G.squaredNorm() + jres * jres);
  Matrix Min = (Y - mult.Lambda / beta).cwiseMin(0.0);
  value += 0.5 * beta * Min.squaredNorm() -
           mult.Lambda.squaredNorm() / (2.0 * beta);

  if (grad) {
    grad->noalias() = 2.0 * VC;
    const Matrix M = mult.Z + beta * K;      // pairs with I_n (x) M
    const Matrix N = mult.Gam + beta * G;    // pairs with N (x) I_n
    for (int j = 0; j < n; ++j) {
      auto Gj = grad->middleCols(j * n, n);
      Gj.noalias() += 2.0 * (V.middleCols(j * n, n) * M);
      for (int i = 0; i < n; ++i)
        if (N(i, j) != 0.0)
          Gj.noalias() += (2.0 * N(i, j)) * V.middleCols(i * n, n);
    }
    const double cj = 2.0 * (mult.lam + beta * jres);
    if (cj != 0.0) {
      Vector rs = V * Vector::Ones(p);
      grad->noalias() += cj * (rs * Eigen::RowVectorXd::Ones(p));
    }
    Min *= beta;
    grad->noalias() += 2.0 * (V * Min);
  }
  return value;
}

Mult1State multiplier1_update(const Mult1State& hat, const Matrix& V,
                              double beta, int n) {
  const int p = n * n;
  Mult1State next = hat;
  Matrix K = Matrix::Zero(n, n);
  Matrix G(n, n);
  for (int i = 0; i < n; ++i) {
    const auto Vi = V.middleCols(i * n, n);
    K.noalias() += Vi.transpose() * Vi;
    for (int j = 0; j <= i; ++j) {
      const double g = (Vi.array() * V.middleCols(j * n, n).array()).sum();
      G(i, j) = g;
      G(j, i) = g;
    }
  }
  next.Z = hat.Z + beta * (K - Matrix::Identity(n, n));
  next.Gam = hat.Gam + beta * (G - Matrix::Identity(n, n));
  next.lam =
      hat.lam +
      beta * ((V * Vector::Ones(p)).squaredNorm() - static_cast<double>(p));
  Matrix Y = Matrix::Zero(p, p);
  Y.selfadjointView<Eigen::Lower>().rankUpdate(V.transpose());
  Y.triangularView<Eigen::StrictlyUpper>() = Y.transpose();
  next.Lambda = (hat.Lambda - beta * Y).cwiseMax(0.0);
  return next;
}

Mult1State safeguard1(Mult1State mult, double radius) {
  const double norm = mult.norm();
  if (norm > radius && norm > 0) {
    const double s = radius / norm;
    mult.Z *= s;
    mult.Gam *= s;
    mult.lam *= s;
    mult.Lambda *= s;
  }
  return mult;
}

LbfgsResult lbfgs_minimize(Matrix V, const ObjectiveFn& fn, double eps,
                           int max_iters, int memory) {
  constexpr double c1 = 1e-4;
  constexpr double c2 = 0.9;

  LbfgsResult out;
  Matrix grad(V.rows(), V.cols());
  double value = fn(V, grad);
  double gnorm = grad.norm();

  Matrix best_V = V;
  Matrix best_grad = grad;
  double best_value = value;
  double best_gnorm = gnorm;

  std::vector<Matrix> s_list, y_list;
  std::vector<double> rho_list;

  Matrix dir(V.rows(), V.cols());
  Matrix trial(V.rows(), V.cols());
  Matrix trial_grad(V.rows(), V.cols());
  double trial_value = 0, trial_slope = 0;

  // Evaluates the objective at V + a * dir, leaving the point and gradient
  // in the trial buffers.
  auto eval_at = [&](double a) {
    trial = V + a * dir;
    trial_value = fn(trial, trial_grad);
    trial_slope = (trial_grad.array() * dir.array()).sum();
  };

  int it = 0;
  for (; it < max_iters; ++it) {
    if (gnorm <= eps) break;

    dir = -grad;
    const int h = static_cast<int>(s_list.size());
    std::vector<double> alpha(h);
    for (int i = h - 1; i >= 0; --i) {
      alpha[i] = rho_list[i] * (s_list[i].array() * dir.array()).sum();
      dir -= alpha[i] * y_list[i];
    }
    if (h > 0) {
      const double gamma =
          (s_list[h - 1].array() * y_list[h - 1].array()).sum() /
          y_list[h - 1].squaredNorm();
      dir *= gamma;
    }
    for (int i = 0; i < h; ++i) {
      const double beta_i =
          rho_list[i] * (y_list[i].array() * dir.array()).sum();
      dir += (alpha[i] - beta_i) * s_list[i];
    }

    double slope0 = (grad.array() * dir.array()).sum();
    if (!(slope0 < 0)) {
      dir = -grad;
      slope0 = -gnorm * gnorm;
      s_list.clear();
      y_list.clear();
      rho_list.clear();
    }

    double accepted = -1.0;
    {
      // Strong Wolfe: bracketing phase then bisection zoom.
      double alpha_prev = 0.0, val_prev = value;
      double alpha_cur = 1.0;
      const double alpha_max = 1e6;
      double lo = -1, hi = -1, val_lo = 0;
      for (int ls = 0; ls < 25; ++ls) {
        eval_at(alpha_cur);
        if (trial_value > value + c1 * alpha_cur * slope0 ||
            (ls > 0 && trial_value >= val_prev)) {
          lo = alpha_prev;
          hi = alpha_cur;
          val_lo = val_prev;
          break;
        }
        if (std::abs(trial_slope) <= -c2 * slope0) {
          accepted = alpha_cur;
          break;
        }
        if (trial_slope >= 0) {
          lo = alpha_cur;
          hi = alpha_prev;
          val_lo = trial_value;
          break;
        }
        alpha_prev = alpha_cur;
        val_prev = trial_value;
        if (alpha_cur >= alpha_max) break;
        alpha_cur = std::min(2.0 * alpha_cur, alpha_max);
      }
      if (accepted < 0 && lo >= 0) {
        double best_lo = lo, best_lo_val = val_lo;
        for (int z = 0; z < 40; ++z) {
          const double a = 0.5 * (lo + hi);
          eval_at(a);
          if (trial_value > value + c1 * a * slope0 ||
              trial_value >= val_lo) {
            hi = a;
          } else {
            if (std::abs(trial_slope) <= -c2 * slope0) {
              accepted = a;
              break;
            }
            if (trial_slope * (hi - lo) >= 0) hi = lo;
            lo = a;
            val_lo = trial_value;
            if (a > 0 && trial_value < best_lo_val) {
              best_lo = a;
              best_lo_val = trial_value;
            }
          }
          if (std::abs(hi - lo) <= 1e-16 * std::max(1.0, std::abs(lo))) break;
        }
        if (accepted < 0 && best_lo > 0 && best_lo_val < value) {
          // Curvature condition unreachable; the Armijo point still helps.
          accepted = best_lo;
          eval_at(best_lo);
        }
      }
    }

    if (accepted < 0) {
      out.line_search_failed = true;
      dir = -grad;
      slope0 = -gnorm * gnorm;
      double a = 1.0 / std::max(1.0, gnorm);
      bool ok = false;
      for (int bt = 0; bt < 60; ++bt) {
        eval_at(a);
        if (trial_value <= value + c1 * a * slope0) {
          accepted = a;
          ok = true;
          break;
        }
        a *= 0.5;
      }
      if (!ok) break;
      s_list.clear();
      y_list.clear();
      rho_list.clear();
    }

    Matrix s = trial - V;
    Matrix y = trial_grad - grad;
    const double ys = (y.array() * s.array()).sum();
    if (ys > 1e-12 * s.squaredNorm()) {
      s_list.push_back(std::move(s));
      y_list.push_back(std::move(y));
      rho_list.push_back(1.0 / ys);
      if (static_cast<int>(s_list.size()) > memory) {
        s_list.erase(s_list.begin());
        y_list.erase(y_list.begin());
        rho_list.erase(rho_list.begin());
      }
    }
    V.swap(trial);
    grad.swap(trial_grad);
    value = trial_value;
    gnorm = grad.norm();

    if (value < best_value) {
      best_V = V;
      best_grad = grad;
      best_value = value;
      best_gnorm = gnorm;
    }
  }

  out.converged = gnorm <= eps;
  if (out.converged || value <= best_value) {
    out.V = std::move(V);
    out.grad = std::move(grad);
    out.value = value;
    out.grad_norm = gnorm;
  } else {
    out.V = std::move(best_V);
    out.grad = std::move(best_grad);
    out.value = best_value;
    out.grad_norm = best_gnorm;
  }
  out.iters = it;
  return out;
}

double majorizer_value_grad(const Matrix& V, const Matrix& anchor_V,
                            const Matrix& anchor_W, double psi_anchor,
                            const PhiFn& phi, double rho, Matrix* grad) {
  double v = phi(V, grad);
  v += rho * (V.squaredNorm() +
              (anchor_W.array() * (V - anchor_V).array()).sum() + psi_anchor);
  if (grad) {
    grad->noalias() += (2.0 * rho) * V;
    grad->noalias() += rho * anchor_W;
  }
  return v;
}

MmResult mm_solve(Matrix V, const PhiFn& phi, double rho, double eps_k,
                  const AlmConfig& cfg) {
  MmResult out;
  const double inner_eps = std::max(0.1 * eps_k, 1e-14);

  SingularTriplet triplet = top_singular_triplet(V);
  Matrix W = psi_subgradient(V, triplet);
  double best_residual = std::numeric_limits<double>::infinity();
  Matrix best_V = V;

  for (int nu = 0; nu < cfg.mm_max_cycles; ++nu) {
    const Matrix anchor_V = V;
    const double psi_anchor = -triplet.sigma1 * triplet.sigma1;

    ObjectiveFn maj = [&](const Matrix& X, Matrix& g) {
      return majorizer_value_grad(X, anchor_V, W, psi_anchor, phi, rho, &g);
    };

    LbfgsResult inner = lbfgs_minimize(std::move(V), maj, inner_eps,
                                       cfg.lbfgs_max_iters, cfg.lbfgs_memory);
    V = std::move(inner.V);

    triplet = top_singular_triplet(V);
    const Matrix W_next = psi_subgradient(V, triplet);
    // grad M(V; W) + rho (W_next - W) = grad Phi(V) + rho (2V + W_next).
    const double residual = (inner.grad + rho * (W_next - W)).norm();
    W = W_next;
    out.cycles = nu + 1;

    if (residual <= eps_k) {
      out.residual = residual;
      out.converged = true;
      out.value = phi(V, nullptr);
      out.V = std::move(V);
      return out;
    }
    if (residual < best_residual) {
      best_residual = residual;
      best_V = V;
    }
  }
  out.residual = best_residual;
  out.converged = false;
  V = std::move(best_V);
  out.value = phi(V, nullptr);
  out.V = std::move(V);
  return out;
}

AlmResult alm_solve(AugLagModel& model, Matrix V0, double rho, double tau,
                    const AlmConfig& cfg, std::vector<AlmTraceRecord>* trace) {
  AlmResult res;
  Matrix V = std::move(V0);
  const double varpi0 =
      std::max(cfg.safeguard_floor, std::abs(model.objective_inner(V)));
  const double eps_k = cfg.inner_eps_factor * tau;
  double beta = cfg.beta0;

  double best_score = std::numeric_limits<double>::infinity();
  Matrix best_V = V;
  StationarityCertificate best_cert;

  for (int k = 0; k < cfg.alm_max_iters; ++k) {
    model.safeguard_multipliers(varpi0);
    PhiFn phi = [&](const Matrix& X, Matrix* g) {
      return model.phi(X, beta, g);
    };
    MmResult mm = mm_solve(std::move(V), phi, rho, eps_k, cfg);
    V = std::move(mm.V);
    model.update_multipliers(V, beta);

    StationarityCertificate cert;
    cert.r1 = model.feasibility(V);
    cert.r2 = neg_residual(V);
    cert.r3 = mm.residual;

    if (trace)
      trace->push_back({k, beta, cert.r1, cert.r2, cert.r3, mm.value});

    const double score = std::max({cert.r1, cert.r2, cert.r3});
    if (score < best_score) {
      best_score = score;
      best_V = V;
      best_cert = cert;
    }

    res.iters = k + 1;
    res.beta_final = beta;
    if (cert.accepted(tau)) {
      res.V = std::move(V);
      res.cert = cert;
      res.certified = true;
      return res;
    }
    beta = std::min(cfg.beta_max, cfg.gamma_beta * beta);
  }

  res.V = std::move(best_V);
  res.cert = best_cert;
  res.certified = false;
  return res;
}

StationarityCertificate recompute_certificate(const Matrix& V,
                                              const MultiplierState& mult,
                                              double rho,
                                              const LiftedCost& cost, int n) {
  StationarityCertificate cert;
  cert.r1 = eval_F(V, n).norm();
  cert.r2 = neg_residual(V);

  // 2 V (Ctil + S(mu) - Lambda) + rho (2V + W): Lagrangian stationarity at
  // the updated multipliers.
  Matrix VC;
  cost.apply_into(V, VC);
  Matrix G = 2.0 * VC;
  Matrix neg_Lambda = -mult.Lambda;
  const AdjointWeight S(mult.mu, n, &neg_Lambda);
  S.add_apply(V, G);
  const Matrix W = psi_subgradient(V);
  G.noalias() += (2.0 * rho) * V;
  G.noalias() += rho * W;
  cert.r3 = G.norm();
  return cert;
}

}  // namespace qapdc
