#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>

#include "qapdc/types.hpp"

namespace qapdc {

// Problem datum of min_{X permutation} <X, A X B + C>.
struct QapInstance {
  std::string name;
  int n = 0;
  Matrix A, B, C;
  std::optional<double> best_known;
};

// Additive shifts removed from A, B, C so that original objectives are
// recoverable: objective_orig = objective_shifted + correction().
struct ShiftRecord {
  int n = 0;
  double shift_a = 0, shift_b = 0, shift_c = 0;
  double sum_a_shifted = 0, sum_b_shifted = 0;

  double correction() const {
    return shift_a * sum_b_shifted + shift_b * sum_a_shifted +
           shift_a * shift_b * static_cast<double>(n) * n +
           shift_c * static_cast<double>(n);
  }
};

// QAPLIB .dat: integer n, then n^2 entries of A row-major, then n^2 of B,
// arbitrary whitespace. C is zero. Parse errors name the byte offset.
QapInstance parse_dat(std::istream& in, const std::string& name = "");
QapInstance load_dat(const std::string& path);
void serialize_dat(const QapInstance& inst, std::ostream& out);

struct SlnResult {
  Permutation perm;
  double value = 0;
  bool inverted = false;  // inverse orientation was the consistent one
};

// .sln companion: first line "n value", then n 1-indexed entries. Both
// permutation conventions exist in the wild, so the orientation whose
// objective reproduces the stated value is chosen.
SlnResult parse_sln(std::istream& in, const QapInstance& inst);
SlnResult load_sln(const std::string& path, const QapInstance& inst);

// Shift A, B, C to be entrywise nonnegative.
std::pair<QapInstance, ShiftRecord> preprocess(const QapInstance& inst);

// <X, A X B + C> for the permutation matrix of `perm`, in O(n^2).
double objective(const QapInstance& inst, const Permutation& perm);

// The lifted quadratic cost operator, kept matrix-free: applying it to vec(X)
// gives vec((A X B + A^T X B^T)/2 + C o X) / scale, which reproduces
// <X, A X B + C> as a quadratic form on permutation matrices.
class LiftedCost {
 public:
  // If normalize, scale is set to the spectral norm of the lifted operator
  // (estimated by power iteration); otherwise scale = 1.
  LiftedCost(const QapInstance& inst, bool normalize);

  int n() const { return n_; }
  int p() const { return n_ * n_; }
  double scale() const { return scale_; }

  // V * Ctil / scale for row-major stacking of m sketch rows; O(m n^3).
  Matrix apply(const Matrix& V) const;
  void apply_into(const Matrix& V, Matrix& out) const;

  // x^T Ctil x / scale.
  double quad(const Vector& x) const;

  // <Ctil, V^T V> / scale computed without forming V^T V.
  double inner(const Matrix& V) const;

 private:
  void apply_row(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const;

  int n_ = 0;
  Matrix A_, B_;
  Vector diag_;  // vec(C)
  double scale_ = 1.0;
};

struct RunMetrics {
  std::optional<double> gap_pct;
  double infeas = 0;
  double obj = 0;
};

// infeas = ||Xraw^T Xraw - I||_F + ||min(Xraw,0)||_F on the raw extraction;
// obj and gap on the projected permutation.
RunMetrics metrics(const Matrix& x_raw, const Permutation& proj,
                   const QapInstance& inst);

}  // namespace qapdc
