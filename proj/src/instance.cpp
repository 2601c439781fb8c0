#include "qapdc/instance.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace qapdc {

namespace {

// Tokenizer that tracks byte offsets for error reporting.
class TokenStream {
 public:
  explicit TokenStream(std::istream& in) : in_(in) {}

  bool next(std::string& tok, std::streamoff& at) {
    tok.clear();
    int c;
    while ((c = in_.get()) != EOF && std::isspace(c)) ++offset_;
    if (c == EOF) return false;
    at = offset_;
    do {
      tok.push_back(static_cast<char>(c));
      ++offset_;
      c = in_.get();
    } while (c != EOF && !std::isspace(c));
    if (c != EOF) ++offset_;
    return true;
  }

  std::streamoff offset() const { return offset_; }

 private:
  std::istream& in_;
  std::streamoff offset_ = 0;
};

double parse_number(const std::string& tok, std::streamoff at) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    throw Error(ErrorKind::Io, "malformed token '" + tok + "' at byte offset " +
                                   std::to_string(at));
  }
  if (used != tok.size())
    throw Error(ErrorKind::Io, "malformed token '" + tok + "' at byte offset " +
                                   std::to_string(at));
  return v;
}

long parse_integer(const std::string& tok, std::streamoff at) {
  const double v = parse_number(tok, at);
  const long i = static_cast<long>(std::llround(v));
  if (static_cast<double>(i) != v)
    throw Error(ErrorKind::Io, "expected integer, got '" + tok +
                                   "' at byte offset " + std::to_string(at));
  return i;
}

}  // namespace

QapInstance parse_dat(std::istream& in, const std::string& name) {
  TokenStream ts(in);
  std::string tok;
  std::streamoff at = 0;
  if (!ts.next(tok, at)) throw Error(ErrorKind::Io, "empty instance stream");
  const long n_long = parse_integer(tok, at);
  if (n_long < 2)
    throw Error(ErrorKind::Io, "instance size must be >= 2, got " +
                                   std::to_string(n_long) + " at byte offset " +
                                   std::to_string(at));
  const int n = static_cast<int>(n_long);

  QapInstance inst;
  inst.name = name;
  inst.n = n;
  inst.A.resize(n, n);
  inst.B.resize(n, n);
  inst.C = Matrix::Zero(n, n);

  for (int which = 0; which < 2; ++which) {
    Matrix& M = which == 0 ? inst.A : inst.B;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (!ts.next(tok, at))
          throw Error(ErrorKind::Io,
                      "unexpected end of stream at byte offset " +
                          std::to_string(ts.offset()) + ": expected " +
                          std::to_string(2 * n * n) + " matrix entries");
        M(i, j) = parse_number(tok, at);
      }
  }
  if (ts.next(tok, at))
    throw Error(ErrorKind::Io, "trailing token '" + tok + "' at byte offset " +
                                   std::to_string(at));
  return inst;
}

QapInstance load_dat(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open instance file: " + path);
  std::string name = path;
  const auto slash = name.find_last_of('/');
  if (slash != std::string::npos) name = name.substr(slash + 1);
  const auto dot = name.find_last_of('.');
  if (dot != std::string::npos) name = name.substr(0, dot);
  return parse_dat(in, name);
}

void serialize_dat(const QapInstance& inst, std::ostream& out) {
  out << inst.n << "\n\n";
  for (int which = 0; which < 2; ++which) {
    const Matrix& M = which == 0 ? inst.A : inst.B;
    for (int i = 0; i < inst.n; ++i) {
      for (int j = 0; j < inst.n; ++j) {
        if (j) out << ' ';
        const double v = M(i, j);
        if (v == std::floor(v) && std::abs(v) < 1e15)
          out << static_cast<long long>(v);
        else
          out << v;
      }
      out << '\n';
    }
    if (which == 0) out << '\n';
  }
}

SlnResult parse_sln(std::istream& in, const QapInstance& inst) {
  TokenStream ts(in);
  std::string tok;
  std::streamoff at = 0;
  if (!ts.next(tok, at)) throw Error(ErrorKind::Io, "empty solution stream");
  const long n = parse_integer(tok, at);
  if (n != inst.n)
    throw Error(ErrorKind::Io, "solution size " + std::to_string(n) +
                                   " does not match instance size " +
                                   std::to_string(inst.n));
  if (!ts.next(tok, at))
    throw Error(ErrorKind::Io, "missing solution value");
  const double value = parse_number(tok, at);

  Permutation perm;
  perm.image.resize(inst.n);
  for (int i = 0; i < inst.n; ++i) {
    if (!ts.next(tok, at))
      throw Error(ErrorKind::Io, "solution permutation truncated at byte offset " +
                                     std::to_string(ts.offset()));
    const long v = parse_integer(tok, at);
    if (v < 1 || v > inst.n)
      throw Error(ErrorKind::Io, "permutation entry " + std::to_string(v) +
                                     " outside 1.." + std::to_string(inst.n) +
                                     " at byte offset " + std::to_string(at));
    perm.image[i] = static_cast<int>(v - 1);
  }
  if (!perm.valid())
    throw Error(ErrorKind::Io, "solution permutation is not a bijection");

  const double tol = 1e-6 * std::max(1.0, std::abs(value));
  SlnResult res;
  res.value = value;
  if (std::abs(objective(inst, perm) - value) <= tol) {
    res.perm = perm;
    res.inverted = false;
    return res;
  }
  const Permutation inv = perm.inverse();
  if (std::abs(objective(inst, inv) - value) <= tol) {
    res.perm = inv;
    res.inverted = true;
    return res;
  }
  throw Error(ErrorKind::Numerical,
              "solution value " + std::to_string(value) +
                  " is inconsistent with the instance in both orientations (" +
                  std::to_string(objective(inst, perm)) + " direct, " +
                  std::to_string(objective(inst, inv)) + " inverted)");
}

SlnResult load_sln(const std::string& path, const QapInstance& inst) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open solution file: " + path);
  return parse_sln(in, inst);
}

std::pair<QapInstance, ShiftRecord> preprocess(const QapInstance& inst) {
  QapInstance out = inst;
  ShiftRecord rec;
  rec.n = inst.n;
  rec.shift_a = inst.A.minCoeff();
  rec.shift_b = inst.B.minCoeff();
  rec.shift_c = inst.n > 0 ? inst.C.minCoeff() : 0.0;
  if (rec.shift_a != 0) out.A.array() -= rec.shift_a;
  if (rec.shift_b != 0) out.B.array() -= rec.shift_b;
  if (rec.shift_c != 0) out.C.array() -= rec.shift_c;
  rec.sum_a_shifted = out.A.sum();
  rec.sum_b_shifted = out.B.sum();
  return {std::move(out), rec};
}

double objective(const QapInstance& inst, const Permutation& perm) {
  const int n = inst.n;
  double s = 0;
  for (int i = 0; i < n; ++i) {
    const int pi = perm.image[i];
    for (int k = 0; k < n; ++k) s += inst.A(i, k) * inst.B(perm.image[k], pi);
    s += inst.C(i, pi);
  }
  return s;
}

LiftedCost::LiftedCost(const QapInstance& inst, bool normalize)
    : n_(inst.n), A_(inst.A), B_(inst.B) {
  diag_ = Eigen::Map<const Vector>(inst.C.data(), n_ * n_);
  scale_ = 1.0;
  if (normalize) {
    // Spectral norm of the symmetric lifted operator by power iteration,
    // matrix-free on vectors of length p.
    const int p = n_ * n_;
    Vector v = Vector::Ones(p);
    for (int i = 0; i < p; ++i) v(i) += 1e-6 * (i + 1) / p;
    v.normalize();
    Vector w(p);
    double lam = 0;
    for (int it = 0; it < 1000; ++it) {
      apply_row(v, w);
      const double norm = w.norm();
      if (norm <= 0) break;
      w /= norm;
      const double prev = lam;
      lam = norm;
      const double drift = (w - v).norm();
      v = w;
      if (it > 3 && std::abs(lam - prev) <= 1e-12 * std::max(1.0, lam) &&
          drift <= 1e-10)
        break;
    }
    if (lam > 0) scale_ = lam;
  }
}

void LiftedCost::apply_row(const Eigen::Ref<const Vector>& x,
                           Eigen::Ref<Vector> out) const {
  // vec(X) -> vec((A X B + A^T X B^T)/2 + C o X), column-major reshape.
  Eigen::Map<const Matrix> X(x.data(), n_, n_);
  Eigen::Map<Matrix> Y(out.data(), n_, n_);
  Y.noalias() = 0.5 * (A_ * X * B_);
  Y.noalias() += 0.5 * (A_.transpose() * X * B_.transpose());
  Y.array() += Eigen::Map<const Matrix>(diag_.data(), n_, n_).array() * X.array();
}

Matrix LiftedCost::apply(const Matrix& V) const {
  Matrix out(V.rows(), V.cols());
  apply_into(V, out);
  return out;
}

void LiftedCost::apply_into(const Matrix& V, Matrix& out) const {
  const int p = n_ * n_;
  if (V.cols() != p)
    throw Error(ErrorKind::Usage, "lifted apply: expected " +
                                      std::to_string(p) + " columns, got " +
                                      std::to_string(V.cols()));
  out.resize(V.rows(), p);
  Vector row(p), res(p);
  for (Eigen::Index r = 0; r < V.rows(); ++r) {
    row = V.row(r).transpose();
    apply_row(row, res);
    out.row(r) = res.transpose() / scale_;
  }
}

double LiftedCost::quad(const Vector& x) const {
  Vector y(x.size());
  apply_row(x, y);
  return x.dot(y) / scale_;
}

double LiftedCost::inner(const Matrix& V) const {
  Matrix W;
  apply_into(V, W);
  return (W.array() * V.array()).sum();
}

RunMetrics metrics(const Matrix& x_raw, const Permutation& proj,
                   const QapInstance& inst) {
  RunMetrics m;
  const int n = inst.n;
  Matrix G = x_raw.transpose() * x_raw - Matrix::Identity(n, n);
  m.infeas = G.norm() + x_raw.cwiseMin(0.0).norm();
  m.obj = objective(inst, proj);
  if (inst.best_known && *inst.best_known != 0)
    m.gap_pct = (m.obj - *inst.best_known) / *inst.best_known * 100.0;
  return m;
}

}  // namespace qapdc
