#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace qapdc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Error categories map to CLI exit codes: usage=1, io=2, numerical=3, guard=4.
enum class ErrorKind { Usage = 1, Io = 2, Numerical = 3, Guard = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Bijection on {0,...,n-1}; image[i] is where i is mapped.
struct Permutation {
  std::vector<int> image;

  int size() const { return static_cast<int>(image.size()); }

  bool valid() const {
    const int n = size();
    std::vector<char> seen(n, 0);
    for (int v : image) {
      if (v < 0 || v >= n || seen[v]) return false;
      seen[v] = 1;
    }
    return true;
  }

  Permutation inverse() const {
    Permutation inv;
    inv.image.resize(image.size());
    for (int i = 0; i < size(); ++i) inv.image[image[i]] = i;
    return inv;
  }

  // Permutation matrix X with X(i, image[i]) = 1.
  Matrix matrix() const {
    const int n = size();
    Matrix X = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) X(i, image[i]) = 1.0;
    return X;
  }

  // vec(X), column-major.
  Vector vec() const {
    const int n = size();
    Vector x = Vector::Zero(n * n);
    for (int i = 0; i < n; ++i) x(image[i] * n + i) = 1.0;
    return x;
  }

  static Permutation identity(int n) {
    Permutation p;
    p.image.resize(n);
    for (int i = 0; i < n; ++i) p.image[i] = i;
    return p;
  }

  bool operator==(const Permutation& o) const { return image == o.image; }
};

}  // namespace qapdc
