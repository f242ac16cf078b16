#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace shellinv {

using Eigen::Matrix2d;
using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::Vector3d;
using Eigen::VectorXd;

using SparseMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Error thrown when an element Jacobian degenerates (J_A below tolerance).
struct SingularElementError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Error thrown when a through-thickness layer metric loses positivity.
struct InvertedConfigurationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Error thrown on malformed input (knot vectors, configs, dof maps).
struct InvalidArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgumentError(msg);
}

/// Fourth-order surface tensor in contravariant components, 2x2x2x2.
struct Tensor4 {
  std::array<double, 16> v{};

  double& operator()(int a, int b, int c, int d) { return v[8 * a + 4 * b + 2 * c + d]; }
  double operator()(int a, int b, int c, int d) const { return v[8 * a + 4 * b + 2 * c + d]; }

  Tensor4& operator+=(const Tensor4& o) {
    for (int i = 0; i < 16; ++i) v[i] += o.v[i];
    return *this;
  }
  Tensor4 operator*(double s) const {
    Tensor4 r;
    for (int i = 0; i < 16; ++i) r.v[i] = v[i] * s;
    return r;
  }
  void axpy(double s, const Tensor4& o) {
    for (int i = 0; i < 16; ++i) v[i] += s * o.v[i];
  }
  double max_abs() const {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
};

}  // namespace shellinv
