#pragma once

// Geometry of M(m, n) = G(m, r) x G(n, r). A point is a pair of bases in the
// normalization X^T X = m I, Y^T Y = n I, and only their column spans matter.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "optspace/error.hpp"
#include "optspace/sparse.hpp"

namespace optspace {

struct FactorPoint {
  Matrix X;  // m x r
  Matrix Y;  // n x r

  Index rows() const noexcept { return X.rows(); }
  Index cols() const noexcept { return Y.rows(); }
  Index rank() const noexcept { return X.cols(); }

  /// Orthonormalizes arbitrary full-rank bases and scales them to the
  /// X^T X = m I, Y^T Y = n I normalization.
  static FactorPoint from_bases(const Matrix& x, const Matrix& y) {
    if (x.cols() != y.cols()) throw InvalidArgument("FactorPoint: X and Y ranks differ");
    return {std::sqrt(static_cast<double>(x.rows())) * detail::orthonormal_basis(x),
            std::sqrt(static_cast<double>(y.rows())) * detail::orthonormal_basis(y)};
  }

  /// Largest entry of |X^T X / m - I| and |Y^T Y / n - I|.
  double normalization_error() const {
    const auto dev = [](const Matrix& b) {
      const Index r = b.cols();
      return (b.transpose() * b / static_cast<double>(b.rows()) - Matrix::Identity(r, r)).cwiseAbs().maxCoeff();
    };
    if (rank() == 0) return 0.0;
    return std::max(dev(X), dev(Y));
  }
};

/// Tangent vector (W, Q) at a base point: X^T W = 0, Y^T Q = 0.
struct TangentVector {
  Matrix W;  // m x r
  Matrix Q;  // n x r

  static TangentVector zero(const FactorPoint& p) {
    return {Matrix::Zero(p.rows(), p.rank()), Matrix::Zero(p.cols(), p.rank())};
  }

  /// ||W||_F^2 / m + ||Q||_F^2 / n, the arclength metric.
  double squared_norm() const {
    return W.squaredNorm() / static_cast<double>(W.rows()) + Q.squaredNorm() / static_cast<double>(Q.rows());
  }
  double norm() const { return std::sqrt(squared_norm()); }

  TangentVector operator*(double s) const { return {W * s, Q * s}; }
  TangentVector operator+(const TangentVector& o) const { return {W + o.W, Q + o.Q}; }
  TangentVector operator-(const TangentVector& o) const { return {W - o.W, Q - o.Q}; }
};

/// Plain Frobenius pairing <W1, W2> + <Q1, Q2>; it equals the directional
/// derivative of a cost when the first argument is its projected gradient.
inline double frobenius_inner(const TangentVector& a, const TangentVector& b) {
  return (a.W.array() * b.W.array()).sum() + (a.Q.array() * b.Q.array()).sum();
}

namespace detail {

inline void require_same_shape(const FactorPoint& a, const FactorPoint& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rank() != b.rank()) {
    throw InvalidArgument("manifold: points have different (m, n, r)");
  }
}

/// Principal angles (ascending) between span(x1) and span(x2), both scaled so
/// that x^T x = s I. Small angles come from sines, the rest from cosines
/// clamped to [0, 1].
inline Vector principal_angles(const Matrix& x1, const Matrix& x2) {
  const double scale = static_cast<double>(x1.rows());
  const Matrix q1 = x1 / std::sqrt(scale);
  const Matrix q2 = x2 / std::sqrt(scale);
  const Matrix overlap = q1.transpose() * q2;
  const Vector cosines = Eigen::JacobiSVD<Matrix>(overlap).singularValues();  // descending
  const Vector sines = Eigen::JacobiSVD<Matrix>(q2 - q1 * overlap).singularValues();  // descending
  const Index r = cosines.size();
  Vector theta(r);
  const double cut = std::numbers::sqrt2 / 2.0;
  for (Index i = 0; i < r; ++i) {
    const double c = std::clamp(cosines(i), 0.0, 1.0);
    const double s = std::clamp(sines(r - 1 - i), 0.0, 1.0);
    theta(i) = c > cut ? std::asin(s) : std::acos(c);
  }
  return theta;
}

inline Matrix project_horizontal(const Matrix& base, const Matrix& ambient) {
  return ambient - base * (base.transpose() * ambient) / static_cast<double>(base.rows());
}

/// Geodesic on one Grassmann factor: base R cos(t Theta) R^T + sqrt(m) L sin(t Theta) R^T
/// with W / sqrt(m) = L Theta R^T.
inline Matrix grassmann_move(const Matrix& base, const Matrix& w, double t) {
  const double root = std::sqrt(static_cast<double>(base.rows()));
  Eigen::JacobiSVD<Matrix> svd(w / root, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Matrix& l = svd.matrixU();
  const Matrix& r = svd.matrixV();
  const Vector theta = svd.singularValues() * t;
  const Vector c = theta.array().cos();
  const Vector s = theta.array().sin();
  Matrix out = base * r * c.asDiagonal() * r.transpose() + root * l * s.asDiagonal() * r.transpose();

  const Index k = out.cols();
  const double drift =
      k > 0 ? (out.transpose() * out / static_cast<double>(out.rows()) - Matrix::Identity(k, k)).cwiseAbs().maxCoeff()
            : 0.0;
  if (drift > 1e-10) out = root * orthonormal_basis(out);
  return out;
}

/// Grassmann logarithm from span(from) to span(to).
inline Matrix grassmann_log(const Matrix& from, const Matrix& to) {
  const double root = std::sqrt(static_cast<double>(from.rows()));
  const Matrix q1 = from / root;
  const Matrix q2 = to / root;
  const Matrix overlap = q1.transpose() * q2;
  Eigen::JacobiSVD<Matrix> osvd(overlap);
  const double smallest = osvd.singularValues().size() > 0 ? osvd.singularValues().minCoeff() : 1.0;
  if (smallest <= std::sin(1e-6)) {
    throw CutLocus("geodesic_to: a principal angle is within 1e-6 of pi/2");
  }
  const Matrix tangent = (q2 - q1 * overlap) * overlap.inverse();
  Eigen::JacobiSVD<Matrix> svd(tangent, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector theta = svd.singularValues().array().atan();
  return root * svd.matrixU() * theta.asDiagonal() * svd.matrixV().transpose();
}

}  // namespace detail

/// d(p1, p2) = sqrt(d(X1, X2)^2 + d(Y1, Y2)^2) where each factor distance is
/// the 2-norm of the principal angles between the column spans.
inline double distance(const FactorPoint& p1, const FactorPoint& p2) {
  detail::require_same_shape(p1, p2);
  return std::sqrt(detail::principal_angles(p1.X, p2.X).squaredNorm() +
                   detail::principal_angles(p1.Y, p2.Y).squaredNorm());
}

/// Removes the vertical component: W = A_X - X (X^T A_X) / m, and likewise for Q.
inline TangentVector project_tangent(const FactorPoint& p, const Matrix& ambient_x, const Matrix& ambient_y) {
  if (ambient_x.rows() != p.rows() || ambient_x.cols() != p.rank() || ambient_y.rows() != p.cols() ||
      ambient_y.cols() != p.rank()) {
    throw InvalidArgument("project_tangent: dimension mismatch");
  }
  return {detail::project_horizontal(p.X, ambient_x), detail::project_horizontal(p.Y, ambient_y)};
}

/// Exact geodesic step of parameter t along w. move(p, w, 0) spans p.
inline FactorPoint move(const FactorPoint& p, const TangentVector& w, double t) {
  if (w.W.rows() != p.rows() || w.Q.rows() != p.cols() || w.W.cols() != p.rank() || w.Q.cols() != p.rank()) {
    throw InvalidArgument("move: tangent vector does not match the point");
  }
  return {detail::grassmann_move(p.X, w.W, t), detail::grassmann_move(p.Y, w.Q, t)};
}

/// Initial velocity of the geodesic from `from` reaching `to` at t = 1, so
/// ||geodesic_to(a, b)|| = distance(a, b). Throws CutLocus when an angle is
/// at least pi/2 - 1e-6.
inline TangentVector geodesic_to(const FactorPoint& from, const FactorPoint& to) {
  detail::require_same_shape(from, to);
  return {detail::grassmann_log(from.X, to.X), detail::grassmann_log(from.Y, to.Y)};
}

}  // namespace optspace
