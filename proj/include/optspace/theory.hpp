#pragma once

// Measured problem quantities (incoherence, condition number, noise norms)
// and calculators for the reconstruction and noise bounds. Unknown numerical
// constants are arguments defaulting to 1; callers fit them from data.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "optspace/error.hpp"
#include "optspace/manifold.hpp"
#include "optspace/sparse.hpp"

namespace optspace::theory {

/// M = U diag(Sigma) V^T with U^T U = m I, V^T V = n I.
struct LowRankFactors {
  Matrix U;
  Vector Sigma;
  Matrix V;

  Matrix product() const { return U * Sigma.asDiagonal() * V.transpose(); }
};

/// Compact rank-r SVD of a dense matrix in the m I / n I normalization, so
/// Sigma_q = sigma_q(M) / sqrt(mn).
inline LowRankFactors normalized_svd(const Matrix& dense, Index r) {
  const Index m = dense.rows();
  const Index n = dense.cols();
  if (r < 1 || r > std::min(m, n)) throw InvalidArgument("normalized_svd: rank out of range");
  Eigen::BDCSVD<Matrix> svd(dense, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double sm = std::sqrt(static_cast<double>(m));
  const double sn = std::sqrt(static_cast<double>(n));
  return {sm * svd.matrixU().leftCols(r), svd.singularValues().head(r) / (sm * sn), sn * svd.matrixV().leftCols(r)};
}

struct Incoherence {
  double mu0 = 0.0;
  double mu1 = 0.0;
};

/// Smallest (mu0, mu1) satisfying
///   sum_k U_ik^2 <= mu0 r,  sum_k V_jk^2 <= mu0 r,
///   |sum_k U_ik (Sigma_k / Sigma_1) V_jk| <= mu1 sqrt(r).
/// Factors off the m I / n I normalization are re-decomposed first.
inline Incoherence incoherence(const Matrix& u, const Vector& sigma, const Matrix& v) {
  const Index r = u.cols();
  if (r < 1 || v.cols() != r || sigma.size() != r) throw InvalidArgument("incoherence: inconsistent ranks");
  const double m = static_cast<double>(u.rows());
  const double n = static_cast<double>(v.rows());
  const Matrix id = Matrix::Identity(r, r);
  const double dev = std::max((u.transpose() * u / m - id).cwiseAbs().maxCoeff(),
                              (v.transpose() * v / n - id).cwiseAbs().maxCoeff());
  Matrix uu = u, vv = v;
  Vector ss = sigma;
  if (dev > 1e-6) {
    const LowRankFactors f = normalized_svd(u * sigma.asDiagonal() * v.transpose(), r);
    uu = f.U;
    vv = f.V;
    ss = f.Sigma;
  }
  const double rd = static_cast<double>(r);
  Incoherence out;
  out.mu0 = std::max(uu.rowwise().squaredNorm().maxCoeff(), vv.rowwise().squaredNorm().maxCoeff()) / rd;
  const double top = ss.cwiseAbs().maxCoeff();
  if (top > 0.0) {
    const Matrix weighted = uu * (ss / top).asDiagonal() * vv.transpose();
    out.mu1 = weighted.cwiseAbs().maxCoeff() / std::sqrt(rd);
  }
  return out;
}

/// Quantities entering the bounds. Arranged so that m >= n (alpha >= 1).
struct BoundInputs {
  Index m = 0;
  Index n = 0;
  double alpha = 1.0;
  Index e_size = 0;
  double epsilon = 0.0;
  Index r = 0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double kappa = 1.0;
  double m_max = 0.0;
  double mu0 = 0.0;
  double mu1 = 0.0;
  double noise_operator_norm = 0.0;
  double noise_frobenius_norm = 0.0;

  /// Sets m, n (swapped if needed), alpha, |E| and epsilon consistently.
  static BoundInputs with_shape(Index rows, Index cols, Index e_size, Index r) {
    BoundInputs b;
    b.m = std::max(rows, cols);
    b.n = std::min(rows, cols);
    b.alpha = static_cast<double>(b.m) / static_cast<double>(b.n);
    b.e_size = e_size;
    b.epsilon = static_cast<double>(e_size) / std::sqrt(static_cast<double>(b.m) * static_cast<double>(b.n));
    b.r = r;
    return b;
  }
};

/// C M_max (n r alpha^{3/2} / |E|)^{1/2} + C' (n sqrt(r alpha) / |E|) ||Z~^E||_2.
inline double theorem1_rhs(const BoundInputs& b, double c1 = 1.0, double c2 = 1.0) {
  const double n = static_cast<double>(b.n);
  const double r = static_cast<double>(b.r);
  const double e = static_cast<double>(b.e_size);
  return c1 * b.m_max * std::sqrt(n * r * std::pow(b.alpha, 1.5) / e) +
         c2 * (n * std::sqrt(r * b.alpha) / e) * b.noise_operator_norm;
}

struct Theorem2Bound {
  double value = 0.0;
  /// The bound only applies while it stays below Sigma_min.
  bool valid_regime = false;
};

/// C kappa^2 (n sqrt(alpha r) / |E|) ||Z^E||_2.
inline Theorem2Bound theorem2_rhs(const BoundInputs& b, double c = 1.0) {
  const double n = static_cast<double>(b.n);
  const double r = static_cast<double>(b.r);
  const double e = static_cast<double>(b.e_size);
  Theorem2Bound out;
  out.value = c * b.kappa * b.kappa * (n * std::sqrt(b.alpha * r) / e) * b.noise_operator_norm;
  out.valid_regime = out.value < b.sigma_min;
  return out;
}

struct SampleCondition {
  double required_e = 0.0;
  bool satisfied = false;
  /// mu0 r sqrt(alpha) log n, mu0^2 r^2 alpha kappa^4, mu1^2 r^2 alpha kappa^4.
  std::array<double, 3> terms{};
};

/// |E| >= C n sqrt(alpha) kappa^2 max{...}.
inline SampleCondition theorem2_sample_condition(const BoundInputs& b, double c = 1.0) {
  const double n = static_cast<double>(b.n);
  const double r = static_cast<double>(b.r);
  const double k4 = std::pow(b.kappa, 4);
  SampleCondition out;
  out.terms = {b.mu0 * r * std::sqrt(b.alpha) * std::log(n), b.mu0 * b.mu0 * r * r * b.alpha * k4,
               b.mu1 * b.mu1 * r * r * b.alpha * k4};
  const double worst = *std::max_element(out.terms.begin(), out.terms.end());
  out.required_e = c * n * std::sqrt(b.alpha) * b.kappa * b.kappa * worst;
  out.satisfied = static_cast<double>(b.e_size) >= out.required_e;
  return out;
}

/// C sigma (sqrt(alpha) |E| log|E| / n)^{1/2}, for independent sub-gaussian noise.
inline double noise_bound_independent(double sigma, const BoundInputs& b, double c = 1.0) {
  const double e = static_cast<double>(b.e_size);
  return c * sigma * std::sqrt(std::sqrt(b.alpha) * e * std::log(e) / static_cast<double>(b.n));
}

/// 2 |E| Z_max / (n sqrt(alpha)); holds for every realization of E.
inline double noise_bound_worstcase(double z_max, const BoundInputs& b) {
  return 2.0 * static_cast<double>(b.e_size) * z_max / (static_cast<double>(b.n) * std::sqrt(b.alpha));
}

/// |sigma_q / epsilon - Sigma_q| for q = 1..r+1 with Sigma_{r+1} = 0, where
/// sigma_q are the singular values of the trimmed observations.
inline std::vector<double> lemma1_deviation(const ObservedMatrix& trimmed, std::span<const double> true_sigmas,
                                            double epsilon, double tol = 1e-10) {
  const auto r = static_cast<Index>(true_sigmas.size());
  if (r < 1) throw InvalidArgument("lemma1_deviation: need at least one true singular value");
  if (!(epsilon > 0.0)) throw InvalidArgument("lemma1_deviation: epsilon must be positive");
  const Index k = std::min(r + 1, std::min(trimmed.rows(), trimmed.cols()));
  const Vector measured = top_k_svd(trimmed, k, tol).sigmas;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(k));
  for (Index q = 0; q < k; ++q) {
    const double truth = q < r ? true_sigmas[static_cast<std::size_t>(q)] : 0.0;
    out.push_back(std::abs(measured(q) / epsilon - truth));
  }
  return out;
}

struct DistancePair {
  double d_minus = 0.0;
  double d_plus = 0.0;
};

/// d_-/+ = sqrt(Sigma_min/max^2 d(x, u)^2 + ||S - Sigma||_F^2).
inline DistancePair d_plus_minus(const FactorPoint& x, const FactorPoint& u, const Matrix& s, const Vector& sigma) {
  if (s.rows() != sigma.size() || s.cols() != sigma.size()) throw InvalidArgument("d_plus_minus: S is not r x r");
  const double d = distance(x, u);
  const double gap = (s - Matrix(sigma.asDiagonal())).squaredNorm();
  const double lo = sigma.minCoeff();
  const double hi = sigma.maxCoeff();
  return {std::sqrt(lo * lo * d * d + gap), std::sqrt(hi * hi * d * d + gap)};
}

/// 7 sqrt(n / |E|) ||Z^E||_F + (2 / (n sqrt(alpha))) ||Z^E||_F.
inline double candes_plan_rhs(double z_frobenius_observed, const BoundInputs& b) {
  const double n = static_cast<double>(b.n);
  return 7.0 * std::sqrt(n / static_cast<double>(b.e_size)) * z_frobenius_observed +
         (2.0 / (n * std::sqrt(b.alpha))) * z_frobenius_observed;
}

/// Measures every BoundInputs field from the truth M and its noisy
/// observations N^E. The noise norm is taken on the trimmed support.
inline BoundInputs measure_bound_inputs(const Matrix& truth, const ObservedMatrix& observed, Index r,
                                        double tol = 1e-10) {
  if (truth.rows() != observed.rows() || truth.cols() != observed.cols()) {
    throw InvalidArgument("measure_bound_inputs: truth and observations differ in shape");
  }
  BoundInputs b = BoundInputs::with_shape(observed.rows(), observed.cols(), observed.size(), r);
  const LowRankFactors f = normalized_svd(truth, r);
  b.sigma_max = f.Sigma.maxCoeff();
  b.sigma_min = f.Sigma.minCoeff();
  b.kappa = b.sigma_min > 0.0 ? b.sigma_max / b.sigma_min : std::numeric_limits<double>::infinity();
  b.m_max = truth.cwiseAbs().maxCoeff();
  const Incoherence inc = incoherence(f.U, f.Sigma, f.V);
  b.mu0 = inc.mu0;
  b.mu1 = inc.mu1;

  std::vector<double> noise;
  noise.reserve(observed.entries().size());
  for (const auto& e : observed.entries()) noise.push_back(e.value - truth(e.row, e.col));
  const ObservedMatrix z = observed.with_values(noise);
  b.noise_frobenius_norm = z.frobenius_norm();
  b.noise_operator_norm = spectral_norm(trim(z).matrix, tol);
  return b;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares y = slope x + intercept.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("fit_line: need two or more paired points");
  const double k = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / k, my = sy / k;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw InvalidArgument("fit_line: x values are all equal");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

/// Least-squares fit of log y against log x.
inline LineFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InvalidArgument("fit_loglog: values must be positive");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return fit_line(lx, ly);
}

/// The constant c minimizing sum (measured - c * predicted)^2.
inline double fit_constant(std::span<const double> measured, std::span<const double> predicted) {
  if (measured.size() != predicted.size() || measured.empty()) throw InvalidArgument("fit_constant: size mismatch");
  double num = 0, den = 0;
  for (std::size_t i = 0; i < measured.size(); ++i) {
    num += measured[i] * predicted[i];
    den += predicted[i] * predicted[i];
  }
  if (den == 0.0) throw InvalidArgument("fit_constant: predictions are all zero");
  return num / den;
}

}  // namespace optspace::theory
