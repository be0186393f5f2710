#pragma once

// Observed-entry matrix, uniform sampling of the revealed set, trimming and
// the iterative spectral primitives built on sparse products.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "optspace/error.hpp"

namespace optspace {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A revealed couple (i, j), 0-based.
struct Coord {
  Index row = 0;
  Index col = 0;

  friend bool operator==(const Coord&, const Coord&) = default;
  friend auto operator<=>(const Coord&, const Coord&) = default;
};

struct Entry {
  Index row = 0;
  Index col = 0;
  double value = 0.0;

  friend bool operator==(const Entry&, const Entry&) = default;
};

/// Sparse record of the revealed entries of an m x n matrix.
///
/// Entries are kept sorted row-major. An entry whose value is 0 is still
/// observed; absence from the list is what "unobserved" means.
class ObservedMatrix {
 public:
  ObservedMatrix() = default;

  /// Throws InvalidArgument on an out-of-range index or a duplicate couple.
  ObservedMatrix(Index m, Index n, std::vector<Entry> entries) : m_(m), n_(n), entries_(std::move(entries)) {
    if (m < 0 || n < 0) throw InvalidArgument("ObservedMatrix: negative dimension");
    for (const auto& e : entries_) {
      if (e.row < 0 || e.row >= m_ || e.col < 0 || e.col >= n_) {
        throw InvalidArgument("ObservedMatrix: entry (" + std::to_string(e.row) + ", " + std::to_string(e.col) +
                              ") outside " + std::to_string(m_) + "x" + std::to_string(n_));
      }
    }
    std::sort(entries_.begin(), entries_.end(),
              [](const Entry& a, const Entry& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
    for (std::size_t k = 1; k < entries_.size(); ++k) {
      if (entries_[k].row == entries_[k - 1].row && entries_[k].col == entries_[k - 1].col) {
        throw InvalidArgument("ObservedMatrix: duplicate entry (" + std::to_string(entries_[k].row) + ", " +
                              std::to_string(entries_[k].col) + ")");
      }
    }
  }

  /// Reveals `dense` on the couples of `mask`.
  static ObservedMatrix observe(const Matrix& dense, const std::vector<Coord>& mask) {
    std::vector<Entry> entries;
    entries.reserve(mask.size());
    for (const auto& c : mask) {
      if (c.row < 0 || c.row >= dense.rows() || c.col < 0 || c.col >= dense.cols()) {
        throw InvalidArgument("observe: mask couple outside the matrix");
      }
      entries.push_back({c.row, c.col, dense(c.row, c.col)});
    }
    return ObservedMatrix(dense.rows(), dense.cols(), std::move(entries));
  }

  /// Every entry of `dense` observed.
  static ObservedMatrix full(const Matrix& dense) {
    std::vector<Entry> entries;
    entries.reserve(static_cast<std::size_t>(dense.size()));
    for (Index i = 0; i < dense.rows(); ++i)
      for (Index j = 0; j < dense.cols(); ++j) entries.push_back({i, j, dense(i, j)});
    return ObservedMatrix(dense.rows(), dense.cols(), std::move(entries));
  }

  Index rows() const noexcept { return m_; }
  Index cols() const noexcept { return n_; }
  Index size() const noexcept { return static_cast<Index>(entries_.size()); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<Entry>& entries() const noexcept { return entries_; }

  /// |E| / sqrt(mn).
  double epsilon() const {
    return static_cast<double>(size()) / std::sqrt(static_cast<double>(m_) * static_cast<double>(n_));
  }

  /// m / n.
  double aspect_ratio() const { return static_cast<double>(m_) / static_cast<double>(n_); }

  std::vector<Index> row_counts() const {
    std::vector<Index> counts(static_cast<std::size_t>(m_), 0);
    for (const auto& e : entries_) ++counts[static_cast<std::size_t>(e.row)];
    return counts;
  }

  std::vector<Index> col_counts() const {
    std::vector<Index> counts(static_cast<std::size_t>(n_), 0);
    for (const auto& e : entries_) ++counts[static_cast<std::size_t>(e.col)];
    return counts;
  }

  std::vector<Coord> coords() const {
    std::vector<Coord> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back({e.row, e.col});
    return out;
  }

  /// Same support, new values (one per entry, in entry order).
  ObservedMatrix with_values(const std::vector<double>& values) const {
    if (values.size() != entries_.size()) throw InvalidArgument("with_values: size mismatch");
    ObservedMatrix out = *this;
    for (std::size_t k = 0; k < values.size(); ++k) out.entries_[k].value = values[k];
    return out;
  }

  /// The zero-filled dense matrix N^E.
  Matrix to_dense() const {
    Matrix out = Matrix::Zero(m_, n_);
    for (const auto& e : entries_) out(e.row, e.col) = e.value;
    return out;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (const auto& e : entries_) s += e.value * e.value;
    return std::sqrt(s);
  }

  /// A * B for an n x k block B.
  Matrix multiply(const Matrix& block) const {
    if (block.rows() != n_) throw InvalidArgument("multiply: dimension mismatch");
    Matrix out = Matrix::Zero(m_, block.cols());
    for (const auto& e : entries_) out.row(e.row).noalias() += e.value * block.row(e.col);
    return out;
  }

  /// A^T * B for an m x k block B.
  Matrix multiply_transpose(const Matrix& block) const {
    if (block.rows() != m_) throw InvalidArgument("multiply_transpose: dimension mismatch");
    Matrix out = Matrix::Zero(n_, block.cols());
    for (const auto& e : entries_) out.row(e.col).noalias() += e.value * block.row(e.row);
    return out;
  }

  friend bool operator==(const ObservedMatrix&, const ObservedMatrix&) = default;

 private:
  Index m_ = 0;
  Index n_ = 0;
  std::vector<Entry> entries_;
};

/// Draws `target_size` distinct couples of [m] x [n], uniformly over all
/// subsets of that size. Output is sorted row-major.
inline std::vector<Coord> sample_mask(Index m, Index n, Index target_size, std::uint64_t seed) {
  if (m < 0 || n < 0) throw InvalidArgument("sample_mask: negative dimension");
  const Index total = m * n;
  if (target_size < 0 || target_size > total) {
    throw InvalidArgument("sample_mask: target size " + std::to_string(target_size) + " exceeds m*n = " +
                          std::to_string(total));
  }
  std::vector<Index> population(static_cast<std::size_t>(total));
  std::iota(population.begin(), population.end(), Index{0});
  std::vector<Index> picked;
  picked.reserve(static_cast<std::size_t>(target_size));
  std::mt19937_64 rng(seed);
  std::sample(population.begin(), population.end(), std::back_inserter(picked), target_size, rng);
  std::vector<Coord> out;
  out.reserve(picked.size());
  for (Index linear : picked) out.push_back({linear / n, linear % n});
  return out;
}

struct TrimInfo {
  std::vector<bool> kept_rows;
  std::vector<bool> kept_cols;
  double row_threshold = 0.0;
  double col_threshold = 0.0;
};

struct Trimmed {
  ObservedMatrix matrix;
  TrimInfo info;
};

/// Zeroes rows holding more than 2|E|/m entries and columns holding more than
/// 2|E|/n entries. Single pass: degrees and |E| are measured on the input.
inline Trimmed trim(const ObservedMatrix& obs) {
  TrimInfo info;
  const double e = static_cast<double>(obs.size());
  info.row_threshold = obs.rows() > 0 ? 2.0 * e / static_cast<double>(obs.rows()) : 0.0;
  info.col_threshold = obs.cols() > 0 ? 2.0 * e / static_cast<double>(obs.cols()) : 0.0;

  const auto rc = obs.row_counts();
  const auto cc = obs.col_counts();
  info.kept_rows.resize(rc.size());
  info.kept_cols.resize(cc.size());
  for (std::size_t i = 0; i < rc.size(); ++i) info.kept_rows[i] = static_cast<double>(rc[i]) <= info.row_threshold;
  for (std::size_t j = 0; j < cc.size(); ++j) info.kept_cols[j] = static_cast<double>(cc[j]) <= info.col_threshold;

  std::vector<Entry> kept;
  kept.reserve(obs.entries().size());
  for (const auto& en : obs.entries()) {
    if (info.kept_rows[static_cast<std::size_t>(en.row)] && info.kept_cols[static_cast<std::size_t>(en.col)]) {
      kept.push_back(en);
    }
  }
  return {ObservedMatrix(obs.rows(), obs.cols(), std::move(kept)), std::move(info)};
}

/// Leading singular triplets: left_vectors is m x k, right_vectors n x k,
/// both column-orthonormal; sigmas descending.
struct SvdTriple {
  Vector sigmas;
  Matrix left_vectors;
  Matrix right_vectors;
  bool converged = true;

  Index k() const noexcept { return sigmas.size(); }

  Matrix reconstruct() const { return left_vectors * sigmas.asDiagonal() * right_vectors.transpose(); }
};

/// Subspace iteration failed to reach its tolerance; `partial()` holds the
/// last iterate with `converged == false`.
class SvdNotConverged : public ConvergenceFailure {
 public:
  SvdNotConverged(const std::string& what, SvdTriple partial, long iterations)
      : ConvergenceFailure(what, partial.sigmas.size() > 0 ? partial.sigmas(0) : 0.0, iterations),
        partial_(std::move(partial)) {}

  const SvdTriple& partial() const noexcept { return partial_; }

 private:
  SvdTriple partial_;
};

struct SubspaceIterationOptions {
  /// Residual tolerance: stop when ||A v_i - s_i u_i|| <= tol * s_1 for i < k.
  double tol = 1e-10;
  /// Extra block columns beyond k; they speed convergence of the leading k.
  Index oversampling = 10;
  /// 0 means the default cap of 10 * min(m, n) sweeps.
  long max_sweeps = 0;
  std::uint64_t seed = 0x5eedULL;
};

namespace detail {

inline Matrix orthonormal_basis(const Matrix& a) {
  Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
}

inline Matrix gaussian_block(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = normal(rng);
  return out;
}

}  // namespace detail

/// Leading k singular triplets of a sparse matrix by block subspace iteration
/// with a Rayleigh-Ritz step each sweep.
inline SvdTriple top_k_svd(const ObservedMatrix& a, Index k, const SubspaceIterationOptions& opts) {
  const Index m = a.rows();
  const Index n = a.cols();
  const Index min_dim = std::min(m, n);
  if (k < 1 || k > min_dim) {
    throw InvalidArgument("top_k_svd: k = " + std::to_string(k) + " outside [1, " + std::to_string(min_dim) + "]");
  }
  if (!(opts.tol > 0.0)) throw InvalidArgument("top_k_svd: tol must be positive");
  const Index block = std::min(min_dim, k + std::max<Index>(opts.oversampling, 0));
  const long cap = opts.max_sweeps > 0 ? opts.max_sweeps : 10L * static_cast<long>(min_dim);

  Matrix v = detail::orthonormal_basis(detail::gaussian_block(n, block, opts.seed));
  Matrix av = a.multiply(v);

  SvdTriple out;
  for (long sweep = 1; sweep <= cap; ++sweep) {
    const Matrix q = detail::orthonormal_basis(av);
    const Matrix w = a.multiply_transpose(q);  // w^T = q^T A
    Eigen::JacobiSVD<Matrix> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
    v = svd.matrixU();
    av = a.multiply(v);

    out.sigmas = svd.singularValues().head(k);
    out.left_vectors = q * svd.matrixV().leftCols(k);
    out.right_vectors = v.leftCols(k);

    const double top = svd.singularValues()(0);
    double worst = 0.0;
    for (Index i = 0; i < k; ++i) {
      worst = std::max(worst, (av.col(i) - out.sigmas(i) * out.left_vectors.col(i)).norm());
    }
    if (top == 0.0 || worst <= opts.tol * top) {
      out.converged = true;
      return out;
    }
  }
  out.converged = false;
  throw SvdNotConverged("top_k_svd: no convergence after " + std::to_string(cap) + " sweeps", out, cap);
}

inline SvdTriple top_k_svd(const ObservedMatrix& a, Index k, double tol = 1e-10) {
  SubspaceIterationOptions opts;
  opts.tol = tol;
  return top_k_svd(a, k, opts);
}

/// Operator norm ||A||_2 by power iteration on A^T A from a seeded start.
/// Values are accurate to roughly `tol` relative; returns 0 for no entries.
inline double spectral_norm(const ObservedMatrix& a, double tol = 1e-10) {
  if (!(tol > 0.0)) throw InvalidArgument("spectral_norm: tol must be positive");
  if (a.empty() || a.rows() == 0 || a.cols() == 0) return 0.0;
  // Ritz values err by about the square of the residual.
  SubspaceIterationOptions opts;
  opts.tol = std::sqrt(tol);
  opts.oversampling = 8;
  try {
    return top_k_svd(a, 1, opts).sigmas(0);
  } catch (const SvdNotConverged& e) {
    throw ConvergenceFailure("spectral_norm: power iteration did not converge", e.best_estimate(), e.iterations());
  }
}

/// Pattern matrix: ones on the support of `obs`.
inline ObservedMatrix support_pattern(const ObservedMatrix& obs) {
  return obs.with_values(std::vector<double>(obs.entries().size(), 1.0));
}

}  // namespace optspace
