#pragma once

// Rescaled rank-r projection of the trimmed observations and the initial
// manifold point it yields.

#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "optspace/error.hpp"
#include "optspace/manifold.hpp"
#include "optspace/sparse.hpp"

namespace optspace {

/// T_r(trimmed) = X0 S0 Y0^T with X0^T X0 = m I, Y0^T Y0 = n I.
struct RankRProjection {
  Index rank = 0;
  double scale = 0.0;  // mn / |E|
  Matrix X0;
  Matrix S0;
  Matrix Y0;
  Vector sigmas;  // leading singular values of the trimmed matrix

  Matrix estimate() const { return X0 * S0 * Y0.transpose(); }
};

/// `e_size` is |E| before trimming; it fixes the mn/|E| rescaling.
inline RankRProjection rank_r_project(const ObservedMatrix& trimmed, Index r, Index e_size, double tol = 1e-10) {
  const Index m = trimmed.rows();
  const Index n = trimmed.cols();
  if (r < 1 || r > std::min(m, n)) {
    throw InvalidArgument("rank_r_project: rank " + std::to_string(r) + " outside [1, " +
                          std::to_string(std::min(m, n)) + "]");
  }
  if (e_size < 1) throw InvalidArgument("rank_r_project: |E| must be positive");
  if (trimmed.empty()) throw DegenerateInput("rank_r_project: trimmed observation set is empty");

  const SvdTriple svd = top_k_svd(trimmed, r, tol);
  const double mn = static_cast<double>(m) * static_cast<double>(n);
  RankRProjection out;
  out.rank = r;
  out.scale = mn / static_cast<double>(e_size);
  out.X0 = std::sqrt(static_cast<double>(m)) * svd.left_vectors;
  out.Y0 = std::sqrt(static_cast<double>(n)) * svd.right_vectors;
  out.S0 = (out.scale / std::sqrt(mn)) * Matrix(svd.sigmas.asDiagonal());
  out.sigmas = svd.sigmas;
  return out;
}

/// Picks the rank at the largest consecutive ratio sigmas[i-1] / sigmas[i],
/// 1 <= i <= max_rank. The first zero after a nonzero value is an infinite
/// ratio; ties go to the smallest i.
inline Index estimate_rank(std::span<const double> sigmas, Index max_rank) {
  const auto len = static_cast<Index>(sigmas.size());
  if (len < 2) throw InvalidArgument("estimate_rank: need at least two singular values");
  if (max_rank < 1 || max_rank >= len) {
    throw InvalidArgument("estimate_rank: max_rank must lie in [1, " + std::to_string(len - 1) + "]");
  }
  const double top = sigmas[0];
  const double eps = std::numeric_limits<double>::epsilon();
  bool flat = true;
  for (Index i = 1; i <= max_rank; ++i) {
    if (std::abs(sigmas[static_cast<std::size_t>(i)] - top) > eps * std::max(std::abs(top), 1e-300)) flat = false;
  }
  if (flat || top <= 0.0) throw NoSpectralGap("estimate_rank: flat spectrum, supply the rank explicitly");

  Index best = 0;
  double best_ratio = -1.0;
  for (Index i = 1; i <= max_rank; ++i) {
    const double prev = sigmas[static_cast<std::size_t>(i - 1)];
    const double cur = sigmas[static_cast<std::size_t>(i)];
    double ratio;
    if (cur <= 0.0) {
      if (prev <= 0.0) break;
      ratio = std::numeric_limits<double>::infinity();
    } else {
      ratio = prev / cur;
    }
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = i;
    }
    if (std::isinf(ratio)) break;
  }
  if (best == 0 || best_ratio <= 1.0 + eps) {
    throw NoSpectralGap("estimate_rank: no gap in the spectrum, supply the rank explicitly");
  }
  return best;
}

inline Index estimate_rank(const Vector& sigmas, Index max_rank) {
  return estimate_rank(std::span<const double>(sigmas.data(), static_cast<std::size_t>(sigmas.size())), max_rank);
}

/// (X0, Y0) of a projection; S0 is dropped since the optimizer re-solves S.
inline FactorPoint initial_point(const RankRProjection& proj) { return {proj.X0, proj.Y0}; }

}  // namespace optspace
