#pragma once

// Cost, inner S solve, Riemannian gradient and the descent driver, plus the
// end-to-end trim -> project -> descend pipeline.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "optspace/error.hpp"
#include "optspace/manifold.hpp"
#include "optspace/sparse.hpp"
#include "optspace/spectral_init.hpp"

namespace optspace {

struct ArmijoParams {
  double backtrack = 0.5;
  double sufficient_decrease = 1e-4;
  double initial_step = 1.0;
  int max_backtracks = 40;
};

struct OptConfig {
  /// Regularization weight. Ignored when rho_n_epsilon is set.
  double rho = 0.0;
  /// Use rho = n * epsilon with n = min(m, n).
  bool rho_n_epsilon = false;
  /// Row-norm cap scale of the regularizer; unset means "measure it on the
  /// starting point".
  std::optional<double> mu0;
  /// Stop when the gradient norm falls to this value. 0 selects
  /// 1e-8 * sqrt(mn) * (RMS of the observed values).
  double grad_tol = 0.0;
  double f_rel_tol = 1e-10;
  long max_iters = 500;
  ArmijoParams armijo;
  std::uint64_t seed = 0x5eedULL;
  /// Residual tolerance of the spectral step.
  double svd_tol = 1e-10;
  /// Singular values inspected when the rank has to be estimated.
  Index rank_candidates = 20;

  void validate() const {
    if (rho < 0.0) throw InvalidArgument("OptConfig: rho must be >= 0");
    if (mu0 && !(*mu0 > 0.0)) throw InvalidArgument("OptConfig: mu0 must be > 0");
    if (grad_tol < 0.0) throw InvalidArgument("OptConfig: grad_tol must be >= 0");
    if (!(f_rel_tol > 0.0)) throw InvalidArgument("OptConfig: f_rel_tol must be > 0");
    if (max_iters < 0) throw InvalidArgument("OptConfig: max_iters must be >= 0");
    if (!(armijo.backtrack > 0.0 && armijo.backtrack < 1.0)) {
      throw InvalidArgument("OptConfig: backtrack factor must lie in (0, 1)");
    }
    if (!(armijo.sufficient_decrease > 0.0 && armijo.sufficient_decrease < 1.0)) {
      throw InvalidArgument("OptConfig: sufficient decrease must lie in (0, 1)");
    }
    if (!(armijo.initial_step > 0.0)) throw InvalidArgument("OptConfig: initial step must be > 0");
    if (armijo.max_backtracks < 0) throw InvalidArgument("OptConfig: max_backtracks must be >= 0");
    if (!(svd_tol > 0.0)) throw InvalidArgument("OptConfig: svd_tol must be > 0");
    if (rank_candidates < 2) throw InvalidArgument("OptConfig: rank_candidates must be >= 2");
  }
};

enum class Termination { gradient_norm, cost_stall, max_iterations, stalled };

inline std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::gradient_norm: return "gradient-norm";
    case Termination::cost_stall: return "cost-stall";
    case Termination::max_iterations: return "max-iterations";
    case Termination::stalled: return "stalled";
  }
  return "unknown";
}

struct IterationRecord {
  long iteration = 0;
  double cost = 0.0;
  double cost_reg = 0.0;
  double gradient_norm = 0.0;
  double step = 0.0;
  double distance_moved = 0.0;
};

/// Record 0 is the starting point; each later record is an accepted step.
struct OptTrace {
  std::vector<IterationRecord> records;
  Termination reason = Termination::max_iterations;

  long accepted_steps() const { return records.empty() ? 0 : static_cast<long>(records.size()) - 1; }

  bool is_monotone() const {
    for (std::size_t k = 1; k < records.size(); ++k) {
      if (records[k].cost_reg > records[k - 1].cost_reg) return false;
    }
    return true;
  }
};

struct CompletionResult {
  FactorPoint point;
  Matrix S;
  Index rank = 0;
  OptTrace trace;
  std::optional<TrimInfo> trim_info;
  std::optional<RankRProjection> initial;
  /// RMS residual of the starting estimate over the observed entries.
  double initial_rmse_vs_observed = 0.0;
  double final_cost = 0.0;

  Matrix estimate() const { return point.X * S * point.Y.transpose(); }
};

namespace detail {

/// exp((z-1)^2) - 1 for z > 1, else 0.
inline double g1(double z) {
  if (z <= 1.0) return 0.0;
  const double arg = (z - 1.0) * (z - 1.0);
  if (arg > 700.0) {
    throw RegularizerOverflow("regularizer overflow: a factor row norm is far above the incoherence cap; rescale rows");
  }
  return std::expm1(arg);
}

inline double g1_derivative(double z) {
  if (z <= 1.0) return 0.0;
  const double arg = (z - 1.0) * (z - 1.0);
  if (arg > 700.0) {
    throw RegularizerOverflow("regularizer overflow: a factor row norm is far above the incoherence cap; rescale rows");
  }
  return 2.0 * (z - 1.0) * std::exp(arg);
}

/// Largest squared row norm over both factors, divided by r.
inline double measured_mu0(const FactorPoint& p) {
  if (p.rank() == 0) return 1.0;
  const double mx = std::max(p.X.rowwise().squaredNorm().maxCoeff(), p.Y.rowwise().squaredNorm().maxCoeff());
  return mx / static_cast<double>(p.rank());
}

struct Regularizer {
  double rho = 0.0;
  double mu0 = 1.0;
};

inline Regularizer resolve_regularizer(const FactorPoint& p, const ObservedMatrix& obs, const OptConfig& cfg) {
  Regularizer reg;
  reg.rho = cfg.rho_n_epsilon ? static_cast<double>(std::min(obs.rows(), obs.cols())) * obs.epsilon() : cfg.rho;
  reg.mu0 = cfg.mu0 ? *cfg.mu0 : measured_mu0(p);
  return reg;
}

struct Evaluation {
  double cost = 0.0;
  double cost_reg = 0.0;
  Matrix S;
  std::optional<TangentVector> gradient;
};

inline void check_shapes(const FactorPoint& p, const ObservedMatrix& obs) {
  if (p.rows() != obs.rows() || p.cols() != obs.cols()) {
    throw InvalidArgument("factor point dimensions do not match the observations");
  }
}

}  // namespace detail

/// argmin_S (1/2) sum_E (N_ij - (X S Y^T)_ij)^2 from the r^2 x r^2 normal
/// equations. Rank-deficient systems get the minimum-norm solution.
inline Matrix solve_S(const FactorPoint& p, const ObservedMatrix& obs) {
  detail::check_shapes(p, obs);
  const Index r = p.rank();
  const Index rr = r * r;
  Matrix gram = Matrix::Zero(rr, rr);
  Vector rhs = Vector::Zero(rr);
  Vector design(rr);
  for (const auto& e : obs.entries()) {
    // vec(S) is column-major: coefficient of S(a, b) is X(i, a) * Y(j, b).
    for (Index b = 0; b < r; ++b) {
      const double yb = p.Y(e.col, b);
      for (Index a = 0; a < r; ++a) design(a + b * r) = p.X(e.row, a) * yb;
    }
    gram.selfadjointView<Eigen::Lower>().rankUpdate(design);
    rhs.noalias() += e.value * design;
  }
  gram = gram.selfadjointView<Eigen::Lower>();

  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  const Vector& lambda = eig.eigenvalues();
  const double top = lambda.size() > 0 ? lambda.maxCoeff() : 0.0;
  const double cutoff = 1e-12 * top;
  Vector s = Vector::Zero(rr);
  if (top > 0.0) {
    for (Index k = 0; k < rr; ++k) {
      if (lambda(k) > cutoff) {
        const auto v = eig.eigenvectors().col(k);
        s += (v.dot(rhs) / lambda(k)) * v;
      }
    }
  }
  return Eigen::Map<Matrix>(s.data(), r, r);
}

namespace detail {

inline Evaluation evaluate(const FactorPoint& p, const ObservedMatrix& obs, const Regularizer& reg,
                           bool with_gradient) {
  Evaluation out;
  out.S = solve_S(p, obs);
  const Index r = p.rank();
  const Matrix xs = p.X * out.S;              // m x r
  const Matrix ys = p.Y * out.S.transpose();  // n x r

  Matrix ax, ay;
  if (with_gradient) {
    ax = Matrix::Zero(p.rows(), r);
    ay = Matrix::Zero(p.cols(), r);
  }
  double sum = 0.0;
  for (const auto& e : obs.entries()) {
    const double res = xs.row(e.row).dot(p.Y.row(e.col)) - e.value;
    sum += res * res;
    if (with_gradient) {
      ax.row(e.row).noalias() += res * ys.row(e.col);
      ay.row(e.col).noalias() += res * xs.row(e.row);
    }
  }
  out.cost = 0.5 * sum;
  out.cost_reg = out.cost;

  if (reg.rho > 0.0) {
    const double cap = 3.0 * reg.mu0 * static_cast<double>(r);
    double penalty = 0.0;
    const auto rows = [&](const Matrix& f, Matrix* grad) {
      for (Index i = 0; i < f.rows(); ++i) {
        const double z = f.row(i).squaredNorm() / cap;
        penalty += g1(z);
        if (grad != nullptr) {
          const double d = g1_derivative(z);
          if (d != 0.0) grad->row(i) += reg.rho * d * (2.0 / cap) * f.row(i);
        }
      }
    };
    rows(p.X, with_gradient ? &ax : nullptr);
    rows(p.Y, with_gradient ? &ay : nullptr);
    out.cost_reg += reg.rho * penalty;
  }

  if (with_gradient) out.gradient = project_tangent(p, ax, ay);
  return out;
}

}  // namespace detail

struct CostValue {
  double cost = 0.0;      // F
  double cost_reg = 0.0;  // F + rho G
  Matrix S;
};

/// F(X, Y) and the regularized cost with S at its inner minimizer.
inline CostValue cost(const FactorPoint& p, const ObservedMatrix& obs, const OptConfig& cfg) {
  detail::check_shapes(p, obs);
  auto ev = detail::evaluate(p, obs, detail::resolve_regularizer(p, obs, cfg), false);
  return {ev.cost, ev.cost_reg, std::move(ev.S)};
}

/// Riemannian gradient of the regularized cost, as the tangent projection of
/// the ambient partials with S held at its inner minimizer.
inline TangentVector gradient(const FactorPoint& p, const ObservedMatrix& obs, const OptConfig& cfg) {
  detail::check_shapes(p, obs);
  return *detail::evaluate(p, obs, detail::resolve_regularizer(p, obs, cfg), true).gradient;
}

inline double default_grad_tol(const ObservedMatrix& obs) {
  const double rms = obs.empty() ? 0.0 : obs.frobenius_norm() / std::sqrt(static_cast<double>(obs.size()));
  const double scale = rms > 0.0 ? rms : 1.0;
  return 1e-8 * std::sqrt(static_cast<double>(obs.rows()) * static_cast<double>(obs.cols())) * scale;
}

/// Gradient descent on the regularized cost along geodesics, with the
/// normalized negative gradient as direction and Armijo backtracking.
inline CompletionResult minimize(const FactorPoint& p0, const ObservedMatrix& obs, const OptConfig& cfg) {
  cfg.validate();
  detail::check_shapes(p0, obs);
  if (p0.rank() < 1) throw InvalidArgument("minimize: rank must be >= 1");

  const detail::Regularizer reg = detail::resolve_regularizer(p0, obs, cfg);
  const double grad_tol = cfg.grad_tol > 0.0 ? cfg.grad_tol : default_grad_tol(obs);
  const auto& ls = cfg.armijo;

  CompletionResult result;
  result.rank = p0.rank();
  FactorPoint p = p0;
  detail::Evaluation ev = detail::evaluate(p, obs, reg, true);
  double gnorm = ev.gradient->norm();
  result.trace.records.push_back({0, ev.cost, ev.cost_reg, gnorm, 0.0, 0.0});
  result.trace.reason = Termination::max_iterations;

  for (long k = 1;; ++k) {
    if (!std::isfinite(gnorm)) throw Error("minimize: non-finite gradient");
    if (gnorm <= grad_tol) {
      result.trace.reason = Termination::gradient_norm;
      break;
    }
    if (k > cfg.max_iters) {
      result.trace.reason = Termination::max_iterations;
      break;
    }
    const TangentVector direction = *ev.gradient * (-1.0 / gnorm);
    const double slope = frobenius_inner(*ev.gradient, direction);

    double step = ls.initial_step;
    std::optional<FactorPoint> accepted_point;
    detail::Evaluation accepted_eval;
    for (int b = 0; b <= ls.max_backtracks; ++b) {
      FactorPoint candidate = move(p, direction, step);
      detail::Evaluation cand = detail::evaluate(candidate, obs, reg, false);
      if (cand.cost_reg <= ev.cost_reg + ls.sufficient_decrease * step * slope) {
        accepted_point = std::move(candidate);
        accepted_eval = std::move(cand);
        break;
      }
      step *= ls.backtrack;
    }
    if (!accepted_point) {
      result.trace.reason = Termination::stalled;
      break;
    }

    const double previous = ev.cost_reg;
    p = std::move(*accepted_point);
    ev = detail::evaluate(p, obs, reg, true);
    gnorm = ev.gradient->norm();
    result.trace.records.push_back({k, ev.cost, ev.cost_reg, gnorm, step, step});

    const double decrease = previous - ev.cost_reg;
    if (previous > 0.0 && decrease <= cfg.f_rel_tol * previous) {
      result.trace.reason = Termination::cost_stall;
      break;
    }
  }

  result.point = std::move(p);
  result.S = std::move(ev.S);
  result.final_cost = ev.cost_reg;
  return result;
}

/// RMS of (N_ij - estimate_ij) over the observed entries.
inline double observed_rmse(const ObservedMatrix& obs, const Matrix& x, const Matrix& s, const Matrix& y) {
  if (obs.empty()) return 0.0;
  const Matrix xs = x * s;
  double sum = 0.0;
  for (const auto& e : obs.entries()) {
    const double d = xs.row(e.row).dot(y.row(e.col)) - e.value;
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(obs.size()));
}

struct RankEstimate {
  Index rank = 0;
  Vector sigmas;  // leading singular values of the trimmed matrix, descending
};

/// Rank from the largest consecutive ratio among the leading
/// cfg.rank_candidates singular values of the trimmed observations, capped at
/// min(m, n) / 2. Only values are needed, so the residual tolerance is loose.
inline RankEstimate estimate_rank(const ObservedMatrix& trimmed, const OptConfig& cfg) {
  const Index min_dim = std::min(trimmed.rows(), trimmed.cols());
  const Index k = std::min(cfg.rank_candidates, min_dim);
  if (k < 2) throw InvalidArgument("estimate_rank: matrix too small to estimate the rank");
  if (trimmed.empty()) throw DegenerateInput("estimate_rank: no observed entries");
  SubspaceIterationOptions opts;
  opts.tol = 1e-6;
  opts.seed = cfg.seed;
  RankEstimate out;
  try {
    out.sigmas = top_k_svd(trimmed, k, opts).sigmas;
  } catch (const SvdNotConverged& e) {
    out.sigmas = e.partial().sigmas;
  }
  const Index max_rank = std::max<Index>(1, std::min(min_dim / 2, k - 1));
  out.rank = estimate_rank(out.sigmas, max_rank);
  return out;
}

/// Trim, rank-r projection, then descent from the projection's subspaces.
/// With no rank given, it is estimated from the leading singular values of
/// the trimmed matrix.
inline CompletionResult complete(const ObservedMatrix& obs, std::optional<Index> rank, const OptConfig& cfg) {
  cfg.validate();
  if (obs.empty()) throw DegenerateInput("complete: no observed entries");
  Trimmed trimmed = trim(obs);
  if (trimmed.matrix.empty()) throw DegenerateInput("complete: trimming removed every observed entry");
  const Index r = rank ? *rank : estimate_rank(trimmed.matrix, cfg).rank;

  RankRProjection proj = rank_r_project(trimmed.matrix, r, obs.size(), cfg.svd_tol);
  CompletionResult result = minimize(initial_point(proj), obs, cfg);
  result.initial_rmse_vs_observed = observed_rmse(obs, proj.X0, proj.S0, proj.Y0);
  result.trim_info = std::move(trimmed.info);
  result.initial = std::move(proj);
  return result;
}

}  // namespace optspace
