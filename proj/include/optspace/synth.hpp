#pragma once

// Synthetic low-rank instances, the two noise models, and the RMSE metric.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <variant>

#include <Eigen/Dense>

#include "optspace/error.hpp"
#include "optspace/sparse.hpp"
#include "optspace/theory.hpp"

namespace optspace::harness {

struct NoNoise {};

struct GaussianNoise {
  double sigma = 1.0;
};

struct WorstCaseNoise {
  enum class Pattern { uniform_random_sign, adversarial_constant };
  double z_max = 1.0;
  Pattern pattern = Pattern::uniform_random_sign;
};

using NoiseModel = std::variant<NoNoise, GaussianNoise, WorstCaseNoise>;

/// CSV label of a noise model.
inline std::string noise_label(const NoiseModel& model) {
  if (std::holds_alternative<NoNoise>(model)) return "none";
  if (std::holds_alternative<GaussianNoise>(model)) return "gaussian";
  return std::get<WorstCaseNoise>(model).pattern == WorstCaseNoise::Pattern::uniform_random_sign ? "worst_sign"
                                                                                                  : "worst_constant";
}

/// Noise level: sigma for the Gaussian model, Z_max for the worst case model.
inline double noise_level(const NoiseModel& model) {
  if (const auto* g = std::get_if<GaussianNoise>(&model)) return g->sigma;
  if (const auto* w = std::get_if<WorstCaseNoise>(&model)) return w->z_max;
  return 0.0;
}

inline NoiseModel make_noise(const std::string& label, double level) {
  if (label == "none") return NoNoise{};
  if (label == "gaussian") return GaussianNoise{level};
  if (label == "worst_sign") return WorstCaseNoise{level, WorstCaseNoise::Pattern::uniform_random_sign};
  if (label == "worst_constant") return WorstCaseNoise{level, WorstCaseNoise::Pattern::adversarial_constant};
  throw InvalidArgument("unknown noise model '" + label + "'");
}

/// Entries of the factors U~ (m x r) and V~ (n x r) are i.i.d. zero-mean
/// Gaussians with standard deviation `factor_scale`; M = U~ V~^T.
struct SynthSpec {
  Index m = 0;
  Index n = 0;
  Index r = 0;
  double factor_scale = 1.0;
  NoiseModel noise = NoNoise{};
  Index e_size = 0;
  std::uint64_t seed = 0;

  /// Generation always runs with m >= n; a wider request is generated
  /// transposed.
  bool transposed() const noexcept { return m < n; }

  void validate() const {
    if (m < 1 || n < 1) throw InvalidArgument("SynthSpec: dimensions must be positive");
    if (r < 1 || r > std::min(m, n)) throw InvalidArgument("SynthSpec: rank out of range");
    if (e_size < 0 || e_size > m * n) throw InvalidArgument("SynthSpec: e_size must lie in [0, m*n]");
    if (!(factor_scale > 0.0)) throw InvalidArgument("SynthSpec: factor_scale must be positive");
  }
};

/// Standard deviation sqrt(20 / sqrt(n)) (variance 20 / sqrt(n)) of the
/// factor entries in the rank-2 benchmark ensemble.
inline double benchmark_factor_scale(Index n) { return std::sqrt(20.0 / std::sqrt(static_cast<double>(n))); }

/// Independent generator streams derived from one trial seed.
enum class Stream : std::uint64_t { factors = 1, mask = 2, noise = 3 };

inline std::uint64_t stream_seed(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (std::uint64_t{words[0]} << 32) | words[1];
}

struct LowRankInstance {
  Matrix M;
  theory::LowRankFactors factors;  // compact SVD, U^T U = m I, V^T V = n I
};

inline LowRankInstance gen_lowrank(const SynthSpec& spec) {
  spec.validate();
  const Index m = std::max(spec.m, spec.n);
  const Index n = std::min(spec.m, spec.n);
  const Index r = spec.r;
  std::mt19937_64 rng(stream_seed(spec.seed, Stream::factors));
  std::normal_distribution<double> normal(0.0, spec.factor_scale);
  Matrix u(m, r), v(n, r);
  for (Index j = 0; j < r; ++j)
    for (Index i = 0; i < m; ++i) u(i, j) = normal(rng);
  for (Index j = 0; j < r; ++j)
    for (Index i = 0; i < n; ++i) v(i, j) = normal(rng);

  LowRankInstance out;
  out.M = u * v.transpose();

  // Compact SVD through the r x r core of the thin QR factors.
  Eigen::HouseholderQR<Matrix> qu(u), qv(v);
  const Matrix q1 = qu.householderQ() * Matrix::Identity(m, r);
  const Matrix q2 = qv.householderQ() * Matrix::Identity(n, r);
  const Matrix core = q1.transpose() * u * (q2.transpose() * v).transpose();
  Eigen::JacobiSVD<Matrix> svd(core, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double sm = std::sqrt(static_cast<double>(m));
  const double sn = std::sqrt(static_cast<double>(n));
  out.factors.U = sm * q1 * svd.matrixU();
  out.factors.V = sn * q2 * svd.matrixV();
  out.factors.Sigma = svd.singularValues() / (sm * sn);
  return out;
}

/// Dense m x n noise matrix drawn from `model`.
inline Matrix noise_matrix(Index m, Index n, const NoiseModel& model, std::uint64_t seed) {
  Matrix z = Matrix::Zero(m, n);
  std::mt19937_64 rng(stream_seed(seed, Stream::noise));
  if (const auto* g = std::get_if<GaussianNoise>(&model)) {
    std::normal_distribution<double> normal(0.0, g->sigma);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < m; ++i) z(i, j) = normal(rng);
  } else if (const auto* w = std::get_if<WorstCaseNoise>(&model)) {
    if (w->pattern == WorstCaseNoise::Pattern::adversarial_constant) {
      z.setConstant(w->z_max);
    } else {
      std::bernoulli_distribution coin(0.5);
      for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < m; ++i) z(i, j) = coin(rng) ? w->z_max : -w->z_max;
    }
  }
  return z;
}

/// N = M + Z.
inline Matrix add_noise(const Matrix& M, const SynthSpec& spec) {
  return M + noise_matrix(M.rows(), M.cols(), spec.noise, spec.seed);
}

/// ||A - B||_F / sqrt(mn).
inline double rmse(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidArgument("rmse: shape mismatch");
  if (a.size() == 0) return 0.0;
  return (a - b).norm() / std::sqrt(static_cast<double>(a.rows()) * static_cast<double>(a.cols()));
}

}  // namespace optspace::harness
