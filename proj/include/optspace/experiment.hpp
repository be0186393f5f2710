#pragma once

// Monte Carlo sweeps: one trial generates an instance, samples it, runs the
// pipeline and records errors and measured quantities as a CSV row.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <functional>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "optspace/error.hpp"
#include "optspace/optimizer.hpp"
#include "optspace/sparse.hpp"
#include "optspace/synth.hpp"
#include "optspace/theory.hpp"

namespace optspace::harness {

struct TrialRecord {
  Index m = 0;
  Index n = 0;
  Index r = 0;
  Index e_size = 0;
  std::string noise_model = "none";
  double sigma = 0.0;
  std::uint64_t seed = 0;
  double rmse_spectral = 0.0;
  double rmse_final = 0.0;
  long iterations = 0;
  double mu0 = 0.0;
  double mu1 = 0.0;
  double kappa = 0.0;
  double znorm = 0.0;
  double wall_ms = 0.0;
  std::string status = "ok";

  bool ok() const { return status == "ok"; }

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

inline constexpr const char* kCsvHeader =
    "m,n,r,e_size,noise_model,sigma,seed,rmse_spectral,rmse_final,iterations,mu0,mu1,kappa,znorm,wall_ms,status";

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_safe(std::string s) {
  for (auto& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

}  // namespace detail

inline void write_csv_header(std::ostream& out) { out << kCsvHeader << '\n'; }

inline void write_csv_row(std::ostream& out, const TrialRecord& t) {
  using detail::fmt_double;
  out << t.m << ',' << t.n << ',' << t.r << ',' << t.e_size << ',' << detail::csv_safe(t.noise_model) << ','
      << fmt_double(t.sigma) << ',' << t.seed << ',' << fmt_double(t.rmse_spectral) << ','
      << fmt_double(t.rmse_final) << ',' << t.iterations << ',' << fmt_double(t.mu0) << ',' << fmt_double(t.mu1)
      << ',' << fmt_double(t.kappa) << ',' << fmt_double(t.znorm) << ',' << fmt_double(t.wall_ms) << ','
      << detail::csv_safe(t.status) << '\n';
}

/// Parses a results file written by write_csv_header / write_csv_row.
inline std::vector<TrialRecord> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw ParseError("results CSV: unexpected header");
  std::vector<TrialRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 16) throw ParseError("results CSV: expected 16 fields in '" + line + "'");
    try {
      TrialRecord t;
      t.m = std::stoll(f[0]);
      t.n = std::stoll(f[1]);
      t.r = std::stoll(f[2]);
      t.e_size = std::stoll(f[3]);
      t.noise_model = f[4];
      t.sigma = std::stod(f[5]);
      t.seed = std::stoull(f[6]);
      t.rmse_spectral = std::stod(f[7]);
      t.rmse_final = std::stod(f[8]);
      t.iterations = std::stol(f[9]);
      t.mu0 = std::stod(f[10]);
      t.mu1 = std::stod(f[11]);
      t.kappa = std::stod(f[12]);
      t.znorm = std::stod(f[13]);
      t.wall_ms = std::stod(f[14]);
      t.status = f[15];
      out.push_back(std::move(t));
    } catch (const std::logic_error&) {
      throw ParseError("results CSV: bad number in '" + line + "'");
    }
  }
  return out;
}

/// Everything one trial produces, including the completion itself.
struct TrialOutcome {
  TrialRecord record;
  LowRankInstance instance;
  std::optional<CompletionResult> result;
};

/// Runs one trial. Failures are reported in `record.status`, never thrown.
inline TrialOutcome run_trial_detailed(const SynthSpec& spec, const OptConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  TrialOutcome out;
  TrialRecord& rec = out.record;
  rec.m = spec.m;
  rec.n = spec.n;
  rec.r = spec.r;
  rec.e_size = spec.e_size;
  rec.noise_model = noise_label(spec.noise);
  rec.sigma = noise_level(spec.noise);
  rec.seed = spec.seed;
  try {
    out.instance = gen_lowrank(spec);
    const Matrix& truth = out.instance.M;
    const Index m = truth.rows();
    const Index n = truth.cols();
    const auto mask = sample_mask(m, n, spec.e_size, stream_seed(spec.seed, Stream::mask));
    const Matrix z = noise_matrix(m, n, spec.noise, spec.seed);
    const ObservedMatrix observed = ObservedMatrix::observe(truth + z, mask);

    const auto& f = out.instance.factors;
    const auto inc = theory::incoherence(f.U, f.Sigma, f.V);
    rec.mu0 = inc.mu0;
    rec.mu1 = inc.mu1;
    rec.kappa = f.Sigma.maxCoeff() / f.Sigma.minCoeff();
    rec.znorm = spectral_norm(trim(ObservedMatrix::observe(z, mask)).matrix, 1e-8);

    out.result = complete(observed, spec.r, cfg);
    rec.rmse_spectral = rmse(out.result->initial->estimate(), truth);
    rec.rmse_final = rmse(out.result->estimate(), truth);
    rec.iterations = out.result->trace.accepted_steps();
    if (!out.result->trace.is_monotone()) rec.status = "non-monotone descent";
  } catch (const std::exception& e) {
    rec.status = std::string("error: ") + e.what();
  }
  rec.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

inline TrialRecord run_trial(const SynthSpec& spec, const OptConfig& cfg) {
  return run_trial_detailed(spec, cfg).record;
}

struct SweepPoint {
  SynthSpec spec;
  OptConfig config;
};

struct ExperimentOptions {
  unsigned threads = 1;
  /// Called with each record in trial-index order.
  std::function<void(const TrialRecord&)> on_record;
};

/// Runs `trials_per_point` trials per grid point; trial t of a point uses
/// seed spec.seed + t. Results (and callbacks) are ordered by trial index,
/// point-major, whatever order the workers finish in.
inline std::vector<TrialRecord> run_experiment(const std::vector<SweepPoint>& sweep, long trials_per_point,
                                               const ExperimentOptions& opts = {}) {
  if (trials_per_point < 1) throw InvalidArgument("run_experiment: trials_per_point must be >= 1");
  const std::size_t total = sweep.size() * static_cast<std::size_t>(trials_per_point);
  std::vector<std::optional<TrialRecord>> slots(total);
  std::atomic<std::size_t> next{0};
  std::mutex emit_mutex;
  std::size_t emitted = 0;

  const auto worker = [&] {
    for (std::size_t idx = next++; idx < total; idx = next++) {
      const auto& point = sweep[idx / static_cast<std::size_t>(trials_per_point)];
      SynthSpec spec = point.spec;
      spec.seed += idx % static_cast<std::size_t>(trials_per_point);
      TrialRecord rec = run_trial(spec, point.config);
      std::lock_guard lock(emit_mutex);
      slots[idx] = std::move(rec);
      while (emitted < total && slots[emitted]) {
        if (opts.on_record) opts.on_record(*slots[emitted]);
        ++emitted;
      }
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(total)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::vector<TrialRecord> out;
  out.reserve(total);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

/// Median of a non-empty sample.
inline double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median: empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t k = values.size();
  return k % 2 == 1 ? values[k / 2] : 0.5 * (values[k / 2 - 1] + values[k / 2]);
}

}  // namespace optspace::harness
