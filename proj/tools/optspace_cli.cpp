// optspace: command-line front end.
//
//   optspace complete   --input obs.mtx --rank R|auto --rho RHO --out dir --format factors|dense-csv
//   optspace experiment --config sweep.toml --out results.csv
//   optspace bounds     --input obs.mtx --truth truth.mtx
//   optspace rank       --input obs.mtx

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "optspace/optspace.hpp"
#include "optspace/sweep_config.hpp"

namespace fs = std::filesystem;
using namespace optspace;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::optional<long> max_iters;
  std::optional<double> tol;
  std::optional<unsigned> threads;

  void apply(OptConfig& cfg) const {
    if (seed) cfg.seed = *seed;
    if (max_iters) cfg.max_iters = *max_iters;
    if (tol) cfg.grad_tol = *tol;
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Random seed (subspace iteration start; sweep base seed)");
  cmd->add_option("--max-iters", c.max_iters, "Maximum descent iterations")->check(CLI::NonNegativeNumber);
  cmd->add_option("--tol", c.tol, "Gradient-norm stopping tolerance (0 = data-scaled default)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--threads", c.threads, "Worker threads for sweeps")->check(CLI::PositiveNumber);
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_dense_csv(const fs::path& path, const Matrix& a) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) out << (j ? "," : "") << num(a(i, j));
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

std::optional<Index> parse_rank(const std::string& text) {
  if (text == "auto") return std::nullopt;
  try {
    std::size_t used = 0;
    const long long r = std::stoll(text, &used);
    if (used == text.size() && r >= 1) return static_cast<Index>(r);
  } catch (const std::logic_error&) {
  }
  throw InvalidArgument("--rank must be a positive integer or 'auto', got '" + text + "'");
}

void parse_rho(const std::string& text, OptConfig& cfg) {
  if (text == "n_epsilon") {
    cfg.rho_n_epsilon = true;
    return;
  }
  try {
    std::size_t used = 0;
    cfg.rho = std::stod(text, &used);
    if (used == text.size()) return;
  } catch (const std::logic_error&) {
  }
  throw InvalidArgument("--rho must be a number or 'n_epsilon', got '" + text + "'");
}

int run_complete(const std::string& input, const std::string& rank, const std::string& rho, const std::string& out_dir,
                 const std::string& format, const Common& common) {
  OptConfig cfg;
  parse_rho(rho, cfg);
  common.apply(cfg);
  const auto obs = mm::read_file(input);
  const auto result = complete(obs, parse_rank(rank), cfg);

  fs::create_directories(out_dir);
  if (format == "factors") {
    write_dense_csv(fs::path(out_dir) / "X.csv", result.point.X);
    write_dense_csv(fs::path(out_dir) / "S.csv", result.S);
    write_dense_csv(fs::path(out_dir) / "Y.csv", result.point.Y);
  } else {
    write_dense_csv(fs::path(out_dir) / "Mhat.csv", result.estimate());
  }
  std::cout << "rank," << result.rank << '\n'
            << "iterations," << result.trace.accepted_steps() << '\n'
            << "termination," << to_string(result.trace.reason) << '\n'
            << "initial_rmse_observed," << num(result.initial_rmse_vs_observed) << '\n'
            << "final_rmse_observed," << num(observed_rmse(obs, result.point.X, result.S, result.point.Y)) << '\n'
            << "final_cost," << num(result.final_cost) << '\n';
  return 0;
}

int run_experiment_cmd(const std::string& config, const std::string& out_path, const Common& common) {
  auto sweep = harness::load_sweep(config);
  for (auto& p : sweep.points) {
    if (common.seed) p.spec.seed = *common.seed;
    common.apply(p.config);
  }
  std::ofstream out(out_path);
  if (!out) throw Error("cannot write " + out_path);
  harness::write_csv_header(out);
  harness::ExperimentOptions opts;
  opts.threads = common.threads ? *common.threads : sweep.threads;
  long failed = 0;
  opts.on_record = [&](const harness::TrialRecord& r) {
    harness::write_csv_row(out, r);
    out.flush();
    if (!r.ok()) ++failed;
  };
  const auto rows = harness::run_experiment(sweep.points, sweep.trials, opts);
  std::cerr << rows.size() << " trials written to " << out_path;
  if (failed) std::cerr << " (" << failed << " with non-ok status)";
  std::cerr << '\n';
  return 0;
}

int run_bounds(const std::string& input, const std::string& truth_path, const std::string& rank) {
  const auto obs = mm::read_file(input);
  const auto truth_obs = mm::read_file(truth_path);
  if (truth_obs.rows() != obs.rows() || truth_obs.cols() != obs.cols()) {
    throw InvalidArgument("bounds: truth and observations differ in shape");
  }
  const Matrix truth = truth_obs.to_dense();

  Index r = 0;
  if (auto given = parse_rank(rank)) {
    r = *given;
  } else {
    Vector s = Eigen::BDCSVD<Matrix>(truth).singularValues();
    // Roundoff-level values are zeros, or their ratios would swamp the real gap.
    const double floor = s.size() ? s(0) * double(std::max(truth.rows(), truth.cols())) *
                                        std::numeric_limits<double>::epsilon()
                                  : 0.0;
    for (auto& v : s) v = v <= floor ? 0.0 : v;
    const Index k = std::min<Index>(s.size(), 20);
    if (k < 2) throw InvalidArgument("bounds: matrix too small to estimate the rank; pass --rank");
    r = estimate_rank(Vector(s.head(k)), std::max<Index>(1, std::min(s.size() / 2, k - 1)));
  }

  const auto b = theory::measure_bound_inputs(truth, obs, r);
  const double z_max = [&] {
    double mx = 0;
    for (const auto& e : obs.entries()) mx = std::max(mx, std::abs(e.value - truth(e.row, e.col)));
    return mx;
  }();
  const double sigma_hat = obs.empty() ? 0.0 : b.noise_frobenius_norm / std::sqrt(double(obs.size()));
  const auto t2 = theory::theorem2_rhs(b);
  const auto cond = theory::theorem2_sample_condition(b);

  auto& o = std::cout;
  o << "key,value\n";
  o << "m," << b.m << "\nn," << b.n << "\nalpha," << num(b.alpha) << "\ne_size," << b.e_size << "\nepsilon,"
    << num(b.epsilon) << "\nr," << b.r << "\nsigma_min," << num(b.sigma_min) << "\nsigma_max," << num(b.sigma_max)
    << "\nkappa," << num(b.kappa) << "\nm_max," << num(b.m_max) << "\nmu0," << num(b.mu0) << "\nmu1,"
    << num(b.mu1) << "\nnoise_operator_norm," << num(b.noise_operator_norm) << "\nnoise_frobenius_norm,"
    << num(b.noise_frobenius_norm) << "\nnoise_sigma_estimate," << num(sigma_hat) << "\nnoise_max_abs,"
    << num(z_max) << '\n';
  o << "theorem1_rhs," << num(theory::theorem1_rhs(b)) << '\n';
  o << "theorem2_rhs," << num(t2.value) << "\ntheorem2_valid_regime," << (t2.valid_regime ? "true" : "false")
    << '\n';
  o << "theorem2_required_e," << num(cond.required_e) << "\ntheorem2_sample_condition,"
    << (cond.satisfied ? "true" : "false") << '\n';
  o << "theorem3_independent," << num(theory::noise_bound_independent(sigma_hat, b)) << '\n';
  o << "theorem3_worstcase," << num(theory::noise_bound_worstcase(z_max, b)) << '\n';
  o << "candes_plan_rhs," << num(theory::candes_plan_rhs(b.noise_frobenius_norm, b)) << '\n';
  return 0;
}

int run_rank(const std::string& input, const Common& common) {
  OptConfig cfg;
  common.apply(cfg);
  const auto obs = mm::read_file(input);
  const auto trimmed = trim(obs).matrix;
  const auto est = estimate_rank(trimmed, cfg);
  std::cout << "rank," << est.rank << '\n' << "index,sigma,ratio\n";
  for (Index i = 0; i < est.sigmas.size(); ++i) {
    std::cout << i + 1 << ',' << num(est.sigmas(i)) << ',';
    if (i + 1 < est.sigmas.size() && est.sigmas(i + 1) > 0) std::cout << num(est.sigmas(i) / est.sigmas(i + 1));
    std::cout << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank matrix completion from a sparse subset of noisy entries"};
  app.require_subcommand(1);

  Common common;
  std::string input, truth, out, config, rank = "auto", rho = "0", format = "factors";

  auto* cmd_complete = app.add_subcommand("complete", "Complete a matrix from MatrixMarket observations");
  cmd_complete->add_option("--input", input, "Observed entries (.mtx)")->required()->check(CLI::ExistingFile);
  cmd_complete->add_option("--rank", rank, "Target rank, or 'auto'")->capture_default_str();
  cmd_complete->add_option("--rho", rho, "Regularization weight, or 'n_epsilon'")->capture_default_str();
  cmd_complete->add_option("--out", out, "Output directory")->required();
  cmd_complete->add_option("--format", format, "Output format")
      ->check(CLI::IsMember({"factors", "dense-csv"}))
      ->capture_default_str();
  add_common(cmd_complete, common);

  auto* cmd_experiment = app.add_subcommand("experiment", "Run a Monte Carlo sweep from a TOML config");
  cmd_experiment->add_option("--config", config, "Sweep config (.toml)")->required()->check(CLI::ExistingFile);
  cmd_experiment->add_option("--out", out, "Results CSV")->required();
  add_common(cmd_experiment, common);

  auto* cmd_bounds = app.add_subcommand("bounds", "Measure bound inputs and evaluate the error bounds");
  cmd_bounds->add_option("--input", input, "Observed entries (.mtx)")->required()->check(CLI::ExistingFile);
  cmd_bounds->add_option("--truth", truth, "True matrix (.mtx)")->required()->check(CLI::ExistingFile);
  cmd_bounds->add_option("--rank", rank, "Rank of the truth, or 'auto'")->capture_default_str();
  add_common(cmd_bounds, common);

  auto* cmd_rank = app.add_subcommand("rank", "Estimate the rank from the singular-value gaps");
  cmd_rank->add_option("--input", input, "Observed entries (.mtx)")->required()->check(CLI::ExistingFile);
  add_common(cmd_rank, common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_complete) return run_complete(input, rank, rho, out, format, common);
    if (*cmd_experiment) return run_experiment_cmd(config, out, common);
    if (*cmd_bounds) return run_bounds(input, truth, rank);
    if (*cmd_rank) return run_rank(input, common);
  } catch (const std::exception& e) {
    std::cerr << "optspace: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
