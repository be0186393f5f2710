#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "optspace/experiment.hpp"
#include "optspace/matrix_market.hpp"
#include "optspace/sweep_config.hpp"
#include "oracles.hpp"

using namespace optspace;
using namespace optspace::harness;

TEST(GenLowrank, RankAndNormalization) {
  SynthSpec spec{60, 40, 3, 2.0, NoNoise{}, 0, 1};
  const auto inst = gen_lowrank(spec);
  const Vector s = oracle::singular_values(inst.M);
  EXPECT_LT(s(3), 1e-10 * s(0));
  const auto& f = inst.factors;
  EXPECT_LT((f.U.transpose() * f.U - 60.0 * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-8 * 60.0);
  EXPECT_LT((f.V.transpose() * f.V - 40.0 * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-8 * 40.0);
  EXPECT_LT((f.product() - inst.M).norm(), 1e-10 * inst.M.norm());
  // Sigma_q = sigma_q(M) / sqrt(mn) under this normalization.
  EXPECT_NEAR(f.Sigma(0), s(0) / std::sqrt(2400.0), 1e-10 * f.Sigma(0));
}

TEST(GenLowrank, WideRequestIsGeneratedTall) {
  SynthSpec spec{10, 30, 2, 1.0, NoNoise{}, 0, 2};
  EXPECT_TRUE(spec.transposed());
  EXPECT_EQ(gen_lowrank(spec).M.rows(), 30);
}

TEST(GenLowrank, DeterministicAndValidated) {
  SynthSpec spec{30, 20, 2, 1.0, NoNoise{}, 0, 3};
  EXPECT_EQ(gen_lowrank(spec).M, gen_lowrank(spec).M);
  spec.r = 21;
  EXPECT_THROW(gen_lowrank(spec), InvalidArgument);
}

TEST(GenLowrank, BenchmarkEnsembleScale) {
  // Entries of M = U V^T have variance r * s^4 with s^2 = 20 / sqrt(n).
  const Index n = 600;
  SynthSpec spec{n, n, 2, benchmark_factor_scale(n), NoNoise{}, 0, 4};
  const auto inst = gen_lowrank(spec);
  const double var = inst.M.squaredNorm() / double(n * n);
  const double expect = 2.0 * 400.0 / 600.0;
  EXPECT_NEAR(var / expect, 1.0, 0.25);
}

TEST(AddNoise, Models) {
  SynthSpec spec{50, 40, 2, 1.0, NoNoise{}, 0, 5};
  const Matrix m = gen_lowrank(spec).M;
  EXPECT_EQ(add_noise(m, spec), m);

  for (auto pattern : {WorstCaseNoise::Pattern::uniform_random_sign, WorstCaseNoise::Pattern::adversarial_constant}) {
    spec.noise = WorstCaseNoise{0.3, pattern};
    EXPECT_LE(noise_matrix(50, 40, spec.noise, spec.seed).cwiseAbs().maxCoeff(), 0.3);
    // N - M differs from Z only by rounding of the sum.
    EXPECT_LE((add_noise(m, spec) - m).cwiseAbs().maxCoeff(), 0.3 * (1 + 1e-12));
  }
}

TEST(AddNoise, GaussianVariance) {
  SynthSpec spec{600, 600, 2, 1.0, GaussianNoise{1.0}, 0, 6};
  const Matrix z = noise_matrix(600, 600, spec.noise, spec.seed);
  const double mean = z.mean();
  const double var = (z.array() - mean).square().sum() / double(z.size() - 1);
  EXPECT_NEAR(var, 1.0, 0.05);
}

TEST(Rmse, Examples) {
  std::mt19937_64 rng(7);
  const Matrix a = oracle::gaussian(9, 7, rng);
  const Matrix b = oracle::gaussian(9, 7, rng);
  EXPECT_EQ(rmse(a, a), 0.0);
  EXPECT_NEAR(rmse(a + Matrix::Ones(9, 7), a), 1.0, 1e-12);
  double sum = 0;
  for (Index i = 0; i < 9; ++i)
    for (Index j = 0; j < 7; ++j) sum += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
  EXPECT_NEAR(rmse(a, b), std::sqrt(sum / 63.0), 1e-12);
  EXPECT_THROW(rmse(a, b.leftCols(3)), InvalidArgument);
}

TEST(TrialRecord, CsvRoundTrip) {
  TrialRecord a;
  a.m = 600;
  a.n = 500;
  a.r = 2;
  a.e_size = 12345;
  a.noise_model = "gaussian";
  a.sigma = 0.1;
  a.seed = 18446744073709551615ULL;
  a.rmse_spectral = 1.0 / 3.0;
  a.rmse_final = 2.0e-9;
  a.iterations = 42;
  a.mu0 = std::sqrt(2.0);
  a.mu1 = 1e300;
  a.kappa = 1.25;
  a.znorm = 7.0;
  a.wall_ms = 12.5;
  TrialRecord b = a;
  b.status = "error: boom";
  std::stringstream ss;
  write_csv_header(ss);
  write_csv_row(ss, a);
  write_csv_row(ss, b);
  const auto back = read_csv(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], a);
  EXPECT_EQ(back[1], b);
}

TEST(TrialRecord, RejectsMalformedCsv) {
  std::stringstream bad_header("m,n\n");
  EXPECT_THROW(read_csv(bad_header), ParseError);
  std::stringstream short_row(std::string(kCsvHeader) + "\n1,2,3\n");
  EXPECT_THROW(read_csv(short_row), ParseError);
}

TEST(RunTrial, DeterministicNumericFields) {
  SynthSpec spec{80, 60, 2, 1.0, GaussianNoise{0.2}, 1800, 9};
  auto a = run_trial(spec, OptConfig{});
  auto b = run_trial(spec, OptConfig{});
  ASSERT_TRUE(a.ok()) << a.status;
  a.wall_ms = b.wall_ms = 0;
  EXPECT_EQ(a, b);
  EXPECT_LE(a.rmse_final, a.rmse_spectral);
  EXPECT_GT(a.znorm, 0.0);
}

TEST(RunTrial, FailuresGoToStatus) {
  SynthSpec spec{20, 20, 2, 1.0, NoNoise{}, 0, 1};
  const auto rec = run_trial(spec, OptConfig{});
  EXPECT_FALSE(rec.ok());
  EXPECT_EQ(rec.status.rfind("error:", 0), 0u);
}

TEST(RunExperiment, OrderedAndThreadIndependent) {
  std::vector<SweepPoint> sweep;
  for (Index e : {600, 900}) sweep.push_back({SynthSpec{50, 40, 2, 1.0, GaussianNoise{0.1}, e, 100}, OptConfig{}});
  std::vector<TrialRecord> streamed;
  ExperimentOptions opts;
  opts.threads = 4;
  opts.on_record = [&](const TrialRecord& r) { streamed.push_back(r); };
  auto par = run_experiment(sweep, 3, opts);
  auto seq = run_experiment(sweep, 3);
  ASSERT_EQ(par.size(), 6u);
  ASSERT_EQ(streamed.size(), 6u);
  for (std::size_t i = 0; i < par.size(); ++i) {
    EXPECT_EQ(par[i].seed, 100 + i % 3);
    EXPECT_EQ(par[i].e_size, i < 3 ? 600 : 900);
    EXPECT_EQ(streamed[i].seed, par[i].seed);
    par[i].wall_ms = seq[i].wall_ms = 0;
    EXPECT_EQ(par[i], seq[i]);
  }
}

TEST(Median, OddEvenEmpty) {
  EXPECT_EQ(median({3, 1, 2}), 2);
  EXPECT_EQ(median({4, 1, 2, 3}), 2.5);
  EXPECT_THROW(median({}), InvalidArgument);
}

TEST(SweepConfig, ExpandsGrid) {
  const auto cfg = parse_sweep_string(R"(
trials = 3
seed = 7
threads = 2
[grid]
m = [100]
n = [100, 80]
r = 2
e_over_n = [20, 40]
noise = ["none", "gaussian"]
level = [0.5, 1.0]
[optimizer]
rho = "n_epsilon"
max_iters = 50
)");
  EXPECT_EQ(cfg.trials, 3);
  EXPECT_EQ(cfg.threads, 2u);
  // 2 n-values x 2 sizes x (1 + 2) noise settings
  ASSERT_EQ(cfg.points.size(), 12u);
  const auto& p = cfg.points.front();
  EXPECT_EQ(p.spec.e_size, 2000);
  EXPECT_EQ(p.spec.seed, 7u);
  EXPECT_DOUBLE_EQ(p.spec.factor_scale, benchmark_factor_scale(100));
  EXPECT_TRUE(p.config.rho_n_epsilon);
  EXPECT_EQ(p.config.max_iters, 50);
  EXPECT_EQ(noise_label(cfg.points[1].spec.noise), "gaussian");
  EXPECT_EQ(cfg.points[4].spec.e_size, 100 * 40);
  EXPECT_EQ(cfg.points[6].spec.e_size, 80 * 20);
}

TEST(SweepConfig, Errors) {
  EXPECT_THROW(parse_sweep_string("trials = 2"), ParseError);
  EXPECT_THROW(parse_sweep_string("[grid]\nm=[10]\nn=[10]\nr=[1]\n"), ParseError);
  EXPECT_THROW(parse_sweep_string("[grid]\nm=[10]\nn=[10]\nr=[1]\ne_size=[20]\ne_over_n=[2]\n"), ParseError);
  EXPECT_THROW(parse_sweep_string("[grid]\nm=[10]\nn=[10]\nr=[1]\ne_size=[20]\nnoise=['pink']\n"), InvalidArgument);
  EXPECT_THROW(parse_sweep_string("[grid\n"), ParseError);
}

TEST(MatrixMarket, RoundTrip) {
  std::mt19937_64 rng(11);
  const auto obs = oracle::random_observed(oracle::gaussian(12, 9, rng), 40, 12);
  std::stringstream ss;
  mm::write(ss, obs);
  EXPECT_EQ(mm::read(ss), obs);
}

TEST(MatrixMarket, ParsesOneBasedCoordinates) {
  std::stringstream ss("%%MatrixMarket matrix coordinate real general\n% comment\n3 2 2\n1 1 1.5\n3 2 -2\n");
  const auto obs = mm::read(ss);
  EXPECT_EQ(obs.rows(), 3);
  EXPECT_EQ(obs.cols(), 2);
  ASSERT_EQ(obs.size(), 2);
  EXPECT_EQ(obs.entries()[1].row, 2);
  EXPECT_EQ(obs.entries()[1].col, 1);
  EXPECT_EQ(obs.entries()[1].value, -2.0);
}

TEST(MatrixMarket, Rejections) {
  const auto fails = [](const std::string& text) {
    std::stringstream ss(text);
    EXPECT_THROW(mm::read(ss), ParseError) << text;
  };
  fails("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n");
  fails("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n");
  fails("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n1 1 2.0\n");
  fails("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n");
  fails("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 1 1.0\n");
}
