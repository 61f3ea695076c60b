#include "rcl/datagen.hpp"
#include "rcl/error.hpp"
#include "rcl/twotower.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

using namespace rcl;
namespace fs = std::filesystem;

namespace {

Hyperparams small_hp(std::uint64_t seed = 0) {
  Hyperparams hp;
  hp.latent_dim = 4;
  hp.hidden = 6;
  hp.seed = seed;
  return hp;
}

Dataset small_dataset(std::uint64_t seed = 0, int length = 16) {
  return generate(default_topology().with_seed(seed), length);
}

RealMatrix random_matrix(int r, int c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  RealMatrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = n(rng);
  return m;
}

}  // namespace

TEST(Encode, ZeroWeightsGiveZeroEmbedding) {
  const RealMatrix x = random_matrix(3, 5, 1);
  const RealMatrix z = encode(x, TowerWeights::zeros(5, 4, 2));
  EXPECT_EQ(z.rows(), 3);
  EXPECT_EQ(z.cols(), 2);
  EXPECT_TRUE(z.isZero(0.0));
}

TEST(Encode, ReluClampsNegativeInputs) {
  TowerWeights w = TowerWeights::zeros(2, 2, 2);
  w.w1.setIdentity();
  w.w2.setIdentity();
  RealMatrix x(1, 2);
  x << -1.0, 2.0;
  const RealMatrix z = encode(x, w);
  EXPECT_DOUBLE_EQ(z(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(z(0, 1), 2.0);
}

TEST(Encode, DefaultShape) {
  Hyperparams hp;
  const ModelParams m = init_params(100, hp);
  EXPECT_EQ(encode(random_matrix(7, 100, 2), m.tower_p).rows(), 7);
  EXPECT_EQ(encode(random_matrix(7, 100, 2), m.tower_p).cols(), 16);
}

TEST(Encode, ShapeMismatchIsStructuralError) {
  EXPECT_THROW(encode(random_matrix(3, 4, 1), TowerWeights::zeros(5, 4, 2)), StructuralError);
}

TEST(L2Normalize, Examples) {
  RealMatrix z(3, 2);
  z << 3, 4, 0, 0, 1, 0;
  const RealMatrix u = l2_normalize_rows(z);
  EXPECT_NEAR(u(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(u(0, 1), 0.8, 1e-15);
  EXPECT_EQ(u(1, 0), 0.0);
  EXPECT_EQ(u(1, 1), 0.0);
  EXPECT_TRUE(u.allFinite());
  EXPECT_EQ(u.row(2), z.row(2));
}

TEST(L2Normalize, RowsHaveUnitNorm) {
  const RealMatrix u = l2_normalize_rows(random_matrix(9, 5, 3));
  for (int i = 0; i < u.rows(); ++i) EXPECT_NEAR(u.row(i).norm(), 1.0, 1e-6);
}

TEST(CrossScores, Examples) {
  RealMatrix a(1, 3), b(1, 3);
  a << 1, 2, 3;
  EXPECT_NEAR(cross_scores(a, a, 0.0)(0, 0), 1.0, 1e-12);
  b << 2, -1, 0;
  EXPECT_NEAR(cross_scores(a, b, 0.0)(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(cross_scores(a, -a, std::log(2.0))(0, 0), -2.0, 1e-12);
}

TEST(FullScores, SymmetricWithAlphaDiagonal) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const RealMatrix zp = random_matrix(7, 16, seed), zk = random_matrix(4, 16, seed + 100);
    const double la = 0.3 * static_cast<double>(seed) - 0.5;
    const ScoreMatrix s = full_score_matrix({zp, zk}, la, {4, 7, 4});
    const RealMatrix& v = s.values();
    EXPECT_EQ(v.rows(), 11);
    EXPECT_LT((v - v.transpose()).cwiseAbs().maxCoeff(), 1e-9);
    for (int i = 0; i < 11; ++i) EXPECT_NEAR(v(i, i), std::exp(la), 1e-6);
    EXPECT_LE(v.cwiseAbs().maxCoeff(), std::exp(la) + 1e-9);
    EXPECT_LT((v.topRightCorner(7, 4) - cross_scores(zp, zk, la)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(FullScores, IdenticalEmbeddingsScoreAlpha) {
  RealMatrix zp = random_matrix(3, 4, 7);
  zp.row(1) = zp.row(0);
  const RealMatrix s = full_scores(zp, random_matrix(2, 4, 8), std::log(1.5));
  EXPECT_NEAR(s(0, 1), 1.5, 1e-12);
}

TEST(FullScores, RowScaleInvariance) {
  const RealMatrix zp = random_matrix(7, 16, 11), zk = random_matrix(4, 16, 12);
  const RealMatrix s = full_scores(zp, zk, 0.2);
  for (int i = 0; i < 7; ++i) {
    RealMatrix scaled = zp;
    scaled.row(i) *= 3.7 + i;
    EXPECT_LT((full_scores(scaled, zk, 0.2) - s).cwiseAbs().maxCoeff(), 1e-9);
  }
  RealMatrix scaled = zk;
  scaled.row(2) *= 0.01;
  EXPECT_LT((full_scores(zp, scaled, 0.2) - s).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Bce, Examples) {
  EXPECT_NEAR(bce_with_logits(0.0, 0.0), std::log(2.0), 1e-12);
  EXPECT_NEAR(bce_with_logits(10.0, 1.0), 4.5398899e-5, 1e-10);
  EXPECT_NEAR(bce_with_logits(-10.0, 0.0), 4.5398899e-5, 1e-10);
  EXPECT_TRUE(std::isfinite(bce_with_logits(1e3, 0.0)));
  EXPECT_NEAR(bce_with_logits(1e3, 0.0), 1e3, 1e-9);
  EXPECT_NEAR(bce_with_logits(-1e3, 1.0), 1e3, 1e-9);
  EXPECT_EQ(bce_with_logits(1e3, 1.0), 0.0);
}

TEST(Bce, MeanOverCellsAndNonNegative) {
  const RealMatrix s = random_matrix(7, 4, 5) * 3.0;
  BinaryMatrix y = (random_matrix(7, 4, 6).array() > 0.0).cast<int>();
  double sum = 0.0;
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 4; ++j) {
      // Naive form is accurate at these magnitudes.
      const double p = 1.0 / (1.0 + std::exp(-s(i, j)));
      sum += -(y(i, j) * std::log(p) + (1 - y(i, j)) * std::log(1.0 - p));
    }
  EXPECT_NEAR(bce_loss(s, y), sum / 28.0, 1e-12);
  EXPECT_GE(bce_loss(s, y), 0.0);
}

TEST(Standardize, ZeroMeanUnitVarianceAndConstantRows) {
  RealMatrix x = random_matrix(3, 50, 9) * 4.0;
  x.array() += 2.0;
  x.row(2).setConstant(5.0);
  const RealMatrix z = standardize_rows(x);
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(z.row(i).mean(), 0.0, 1e-12);
    EXPECT_NEAR((z.row(i).array() - z.row(i).mean()).square().mean(), 1.0, 1e-12);
  }
  EXPECT_TRUE(z.row(2).isZero(0.0));
}

TEST(Init, BoundsAndDeterminism) {
  Hyperparams hp = small_hp(3);
  hp.init_scale = 0.5;
  const ModelParams a = init_params(20, hp);
  EXPECT_EQ(a, init_params(20, hp));
  EXPECT_EQ(a.log_alpha, 0.0);
  EXPECT_EQ(a.alpha(), 1.0);
  EXPECT_LE(a.tower_p.w1.cwiseAbs().maxCoeff(), 0.5 / std::sqrt(20.0));
  EXPECT_LE(a.tower_p.w2.cwiseAbs().maxCoeff(), 0.5 / std::sqrt(6.0));
  EXPECT_NE(a, init_params(20, small_hp(4)));
}

// Central differences computed here against the library's analytic gradient.
TEST(Gradient, MatchesIndependentFiniteDifferences) {
  const Dataset ds = small_dataset(1, 12);
  const RealMatrix xp = standardize_rows(ds.x_p), xk = standardize_rows(ds.x_k);
  ModelParams params = init_params(12, small_hp(5));
  params.log_alpha = 0.4;
  LossAndGradient lg = loss_and_gradient(params, xp, xk, ds.labels);
  auto grads = tensors(lg.grad);
  auto values = tensors(params);
  const double h = 1e-6;
  double worst = 0.0;
  int checked = 0;
  for (std::size_t t = 0; t < values.size(); ++t) {
    for (std::size_t i = 0; i < values[t].size(); i += 3) {
      const double saved = values[t][i];
      values[t][i] = saved + h;
      const double up = loss_and_gradient(params, xp, xk, ds.labels).loss;
      values[t][i] = saved - h;
      const double down = loss_and_gradient(params, xp, xk, ds.labels).loss;
      values[t][i] = saved;
      const double fd = (up - down) / (2 * h);
      const double denom = std::max({std::abs(fd), std::abs(grads[t][i]), 1e-6});
      worst = std::max(worst, std::abs(fd - grads[t][i]) / denom);
      ++checked;
    }
  }
  EXPECT_GT(checked, 50);
  EXPECT_LT(worst, 1e-4);
}

TEST(Gradient, CheckAtFiveRandomInitializations) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const double err = gradient_check(small_dataset(seed, 16), small_hp(seed));
    EXPECT_LT(err, 1e-4) << "seed " << seed;
  }
}

TEST(Gradient, LogAlphaMatchesFiniteDifference) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    EXPECT_LT(gradient_check_log_alpha(small_dataset(seed, 16), small_hp(seed)), 1e-6);
  }
}

TEST(Train, ZeroEpochsReturnsInitialParams) {
  const Dataset ds = small_dataset();
  Hyperparams hp = small_hp(2);
  hp.epochs = 0;
  const TrainResult r = train(ds, hp);
  EXPECT_TRUE(r.trace.epochs.empty());
  EXPECT_EQ(r.params, init_params(ds.length(), hp));
}

TEST(Train, TraceIsContiguousAndWellFormed) {
  const Dataset ds = small_dataset(0, 200);
  Hyperparams hp;
  hp.epochs = 15;
  const TrainResult r = train(ds, hp);
  ASSERT_EQ(r.trace.epochs.size(), 15u);
  for (int e = 0; e < 15; ++e) {
    const EpochRecord& rec = r.trace.epochs[e];
    EXPECT_EQ(rec.epoch, e + 1);
    EXPECT_TRUE(rec.auc.has_value());
    EXPECT_GE(rec.accuracy, 0.0);
    EXPECT_LE(rec.accuracy, 1.0);
    const RealMatrix& v = rec.scores.values();
    EXPECT_LT((v - v.transpose()).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((v.diagonal().array() - std::exp(rec.log_alpha)).abs().maxCoeff(), 1e-6);
  }
  EXPECT_EQ(r.trace.epochs.back().log_alpha, r.params.log_alpha);
}

TEST(Train, SameSeedIsBitIdentical) {
  const Dataset ds = small_dataset(0, 300);
  Hyperparams hp;
  hp.epochs = 10;
  hp.seed = 9;
  const TrainResult a = train(ds, hp), b = train(ds, hp);
  EXPECT_EQ(a.params, b.params);
  ASSERT_EQ(a.trace.epochs.size(), b.trace.epochs.size());
  for (std::size_t e = 0; e < a.trace.epochs.size(); ++e) {
    EXPECT_EQ(a.trace.epochs[e].loss, b.trace.epochs[e].loss);
    EXPECT_EQ(a.trace.epochs[e].scores.values(), b.trace.epochs[e].scores.values());
  }
}

TEST(Train, DivergenceRaisesTrainingErrorWithEpoch) {
  Hyperparams hp = small_hp(1);
  hp.learning_rate = 1e300;
  hp.epochs = 5;
  try {
    train(small_dataset(0, 32), hp);
    FAIL() << "expected divergence";
  } catch (const TrainingError& e) {
    EXPECT_GE(e.epoch(), 1);
    EXPECT_LE(e.epoch(), 5);
  }
}

// Median final loss below 5% of the initial loss over 20 seeds at defaults.
TEST(Train, MedianFinalLossFallsBelowFivePercentOfInitial) {
  const Dataset ds = generate(default_topology(), 10000);
  std::vector<double> ratios;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Hyperparams hp;
    hp.seed = seed;
    const TrainResult r = train(ds, hp);
    ratios.push_back(r.trace.epochs.back().loss / r.trace.initial_loss);
  }
  std::sort(ratios.begin(), ratios.end());
  const double median = 0.5 * (ratios[9] + ratios[10]);
  EXPECT_LT(median, 0.05) << "median final/initial loss ratio " << median;
}

TEST(Hyperparams, ValidationAndJson) {
  Hyperparams hp;
  EXPECT_NO_THROW(hp.validate());
  hp.latent_dim = 0;
  EXPECT_THROW(hp.validate(), ArgumentError);
  hp = Hyperparams{};
  hp.hidden = 0;
  EXPECT_THROW(hp.validate(), ArgumentError);
  hp = Hyperparams{};
  hp.learning_rate = 0.0;
  EXPECT_THROW(hp.validate(), ArgumentError);

  hp = Hyperparams{};
  hp.seed = 77;
  hp.learning_rate = 0.01;
  const nlohmann::json j = hp;
  const Hyperparams back = j.get<Hyperparams>();
  EXPECT_EQ(back.seed, 77u);
  EXPECT_EQ(back.learning_rate, 0.01);
  EXPECT_EQ(back.latent_dim, 16);
}

TEST(ModelIo, RoundTripIsBitExact) {
  const fs::path path = fs::temp_directory_path() / "rcl_model_roundtrip.json";
  ModelParams m = init_params(30, small_hp(4));
  m.log_alpha = 0.123456789012345678;
  write_model(m, path);
  EXPECT_EQ(read_model(path), m);
  fs::remove(path);
}

TEST(ModelIo, Errors) {
  EXPECT_THROW(read_model("/nonexistent/model.json"), IoError);
  nlohmann::json j = init_params(5, small_hp());
  j["tower_p"]["w1"]["rows"] = 99;
  EXPECT_THROW(j.get<ModelParams>(), Error);
}
