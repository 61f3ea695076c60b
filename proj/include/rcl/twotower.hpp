#pragma once

// Two-tower interaction learner: independent feed-forward encoders for
// parameters and KPIs, a scaled cosine-similarity head, and full-batch Adam
// training on the binary cross-entropy of the parameter/KPI scores.

#include "rcl/datagen.hpp"
#include "rcl/graph_core.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace rcl {

/// linear(input -> hidden) -> ReLU -> linear(hidden -> latent)
struct TowerWeights {
  RealMatrix w1;  // hidden x input
  RealVector b1;  // hidden
  RealMatrix w2;  // latent x hidden
  RealVector b2;  // latent

  int input_dim() const { return static_cast<int>(w1.cols()); }
  int hidden_dim() const { return static_cast<int>(w1.rows()); }
  int latent_dim() const { return static_cast<int>(w2.rows()); }
  /// StructuralError on inconsistent shapes, ArgumentError on non-finite values.
  void validate() const;

  static TowerWeights zeros(int input, int hidden, int latent);

  friend bool operator==(const TowerWeights&, const TowerWeights&) = default;
};

struct ModelParams {
  TowerWeights tower_p;
  TowerWeights tower_k;
  double log_alpha = 0.0;  // alpha = exp(log_alpha) stays positive

  double alpha() const;
  std::size_t scalar_count() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

void to_json(nlohmann::json& j, const ModelParams& m);
void from_json(const nlohmann::json& j, ModelParams& m);
void write_model(const ModelParams& m, const std::filesystem::path& path);
ModelParams read_model(const std::filesystem::path& path);

struct Embeddings {
  RealMatrix z_p;  // N_p x H
  RealMatrix z_k;  // N_k x H
};

struct Hyperparams {
  int latent_dim = 16;
  int hidden = 64;
  double learning_rate = 1e-3;
  int epochs = 200;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Uniform init bound is init_scale / sqrt(fan_in).
  double init_scale = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const Hyperparams& hp);
void from_json(const nlohmann::json& j, Hyperparams& hp);

inline constexpr double kNormEps = 1e-12;

RealMatrix encode(const RealMatrix& x, const TowerWeights& w);
RealMatrix l2_normalize_rows(const RealMatrix& z);
RealMatrix cross_scores(const RealMatrix& z_p, const RealMatrix& z_k, double log_alpha);
/// alpha * |Z_all| |Z_all|^T over the stacked parameter and KPI embeddings.
RealMatrix full_scores(const RealMatrix& z_p, const RealMatrix& z_k, double log_alpha);
ScoreMatrix full_score_matrix(const Embeddings& e, double log_alpha, const EntityDims& dims);

/// Numerically stable max(x,0) - x*y + log(1 + exp(-|x|)).
double bce_with_logits(double x, double y);
/// Mean of bce_with_logits over all cells.
double bce_loss(const RealMatrix& s_pk, const BinaryMatrix& y);

/// Z-scores every row over its samples; constant rows become zero.
RealMatrix standardize_rows(const RealMatrix& x);

ModelParams init_params(int input_dim, const Hyperparams& hp);

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  std::optional<double> auc;  // absent when the labels hold a single class
  double log_alpha = 0.0;
  ScoreMatrix scores;  // full score matrix after this epoch's update
};

struct TrainTrace {
  double initial_loss = 0.0;
  std::vector<EpochRecord> epochs;  // epochs[e].epoch == e + 1
};

struct TrainResult {
  ModelParams params;
  TrainTrace trace;
};

/// Loss and exact gradient of the training objective at `params`.
struct LossAndGradient {
  double loss = 0.0;
  ModelParams grad;
};

/// Inputs are the already standardized sample matrices.
LossAndGradient loss_and_gradient(const ModelParams& params, const RealMatrix& x_p, const RealMatrix& x_k,
                                  const BinaryMatrix& labels);

/// Embeddings of the dataset's (standardized) entities under `params`.
Embeddings embed(const ModelParams& params, const Dataset& ds);
ScoreMatrix score_dataset(const ModelParams& params, const Dataset& ds);

/// Full-batch Adam; one optimizer step per epoch. Throws TrainingError on a
/// non-finite loss.
TrainResult train(const Dataset& ds, const Hyperparams& hp);
/// Same, continuing from the given parameters.
TrainResult train_from(const Dataset& ds, const Hyperparams& hp, ModelParams start);

/// Maximum relative error between the analytic gradient and central finite
/// differences (step 1e-5) over every scalar of the freshly initialized model.
double gradient_check(const Dataset& ds, const Hyperparams& hp);
/// The same comparison restricted to log_alpha.
double gradient_check_log_alpha(const Dataset& ds, const Hyperparams& hp);

/// Flat views of every tensor in a ModelParams, in a fixed order.
std::vector<std::span<double>> tensors(ModelParams& m);

}  // namespace rcl
