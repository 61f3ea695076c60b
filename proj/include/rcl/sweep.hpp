#pragma once

// Multi-run experiment harness: regenerate, train, and score every epoch of
// every run under each binarizer, then summarize epochs-to-target.

#include "rcl/binarize.hpp"
#include "rcl/datagen.hpp"
#include "rcl/identify.hpp"
#include "rcl/metrics.hpp"
#include "rcl/twotower.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace rcl {

/// Threshold chosen by maximizing graph F1 on held-out scores.
struct TunedThreshold {
  friend bool operator==(const TunedThreshold&, const TunedThreshold&) = default;
};
/// K = ground-truth mean degree, rounded up.
struct AutoTopK {
  friend bool operator==(const AutoTopK&, const AutoTopK&) = default;
};
/// Keeps the top (ground-truth edge density) fraction of scores.
struct AutoQuantile {
  friend bool operator==(const AutoQuantile&, const AutoQuantile&) = default;
};

using BinarizerSpec = std::variant<BinarizationMethod, TunedThreshold, AutoTopK, AutoQuantile>;

/// Accepts everything parse_binarizer() does plus "threshold:tuned",
/// "topk:auto" and "quantile:auto".
BinarizerSpec parse_binarizer_spec(const std::string& text);

enum class ConflictMatch { Strict, AgentPair };

/// Conflict-level F1 restricted to one kind. Strict matching compares kind,
/// agent pair and witness; AgentPair compares kind and agent pair only.
F1Score f1_conflicts(const ConflictSet& pred, const ConflictSet& truth, ConflictKind kind,
                     ConflictMatch match = ConflictMatch::Strict);

struct MetricRecord {
  int run_id = 0;
  int epoch = 0;
  std::string binarizer;
  double f1_graph = 0.0;
  double f1_indirect = 0.0;
  double f1_implicit = 0.0;
  double accuracy = 0.0;
  std::optional<double> auc;

  friend bool operator==(const MetricRecord&, const MetricRecord&) = default;
};

enum class Task { Graph, Indirect, Implicit };
std::string to_string(Task t);

struct TargetSummary {
  std::string binarizer;
  Task task = Task::Graph;
  // Unreached runs count as +infinity, so these may be infinite.
  double median_epochs = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  int n_reached = 0;
  int n_runs = 0;
};

struct RunFailure {
  int run_id = 0;
  int epoch = 0;
  std::string message;
};

struct SweepConfig {
  ConflictModelSpec spec;
  Hyperparams hp;
  int length = 10000;
  int n_runs = 1;
  std::vector<std::string> binarizers{"sparsemax", "threshold:tuned", "topk:auto", "quantile:auto"};
  double target_f1 = 1.0;
  int jobs = 1;
  int tune_epoch = 200;
  IdentifyOptions identify;
  ConflictMatch match = ConflictMatch::Strict;
};

/// Seed offset of the held-out run used to tune the static threshold.
inline constexpr std::uint64_t kHeldOutSeedOffset = 1'000'000;

struct SweepResult {
  std::vector<MetricRecord> records;  // ordered by run, epoch, binarizer
  std::vector<TargetSummary> summary;  // ordered by binarizer, task
  std::vector<RunFailure> failures;
  /// Concrete method behind each configured binarizer label.
  std::vector<std::pair<std::string, std::string>> resolved;

  /// Per-run epochs-to-target for one binarizer/task (absent: never reached).
  std::vector<std::optional<int>> epochs_to(const std::string& binarizer, Task task, double target, int n_runs) const;
  const TargetSummary* find_summary(const std::string& binarizer, Task task) const;
};

/// Resolves auto/tuned binarizers against the conflict model's ground truth.
BinarizationMethod resolve_binarizer(const BinarizerSpec& b, const SweepConfig& cfg);

/// Threshold maximizing graph F1 of `scores` against `truth`; the widest-margin
/// midpoint among the maximizers.
double tune_threshold(const RealMatrix& scores, const LearnedAdjacency& truth);

SweepResult run_sweep(const SweepConfig& cfg);

/// Type-7 quantile over values where nullopt stands for +infinity.
double quantile_with_infinity(std::vector<std::optional<int>> values, double q);

void write_sweep_csv(const SweepResult& r, const std::filesystem::path& path);
void write_summary_csv(const SweepResult& r, const std::filesystem::path& path);

}  // namespace rcl
