#pragma once

#include "rcl/graph_core.hpp"

#include <optional>
#include <span>

namespace rcl {

struct F1Score {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// From raw counts. Both-empty (tp = fp = fn = 0) scores 1; tp = 0 otherwise scores 0.
F1Score f1_from_counts(long tp, long fp, long fn);

/// Compares the strict upper triangles of two square binary matrices.
F1Score f1_binary(const BinaryMatrix& pred, const BinaryMatrix& truth);

/// Fraction of cells where (score > 0) agrees with the label.
double accuracy(const RealMatrix& s_pk, const BinaryMatrix& y);

/// Mann-Whitney AUC with half credit for ties. UndefinedMetricError when the
/// labels contain a single class.
double roc_auc(std::span<const double> scores, std::span<const int> labels);
double roc_auc(const RealMatrix& scores, const BinaryMatrix& labels);

/// First epoch (1-based) whose value reaches `target`; absent if none does.
/// ArgumentError on an empty series.
std::optional<int> epochs_to_target(std::span<const double> series, double target);

}  // namespace rcl
