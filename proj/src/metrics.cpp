#include "rcl/metrics.hpp"

#include "rcl/error.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace rcl {

F1Score f1_from_counts(long tp, long fp, long fn) {
  if (tp == 0 && fp == 0 && fn == 0) return {1.0, 1.0, 1.0};
  if (tp == 0) {
    return {0.0, 0.0, 0.0};
  }
  const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return {precision, recall, 2.0 * precision * recall / (precision + recall)};
}

F1Score f1_binary(const BinaryMatrix& pred, const BinaryMatrix& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols() || pred.rows() != pred.cols()) {
    throw StructuralError("f1_binary needs two square matrices of equal shape");
  }
  long tp = 0, fp = 0, fn = 0;
  for (Eigen::Index i = 0; i < pred.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < pred.cols(); ++j) {
      const bool p = pred(i, j) != 0;
      const bool t = truth(i, j) != 0;
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
  }
  return f1_from_counts(tp, fp, fn);
}

double accuracy(const RealMatrix& s_pk, const BinaryMatrix& y) {
  if (s_pk.rows() != y.rows() || s_pk.cols() != y.cols()) throw StructuralError("accuracy: shape mismatch");
  if (s_pk.size() == 0) throw ArgumentError("accuracy of an empty matrix");
  long correct = 0;
  for (Eigen::Index i = 0; i < s_pk.rows(); ++i)
    for (Eigen::Index j = 0; j < s_pk.cols(); ++j) correct += (s_pk(i, j) > 0.0) == (y(i, j) != 0);
  return static_cast<double>(correct) / static_cast<double>(s_pk.size());
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw StructuralError("roc_auc: scores and labels differ in length");
  // Rank-sum form of Mann-Whitney U: average ranks over tied groups.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double pos_rank_sum = 0.0;
  long n_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) {
      if (labels[order[t]] != 0) {
        pos_rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j + 1;
  }
  const long n_neg = static_cast<long>(scores.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) throw UndefinedMetricError("AUC needs both positive and negative labels");
  const double u = pos_rank_sum - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double roc_auc(const RealMatrix& scores, const BinaryMatrix& labels) {
  if (scores.rows() != labels.rows() || scores.cols() != labels.cols()) {
    throw StructuralError("roc_auc: shape mismatch");
  }
  return roc_auc(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())),
                 std::span<const int>(labels.data(), static_cast<std::size_t>(labels.size())));
}

std::optional<int> epochs_to_target(std::span<const double> series, double target) {
  if (series.empty()) throw ArgumentError("epochs_to_target on an empty series");
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i] >= target) return static_cast<int>(i) + 1;
  }
  return std::nullopt;
}

}  // namespace rcl
