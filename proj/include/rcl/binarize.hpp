#pragma once

// Score binarization: turns a real-valued score matrix into a learned
// adjacency, either via row-wise sparsemax support or one of the classical
// threshold, top-K and quantile rules.

#include "rcl/graph_core.hpp"

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace rcl {

struct Sparsemax {
  /// Project only the off-diagonal entries of each row. The unmasked variant
  /// projects the full row and drops the diagonal afterwards.
  bool mask_diagonal = true;
  friend bool operator==(const Sparsemax&, const Sparsemax&) = default;
};

struct StaticThreshold {
  double tau = 0.0;
  friend bool operator==(const StaticThreshold&, const StaticThreshold&) = default;
};

struct TopK {
  int k = 1;
  friend bool operator==(const TopK&, const TopK&) = default;
};

/// Edge iff the score exceeds the q-quantile of all off-diagonal scores.
struct Quantile {
  double q = 0.5;
  friend bool operator==(const Quantile&, const Quantile&) = default;
};

using BinarizationMethod = std::variant<Sparsemax, StaticThreshold, TopK, Quantile>;

/// Throws ArgumentError for k < 1 or q outside (0, 1).
void validate(const BinarizationMethod& m);

/// "sparsemax", "sparsemax-unmasked", "threshold:<tau>", "topk:<K>", "quantile:<Q>"
BinarizationMethod parse_binarizer(const std::string& text);
std::string to_string(const BinarizationMethod& m);

struct SparsemaxResult {
  std::vector<double> p;
  double tau = 0.0;      // threshold subtracted from the input
  std::size_t support = 0;
};

/// Euclidean projection of z onto the probability simplex (sort-and-threshold).
SparsemaxResult sparsemax(std::span<const double> z);
std::vector<double> sparsemax_row(std::span<const double> z);

/// Row-wise sparsemax of S; with mask_diagonal the diagonal receives zero mass.
RealMatrix sparsemax_matrix(const RealMatrix& s, bool mask_diagonal = true);

/// Row-wise decision before symmetrization (zero diagonal, possibly asymmetric).
LearnedAdjacency binarize_rows(const RealMatrix& s, const BinarizationMethod& m);
/// binarize_rows followed by symmetrize.
LearnedAdjacency binarize(const ScoreMatrix& s, const BinarizationMethod& m);
LearnedAdjacency binarize(const RealMatrix& s, const BinarizationMethod& m);

/// OR rule: (i, j) and (j, i) are edges iff either was.
LearnedAdjacency symmetrize(const LearnedAdjacency& a);

/// Linear-interpolation quantile (numpy's default) of the off-diagonal entries.
double off_diagonal_quantile(const RealMatrix& s, double q);

}  // namespace rcl
