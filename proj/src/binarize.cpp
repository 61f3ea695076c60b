#include "rcl/binarize.hpp"

#include "rcl/csv.hpp"
#include "rcl/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

namespace rcl {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void require_square_finite(const RealMatrix& s) {
  if (s.rows() != s.cols()) throw StructuralError("score matrix must be square");
  if (!s.allFinite()) throw ArgumentError("score matrix contains non-finite entries");
}

double parse_number(const std::string& text, const std::string& whole) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
    throw ArgumentError("bad binarizer argument in '" + whole + "'");
  }
  return v;
}

std::vector<std::size_t> descending_order(std::span<const double> z) {
  std::vector<std::size_t> order(z.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return z[a] > z[b]; });
  return order;
}

}  // namespace

void validate(const BinarizationMethod& m) {
  std::visit(overloaded{
                 [](const Sparsemax&) {},
                 [](const StaticThreshold& t) {
                   if (!std::isfinite(t.tau)) throw ArgumentError("threshold must be finite");
                 },
                 [](const TopK& t) {
                   if (t.k < 1) throw ArgumentError("top-K needs k >= 1");
                 },
                 [](const Quantile& q) {
                   if (!(q.q > 0.0 && q.q < 1.0)) throw ArgumentError("quantile must lie in (0, 1)");
                 },
             },
             m);
}

BinarizationMethod parse_binarizer(const std::string& text) {
  if (text == "sparsemax") return Sparsemax{true};
  if (text == "sparsemax-unmasked") return Sparsemax{false};
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ArgumentError("unknown binarizer '" + text + "'");
  const std::string name = text.substr(0, colon);
  const std::string arg = text.substr(colon + 1);
  BinarizationMethod m;
  if (name == "threshold") {
    m = StaticThreshold{parse_number(arg, text)};
  } else if (name == "topk") {
    const double k = parse_number(arg, text);
    if (k != std::floor(k) || k < 1 || k > 1e9) throw ArgumentError("top-K needs a positive integer: '" + text + "'");
    m = TopK{static_cast<int>(k)};
  } else if (name == "quantile") {
    m = Quantile{parse_number(arg, text)};
  } else {
    throw ArgumentError("unknown binarizer '" + text + "'");
  }
  validate(m);
  return m;
}

std::string to_string(const BinarizationMethod& m) {
  return std::visit(overloaded{
                        [](const Sparsemax& s) -> std::string {
                          return s.mask_diagonal ? "sparsemax" : "sparsemax-unmasked";
                        },
                        [](const StaticThreshold& t) { return "threshold:" + format_double(t.tau); },
                        [](const TopK& t) { return "topk:" + std::to_string(t.k); },
                        [](const Quantile& q) { return "quantile:" + format_double(q.q); },
                    },
                    m);
}

SparsemaxResult sparsemax(std::span<const double> z) {
  if (z.empty()) throw ArgumentError("sparsemax of an empty vector");
  for (double v : z)
    if (!std::isfinite(v)) throw ArgumentError("sparsemax input contains non-finite entries");

  const auto order = descending_order(z);
  // Support size: the largest k with 1 + k * z_(k) > sum_{j<=k} z_(j).
  double cumsum = 0.0;
  double support_sum = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const double v = z[order[i]];
    cumsum += v;
    if (1.0 + static_cast<double>(i + 1) * v > cumsum) {
      k = i + 1;
      support_sum = cumsum;
    }
  }
  SparsemaxResult r;
  r.support = k;
  r.tau = (support_sum - 1.0) / static_cast<double>(k);
  r.p.assign(z.size(), 0.0);
  for (std::size_t i = 0; i < k; ++i) r.p[order[i]] = std::max(z[order[i]] - r.tau, 0.0);
  return r;
}

std::vector<double> sparsemax_row(std::span<const double> z) { return sparsemax(z).p; }

RealMatrix sparsemax_matrix(const RealMatrix& s, bool mask_diagonal) {
  require_square_finite(s);
  const Eigen::Index n = s.rows();
  RealMatrix p = RealMatrix::Zero(n, n);
  std::vector<double> row;
  for (Eigen::Index i = 0; i < n; ++i) {
    row.clear();
    for (Eigen::Index j = 0; j < n; ++j)
      if (!mask_diagonal || j != i) row.push_back(s(i, j));
    if (row.empty()) continue;  // 1x1 masked: nothing to distribute
    const auto proj = sparsemax_row(row);
    std::size_t c = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (!mask_diagonal || j != i) p(i, j) = proj[c++];
  }
  return p;
}

double off_diagonal_quantile(const RealMatrix& s, double q) {
  require_square_finite(s);
  std::vector<double> vals;
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    for (Eigen::Index j = 0; j < s.cols(); ++j)
      if (i != j) vals.push_back(s(i, j));
  if (vals.empty()) throw ArgumentError("quantile of an empty off-diagonal");
  std::sort(vals.begin(), vals.end());
  const double pos = q * static_cast<double>(vals.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, vals.size() - 1);
  return vals[lo] + (pos - static_cast<double>(lo)) * (vals[hi] - vals[lo]);
}

LearnedAdjacency binarize_rows(const RealMatrix& s, const BinarizationMethod& m) {
  require_square_finite(s);
  validate(m);
  const Eigen::Index n = s.rows();
  BinaryMatrix a = BinaryMatrix::Zero(n, n);

  std::visit(overloaded{
                 [&](const Sparsemax& sm) {
                   const RealMatrix p = sparsemax_matrix(s, sm.mask_diagonal);
                   a = (p.array() > 0.0).cast<int>().matrix();
                 },
                 [&](const StaticThreshold& t) { a = (s.array() > t.tau).cast<int>().matrix(); },
                 [&](const TopK& t) {
                   if (t.k >= n) {
                     throw ArgumentError("top-K needs k < row length (" + std::to_string(n) + "), got " +
                                         std::to_string(t.k));
                   }
                   std::vector<double> row;
                   std::vector<Eigen::Index> cols;
                   for (Eigen::Index i = 0; i < n; ++i) {
                     row.clear();
                     cols.clear();
                     for (Eigen::Index j = 0; j < n; ++j)
                       if (j != i) {
                         row.push_back(s(i, j));
                         cols.push_back(j);
                       }
                     const auto order = descending_order(row);
                     for (int r = 0; r < t.k; ++r) a(i, cols[order[static_cast<std::size_t>(r)]]) = 1;
                   }
                 },
                 [&](const Quantile& q) {
                   const double cut = off_diagonal_quantile(s, q.q);
                   a = (s.array() > cut).cast<int>().matrix();
                 },
             },
             m);
  a.diagonal().setZero();
  return LearnedAdjacency(std::move(a));
}

LearnedAdjacency symmetrize(const LearnedAdjacency& a) {
  const BinaryMatrix& m = a.matrix();
  return LearnedAdjacency(((m.array() != 0) || (m.transpose().array() != 0)).cast<int>().matrix());
}

LearnedAdjacency binarize(const RealMatrix& s, const BinarizationMethod& m) { return symmetrize(binarize_rows(s, m)); }

LearnedAdjacency binarize(const ScoreMatrix& s, const BinarizationMethod& m) { return binarize(s.values(), m); }

}  // namespace rcl
