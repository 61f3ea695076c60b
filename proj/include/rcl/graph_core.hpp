#pragma once

// Entity index spaces and the matrix containers shared by every stage of the
// detection pipeline. Global node order is agents, then parameters, then KPIs.

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace rcl {

using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using BinaryMatrix = Eigen::MatrixXi;

enum class NodeKind { Agent, Param, Kpi };

struct EntityDims {
  int n_agents = 0;
  int n_params = 0;
  int n_kpis = 0;

  /// Throws ArgumentError unless every count is at least one.
  void validate() const;

  int learned_size() const { return n_params + n_kpis; }
  int total() const { return n_agents + n_params + n_kpis; }

  // Global indices into the full (agents + params + KPIs) node space.
  int agent_node(int a) const { return a; }
  int param_node(int p) const { return n_agents + p; }
  int kpi_node(int k) const { return n_agents + n_params + k; }

  NodeKind kind_of(int node) const;
  /// Index of `node` within its own entity set.
  int local_index(int node) const;
  /// "a0", "p3", "k1", ...
  std::string label(int node) const;
  /// Inverse of label(); throws ArgumentError for unknown labels.
  int node_from_label(const std::string& label) const;

  /// Labels of the full node space in global order.
  std::vector<std::string> full_labels() const;
  /// Labels of the parameter/KPI space (the learned block).
  std::vector<std::string> learned_labels() const;

  friend bool operator==(const EntityDims&, const EntityDims&) = default;
};

bool is_binary(const BinaryMatrix& m);
bool is_symmetric(const BinaryMatrix& m);

/// Agent -> (parameter, KPI) relations known from the control plane.
class KnownRelations {
 public:
  KnownRelations() = default;
  /// Requires an N_a x (N_p + N_k) binary matrix in which every agent controls
  /// at least one parameter and subscribes to at least one KPI.
  KnownRelations(BinaryMatrix matrix, EntityDims dims);

  const BinaryMatrix& matrix() const { return matrix_; }
  const EntityDims& dims() const { return dims_; }

  bool controls(int agent, int param) const { return matrix_(agent, param) != 0; }
  bool subscribes(int agent, int kpi) const { return matrix_(agent, dims_.n_params + kpi) != 0; }

 private:
  BinaryMatrix matrix_;
  EntityDims dims_;
};

/// Real-valued interaction scores over the parameter/KPI space.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(RealMatrix values, EntityDims dims);

  const RealMatrix& values() const { return values_; }
  const EntityDims& dims() const { return dims_; }
  double operator()(int i, int j) const { return values_(i, j); }

 private:
  RealMatrix values_;
  EntityDims dims_;
};

struct ScoreBlocks {
  RealMatrix pp;
  RealMatrix pk;
  RealMatrix kp;
  RealMatrix kk;
};

ScoreBlocks blocks(const ScoreMatrix& s);
/// Splits an arbitrary (N_p + N_k)^2 matrix; throws StructuralError on shape mismatch.
ScoreBlocks blocks(const RealMatrix& s, const EntityDims& dims);
RealMatrix reassemble(const ScoreBlocks& b);

/// Binary adjacency over the parameter/KPI space with a zero diagonal.
class LearnedAdjacency {
 public:
  LearnedAdjacency() = default;
  explicit LearnedAdjacency(BinaryMatrix matrix);

  const BinaryMatrix& matrix() const { return matrix_; }
  int size() const { return static_cast<int>(matrix_.rows()); }
  bool edge(int i, int j) const { return matrix_(i, j) != 0; }
  bool symmetric() const { return is_symmetric(matrix_); }
  int edge_count() const;  // unordered pairs, symmetric inputs only

  friend bool operator==(const LearnedAdjacency& a, const LearnedAdjacency& b) {
    return a.matrix_ == b.matrix_;
  }

 private:
  BinaryMatrix matrix_;
};

/// Full conflict-graph adjacency over agents, parameters and KPIs.
///
/// Normally produced by boxplus_augment(). The unchecked constructor accepts
/// any square matrix of the right size so that violations can be reported by
/// validate_full_adjacency() rather than thrown on construction.
class FullAdjacency {
 public:
  FullAdjacency() = default;
  FullAdjacency(BinaryMatrix matrix, EntityDims dims);

  const BinaryMatrix& matrix() const { return matrix_; }
  const EntityDims& dims() const { return dims_; }
  bool edge(int i, int j) const { return matrix_(i, j) != 0; }

  BinaryMatrix learned_block() const;
  BinaryMatrix known_block() const;

 private:
  BinaryMatrix matrix_;
  EntityDims dims_;
};

FullAdjacency boxplus_augment(const LearnedAdjacency& learned, const KnownRelations& known);
/// Same assembly from a raw N_a x (N_p + N_k) binary matrix; only shape and
/// binariness are checked, so agents without relations are allowed here.
FullAdjacency boxplus_augment(const LearnedAdjacency& learned, const BinaryMatrix& known, const EntityDims& dims);

enum class DiagnosticKind { Shape, NonBinary, Asymmetry, AgentBlock, LearnedDiagonal };

struct Diagnostic {
  DiagnosticKind kind;
  int row = -1;
  int col = -1;
  std::string message;
};

/// One diagnostic per violated invariant; empty when the matrix is a valid
/// full adjacency. Asymmetry reports the first offending location.
std::vector<Diagnostic> validate_full_adjacency(const FullAdjacency& a);

}  // namespace rcl
