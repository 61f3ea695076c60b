#include "rcl/graph_core.hpp"

#include "rcl/error.hpp"

#include <sstream>

namespace rcl {

namespace {

std::string shape_str(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

void EntityDims::validate() const {
  if (n_agents < 1 || n_params < 1 || n_kpis < 1) {
    throw ArgumentError("entity counts must be >= 1 (got agents=" + std::to_string(n_agents) +
                        ", params=" + std::to_string(n_params) +
                        ", kpis=" + std::to_string(n_kpis) + ")");
  }
}

NodeKind EntityDims::kind_of(int node) const {
  if (node < 0 || node >= total()) throw ArgumentError("node index out of range: " + std::to_string(node));
  if (node < n_agents) return NodeKind::Agent;
  if (node < n_agents + n_params) return NodeKind::Param;
  return NodeKind::Kpi;
}

int EntityDims::local_index(int node) const {
  switch (kind_of(node)) {
    case NodeKind::Agent: return node;
    case NodeKind::Param: return node - n_agents;
    case NodeKind::Kpi: return node - n_agents - n_params;
  }
  return -1;
}

std::string EntityDims::label(int node) const {
  static constexpr char prefix[] = {'a', 'p', 'k'};
  return prefix[static_cast<int>(kind_of(node))] + std::to_string(local_index(node));
}

int EntityDims::node_from_label(const std::string& label) const {
  if (label.size() < 2) throw ArgumentError("bad node label '" + label + "'");
  int idx = 0;
  try {
    std::size_t used = 0;
    idx = std::stoi(label.substr(1), &used);
    if (used != label.size() - 1) throw ArgumentError("");
  } catch (const std::exception&) {
    throw ArgumentError("bad node label '" + label + "'");
  }
  int node = -1;
  switch (label[0]) {
    case 'a': node = idx < n_agents ? agent_node(idx) : -1; break;
    case 'p': node = idx < n_params ? param_node(idx) : -1; break;
    case 'k': node = idx < n_kpis ? kpi_node(idx) : -1; break;
    default: break;
  }
  if (idx < 0 || node < 0) throw ArgumentError("unknown node label '" + label + "'");
  return node;
}

std::vector<std::string> EntityDims::full_labels() const {
  std::vector<std::string> out;
  out.reserve(total());
  for (int i = 0; i < total(); ++i) out.push_back(label(i));
  return out;
}

std::vector<std::string> EntityDims::learned_labels() const {
  std::vector<std::string> out;
  out.reserve(learned_size());
  for (int i = n_agents; i < total(); ++i) out.push_back(label(i));
  return out;
}

bool is_binary(const BinaryMatrix& m) {
  return ((m.array() == 0) || (m.array() == 1)).all();
}

bool is_symmetric(const BinaryMatrix& m) {
  return m.rows() == m.cols() && m == m.transpose();
}

KnownRelations::KnownRelations(BinaryMatrix matrix, EntityDims dims)
    : matrix_(std::move(matrix)), dims_(dims) {
  dims_.validate();
  if (matrix_.rows() != dims_.n_agents || matrix_.cols() != dims_.learned_size()) {
    throw StructuralError("known relations must be " +
                          shape_str(dims_.n_agents, dims_.learned_size()) + ", got " +
                          shape_str(matrix_.rows(), matrix_.cols()));
  }
  if (!is_binary(matrix_)) throw ArgumentError("known relations must be binary");
  for (int a = 0; a < dims_.n_agents; ++a) {
    if (matrix_.row(a).head(dims_.n_params).sum() == 0) {
      throw ArgumentError("agent a" + std::to_string(a) + " controls no parameter");
    }
    if (matrix_.row(a).tail(dims_.n_kpis).sum() == 0) {
      throw ArgumentError("agent a" + std::to_string(a) + " subscribes to no KPI");
    }
  }
}

ScoreMatrix::ScoreMatrix(RealMatrix values, EntityDims dims) : values_(std::move(values)), dims_(dims) {
  const int n = dims_.learned_size();
  if (values_.rows() != n || values_.cols() != n) {
    throw StructuralError("score matrix must be " + shape_str(n, n) + ", got " +
                          shape_str(values_.rows(), values_.cols()));
  }
  if (!values_.allFinite()) throw ArgumentError("score matrix contains non-finite entries");
}

ScoreBlocks blocks(const RealMatrix& s, const EntityDims& dims) {
  const int np = dims.n_params;
  const int nk = dims.n_kpis;
  if (s.rows() != np + nk || s.cols() != np + nk) {
    throw StructuralError("score matrix " + shape_str(s.rows(), s.cols()) +
                          " does not match dims " + shape_str(np + nk, np + nk));
  }
  return {s.topLeftCorner(np, np), s.topRightCorner(np, nk), s.bottomLeftCorner(nk, np),
          s.bottomRightCorner(nk, nk)};
}

ScoreBlocks blocks(const ScoreMatrix& s) { return blocks(s.values(), s.dims()); }

RealMatrix reassemble(const ScoreBlocks& b) {
  if (b.pp.rows() != b.pk.rows() || b.kp.rows() != b.kk.rows() || b.pp.cols() != b.kp.cols() ||
      b.pk.cols() != b.kk.cols()) {
    throw StructuralError("score blocks have inconsistent shapes");
  }
  RealMatrix s(b.pp.rows() + b.kp.rows(), b.pp.cols() + b.pk.cols());
  s << b.pp, b.pk, b.kp, b.kk;
  return s;
}

LearnedAdjacency::LearnedAdjacency(BinaryMatrix matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols()) {
    throw StructuralError("learned adjacency must be square, got " +
                          shape_str(matrix_.rows(), matrix_.cols()));
  }
  if (!is_binary(matrix_)) throw ArgumentError("learned adjacency must be binary");
  if (matrix_.diagonal().any()) throw ArgumentError("learned adjacency must have a zero diagonal");
}

int LearnedAdjacency::edge_count() const {
  int count = 0;
  for (int i = 0; i < size(); ++i)
    for (int j = i + 1; j < size(); ++j) count += edge(i, j) ? 1 : 0;
  return count;
}

FullAdjacency::FullAdjacency(BinaryMatrix matrix, EntityDims dims) : matrix_(std::move(matrix)), dims_(dims) {
  dims_.validate();
  if (matrix_.rows() != dims_.total() || matrix_.cols() != dims_.total()) {
    throw StructuralError("full adjacency must be " + shape_str(dims_.total(), dims_.total()) +
                          ", got " + shape_str(matrix_.rows(), matrix_.cols()));
  }
}

BinaryMatrix FullAdjacency::learned_block() const {
  const int n = dims_.learned_size();
  return matrix_.bottomRightCorner(n, n);
}

BinaryMatrix FullAdjacency::known_block() const {
  return matrix_.topRightCorner(dims_.n_agents, dims_.learned_size());
}

FullAdjacency boxplus_augment(const LearnedAdjacency& learned, const KnownRelations& known) {
  return boxplus_augment(learned, known.matrix(), known.dims());
}

FullAdjacency boxplus_augment(const LearnedAdjacency& learned, const BinaryMatrix& known, const EntityDims& dims) {
  dims.validate();
  const int n = dims.learned_size();
  if (known.rows() != dims.n_agents || known.cols() != n) {
    throw StructuralError("known relations are " + shape_str(known.rows(), known.cols()) + " but dims require " +
                          shape_str(dims.n_agents, n));
  }
  if (!is_binary(known)) throw ArgumentError("known relations must be binary");
  if (learned.size() != n) {
    throw StructuralError("learned adjacency is " + shape_str(learned.size(), learned.size()) +
                          " but dims require " + shape_str(n, n));
  }
  const int na = dims.n_agents;
  BinaryMatrix full(na + n, na + n);
  full << BinaryMatrix::Identity(na, na), known, known.transpose(), learned.matrix();
  return FullAdjacency(std::move(full), dims);
}

std::vector<Diagnostic> validate_full_adjacency(const FullAdjacency& a) {
  std::vector<Diagnostic> out;
  const BinaryMatrix& m = a.matrix();
  const EntityDims& dims = a.dims();
  if (m.rows() != dims.total() || m.cols() != dims.total()) {
    out.push_back({DiagnosticKind::Shape, -1, -1, "matrix shape does not match entity dims"});
    return out;
  }
  if (!is_binary(m)) {
    for (int i = 0; i < m.rows() && out.empty(); ++i)
      for (int j = 0; j < m.cols(); ++j)
        if (m(i, j) != 0 && m(i, j) != 1) {
          out.push_back({DiagnosticKind::NonBinary, i, j, "non-binary entry"});
          break;
        }
  }
  for (int i = 0; i < m.rows(); ++i) {
    bool found = false;
    for (int j = i + 1; j < m.cols(); ++j) {
      if (m(i, j) != m(j, i)) {
        std::ostringstream msg;
        msg << "asymmetric entry (" << dims.label(i) << ", " << dims.label(j) << ")";
        out.push_back({DiagnosticKind::Asymmetry, i, j, msg.str()});
        found = true;
        break;
      }
    }
    if (found) break;
  }
  const int na = dims.n_agents;
  if (m.topLeftCorner(na, na) != BinaryMatrix::Identity(na, na)) {
    out.push_back({DiagnosticKind::AgentBlock, -1, -1, "agent-agent block is not the identity"});
  }
  for (int i = na; i < dims.total(); ++i) {
    if (m(i, i) != 0) {
      out.push_back({DiagnosticKind::LearnedDiagonal, i, i, "self-loop on " + dims.label(i)});
      break;
    }
  }
  return out;
}

}  // namespace rcl
