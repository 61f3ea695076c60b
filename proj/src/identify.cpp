#include "rcl/identify.hpp"

#include "rcl/csv.hpp"
#include "rcl/error.hpp"

#include <algorithm>
#include <fstream>

namespace rcl {

std::string to_string(ConflictKind k) {
  switch (k) {
    case ConflictKind::Direct: return "direct";
    case ConflictKind::Indirect: return "indirect";
    case ConflictKind::Implicit: return "implicit";
  }
  return "?";
}

ConflictKind parse_conflict_kind(const std::string& s) {
  if (s == "direct") return ConflictKind::Direct;
  if (s == "indirect") return ConflictKind::Indirect;
  if (s == "implicit") return ConflictKind::Implicit;
  throw SchemaError("unknown conflict kind '" + s + "'");
}

Conflict canonical(Conflict c) {
  if (c.agent_i > c.agent_j) std::swap(c.agent_i, c.agent_j);
  if (c.kind == ConflictKind::Indirect && c.witness.size() == 3 && c.witness[0] > c.witness[2]) {
    std::swap(c.witness[0], c.witness[2]);
  }
  return c;
}

namespace {

// Identity of a conflict: kind, unordered agents, unordered witness.
struct Key {
  ConflictKind kind;
  int agent_i;
  int agent_j;
  std::vector<int> nodes;
  auto operator<=>(const Key&) const = default;
};

Key key_of(const Conflict& c) {
  Key k{c.kind, c.agent_i, c.agent_j, c.witness};
  std::sort(k.nodes.begin(), k.nodes.end());
  return k;
}

bool key_less(const Conflict& a, const Conflict& b) { return key_of(a) < key_of(b); }

}  // namespace

ConflictSet::ConflictSet(std::vector<Conflict> items) {
  for (auto& c : items) insert(std::move(c));
}

bool ConflictSet::insert(Conflict c) {
  c = canonical(std::move(c));
  auto it = std::lower_bound(items_.begin(), items_.end(), c, key_less);
  if (it != items_.end() && key_of(*it) == key_of(c)) {
    // Same identity reached through another path order: keep the smallest.
    if (c.witness < it->witness) *it = std::move(c);
    return false;
  }
  items_.insert(it, std::move(c));
  return true;
}

bool ConflictSet::contains(const Conflict& c) const {
  return std::binary_search(items_.begin(), items_.end(), canonical(c), key_less);
}

ConflictSet ConflictSet::of_kind(ConflictKind k) const {
  ConflictSet out;
  for (const auto& c : items_)
    if (c.kind == k) out.items_.push_back(c);
  return out;
}

std::size_t ConflictSet::count(ConflictKind k) const {
  return static_cast<std::size_t>(
      std::count_if(items_.begin(), items_.end(), [k](const Conflict& c) { return c.kind == k; }));
}

namespace {

struct Graph {
  const FullAdjacency& a;
  const EntityDims& d;

  bool edge(int u, int v) const { return a.edge(u, v); }
  bool controls(int agent, int p) const { return edge(agent, d.param_node(p)); }
  bool subscribes(int agent, int k) const { return edge(agent, d.kpi_node(k)); }
  bool same_kind(int u, int v) const { return d.kind_of(u) == d.kind_of(v); }
};

// Simple paths param -> ... -> kpi of length 2..max_len through learned nodes,
// carrying at least one same-entity edge.
void chains_from(const Graph& g, int node, int target, int max_len, std::vector<int>& path, bool has_same,
                 std::vector<std::vector<int>>& out) {
  const int len = static_cast<int>(path.size()) - 1;
  if (node == target) {
    if (len >= 2 && has_same) out.push_back(path);
    return;
  }
  if (len == max_len) return;
  for (int next = g.d.n_agents; next < g.d.total(); ++next) {
    if (!g.edge(node, next) || std::find(path.begin(), path.end(), next) != path.end()) continue;
    // Intermediate KPIs other than the target are allowed; the target ends the walk.
    path.push_back(next);
    chains_from(g, next, target, max_len, path, has_same || g.same_kind(node, next), out);
    path.pop_back();
  }
}

}  // namespace

ConflictSet identify_conflicts(const FullAdjacency& a, const IdentifyOptions& opts) {
  const auto diags = validate_full_adjacency(a);
  if (!diags.empty()) throw StructuralError("invalid full adjacency: " + diags.front().message);
  if (opts.max_path_len < 2) throw ArgumentError("max_path_len must be >= 2");

  const EntityDims& d = a.dims();
  const Graph g{a, d};
  ConflictSet out;

  for (int ai = 0; ai < d.n_agents; ++ai) {
    for (int aj = ai + 1; aj < d.n_agents; ++aj) {
      for (int p = 0; p < d.n_params; ++p) {
        if (g.controls(ai, p) && g.controls(aj, p)) {
          out.insert({ConflictKind::Direct, ai, aj, {d.param_node(p)}});
        }
      }
    }
  }

  for (int a1 = 0; a1 < d.n_agents; ++a1) {
    for (int a2 = 0; a2 < d.n_agents; ++a2) {
      if (a1 == a2) continue;
      for (int p1 = 0; p1 < d.n_params; ++p1) {
        if (!g.controls(a1, p1)) continue;
        for (int p2 = 0; p2 < d.n_params; ++p2) {
          if (p2 == p1 || !g.controls(a2, p2)) continue;
          for (int k = 0; k < d.n_kpis; ++k) {
            const int pn1 = d.param_node(p1), pn2 = d.param_node(p2), kn = d.kpi_node(k);
            if (g.edge(pn1, kn) && g.edge(pn2, kn)) out.insert({ConflictKind::Indirect, a1, a2, {pn1, kn, pn2}});
          }
        }
      }
    }
  }

  // Endpoints already explained by a direct or indirect conflict of the same pair.
  auto covered = [&](int ai, int aj, int pn, int kn) {
    const int lo = std::min(ai, aj), hi = std::max(ai, aj);
    for (const Conflict& c : out) {
      if (c.kind == ConflictKind::Implicit || c.agent_i != lo || c.agent_j != hi) continue;
      const bool has_p = std::find(c.witness.begin(), c.witness.end(), pn) != c.witness.end();
      const bool has_k = std::find(c.witness.begin(), c.witness.end(), kn) != c.witness.end();
      if (has_p && has_k) return true;
    }
    return false;
  };

  std::vector<Conflict> implicit;
  std::vector<int> path;
  std::vector<std::vector<int>> chains;
  for (int p1 = 0; p1 < d.n_params; ++p1) {
    for (int k2 = 0; k2 < d.n_kpis; ++k2) {
      const int pn = d.param_node(p1), kn = d.kpi_node(k2);
      chains.clear();
      path.assign(1, pn);
      chains_from(g, pn, kn, opts.max_path_len, path, false, chains);
      if (chains.empty()) continue;
      for (int a1 = 0; a1 < d.n_agents; ++a1) {
        if (!g.controls(a1, p1)) continue;
        for (int a2 = 0; a2 < d.n_agents; ++a2) {
          if (a2 == a1 || !g.subscribes(a2, k2) || covered(a1, a2, pn, kn)) continue;
          for (const auto& chain : chains) implicit.push_back({ConflictKind::Implicit, a1, a2, chain});
        }
      }
    }
  }
  for (auto& c : implicit) out.insert(std::move(c));
  return out;
}

ConflictSet ground_truth_conflicts(const ConflictModelSpec& spec, const IdentifyOptions& opts) {
  spec.validate();
  return identify_conflicts(spec.truth_adjacency(), opts);
}

std::string witness_string(const Conflict& c, const EntityDims& dims) {
  std::string s;
  for (std::size_t i = 0; i < c.witness.size(); ++i) {
    if (i) s += ';';
    s += dims.label(c.witness[i]);
  }
  return s;
}

void write_conflicts_csv(const ConflictSet& set, const EntityDims& dims, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "kind,agent_i,agent_j,witness\n";
  for (const Conflict& c : set) {
    out << to_string(c.kind) << ',' << dims.label(c.agent_i) << ',' << dims.label(c.agent_j) << ','
        << witness_string(c, dims) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

ConflictSet read_conflicts_csv(const std::filesystem::path& path, const EntityDims& dims) {
  const auto rows = read_csv_rows(path);
  if (rows.empty() || rows.front() != std::vector<std::string>{"kind", "agent_i", "agent_j", "witness"}) {
    throw SchemaError(path.string() + ": missing conflicts header");
  }
  ConflictSet set;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 4) throw SchemaError(path.string() + ": row " + std::to_string(r) + " needs 4 fields");
    Conflict c;
    try {
      c.kind = parse_conflict_kind(row[0]);
      c.agent_i = dims.node_from_label(row[1]);
      c.agent_j = dims.node_from_label(row[2]);
      std::string label;
      for (char ch : row[3] + ";") {
        if (ch == ';') {
          c.witness.push_back(dims.node_from_label(label));
          label.clear();
        } else {
          label.push_back(ch);
        }
      }
    } catch (const ArgumentError& e) {
      throw SchemaError(path.string() + ": " + e.what());
    }
    set.insert(std::move(c));
  }
  return set;
}

}  // namespace rcl
