#pragma once

// Rule-based conflict identification over a full conflict-graph adjacency.
//
//   Direct    two agents control the same parameter.
//   Indirect  two agents control distinct parameters that share a KPI neighbour.
//   Implicit  an agent controls p, another subscribes to k, and p reaches k
//             through one same-entity coupling (p-p'-k or p-k'-k), unless the
//             same agent pair already has a direct/indirect conflict covering
//             both endpoints.

#include "rcl/datagen.hpp"
#include "rcl/graph_core.hpp"

#include <compare>
#include <filesystem>
#include <string>
#include <vector>

namespace rcl {

enum class ConflictKind { Direct, Indirect, Implicit };

std::string to_string(ConflictKind k);
ConflictKind parse_conflict_kind(const std::string& s);

struct Conflict {
  ConflictKind kind = ConflictKind::Direct;
  int agent_i = 0;  // global agent node index, agent_i < agent_j
  int agent_j = 0;
  /// Global node indices. Direct: [p]; Indirect: [p1, k, p2] with p1 < p2;
  /// Implicit: the mediating path from the controlled parameter to the KPI.
  std::vector<int> witness;

  auto operator<=>(const Conflict&) const = default;
};

/// Sorted, duplicate-free set of conflicts. Two conflicts are the same when
/// kind, agent pair and witness node set agree; among such duplicates the
/// lexicographically smallest witness path is kept.
class ConflictSet {
 public:
  ConflictSet() = default;
  explicit ConflictSet(std::vector<Conflict> items);

  /// Canonicalizes agent order and witness orientation, then inserts if new.
  bool insert(Conflict c);
  bool contains(const Conflict& c) const;

  const std::vector<Conflict>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  ConflictSet of_kind(ConflictKind k) const;
  std::size_t count(ConflictKind k) const;

  friend bool operator==(const ConflictSet&, const ConflictSet&) = default;

 private:
  std::vector<Conflict> items_;
};

Conflict canonical(Conflict c);

struct IdentifyOptions {
  /// Longest implicit chain in edges. 2 means a single mediator.
  int max_path_len = 2;
};

/// StructuralError unless `a` passes validate_full_adjacency().
ConflictSet identify_conflicts(const FullAdjacency& a, const IdentifyOptions& opts = {});
ConflictSet ground_truth_conflicts(const ConflictModelSpec& spec, const IdentifyOptions& opts = {});

std::string witness_string(const Conflict& c, const EntityDims& dims);

/// conflicts.csv: kind,agent_i,agent_j,witness (witness labels joined by ';').
void write_conflicts_csv(const ConflictSet& set, const EntityDims& dims, const std::filesystem::path& path);
ConflictSet read_conflicts_csv(const std::filesystem::path& path, const EntityDims& dims);

}  // namespace rcl
