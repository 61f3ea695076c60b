#pragma once

// Synthetic linear-Gaussian conflict model.
//
// Parameters are drawn i.i.d. Gaussian per row and mixed through the parameter
// coupling graph, x_p = (I + b*C_p) x_raw. KPIs respond linearly,
// x_k = (I + b*C_k) W^T x_p + noise, where b is the coupling strength.

#include "rcl/graph_core.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>

namespace rcl {

struct ConflictModelSpec {
  EntityDims dims;
  BinaryMatrix control;         // N_a x N_p
  BinaryMatrix subscribe;       // N_a x N_k
  RealMatrix influence;         // N_p x N_k, zero = no influence
  BinaryMatrix param_coupling;  // N_p x N_p, symmetric, zero diagonal
  BinaryMatrix kpi_coupling;    // N_k x N_k, symmetric, zero diagonal
  double coupling_strength = 0.5;
  double noise_std = 0.1;
  RealVector param_mean;
  RealVector param_std;
  std::uint64_t seed = 0;

  /// StructuralError on shape mismatches, ArgumentError on invalid values.
  void validate() const;

  KnownRelations known() const;
  BinaryMatrix labels() const;
  /// Ground-truth parameter/KPI block: couplings plus labelled cross edges.
  LearnedAdjacency truth_learned() const;
  FullAdjacency truth_adjacency() const;

  ConflictModelSpec with_seed(std::uint64_t s) const {
    ConflictModelSpec out = *this;
    out.seed = s;
    return out;
  }

  friend bool operator==(const ConflictModelSpec&, const ConflictModelSpec&) = default;
};

void to_json(nlohmann::json& j, const ConflictModelSpec& spec);
void from_json(const nlohmann::json& j, ConflictModelSpec& spec);

struct Dataset {
  RealMatrix x_p;  // N_p x L
  RealMatrix x_k;  // N_k x L
  BinaryMatrix labels;
  LearnedAdjacency truth_learned;
  KnownRelations known;
  ConflictModelSpec spec;

  int length() const { return static_cast<int>(x_p.cols()); }
};

/// Four agents, seven parameters, four KPIs wired so that the ground truth holds
/// direct, indirect and implicit conflicts. Deterministic.
ConflictModelSpec default_topology();

Dataset generate(const ConflictModelSpec& spec, int length);

inline constexpr int kDatasetSchemaVersion = 1;

/// Writes spec.json, x_p.csv, x_k.csv, labels.csv, truth_learned.csv and known.csv
/// into `dir` (created if missing).
void write_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace rcl
