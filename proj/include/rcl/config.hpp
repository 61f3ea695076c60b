#pragma once

// Experiment configuration shared by the CLI and the Python bindings. The JSON
// document mirrors the field names below; "spec" is either "default" or a full
// conflict-model object.

#include "rcl/datagen.hpp"
#include "rcl/sweep.hpp"
#include "rcl/twotower.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rcl {

struct Targets {
  double f1 = 1.0;
  double accuracy = 0.8;
  double auc = 0.8;
};

struct ExperimentConfig {
  std::optional<ConflictModelSpec> spec;  // nullopt: default_topology()
  Hyperparams hp;
  int length = 10000;
  std::vector<std::string> binarizers{"sparsemax", "threshold:tuned", "topk:auto", "quantile:auto"};
  int n_runs = 100;
  std::filesystem::path output_dir = "rcl-out";
  Targets targets;
  int jobs = 0;  // 0: all available cores
  int max_path_len = 2;
  ConflictMatch match = ConflictMatch::Strict;
  std::uint64_t seed = 0;  // root seed for data generation and initialization

  /// The conflict model with the root seed applied.
  ConflictModelSpec resolved_spec() const;
  Hyperparams resolved_hp() const;
  /// Throws ArgumentError/StructuralError on invalid nested values.
  void validate() const;
  SweepConfig sweep_config() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
/// Fields missing from `j` keep their defaults. SchemaError on malformed input.
void from_json(const nlohmann::json& j, ExperimentConfig& c);

ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies RCL_SEED from the environment, if set. ArgumentError when unparsable.
void apply_seed_env(ExperimentConfig& c);

}  // namespace rcl
