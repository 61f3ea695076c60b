#pragma once

// End-to-end detection (score, binarize, augment, identify) and the small
// text outputs shared by the command-line tool and the Python module.

#include "rcl/binarize.hpp"
#include "rcl/datagen.hpp"
#include "rcl/identify.hpp"
#include "rcl/metrics.hpp"
#include "rcl/twotower.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace rcl {

struct Detection {
  ScoreMatrix scores;
  LearnedAdjacency learned;
  FullAdjacency full;
  ConflictSet conflicts;
};

Detection detect(const ModelParams& params, const Dataset& ds, const BinarizationMethod& method,
                 const IdentifyOptions& opts = {});

/// Writes scores.csv, learned_adjacency.csv and full_adjacency.csv (with node
/// label headers) and conflicts.csv into `dir`.
void write_detection(const Detection& d, const std::filesystem::path& dir);

/// trace.csv: run_id,epoch,loss,accuracy,auc,alpha. An absent AUC is an empty field.
void write_trace_csv(const TrainTrace& trace, const std::filesystem::path& path, int run_id = 0);

/// Fraction of ones in the label matrix.
double label_density(const BinaryMatrix& labels);

/// Left-aligned columns separated by two spaces.
std::string render_table(const std::vector<std::vector<std::string>>& rows);

}  // namespace rcl
