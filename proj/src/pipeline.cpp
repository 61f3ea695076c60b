#include "rcl/pipeline.hpp"

#include "rcl/csv.hpp"
#include "rcl/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace rcl {

Detection detect(const ModelParams& params, const Dataset& ds, const BinarizationMethod& method,
                 const IdentifyOptions& opts) {
  Detection d{score_dataset(params, ds), LearnedAdjacency{}, FullAdjacency{}, {}};
  d.learned = binarize(d.scores, method);
  d.full = boxplus_augment(d.learned, ds.known);
  d.conflicts = identify_conflicts(d.full, opts);
  return d;
}

void write_detection(const Detection& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const EntityDims& dims = d.scores.dims();
  write_matrix_csv(dir / "scores.csv", d.scores.values(), dims.learned_labels());
  write_matrix_csv(dir / "learned_adjacency.csv", d.learned.matrix(), dims.learned_labels());
  write_matrix_csv(dir / "full_adjacency.csv", d.full.matrix(), dims.full_labels());
  write_conflicts_csv(d.conflicts, dims, dir / "conflicts.csv");
}

void write_trace_csv(const TrainTrace& trace, const std::filesystem::path& path, int run_id) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "run_id,epoch,loss,accuracy,auc,alpha\n";
  for (const EpochRecord& e : trace.epochs) {
    out << run_id << ',' << e.epoch << ',' << format_double(e.loss) << ',' << format_double(e.accuracy) << ','
        << (e.auc ? format_double(*e.auc) : "") << ',' << format_double(std::exp(e.log_alpha)) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

double label_density(const BinaryMatrix& labels) {
  if (labels.size() == 0) return 0.0;
  return static_cast<double>(labels.count()) / static_cast<double>(labels.size());
}

std::string render_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      line += row[c];
      if (c + 1 < row.size()) line += std::string(width[c] - row[c].size() + 2, ' ');
    }
    out << line << '\n';
  }
  return out.str();
}

}  // namespace rcl
