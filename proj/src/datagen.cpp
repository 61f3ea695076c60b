#include "rcl/datagen.hpp"

#include "rcl/csv.hpp"
#include "rcl/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <utility>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace rcl {

namespace {

using json = nlohmann::json;

void require_shape(const char* name, Eigen::Index rows, Eigen::Index cols, Eigen::Index want_rows,
                   Eigen::Index want_cols) {
  if (rows != want_rows || cols != want_cols) {
    std::ostringstream msg;
    msg << name << " is " << rows << "x" << cols << ", expected " << want_rows << "x" << want_cols;
    throw StructuralError(msg.str());
  }
}

void require_coupling(const char* name, const BinaryMatrix& c) {
  if (!is_binary(c)) throw ArgumentError(std::string(name) + " must be binary");
  if (!is_symmetric(c)) throw ArgumentError(std::string(name) + " must be symmetric");
  if (c.diagonal().any()) throw ArgumentError(std::string(name) + " must have a zero diagonal");
}

template <typename Matrix>
json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> matrix_from_json(const json& j, const char* name) {
  if (!j.is_array()) throw SchemaError(std::string(name) + " must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows ? static_cast<Eigen::Index>(j.front().size()) : 0;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw SchemaError(std::string(name) + " has ragged rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<Scalar>();
  }
  return m;
}

RealVector vector_from_json(const json& j, const char* name) {
  if (!j.is_array()) throw SchemaError(std::string(name) + " must be an array");
  RealVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

// 64-bit FNV-1a over the raw bytes of a file.
std::string file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

constexpr const char* kDataFiles[] = {"x_p.csv", "x_k.csv", "labels.csv", "truth_learned.csv", "known.csv"};

}  // namespace

void ConflictModelSpec::validate() const {
  dims.validate();
  const int na = dims.n_agents, np = dims.n_params, nk = dims.n_kpis;
  require_shape("control", control.rows(), control.cols(), na, np);
  require_shape("subscribe", subscribe.rows(), subscribe.cols(), na, nk);
  require_shape("influence", influence.rows(), influence.cols(), np, nk);
  require_shape("param_coupling", param_coupling.rows(), param_coupling.cols(), np, np);
  require_shape("kpi_coupling", kpi_coupling.rows(), kpi_coupling.cols(), nk, nk);
  require_shape("param_mean", param_mean.size(), 1, np, 1);
  require_shape("param_std", param_std.size(), 1, np, 1);

  if (!is_binary(control) || !is_binary(subscribe)) throw ArgumentError("control/subscribe must be binary");
  require_coupling("param_coupling", param_coupling);
  require_coupling("kpi_coupling", kpi_coupling);
  if (!influence.allFinite() || !param_mean.allFinite() || !param_std.allFinite() ||
      !std::isfinite(noise_std) || !std::isfinite(coupling_strength)) {
    throw ArgumentError("conflict model contains non-finite values");
  }
  if (!(noise_std > 0.0)) throw ArgumentError("noise_std must be > 0");
  if ((param_std.array() <= 0.0).any()) throw ArgumentError("param_std entries must be > 0");
  for (int p = 0; p < np; ++p) {
    if (control.col(p).sum() == 0) throw ArgumentError("parameter p" + std::to_string(p) + " has no controller");
  }
  for (int k = 0; k < nk; ++k) {
    if ((influence.col(k).array() == 0.0).all()) {
      throw ArgumentError("KPI k" + std::to_string(k) + " is not influenced by any parameter");
    }
  }
  known();  // agent rows must control and observe something
}

KnownRelations ConflictModelSpec::known() const {
  BinaryMatrix m(dims.n_agents, dims.learned_size());
  m << control, subscribe;
  return KnownRelations(std::move(m), dims);
}

BinaryMatrix ConflictModelSpec::labels() const {
  return (influence.array() != 0.0).cast<int>().matrix();
}

LearnedAdjacency ConflictModelSpec::truth_learned() const {
  const BinaryMatrix y = labels();
  BinaryMatrix m(dims.learned_size(), dims.learned_size());
  m << param_coupling, y, y.transpose(), kpi_coupling;
  return LearnedAdjacency(std::move(m));
}

FullAdjacency ConflictModelSpec::truth_adjacency() const { return boxplus_augment(truth_learned(), known()); }

void to_json(json& j, const ConflictModelSpec& spec) {
  j = json{{"n_agents", spec.dims.n_agents},
           {"n_params", spec.dims.n_params},
           {"n_kpis", spec.dims.n_kpis},
           {"control", matrix_to_json(spec.control)},
           {"subscribe", matrix_to_json(spec.subscribe)},
           {"influence", matrix_to_json(spec.influence)},
           {"param_coupling", matrix_to_json(spec.param_coupling)},
           {"kpi_coupling", matrix_to_json(spec.kpi_coupling)},
           {"coupling_strength", spec.coupling_strength},
           {"noise_std", spec.noise_std},
           {"param_mean", std::vector<double>(spec.param_mean.begin(), spec.param_mean.end())},
           {"param_std", std::vector<double>(spec.param_std.begin(), spec.param_std.end())},
           {"seed", spec.seed}};
}

void from_json(const json& j, ConflictModelSpec& spec) {
  try {
    spec.dims = {j.at("n_agents").get<int>(), j.at("n_params").get<int>(), j.at("n_kpis").get<int>()};
    spec.control = matrix_from_json<int>(j.at("control"), "control");
    spec.subscribe = matrix_from_json<int>(j.at("subscribe"), "subscribe");
    spec.influence = matrix_from_json<double>(j.at("influence"), "influence");
    spec.param_coupling = matrix_from_json<int>(j.at("param_coupling"), "param_coupling");
    spec.kpi_coupling = matrix_from_json<int>(j.at("kpi_coupling"), "kpi_coupling");
    spec.coupling_strength = j.value("coupling_strength", 0.5);
    spec.noise_std = j.at("noise_std").get<double>();
    spec.param_mean = vector_from_json(j.at("param_mean"), "param_mean");
    spec.param_std = vector_from_json(j.at("param_std"), "param_std");
    spec.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("conflict model: ") + e.what());
  }
}

ConflictModelSpec default_topology() {
  // Three interaction clusters: {p0 p1 p2 | k0}, {p3 p4 | k1}, {p5 p6 | k2 k3}.
  // Inside a cluster every parameter drives every KPI and the same-entity
  // members are coupled, so entities with equal interaction profiles are
  // exactly the coupled ones.
  ConflictModelSpec s;
  s.dims = {4, 7, 4};
  // clang-format off
  s.control.resize(4, 7);
  s.control <<
      1, 0, 0, 0, 0, 0, 1,   // a0: p0 p6
      1, 1, 0, 0, 0, 0, 0,   // a1: p0 p1
      0, 0, 1, 1, 0, 1, 0,   // a2: p2 p3 p5
      0, 0, 0, 0, 1, 0, 0;   // a3: p4
  s.subscribe.resize(4, 4);
  s.subscribe <<
      0, 1, 0, 0,            // a0: k1
      1, 0, 0, 0,            // a1: k0
      1, 0, 1, 0,            // a2: k0 k2
      0, 0, 0, 1;            // a3: k3
  s.influence.resize(7, 4);
  s.influence <<
      0.8, 0.0, 0.0, 0.0,
      0.9, 0.0, 0.0, 0.0,
      0.7, 0.0, 0.0, 0.0,
      0.0, 0.9, 0.0, 0.0,
      0.0, 0.6, 0.0, 0.0,
      0.0, 0.0, 0.8, 0.6,
      0.0, 0.0, 0.7, 0.9;
  s.param_coupling = BinaryMatrix::Zero(7, 7);
  for (auto [i, j] : {std::pair{0, 1}, {0, 2}, {1, 2}, {3, 4}, {5, 6}}) {
    s.param_coupling(i, j) = s.param_coupling(j, i) = 1;
  }
  s.kpi_coupling = BinaryMatrix::Zero(4, 4);
  s.kpi_coupling(2, 3) = s.kpi_coupling(3, 2) = 1;
  // clang-format on
  s.coupling_strength = 0.5;
  s.noise_std = 0.1;
  s.param_mean = RealVector::Zero(7);
  s.param_std = RealVector::Ones(7);
  s.seed = 0;
  return s;
}

Dataset generate(const ConflictModelSpec& spec, int length) {
  if (length < 1) throw ArgumentError("sample length must be >= 1");
  spec.validate();
  const int np = spec.dims.n_params;
  const int nk = spec.dims.n_kpis;

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> std_normal(0.0, 1.0);

  RealMatrix raw(np, length);
  for (int i = 0; i < np; ++i)
    for (int t = 0; t < length; ++t) raw(i, t) = spec.param_mean(i) + spec.param_std(i) * std_normal(rng);

  const double b = spec.coupling_strength;
  const RealMatrix mix_p = RealMatrix::Identity(np, np) + b * spec.param_coupling.cast<double>();
  const RealMatrix mix_k = RealMatrix::Identity(nk, nk) + b * spec.kpi_coupling.cast<double>();

  Dataset ds;
  ds.x_p = mix_p * raw;
  ds.x_k = mix_k * (spec.influence.transpose() * ds.x_p);
  for (int k = 0; k < nk; ++k)
    for (int t = 0; t < length; ++t) ds.x_k(k, t) += spec.noise_std * std_normal(rng);

  ds.labels = spec.labels();
  ds.truth_learned = spec.truth_learned();
  ds.known = spec.known();
  ds.spec = spec;
  return ds;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  write_matrix_csv(dir / "x_p.csv", ds.x_p);
  write_matrix_csv(dir / "x_k.csv", ds.x_k);
  write_matrix_csv(dir / "labels.csv", ds.labels);
  write_matrix_csv(dir / "truth_learned.csv", ds.truth_learned.matrix());
  write_matrix_csv(dir / "known.csv", ds.known.matrix());

  json meta = ds.spec;
  meta["schema_version"] = kDatasetSchemaVersion;
  meta["length"] = ds.length();
  json sums = json::object();
  for (const char* name : kDataFiles) sums[name] = file_checksum(dir / name);
  meta["checksums"] = sums;

  std::ofstream out(dir / "spec.json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "spec.json").string());
  out << meta.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + (dir / "spec.json").string());
}

Dataset read_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "spec.json");
  if (!in) throw IoError("cannot open " + (dir / "spec.json").string());
  json meta;
  try {
    meta = json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaError("spec.json: " + std::string(e.what()));
  }
  if (!meta.contains("schema_version") || meta["schema_version"] != kDatasetSchemaVersion) {
    throw SchemaError("unsupported dataset schema version");
  }
  Dataset ds;
  ds.spec = meta.get<ConflictModelSpec>();
  ds.spec.validate();
  const int length = meta.at("length").get<int>();
  if (length < 1) throw SchemaError("dataset length must be >= 1");
  const EntityDims& d = ds.spec.dims;

  ds.x_p = read_real_csv(dir / "x_p.csv", length);
  ds.x_k = read_real_csv(dir / "x_k.csv", length);
  const BinaryMatrix labels = read_binary_csv(dir / "labels.csv", d.n_kpis);
  const BinaryMatrix truth = read_binary_csv(dir / "truth_learned.csv", d.learned_size());
  const BinaryMatrix known = read_binary_csv(dir / "known.csv", d.learned_size());
  require_shape("x_p.csv", ds.x_p.rows(), ds.x_p.cols(), d.n_params, length);
  require_shape("x_k.csv", ds.x_k.rows(), ds.x_k.cols(), d.n_kpis, length);
  require_shape("labels.csv", labels.rows(), labels.cols(), d.n_params, d.n_kpis);
  require_shape("truth_learned.csv", truth.rows(), truth.cols(), d.learned_size(), d.learned_size());
  require_shape("known.csv", known.rows(), known.cols(), d.n_agents, d.learned_size());
  if (!ds.x_p.allFinite() || !ds.x_k.allFinite()) throw SchemaError("sample matrices contain non-finite values");

  const json& sums = meta.at("checksums");
  for (const char* name : kDataFiles) {
    if (!sums.contains(name) || sums[name].get<std::string>() != file_checksum(dir / name)) {
      throw ChecksumError(std::string("checksum mismatch for ") + name);
    }
  }

  ds.labels = labels;
  ds.truth_learned = LearnedAdjacency(truth);
  ds.known = KnownRelations(known, d);
  if (ds.labels != ds.spec.labels() || !(ds.truth_learned == ds.spec.truth_learned()) ||
      ds.known.matrix() != ds.spec.known().matrix()) {
    throw SchemaError("label/graph files disagree with spec.json");
  }
  return ds;
}

}  // namespace rcl
