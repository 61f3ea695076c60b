#include "rcl/binarize.hpp"
#include "rcl/config.hpp"
#include "rcl/datagen.hpp"
#include "rcl/error.hpp"
#include "rcl/graph_core.hpp"
#include "rcl/identify.hpp"
#include "rcl/pipeline.hpp"
#include "rcl/sweep.hpp"
#include "rcl/twotower.hpp"

#include <nlohmann/json.hpp>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace rcl;

namespace {

py::list conflicts_to_list(const ConflictSet& set, const EntityDims& dims) {
  py::list out;
  for (const Conflict& c : set) {
    py::list witness;
    for (int node : c.witness) witness.append(dims.label(node));
    out.append(py::make_tuple(to_string(c.kind), dims.label(c.agent_i), dims.label(c.agent_j), witness));
  }
  return out;
}

py::dict trace_to_dict(const TrainTrace& t) {
  std::vector<int> epoch;
  std::vector<double> loss, acc, auc, log_alpha;
  for (const EpochRecord& e : t.epochs) {
    epoch.push_back(e.epoch);
    loss.push_back(e.loss);
    acc.push_back(e.accuracy);
    auc.push_back(e.auc.value_or(std::numeric_limits<double>::quiet_NaN()));
    log_alpha.push_back(e.log_alpha);
  }
  py::dict d;
  d["initial_loss"] = t.initial_loss;
  d["epoch"] = epoch;
  d["loss"] = loss;
  d["accuracy"] = acc;
  d["auc"] = auc;
  d["log_alpha"] = log_alpha;
  return d;
}

ExperimentConfig config_from(const py::dict& overrides) {
  nlohmann::json j = nlohmann::json::parse(py::str(py::module_::import("json").attr("dumps")(overrides)).cast<std::string>());
  ExperimentConfig c = j.get<ExperimentConfig>();
  c.validate();
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Conflict detection core: data generation, two-tower training, binarization and identification.";

  auto base = py::register_exception<Error>(m, "RclError", PyExc_RuntimeError);
  py::register_exception<StructuralError>(m, "StructuralError", base.ptr());
  py::register_exception<ArgumentError>(m, "ArgumentError", base.ptr());
  py::register_exception<SchemaError>(m, "SchemaError", base.ptr());
  py::register_exception<ChecksumError>(m, "ChecksumError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<UndefinedMetricError>(m, "UndefinedMetricError", base.ptr());
  py::register_exception<TrainingError>(m, "TrainingError", base.ptr());

  py::class_<EntityDims>(m, "EntityDims")
      .def(py::init([](int a, int p, int k) {
             EntityDims d{a, p, k};
             d.validate();
             return d;
           }),
           py::arg("n_agents"), py::arg("n_params"), py::arg("n_kpis"))
      .def_readonly("n_agents", &EntityDims::n_agents)
      .def_readonly("n_params", &EntityDims::n_params)
      .def_readonly("n_kpis", &EntityDims::n_kpis)
      .def("label", &EntityDims::label)
      .def("full_labels", &EntityDims::full_labels)
      .def("learned_labels", &EntityDims::learned_labels)
      .def("__eq__", [](const EntityDims& a, const EntityDims& b) { return a == b; })
      .def("__repr__", [](const EntityDims& d) {
        return "EntityDims(" + std::to_string(d.n_agents) + ", " + std::to_string(d.n_params) + ", " +
               std::to_string(d.n_kpis) + ")";
      });

  py::class_<ConflictModelSpec>(m, "ConflictModelSpec")
      .def_readonly("dims", &ConflictModelSpec::dims)
      .def_readonly("control", &ConflictModelSpec::control)
      .def_readonly("subscribe", &ConflictModelSpec::subscribe)
      .def_readonly("influence", &ConflictModelSpec::influence)
      .def_readonly("param_coupling", &ConflictModelSpec::param_coupling)
      .def_readonly("kpi_coupling", &ConflictModelSpec::kpi_coupling)
      .def_readonly("noise_std", &ConflictModelSpec::noise_std)
      .def_readonly("seed", &ConflictModelSpec::seed)
      .def("with_seed", &ConflictModelSpec::with_seed)
      .def("labels", &ConflictModelSpec::labels)
      .def("truth_learned", [](const ConflictModelSpec& s) { return s.truth_learned().matrix(); })
      .def("truth_adjacency", [](const ConflictModelSpec& s) { return s.truth_adjacency().matrix(); })
      .def("to_json", [](const ConflictModelSpec& s) { return nlohmann::json(s).dump(); })
      .def_static("from_json", [](const std::string& text) {
        try {
          return nlohmann::json::parse(text).get<ConflictModelSpec>();
        } catch (const nlohmann::json::parse_error& e) {
          throw SchemaError(e.what());
        }
      });

  m.def("default_topology", &default_topology);

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("x_p", &Dataset::x_p)
      .def_readonly("x_k", &Dataset::x_k)
      .def_readonly("labels", &Dataset::labels)
      .def_readonly("spec", &Dataset::spec)
      .def_property_readonly("truth_learned", [](const Dataset& d) { return d.truth_learned.matrix(); })
      .def_property_readonly("known", [](const Dataset& d) { return d.known.matrix(); })
      .def_property_readonly("length", &Dataset::length);

  m.def("generate", &generate, py::arg("spec"), py::arg("length"));
  m.def("write_dataset", &write_dataset, py::arg("dataset"), py::arg("directory"));
  m.def("read_dataset", &read_dataset, py::arg("directory"));

  py::class_<Hyperparams>(m, "Hyperparams")
      .def(py::init([](int latent_dim, int hidden, double learning_rate, int epochs, double init_scale,
                       std::uint64_t seed) {
             Hyperparams hp;
             hp.latent_dim = latent_dim;
             hp.hidden = hidden;
             hp.learning_rate = learning_rate;
             hp.epochs = epochs;
             hp.init_scale = init_scale;
             hp.seed = seed;
             hp.validate();
             return hp;
           }),
           py::arg("latent_dim") = 16, py::arg("hidden") = 64, py::arg("learning_rate") = 1e-3,
           py::arg("epochs") = 200, py::arg("init_scale") = 1.0, py::arg("seed") = 0)
      .def_readwrite("latent_dim", &Hyperparams::latent_dim)
      .def_readwrite("hidden", &Hyperparams::hidden)
      .def_readwrite("learning_rate", &Hyperparams::learning_rate)
      .def_readwrite("epochs", &Hyperparams::epochs)
      .def_readwrite("adam_beta1", &Hyperparams::adam_beta1)
      .def_readwrite("adam_beta2", &Hyperparams::adam_beta2)
      .def_readwrite("adam_eps", &Hyperparams::adam_eps)
      .def_readwrite("init_scale", &Hyperparams::init_scale)
      .def_readwrite("seed", &Hyperparams::seed);

  py::class_<ModelParams>(m, "ModelParams")
      .def_readonly("log_alpha", &ModelParams::log_alpha)
      .def_property_readonly("alpha", &ModelParams::alpha)
      .def_property_readonly("scalar_count", &ModelParams::scalar_count)
      .def("save", [](const ModelParams& p, const std::filesystem::path& path) { write_model(p, path); })
      .def_static("load", &read_model)
      .def("__eq__", [](const ModelParams& a, const ModelParams& b) { return a == b; });

  m.def(
      "train",
      [](const Dataset& ds, const Hyperparams& hp) {
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(ds, hp);
        }
        return py::make_tuple(r.params, trace_to_dict(r.trace));
      },
      py::arg("dataset"), py::arg("hp") = Hyperparams{},
      "Returns (params, trace) where trace holds per-epoch loss/accuracy/auc/log_alpha lists.");
  m.def(
      "score",
      [](const ModelParams& p, const Dataset& ds) { return score_dataset(p, ds).values(); }, py::arg("params"),
      py::arg("dataset"));
  m.def("gradient_check", &gradient_check, py::arg("dataset"), py::arg("hp"));

  m.def(
      "sparsemax_row", [](const std::vector<double>& z) { return sparsemax_row(z); }, py::arg("z"));
  m.def(
      "binarize",
      [](const RealMatrix& scores, const std::string& method) {
        return binarize(scores, parse_binarizer(method)).matrix();
      },
      py::arg("scores"), py::arg("method") = "sparsemax");
  m.def(
      "boxplus_augment",
      [](const BinaryMatrix& learned, const BinaryMatrix& known, const EntityDims& dims) {
        return boxplus_augment(LearnedAdjacency(learned), known, dims).matrix();
      },
      py::arg("learned"), py::arg("known"), py::arg("dims"));
  m.def(
      "identify",
      [](const BinaryMatrix& full, const EntityDims& dims, int max_path_len) {
        return conflicts_to_list(identify_conflicts(FullAdjacency(full, dims), {max_path_len}), dims);
      },
      py::arg("adjacency"), py::arg("dims"), py::arg("max_path_len") = 2,
      "List of (kind, agent_i, agent_j, witness labels).");
  m.def(
      "ground_truth_conflicts",
      [](const ConflictModelSpec& s, int max_path_len) {
        return conflicts_to_list(ground_truth_conflicts(s, {max_path_len}), s.dims);
      },
      py::arg("spec"), py::arg("max_path_len") = 2);
  m.def(
      "detect",
      [](const ModelParams& p, const Dataset& ds, const std::string& method, int max_path_len) {
        const Detection d = detect(p, ds, parse_binarizer(method), {max_path_len});
        py::dict out;
        out["scores"] = d.scores.values();
        out["learned"] = d.learned.matrix();
        out["full"] = d.full.matrix();
        out["conflicts"] = conflicts_to_list(d.conflicts, ds.spec.dims);
        return out;
      },
      py::arg("params"), py::arg("dataset"), py::arg("method") = "sparsemax", py::arg("max_path_len") = 2);

  m.def(
      "run_sweep",
      [](const py::dict& config, const std::filesystem::path& output_dir) {
        const ExperimentConfig c = config_from(config);
        SweepResult r;
        {
          py::gil_scoped_release release;
          r = run_sweep(c.sweep_config());
          if (!output_dir.empty()) {
            std::filesystem::create_directories(output_dir);
            write_sweep_csv(r, output_dir / "sweep.csv");
            write_summary_csv(r, output_dir / "summary.csv");
          }
        }
        py::list records, summary;
        for (const MetricRecord& rec : r.records) {
          py::dict d;
          d["run_id"] = rec.run_id;
          d["epoch"] = rec.epoch;
          d["binarizer"] = rec.binarizer;
          d["f1_graph"] = rec.f1_graph;
          d["f1_indirect"] = rec.f1_indirect;
          d["f1_implicit"] = rec.f1_implicit;
          d["accuracy"] = rec.accuracy;
          d["auc"] = rec.auc ? py::cast(*rec.auc) : py::none();
          records.append(d);
        }
        for (const TargetSummary& s : r.summary) {
          py::dict d;
          d["binarizer"] = s.binarizer;
          d["task"] = to_string(s.task);
          d["median_epochs"] = s.median_epochs;
          d["q1"] = s.q1;
          d["q3"] = s.q3;
          d["n_reached"] = s.n_reached;
          d["n_runs"] = s.n_runs;
          summary.append(d);
        }
        return py::make_tuple(records, summary);
      },
      py::arg("config") = py::dict(), py::arg("output_dir") = std::filesystem::path(),
      "Runs a multi-seed sweep. `config` uses the JSON config field names; unreached medians are inf.");
}
