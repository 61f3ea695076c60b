// rcl: generate datasets, train the two-tower model, detect conflicts and run
// multi-seed sweeps.

#include "rcl/config.hpp"
#include "rcl/csv.hpp"
#include "rcl/error.hpp"
#include "rcl/pipeline.hpp"
#include "rcl/sweep.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kUsage = 1, kRuntime = 2 };

std::string category(const std::exception& e) {
  if (dynamic_cast<const rcl::SchemaError*>(&e)) return "schema error: ";
  if (dynamic_cast<const rcl::StructuralError*>(&e)) return "structural error: ";
  if (dynamic_cast<const rcl::ChecksumError*>(&e)) return "checksum error: ";
  if (dynamic_cast<const rcl::IoError*>(&e)) return "i/o error: ";
  if (dynamic_cast<const rcl::TrainingError*>(&e)) return "training error: ";
  if (dynamic_cast<const rcl::ArgumentError*>(&e)) return "invalid argument: ";
  return "error: ";
}

int fail(const std::exception& e, Exit code) {
  std::cerr << "rcl: " << category(e) << e.what() << '\n';
  if (dynamic_cast<const rcl::ArgumentError*>(&e)) {
    std::cerr << "usage: rcl [OPTIONS] {generate|train|detect|sweep|report}; run 'rcl --help' for details\n";
  }
  return code;
}

// Every ExperimentConfig field has a flag; only flags actually given override
// the config file.
struct Overrides {
  std::string config;
  std::string spec;
  int length = 0;
  std::vector<std::string> binarizers;
  int n_runs = 0;
  std::string output;
  double target_f1 = 0, target_accuracy = 0, target_auc = 0;
  int jobs = 0;
  int max_path_len = 0;
  std::string match;
  std::uint64_t seed = 0;
  rcl::Hyperparams hp;
};

struct Flags {
  CLI::App* app = nullptr;
  Overrides v;

  bool given(const std::string& name) const { return app->count(name) > 0; }
};

void add_config_flags(CLI::App& app, Overrides& o) {
  app.add_option("--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--spec", o.spec, "conflict model: 'default' or a JSON spec file");
  app.add_option("--length", o.length, "samples per entity (L)");
  app.add_option("--binarizer", o.binarizers,
                 "sparsemax | sparsemax-unmasked | threshold:<tau> | topk:<K> | quantile:<Q> | "
                 "threshold:tuned | topk:auto | quantile:auto (repeatable)");
  app.add_option("--n-runs", o.n_runs, "independent runs in a sweep");
  app.add_option("--output,-o", o.output, "output directory");
  app.add_option("--target-f1", o.target_f1, "F1 target for epochs-to-target");
  app.add_option("--target-accuracy", o.target_accuracy, "accuracy target");
  app.add_option("--target-auc", o.target_auc, "AUC target");
  app.add_option("--jobs,-j", o.jobs, "parallel runs (0: all cores)");
  app.add_option("--max-path-len", o.max_path_len, "longest implicit chain in edges");
  app.add_option("--match", o.match, "conflict matching: strict | agent-pair");
  app.add_option("--seed", o.seed, "root seed (overrides RCL_SEED)");
  app.add_option("--latent-dim", o.hp.latent_dim, "embedding dimension H");
  app.add_option("--hidden", o.hp.hidden, "hidden layer width");
  app.add_option("--learning-rate", o.hp.learning_rate, "Adam learning rate");
  app.add_option("--epochs", o.hp.epochs, "training epochs");
  app.add_option("--adam-beta1", o.hp.adam_beta1, "Adam beta1");
  app.add_option("--adam-beta2", o.hp.adam_beta2, "Adam beta2");
  app.add_option("--adam-eps", o.hp.adam_eps, "Adam epsilon");
  app.add_option("--init-scale", o.hp.init_scale, "weight init gain");
}

rcl::ConflictModelSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw rcl::IoError("cannot open " + path);
  try {
    return nlohmann::json::parse(in).get<rcl::ConflictModelSpec>();
  } catch (const nlohmann::json::parse_error& e) {
    throw rcl::SchemaError(path + ": " + e.what());
  }
}

rcl::ExperimentConfig resolve(const Flags& f) {
  const Overrides& o = f.v;
  rcl::ExperimentConfig c = o.config.empty() ? rcl::ExperimentConfig{} : rcl::load_config(o.config);
  if (f.given("--spec")) {
    if (o.spec == "default") {
      c.spec.reset();
    } else {
      c.spec = load_spec(o.spec);
    }
  }
  if (f.given("--length")) c.length = o.length;
  if (f.given("--binarizer")) c.binarizers = o.binarizers;
  if (f.given("--n-runs")) c.n_runs = o.n_runs;
  if (f.given("--output")) c.output_dir = o.output;
  if (f.given("--target-f1")) c.targets.f1 = o.target_f1;
  if (f.given("--target-accuracy")) c.targets.accuracy = o.target_accuracy;
  if (f.given("--target-auc")) c.targets.auc = o.target_auc;
  if (f.given("--jobs")) c.jobs = o.jobs;
  if (f.given("--max-path-len")) c.max_path_len = o.max_path_len;
  if (f.given("--match")) {
    if (o.match == "strict") {
      c.match = rcl::ConflictMatch::Strict;
    } else if (o.match == "agent-pair") {
      c.match = rcl::ConflictMatch::AgentPair;
    } else {
      throw rcl::ArgumentError("--match must be strict or agent-pair");
    }
  }
  if (f.given("--latent-dim")) c.hp.latent_dim = o.hp.latent_dim;
  if (f.given("--hidden")) c.hp.hidden = o.hp.hidden;
  if (f.given("--learning-rate")) c.hp.learning_rate = o.hp.learning_rate;
  if (f.given("--epochs")) c.hp.epochs = o.hp.epochs;
  if (f.given("--adam-beta1")) c.hp.adam_beta1 = o.hp.adam_beta1;
  if (f.given("--adam-beta2")) c.hp.adam_beta2 = o.hp.adam_beta2;
  if (f.given("--adam-eps")) c.hp.adam_eps = o.hp.adam_eps;
  if (f.given("--init-scale")) c.hp.init_scale = o.hp.init_scale;
  rcl::apply_seed_env(c);
  if (f.given("--seed")) c.seed = o.seed;
  c.validate();
  return c;
}

rcl::Dataset dataset_for(const rcl::ExperimentConfig& c, const std::string& data_dir) {
  if (!data_dir.empty()) return rcl::read_dataset(data_dir);
  return rcl::generate(c.resolved_spec(), c.length);
}

int cmd_generate(const rcl::ExperimentConfig& c) {
  const rcl::Dataset ds = rcl::generate(c.resolved_spec(), c.length);
  rcl::write_dataset(ds, c.output_dir);
  const auto& d = ds.spec.dims;
  std::cout << "wrote " << c.output_dir.string() << ": " << d.n_agents << " agents, " << d.n_params
            << " parameters, " << d.n_kpis << " KPIs, L=" << ds.length()
            << ", label density " << rcl::format_double(rcl::label_density(ds.labels)) << '\n';
  return kOk;
}

int cmd_train(const rcl::ExperimentConfig& c, const std::string& data_dir) {
  const rcl::Dataset ds = dataset_for(c, data_dir);
  const rcl::TrainResult r = rcl::train(ds, c.resolved_hp());
  fs::create_directories(c.output_dir);
  rcl::write_model(r.params, c.output_dir / "model.json");
  rcl::write_trace_csv(r.trace, c.output_dir / "trace.csv");
  std::cout << "trained " << r.trace.epochs.size() << " epochs, initial loss "
            << rcl::format_double(r.trace.initial_loss);
  if (!r.trace.epochs.empty()) {
    const auto& last = r.trace.epochs.back();
    std::cout << ", final loss " << rcl::format_double(last.loss) << ", accuracy "
              << rcl::format_double(last.accuracy);
    if (last.auc) std::cout << ", AUC " << rcl::format_double(*last.auc);
  }
  std::cout << '\n';
  return kOk;
}

int cmd_detect(const rcl::ExperimentConfig& c, const std::string& data_dir, const std::string& model_path) {
  const rcl::Dataset ds = dataset_for(c, data_dir);
  rcl::SweepConfig sc = c.sweep_config();
  sc.spec = ds.spec;
  sc.length = ds.length();
  const rcl::BinarizationMethod method =
      rcl::resolve_binarizer(rcl::parse_binarizer_spec(c.binarizers.front()), sc);
  const rcl::ModelParams params =
      model_path.empty() ? rcl::train(ds, c.resolved_hp()).params : rcl::read_model(model_path);
  rcl::IdentifyOptions opts;
  opts.max_path_len = c.max_path_len;
  const rcl::Detection d = rcl::detect(params, ds, method, opts);
  rcl::write_detection(d, c.output_dir);

  const rcl::ConflictSet truth = rcl::ground_truth_conflicts(ds.spec, opts);
  std::vector<std::vector<std::string>> rows{{"metric", "value"}};
  rows.push_back({"binarizer", rcl::to_string(method)});
  rows.push_back({"f1_graph", rcl::format_double(rcl::f1_binary(d.learned.matrix(), ds.truth_learned.matrix()).f1)});
  for (auto kind : {rcl::ConflictKind::Direct, rcl::ConflictKind::Indirect, rcl::ConflictKind::Implicit}) {
    rows.push_back({"f1_" + rcl::to_string(kind),
                    rcl::format_double(rcl::f1_conflicts(d.conflicts, truth, kind, c.match).f1)});
  }
  rows.push_back({"conflicts", std::to_string(d.conflicts.size())});
  std::cout << rcl::render_table(rows);
  return kOk;
}

int cmd_sweep(const rcl::ExperimentConfig& c) {
  const rcl::SweepResult r = rcl::run_sweep(c.sweep_config());
  fs::create_directories(c.output_dir);
  rcl::write_sweep_csv(r, c.output_dir / "sweep.csv");
  rcl::write_summary_csv(r, c.output_dir / "summary.csv");
  for (const auto& f : r.failures) {
    std::cerr << "run " << f.run_id << " diverged at epoch " << f.epoch << ": " << f.message << '\n';
  }
  std::cout << rcl::render_table(rcl::read_csv_rows(c.output_dir / "summary.csv"));
  return kOk;
}

int cmd_report(const rcl::ExperimentConfig& c, const std::string& input) {
  const fs::path path = input.empty() ? c.output_dir / "summary.csv" : fs::path(input);
  if (!fs::exists(path)) throw rcl::IoError("no such file: " + path.string());
  std::cout << rcl::render_table(rcl::read_csv_rows(path));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conflict detection for AI-driven RAN control: two-tower interaction learning, "
               "sparsemax graph reconstruction and rule-based conflict identification."};
  app.require_subcommand(1);
  app.set_version_flag("--version", "rcl 1.0.0");

  Flags flags;
  flags.app = &app;
  add_config_flags(app, flags.v);
  app.fallthrough();

  std::string data_dir, model_path, report_input;
  auto* gen = app.add_subcommand("generate", "write a synthetic dataset directory");
  auto* train = app.add_subcommand("train", "train the two-tower model; writes model.json and trace.csv");
  train->add_option("--data", data_dir, "dataset directory (default: generate from the config)");
  auto* detect = app.add_subcommand("detect", "score, binarize and identify conflicts");
  detect->add_option("--data", data_dir, "dataset directory (default: generate from the config)");
  detect->add_option("--model", model_path, "model.json (default: train a fresh model)");
  auto* sweep = app.add_subcommand("sweep", "multi-run epochs-to-target experiment; writes sweep.csv and summary.csv");
  auto* report = app.add_subcommand("report", "print a CSV (default: <output>/summary.csv) as an aligned table");
  report->add_option("--input", report_input, "CSV file to render");
  for (auto* sub : {gen, train, detect, sweep, report}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  rcl::ExperimentConfig cfg;
  try {
    cfg = resolve(flags);
    // The default binarizer list serves sweeps; detection uses a single method.
    if (*detect && !flags.given("--binarizer") && flags.v.config.empty()) cfg.binarizers = {"sparsemax"};
    if (*detect && cfg.binarizers.size() != 1) throw rcl::ArgumentError("detect needs exactly one --binarizer");
  } catch (const rcl::Error& e) {
    return fail(e, kUsage);
  }

  try {
    if (*gen) return cmd_generate(cfg);
    if (*train) return cmd_train(cfg, data_dir);
    if (*detect) return cmd_detect(cfg, data_dir, model_path);
    if (*sweep) return cmd_sweep(cfg);
    if (*report) return cmd_report(cfg, report_input);
  } catch (const rcl::ArgumentError& e) {
    return fail(e, kUsage);
  } catch (const std::exception& e) {
    return fail(e, kRuntime);
  }
  return kUsage;
}
