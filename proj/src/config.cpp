#include "rcl/config.hpp"

#include "rcl/error.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <thread>

namespace rcl {

using json = nlohmann::json;

ConflictModelSpec ExperimentConfig::resolved_spec() const {
  ConflictModelSpec s = spec ? *spec : default_topology();
  s.seed = seed;
  return s;
}

Hyperparams ExperimentConfig::resolved_hp() const {
  Hyperparams h = hp;
  h.seed = seed;
  return h;
}

void ExperimentConfig::validate() const {
  resolved_spec().validate();
  hp.validate();
  if (length < 1) throw ArgumentError("length must be >= 1");
  if (n_runs < 1) throw ArgumentError("n_runs must be >= 1");
  if (jobs < 0) throw ArgumentError("jobs must be >= 0");
  if (max_path_len < 2) throw ArgumentError("max_path_len must be >= 2");
  if (binarizers.empty()) throw ArgumentError("at least one binarizer is required");
  for (const auto& b : binarizers) parse_binarizer_spec(b);
  for (double t : {targets.f1, targets.accuracy, targets.auc}) {
    if (!(t >= 0.0 && t <= 1.0)) throw ArgumentError("targets must lie in [0, 1]");
  }
}

SweepConfig ExperimentConfig::sweep_config() const {
  SweepConfig s;
  s.spec = resolved_spec();
  s.hp = resolved_hp();
  s.length = length;
  s.n_runs = n_runs;
  s.binarizers = binarizers;
  s.target_f1 = targets.f1;
  s.jobs = jobs > 0 ? jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  s.identify.max_path_len = max_path_len;
  s.match = match;
  return s;
}

void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"hp", c.hp},
           {"length", c.length},
           {"binarizers", c.binarizers},
           {"n_runs", c.n_runs},
           {"output_dir", c.output_dir.string()},
           {"targets", {{"f1", c.targets.f1}, {"accuracy", c.targets.accuracy}, {"auc", c.targets.auc}}},
           {"jobs", c.jobs},
           {"max_path_len", c.max_path_len},
           {"match", c.match == ConflictMatch::Strict ? "strict" : "agent-pair"},
           {"seed", c.seed}};
  if (c.spec) {
    j["spec"] = *c.spec;
  } else {
    j["spec"] = "default";
  }
}

void from_json(const json& j, ExperimentConfig& c) {
  try {
    if (!j.is_object()) throw SchemaError("config must be a JSON object");
    if (j.contains("spec")) {
      const json& s = j["spec"];
      if (s.is_string()) {
        if (s != "default") throw SchemaError("spec must be \"default\" or an object");
        c.spec.reset();
      } else {
        c.spec = s.get<ConflictModelSpec>();
      }
    }
    if (j.contains("hp")) c.hp = j["hp"].get<Hyperparams>();
    c.length = j.value("length", c.length);
    c.binarizers = j.value("binarizers", c.binarizers);
    c.n_runs = j.value("n_runs", c.n_runs);
    c.output_dir = j.value("output_dir", c.output_dir.string());
    if (j.contains("targets")) {
      const json& t = j["targets"];
      c.targets.f1 = t.value("f1", c.targets.f1);
      c.targets.accuracy = t.value("accuracy", c.targets.accuracy);
      c.targets.auc = t.value("auc", c.targets.auc);
    }
    c.jobs = j.value("jobs", c.jobs);
    c.max_path_len = j.value("max_path_len", c.max_path_len);
    if (j.contains("match")) {
      const std::string m = j["match"].get<std::string>();
      if (m == "strict") {
        c.match = ConflictMatch::Strict;
      } else if (m == "agent-pair") {
        c.match = ConflictMatch::AgentPair;
      } else {
        throw SchemaError("match must be \"strict\" or \"agent-pair\"");
      }
    }
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  ExperimentConfig c;
  from_json(j, c);
  return c;
}

void apply_seed_env(ExperimentConfig& c) {
  const char* env = std::getenv("RCL_SEED");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0' || env[0] == '-') throw ArgumentError(std::string("RCL_SEED is not an unsigned integer: ") + env);
  c.seed = v;
}

}  // namespace rcl
