#include "rcl/sweep.hpp"

#include "rcl/csv.hpp"
#include "rcl/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

namespace rcl {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

constexpr Task kTasks[] = {Task::Graph, Task::Indirect, Task::Implicit};

struct ResolvedBinarizer {
  std::string label;
  BinarizationMethod method;
};

struct RunOutput {
  std::vector<MetricRecord> records;
  std::optional<RunFailure> failure;
};

RunOutput evaluate_run(const SweepConfig& cfg, int run, const std::vector<ResolvedBinarizer>& bins,
                       const ConflictSet& truth_conflicts) {
  RunOutput out;
  const Dataset ds = generate(cfg.spec.with_seed(cfg.spec.seed + static_cast<std::uint64_t>(run)), cfg.length);
  Hyperparams hp = cfg.hp;
  hp.seed = cfg.hp.seed + static_cast<std::uint64_t>(run);

  TrainResult trained;
  try {
    trained = train(ds, hp);
  } catch (const TrainingError& e) {
    out.failure = RunFailure{run, e.epoch(), e.what()};
    return out;
  }

  const ConflictSet truth_indirect = truth_conflicts.of_kind(ConflictKind::Indirect);
  const ConflictSet truth_implicit = truth_conflicts.of_kind(ConflictKind::Implicit);
  out.records.reserve(trained.trace.epochs.size() * bins.size());
  for (const EpochRecord& ep : trained.trace.epochs) {
    for (const ResolvedBinarizer& b : bins) {
      const LearnedAdjacency learned = binarize(ep.scores, b.method);
      const ConflictSet found = identify_conflicts(boxplus_augment(learned, ds.known), cfg.identify);
      MetricRecord rec;
      rec.run_id = run;
      rec.epoch = ep.epoch;
      rec.binarizer = b.label;
      rec.f1_graph = f1_binary(learned.matrix(), ds.truth_learned.matrix()).f1;
      rec.f1_indirect = f1_conflicts(found, truth_indirect, ConflictKind::Indirect, cfg.match).f1;
      rec.f1_implicit = f1_conflicts(found, truth_implicit, ConflictKind::Implicit, cfg.match).f1;
      rec.accuracy = ep.accuracy;
      rec.auc = ep.auc;
      out.records.push_back(std::move(rec));
    }
  }
  return out;
}

double task_value(const MetricRecord& r, Task t) {
  switch (t) {
    case Task::Graph: return r.f1_graph;
    case Task::Indirect: return r.f1_indirect;
    case Task::Implicit: return r.f1_implicit;
  }
  return 0.0;
}

std::string format_summary_value(double v) { return std::isfinite(v) ? format_double(v) : "NA"; }

}  // namespace

BinarizerSpec parse_binarizer_spec(const std::string& text) {
  if (text == "threshold:tuned") return TunedThreshold{};
  if (text == "topk:auto") return AutoTopK{};
  if (text == "quantile:auto") return AutoQuantile{};
  return parse_binarizer(text);
}

F1Score f1_conflicts(const ConflictSet& pred, const ConflictSet& truth, ConflictKind kind, ConflictMatch match) {
  long tp = 0, fp = 0, fn = 0;
  if (match == ConflictMatch::Strict) {
    const ConflictSet p = pred.of_kind(kind);
    const ConflictSet t = truth.of_kind(kind);
    for (const Conflict& c : p) (t.contains(c) ? tp : fp) += 1;
    for (const Conflict& c : t) fn += p.contains(c) ? 0 : 1;
  } else {
    auto pairs = [kind](const ConflictSet& s) {
      std::set<std::pair<int, int>> out;
      for (const Conflict& c : s)
        if (c.kind == kind) out.emplace(c.agent_i, c.agent_j);
      return out;
    };
    const auto p = pairs(pred);
    const auto t = pairs(truth);
    for (const auto& x : p) (t.count(x) ? tp : fp) += 1;
    for (const auto& x : t) fn += p.count(x) ? 0 : 1;
  }
  return f1_from_counts(tp, fp, fn);
}

std::string to_string(Task t) {
  switch (t) {
    case Task::Graph: return "graph";
    case Task::Indirect: return "indirect";
    case Task::Implicit: return "implicit";
  }
  return "?";
}

double tune_threshold(const RealMatrix& scores, const LearnedAdjacency& truth) {
  if (scores.rows() != truth.size() || scores.cols() != truth.size()) {
    throw StructuralError("tune_threshold: scores and truth differ in shape");
  }
  std::vector<double> vals;
  for (Eigen::Index i = 0; i < scores.rows(); ++i)
    for (Eigen::Index j = i + 1; j < scores.cols(); ++j) vals.push_back(scores(i, j));
  if (vals.empty()) throw ArgumentError("tune_threshold needs at least two nodes");
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());

  // Candidates sit in the gaps between consecutive distinct scores, plus one
  // below the minimum and one above the maximum.
  struct Candidate {
    double tau;
    double margin;
  };
  std::vector<Candidate> cands;
  cands.push_back({vals.front() - 1.0, 1.0});
  for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
    cands.push_back({0.5 * (vals[i] + vals[i + 1]), vals[i + 1] - vals[i]});
  }
  cands.push_back({vals.back() + 1.0, 1.0});

  double best_f1 = -1.0, best_margin = -1.0, best_tau = 0.0;
  for (const Candidate& c : cands) {
    const double f1 = f1_binary(binarize(scores, StaticThreshold{c.tau}).matrix(), truth.matrix()).f1;
    if (f1 > best_f1 || (f1 == best_f1 && c.margin > best_margin)) {
      best_f1 = f1;
      best_margin = c.margin;
      best_tau = c.tau;
    }
  }
  return best_tau;
}

BinarizationMethod resolve_binarizer(const BinarizerSpec& b, const SweepConfig& cfg) {
  const LearnedAdjacency truth = cfg.spec.truth_learned();
  const int n = truth.size();
  const int edges = truth.edge_count();
  return std::visit(
      overloaded{
          [](const BinarizationMethod& m) -> BinarizationMethod { return m; },
          [&](const TunedThreshold&) -> BinarizationMethod {
            const Dataset held_out = generate(cfg.spec.with_seed(cfg.spec.seed + kHeldOutSeedOffset), cfg.length);
            Hyperparams hp = cfg.hp;
            hp.seed = cfg.hp.seed + kHeldOutSeedOffset;
            hp.epochs = cfg.tune_epoch;
            const TrainResult r = train(held_out, hp);
            const RealMatrix scores = r.trace.epochs.empty() ? score_dataset(r.params, held_out).values()
                                                             : r.trace.epochs.back().scores.values();
            return StaticThreshold{tune_threshold(scores, held_out.truth_learned)};
          },
          [&](const AutoTopK&) -> BinarizationMethod {
            const int k = static_cast<int>(std::ceil(2.0 * edges / static_cast<double>(n)));
            return TopK{std::clamp(k, 1, n - 1)};
          },
          [&](const AutoQuantile&) -> BinarizationMethod {
            const double density = edges / (0.5 * n * (n - 1));
            return Quantile{std::clamp(1.0 - density, 1e-6, 1.0 - 1e-6)};
          },
      },
      b);
}

double quantile_with_infinity(std::vector<std::optional<int>> values, double q) {
  if (values.empty()) throw ArgumentError("quantile of an empty set");
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> v;
  v.reserve(values.size());
  for (const auto& x : values) v.push_back(x ? static_cast<double>(*x) : inf);
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return v[lo];
  const double hi = v[std::min(lo + 1, v.size() - 1)];
  if (std::isinf(hi)) return inf;
  return v[lo] + frac * (hi - v[lo]);
}

std::vector<std::optional<int>> SweepResult::epochs_to(const std::string& binarizer, Task task, double target,
                                                       int n_runs) const {
  std::vector<std::optional<int>> out(static_cast<std::size_t>(n_runs));
  for (const MetricRecord& r : records) {
    if (r.binarizer != binarizer || r.run_id < 0 || r.run_id >= n_runs) continue;
    auto& slot = out[static_cast<std::size_t>(r.run_id)];
    if (!slot && task_value(r, task) >= target) slot = r.epoch;
  }
  return out;
}

const TargetSummary* SweepResult::find_summary(const std::string& binarizer, Task task) const {
  for (const auto& s : summary)
    if (s.binarizer == binarizer && s.task == task) return &s;
  return nullptr;
}

SweepResult run_sweep(const SweepConfig& cfg) {
  if (cfg.n_runs < 1) throw ArgumentError("n_runs must be >= 1");
  if (cfg.length < 1) throw ArgumentError("sample length must be >= 1");
  if (cfg.binarizers.empty()) throw ArgumentError("at least one binarizer is required");
  cfg.spec.validate();
  cfg.hp.validate();

  SweepResult result;
  std::vector<ResolvedBinarizer> bins;
  for (const std::string& label : cfg.binarizers) {
    if (std::any_of(bins.begin(), bins.end(), [&](const auto& b) { return b.label == label; })) {
      throw ArgumentError("duplicate binarizer '" + label + "'");
    }
    bins.push_back({label, resolve_binarizer(parse_binarizer_spec(label), cfg)});
    result.resolved.emplace_back(label, to_string(bins.back().method));
  }
  const ConflictSet truth_conflicts = ground_truth_conflicts(cfg.spec, cfg.identify);

  std::vector<RunOutput> outputs(static_cast<std::size_t>(cfg.n_runs));
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (int run = next++; run < cfg.n_runs; run = next++) {
      try {
        outputs[static_cast<std::size_t>(run)] = evaluate_run(cfg, run, bins, truth_conflicts);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const int jobs = std::clamp(cfg.jobs, 1, cfg.n_runs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);

  for (auto& o : outputs) {
    result.records.insert(result.records.end(), std::make_move_iterator(o.records.begin()),
                          std::make_move_iterator(o.records.end()));
    if (o.failure) result.failures.push_back(*o.failure);
  }

  for (const ResolvedBinarizer& b : bins) {
    for (Task task : kTasks) {
      const auto reached = result.epochs_to(b.label, task, cfg.target_f1, cfg.n_runs);
      TargetSummary s;
      s.binarizer = b.label;
      s.task = task;
      s.median_epochs = quantile_with_infinity(reached, 0.5);
      s.q1 = quantile_with_infinity(reached, 0.25);
      s.q3 = quantile_with_infinity(reached, 0.75);
      s.n_reached = static_cast<int>(std::count_if(reached.begin(), reached.end(), [](auto& x) { return x.has_value(); }));
      s.n_runs = cfg.n_runs;
      result.summary.push_back(std::move(s));
    }
  }
  return result;
}

void write_sweep_csv(const SweepResult& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "run_id,epoch,binarizer,f1_graph,f1_indirect,f1_implicit,accuracy,auc\n";
  for (const MetricRecord& m : r.records) {
    out << m.run_id << ',' << m.epoch << ',' << m.binarizer << ',' << format_double(m.f1_graph) << ','
        << format_double(m.f1_indirect) << ',' << format_double(m.f1_implicit) << ','
        << format_double(m.accuracy) << ',' << (m.auc ? format_double(*m.auc) : "") << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void write_summary_csv(const SweepResult& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "binarizer,task,median_epochs,q1,q3,n_reached,n_runs\n";
  for (const TargetSummary& s : r.summary) {
    out << s.binarizer << ',' << to_string(s.task) << ',' << format_summary_value(s.median_epochs) << ','
        << format_summary_value(s.q1) << ',' << format_summary_value(s.q3) << ',' << s.n_reached << ','
        << s.n_runs << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace rcl
