// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "oracles.hpp"

#include "rcl/binarize.hpp"
#include "rcl/config.hpp"
#include "rcl/datagen.hpp"
#include "rcl/identify.hpp"
#include "rcl/sweep.hpp"
#include "rcl/twotower.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace rcl;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

void report(int id, const std::string& name, const Outcome& o, double secs) {
  if (!o.pass) ++failures;
  std::printf("[%s] criterion %d: %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(),
              secs);
  std::fflush(stdout);
}

Outcome timed(int id, const std::string& name, const std::function<Outcome()>& body, double* secs_out = nullptr) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = seconds_since(t0);
  if (secs_out) *secs_out = secs;
  report(id, name, o, secs);
  return o;
}

std::string fmt(double v) {
  if (std::isinf(v)) return "NA";
  std::ostringstream os;
  os << v;
  return os.str();
}

std::vector<double> random_vector(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> scale(0.05, 5.0);
  const double s = scale(rng);
  std::vector<double> z(static_cast<std::size_t>(n));
  for (double& v : z) v = s * g(rng);
  return z;
}

Outcome sparsemax_oracle() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> dim(2, 10);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto z = random_vector(rng, dim(rng));
    const auto p = sparsemax_row(z);
    const auto o = oracle::simplex_projection(z);
    for (std::size_t i = 0; i < z.size(); ++i) worst = std::max(worst, std::abs(p[i] - o[i]));
  }
  return {worst <= 1e-8, "1000 vectors, max abs deviation " + fmt(worst)};
}

Outcome sparsemax_algebra() {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> dim(2, 10);
  std::uniform_real_distribution<double> shift(-100.0, 100.0), bump(1e-3, 5.0);
  int shift_bad = 0, simplex_bad = 0, support_bad = 0;
  for (int t = 0; t < 10000; ++t) {
    auto z = random_vector(rng, dim(rng));
    const auto p = sparsemax_row(z);

    const double sum = std::accumulate(p.begin(), p.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-9 || *std::min_element(p.begin(), p.end()) < 0.0) ++simplex_bad;

    auto shifted = z;
    const double c = shift(rng);
    for (double& v : shifted) v += c;
    const auto q = sparsemax_row(shifted);
    for (std::size_t i = 0; i < z.size(); ++i)
      if (std::abs(p[i] - q[i]) > 1e-9) {
        ++shift_bad;
        break;
      }

    std::uniform_int_distribution<std::size_t> pick(0, z.size() - 1);
    const std::size_t i = pick(rng);
    auto raised = z;
    raised[i] += bump(rng);
    if (p[i] > 0.0 && !(sparsemax_row(raised)[i] > 0.0)) ++support_bad;
  }
  const bool ok = shift_bad == 0 && simplex_bad == 0 && support_bad == 0;
  return {ok, "10000 cases; violations shift=" + std::to_string(shift_bad) + " simplex=" +
                  std::to_string(simplex_bad) + " support=" + std::to_string(support_bad)};
}

Outcome gradient_fidelity() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Hyperparams hp;
    hp.seed = seed + 17;
    const Dataset ds = generate(default_topology().with_seed(seed), 32);
    worst = std::max(worst, gradient_check(ds, hp));
  }
  return {worst < 1e-4, "5 seeds at L=32, max relative error " + fmt(worst)};
}

struct LearnRuns {
  std::vector<std::optional<int>> epochs_to_target;
  double worst_asym = 0.0, worst_diag = 0.0, worst_excess = -std::numeric_limits<double>::infinity();
  long snapshots = 0;
};

LearnRuns learnability_runs(const ExperimentConfig& base) {
  LearnRuns out;
  for (int run = 0; run < 20; ++run) {
    Hyperparams hp = base.resolved_hp();
    hp.seed += static_cast<std::uint64_t>(run);
    hp.epochs = 200;
    const ConflictModelSpec spec = base.resolved_spec();
    const Dataset ds = generate(spec.with_seed(spec.seed + static_cast<std::uint64_t>(run)), base.length);
    const TrainResult r = train(ds, hp);
    std::optional<int> hit;
    for (const EpochRecord& e : r.trace.epochs) {
      if (!hit && e.accuracy >= base.targets.accuracy && e.auc && *e.auc >= base.targets.auc) hit = e.epoch;
      const RealMatrix& s = e.scores.values();
      const double alpha = std::exp(e.log_alpha);
      out.worst_asym = std::max(out.worst_asym, (s - s.transpose()).cwiseAbs().maxCoeff());
      out.worst_diag = std::max(out.worst_diag, (s.diagonal().array() - alpha).abs().maxCoeff());
      out.worst_excess = std::max(out.worst_excess, s.cwiseAbs().maxCoeff() - alpha);
      ++out.snapshots;
    }
    out.epochs_to_target.push_back(hit);
  }
  return out;
}

Outcome identifier_oracle() {
  std::mt19937_64 rng(505);
  std::uniform_int_distribution<int> count(1, 5);
  std::uniform_real_distribution<double> density(0.1, 0.7);
  int mismatches = 0, total_conflicts = 0;
  for (int t = 0; t < 500; ++t) {
    EntityDims d;
    do {
      d = {count(rng), count(rng), count(rng)};
    } while (d.total() > 12);
    std::bernoulli_distribution edge(density(rng));
    const int n = d.learned_size();
    BinaryMatrix learned = BinaryMatrix::Zero(n, n), known(d.n_agents, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) learned(i, j) = learned(j, i) = edge(rng);
    for (int a = 0; a < d.n_agents; ++a)
      for (int j = 0; j < n; ++j) known(a, j) = edge(rng);
    const FullAdjacency full = boxplus_augment(LearnedAdjacency(learned), known, d);
    std::set<oracle::ConflictKey> got;
    for (const Conflict& c : identify_conflicts(full))
      got.insert(oracle::key(static_cast<int>(c.kind), c.agent_i, c.agent_j, c.witness));
    const auto want = oracle::conflicts(full.matrix(), d);
    total_conflicts += static_cast<int>(want.size());
    if (got != want) ++mismatches;
  }
  return {mismatches == 0, "500 graphs (" + std::to_string(total_conflicts) + " conflicts), " +
                               std::to_string(mismatches) + " mismatches"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main() {
  const auto suite_start = Clock::now();
  ExperimentConfig cfg;  // defaults: default topology, L=10000, H=16, lr=1e-3, root seed 0
  cfg.n_runs = 20;
  cfg.hp.epochs = 500;
  const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
  cfg.jobs = static_cast<int>(cores);
  std::printf("acceptance: %u worker thread(s), 20 runs x 500 epochs, L=%d\n", cores, cfg.length);

  timed(1, "sparsemax oracle equivalence", [] {
    const auto t0 = Clock::now();
    Outcome o = sparsemax_oracle();
    const double s = seconds_since(t0);
    o.pass = o.pass && s < 10.0;
    return o;
  });

  timed(2, "sparsemax algebra", sparsemax_algebra);

  timed(3, "gradient fidelity", [] {
    const auto t0 = Clock::now();
    Outcome o = gradient_fidelity();
    o.pass = o.pass && seconds_since(t0) < 30.0;
    return o;
  });

  LearnRuns learn;
  double learn_secs = 0.0;
  const auto learn_start = Clock::now();
  learn = learnability_runs(cfg);
  learn_secs = seconds_since(learn_start);

  timed(4, "score-matrix structure", [&] {
    const bool ok = learn.worst_asym <= 1e-6 && learn.worst_diag <= 1e-6 && learn.worst_excess <= 1e-9;
    return Outcome{ok, std::to_string(learn.snapshots) + " epoch snapshots; max |S-S^T| " + fmt(learn.worst_asym) +
                           ", max |diag-alpha| " + fmt(learn.worst_diag) + ", max |S|-alpha " +
                           fmt(learn.worst_excess)};
  });

  timed(5, "identifier correctness", identifier_oracle);

  timed(6, "learnability", [&] {
    const double median = quantile_with_infinity(learn.epochs_to_target, 0.5);
    const bool ok = median <= 200.0 && learn_secs < 300.0;
    return Outcome{ok, "median epochs to accuracy>=0.8 and AUC>=0.8 over 20 seeds = " + fmt(median) +
                           " (training time " + fmt(std::round(learn_secs)) + " s)"};
  });

  const fs::path work = fs::temp_directory_path() / "rcl_acceptance";
  fs::remove_all(work);
  fs::create_directories(work / "first");
  fs::create_directories(work / "second");

  const SweepConfig sc = cfg.sweep_config();
  const auto sweep_start = Clock::now();
  const SweepResult first = run_sweep(sc);
  const double sweep_secs = seconds_since(sweep_start);
  write_sweep_csv(first, work / "first" / "sweep.csv");
  write_summary_csv(first, work / "first" / "summary.csv");
  std::printf("sweep: %zu records in %.1f s\n", first.records.size(), sweep_secs);
  for (const TargetSummary& s : first.summary)
    std::printf("  %-16s %-9s median %-5s q1 %-5s q3 %-5s reached %d/%d\n", s.binarizer.c_str(),
                to_string(s.task).c_str(), fmt(s.median_epochs).c_str(), fmt(s.q1).c_str(), fmt(s.q3).c_str(),
                s.n_reached, s.n_runs);

  timed(7, "perfect detection attainable", [&] {
    if (!first.failures.empty()) return Outcome{false, std::to_string(first.failures.size()) + " runs diverged"};
    std::ostringstream os;
    bool ok = true;
    for (Task t : {Task::Graph, Task::Indirect, Task::Implicit}) {
      const auto runs = first.epochs_to("sparsemax", t, 1.0, sc.n_runs);
      int reached = 0, slowest = 0;
      for (const auto& e : runs)
        if (e) {
          ++reached;
          slowest = std::max(slowest, *e);
        }
      ok = ok && reached == sc.n_runs;
      os << to_string(t) << " " << reached << "/" << sc.n_runs << " (slowest " << slowest << ") ";
    }
    return Outcome{ok, os.str() + "within 500 epochs"};
  });

  timed(8, "binarizer ordering", [&] {
    auto med = [&](const std::string& b, Task t) {
      const TargetSummary* s = first.find_summary(b, t);
      return s ? s->median_epochs : std::numeric_limits<double>::quiet_NaN();
    };
    const double sg = med("sparsemax", Task::Graph), tg = med("threshold:tuned", Task::Graph);
    const double kg = med("topk:auto", Task::Graph), qg = med("quantile:auto", Task::Graph);
    const double si = med("sparsemax", Task::Indirect), ti = med("threshold:tuned", Task::Indirect);
    const double sm = med("sparsemax", Task::Implicit), tm = med("threshold:tuned", Task::Implicit);
    const bool graph_strict = sg < tg;
    const bool graph_baselines = tg <= std::min(kg, qg);
    const bool conflicts = si <= ti && sm <= tm;
    std::ostringstream os;
    os << "graph sparsemax " << fmt(sg) << (graph_strict ? " < " : " !< ") << "threshold " << fmt(tg)
       << (graph_baselines ? " <= " : " !<= ") << "min(topk " << fmt(kg) << ", quantile " << fmt(qg) << "); indirect "
       << fmt(si) << " vs " << fmt(ti) << "; implicit " << fmt(sm) << " vs " << fmt(tm);
    return Outcome{graph_strict && graph_baselines && conflicts, os.str()};
  });

  timed(9, "determinism", [&] {
    const SweepResult second = run_sweep(sc);
    write_sweep_csv(second, work / "second" / "sweep.csv");
    write_summary_csv(second, work / "second" / "summary.csv");
    const bool sweep_same = slurp(work / "first" / "sweep.csv") == slurp(work / "second" / "sweep.csv");
    const bool summary_same = slurp(work / "first" / "summary.csv") == slurp(work / "second" / "summary.csv");
    return Outcome{sweep_same && summary_same, std::string("sweep.csv ") + (sweep_same ? "identical" : "differs") +
                                                   ", summary.csv " + (summary_same ? "identical" : "differs")};
  });

  const double total = seconds_since(suite_start);
  report(10, "desk-scale budget", {total < 900.0, "criteria 1-9 took " + fmt(std::round(total)) + " s of 900 s"},
         total);

  fs::remove_all(work);
  std::printf("%s: %d criterion(s) failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
