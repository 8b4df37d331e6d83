// End-to-end acceptance gate. Each criterion prints a single PASS/FAIL line;
// the process exits nonzero when any criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ltcil/data.hpp"
#include "ltcil/gradcheck.hpp"
#include "ltcil/harness.hpp"
#include "ltcil/memory.hpp"
#include "ltcil/metrics.hpp"
#include "ltcil/model.hpp"
#include "ltcil/rng.hpp"
#include "ltcil/scenario.hpp"
#include "ltcil/training.hpp"

using namespace ltcil;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool ok, const std::string& detail) {
  std::printf("criterion %2d  %-28s %s  (%s)\n", number, name.c_str(),
              ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------- criterion 1

bool profile_oracle(std::string& detail) {
  ImbalanceProfile p = make_profile(100, 500, 0.01);
  std::size_t mismatches = 0;
  for (std::size_t c = 0; c < 100; ++c) {
    long double expo = static_cast<long double>(c) / 99.0L;
    long double raw = 500.0L * std::exp(expo * std::log(0.01L));
    std::size_t want =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(raw + 0.5L)));
    if (p.counts[c] != want) ++mismatches;
  }
  bool ok = mismatches == 0 && p.counts.front() == 500 && p.counts.back() == 5;
  detail = "endpoints " + std::to_string(p.counts.front()) + "/" +
           std::to_string(p.counts.back()) + ", mismatches " +
           std::to_string(mismatches);
  return ok;
}

// ---------------------------------------------------------------- criterion 2

std::multiset<std::size_t> task_count_multiset(const TaskSequence& seq,
                                               const Dataset& ds, std::size_t t) {
  std::map<int, std::size_t> per_class;
  for (int i : seq.tasks[t].example_indices) ++per_class[ds.examples[i].label];
  std::multiset<std::size_t> out;
  for (const auto& [cls, n] : per_class) out.insert(n);
  return out;
}

bool rho_one_degeneracy(std::string& detail) {
  Dataset ds = generate_synthetic(20, 120, 6, 1.0, 404);
  std::size_t bad = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ImbalanceProfile p = make_profile(20, 100, 1.0);
    TaskSequence ord = build_ordered(ds, p, 5, 10, seed);
    TaskSequence shuf = build_shuffled(ds, p, 5, 10, seed);
    TaskSequence conv = build_conventional(ds, 5, 10, 100, seed);
    for (std::size_t t = 0; t < 5; ++t) {
      auto a = task_count_multiset(ord, ds, t);
      auto b = task_count_multiset(shuf, ds, t);
      auto c = task_count_multiset(conv, ds, t);
      if (!(a == b && b == c)) ++bad;
    }
  }
  detail = "5 seeds x 3 builders, mismatched tasks " + std::to_string(bad);
  return bad == 0;
}

// ---------------------------------------------------------------- criterion 3

bool gradient_suite(std::string& detail) {
  constexpr double kEps = 1e-5;
  constexpr double kTol = 1e-4;
  double worst_overall = 0.0;
  for (AuxKind aux : {AuxKind::None, AuxKind::LogitDistill, AuxKind::FeatureDistill}) {
    for (int inst = 0; inst < 10; ++inst) {
      std::uint64_t base = 9000 + 100 * static_cast<int>(aux) + inst;
      IncrementalModel model({4, 6}, HeadKind::Linear, base);
      model.add_task_head(3, base + 1);
      model.add_task_head(2, base + 2);
      IncrementalModel old_model({4, 6}, HeadKind::Linear, base + 3);
      old_model.add_task_head(3, base + 4);

      Rng rng(base + 5);
      Matrix x(4, 4);
      for (double& v : x.data()) v = rng.uniform(-1.5, 1.5);
      std::vector<int> labels(4);
      for (int& y : labels) y = static_cast<int>(rng.index(5));

      Matrix old_logits = old_model.forward_logits(x);
      Matrix old_feats = old_model.features(x);

      auto total_loss = [&](ParamSet&) {
        Matrix logits = model.forward_logits(x);
        double total = cross_entropy(logits, labels).value;
        if (aux == AuxKind::LogitDistill) {
          Matrix old_cols(4, 3);
          for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 3; ++j) old_cols(i, j) = logits(i, j);
          total += logit_distill(old_cols, old_logits, 2.0).value;
        } else if (aux == AuxKind::FeatureDistill) {
          total += feature_distill(model.features(x), old_feats, 5.0, 3, 5).value;
        }
        return total;
      };

      ModelCache cache;
      Matrix logits = model.forward_train(x, false, cache);
      LossGrad ce = cross_entropy(logits, labels);
      Matrix dlogits = ce.grad;
      Matrix extra;
      bool have_extra = false;
      if (aux == AuxKind::LogitDistill) {
        Matrix old_cols(4, 3);
        for (std::size_t i = 0; i < 4; ++i)
          for (std::size_t j = 0; j < 3; ++j) old_cols(i, j) = logits(i, j);
        LossGrad ld = logit_distill(old_cols, old_logits, 2.0);
        for (std::size_t i = 0; i < 4; ++i)
          for (std::size_t j = 0; j < 3; ++j) dlogits(i, j) += ld.grad(i, j);
      } else if (aux == AuxKind::FeatureDistill) {
        LossGrad fd = feature_distill(cache.features, old_feats, 5.0, 3, 5);
        extra = std::move(fd.grad);
        have_extra = true;
      }
      model.params().zero_grads();
      model.backward(dlogits, cache, have_extra ? &extra : nullptr);
      double worst = finite_diff_check(total_loss, model.params(), kEps);
      worst_overall = std::max(worst_overall, worst);
      if (worst >= kTol) {
        detail = "aux=" + to_string(aux) + " instance " + std::to_string(inst) +
                 " rel err " + fmt(worst);
        return false;
      }
    }
  }
  detail = "30 instances, worst rel err " + fmt(worst_overall);
  return true;
}

// ---------------------------------------------------------------- criterion 4

bool stage2_freezing(std::string& detail) {
  Dataset full = generate_synthetic(20, 60, 8, 0.5, 99);
  auto [train, test] = split_train_test(full, 10, 7);
  TaskSequence seq = build_shuffled(train, make_profile(20, 40, 0.1), 5, 10, 21);

  TrainConfig cfg;
  cfg.epochs_stage1 = 6;
  cfg.epochs_stage2 = 4;
  cfg.milestones = {};
  cfg.batch_size = 16;
  cfg.hidden = {16};

  IncrementalModel model({8, 16}, HeadKind::Linear, 31);
  ExemplarMemory mem(BudgetMode::FixedPerClass, 10, SelectionKind::Herding, 32);
  ClassLayout layout;
  std::size_t violations = 0;
  for (std::size_t t = 0; t < seq.num_tasks(); ++t) {
    const TaskSpec& task = seq.tasks[t];
    model.add_task_head(task.class_ids.size(), 33 + t);
    layout.extend(task.class_ids, train.num_classes);
    TrainConfig c1 = cfg;
    c1.seed = mix_seed(41, t, 1);
    train_stage1(model, train, task.example_indices, mem, nullptr, c1, AuxKind::None,
                 layout);

    // every extractor and old-head matrix must come out of stage 2 bit-identical
    std::map<std::string, std::vector<double>> frozen;
    for (const std::string& name : model.params().names()) {
      bool old_head = name[0] == 'h' && name.substr(1, name.find('.') - 1) !=
                                            std::to_string(t);
      if (name.rfind("f.", 0) == 0 || old_head)
        frozen[name] = model.params().get(name).value.data();
    }
    TrainConfig c2 = cfg;
    c2.seed = mix_seed(41, t, 2);
    train_stage2(model, train, task.example_indices, mem, c2, layout);
    for (const auto& [name, before] : frozen)
      if (model.params().get(name).value.data() != before) ++violations;

    FeatureFn extractor = [&model](const Matrix& m) { return model.features(m); };
    mem.update_after_task(train, task.class_ids, task.example_indices, extractor);
  }
  detail = "5 tasks, parameter violations " + std::to_string(violations);
  return violations == 0;
}

// ---------------------------------------------------------------- criterion 5

bool sampler_contracts(std::string& detail) {
  // class marginal on pools of sizes 1000 and 1
  std::map<int, std::vector<int>> pools;
  for (int i = 0; i < 1000; ++i) pools[0].push_back(i);
  pools[1] = {5000};
  auto batches = class_balanced_batches(pools, 10, 10000, 77);  // 1e5 slots
  std::size_t rare = 0, total = 0;
  for (const auto& b : batches)
    for (int idx : b) {
      if (idx == 5000) ++rare;
      ++total;
    }
  double frac = static_cast<double>(rare) / static_cast<double>(total);
  bool marginal_ok = std::abs(frac - 0.5) < 0.02;

  // instance-balanced: exact cover per epoch
  std::vector<int> data(333);
  std::iota(data.begin(), data.end(), 0);
  bool cover_ok = true;
  for (std::size_t epoch = 0; epoch < 5; ++epoch) {
    auto eb = instance_balanced_batches(data, 32, 7, epoch);
    std::multiset<int> seen;
    for (const auto& b : eb) seen.insert(b.begin(), b.end());
    if (seen != std::multiset<int>(data.begin(), data.end())) cover_ok = false;
  }
  detail = "rare-class fraction " + fmt(frac) + ", epoch cover " +
           (cover_ok ? "exact" : "broken");
  return marginal_ok && cover_ok;
}

// ---------------------------------------------------------------- criterion 6

bool memory_invariants(std::string& detail) {
  bool floor_ok = per_class_budget(2000, 60) == 33 && per_class_budget(2000, 100) == 20;

  Dataset ds = generate_synthetic(16, 40, 4, 1.0, 55);
  ExemplarMemory mem(BudgetMode::TotalCapacity, 120, SelectionKind::Herding, 56);
  FeatureFn identity = [](const Matrix& m) { return m; };
  std::size_t prefix_breaks = 0;
  std::map<int, std::vector<int>> previous;
  for (int t = 0; t < 4; ++t) {  // budgets 30 -> 15 -> 10 -> 7: three shrinks
    std::vector<int> classes, idx;
    for (int c = 4 * t; c < 4 * (t + 1); ++c) {
      classes.push_back(c);
      idx.insert(idx.end(), ds.per_class_index[c].begin(), ds.per_class_index[c].end());
    }
    mem.update_after_task(ds, classes, idx, identity);
    for (const auto& [cls, was] : previous) {
      const auto& now = mem.store().at(cls);
      if (now.size() > was.size() ||
          !std::equal(now.begin(), now.end(), was.begin()))
        ++prefix_breaks;
    }
    previous = mem.store();
  }
  detail = std::string("floor ") + (floor_ok ? "33/20" : "wrong") +
           ", prefix breaks " + std::to_string(prefix_breaks);
  return floor_ok && prefix_breaks == 0;
}

// ------------------------------------------------------- criteria 7/8/9/10

ExperimentConfig trend_config(bool two_stage, bool conventional,
                              const std::string& out) {
  ExperimentConfig cfg;
  cfg.dataset.num_classes = 20;
  cfg.dataset.per_class = 220;
  cfg.dataset.feature_dim = 16;
  cfg.dataset.cluster_spread = 1.0;
  cfg.test_per_class = 20;
  cfg.scenario.kind = conventional ? ScenarioKind::Conventional : ScenarioKind::Shuffled;
  cfg.scenario.rho = conventional ? 1.0 : 0.01;
  cfg.scenario.n_max = 200;
  cfg.scenario.num_tasks = 5;
  cfg.scenario.base_classes = 10;
  cfg.memory.mode = BudgetMode::FixedPerClass;
  cfg.memory.budget = 10;
  cfg.memory.selection = SelectionKind::Herding;
  cfg.train.epochs_stage1 = 10;
  cfg.train.milestones = {6, 8};
  cfg.train.epochs_stage2 = 30;
  cfg.train.batch_size = 32;
  cfg.train.hidden = {32};
  cfg.strategy = AuxKind::None;
  cfg.two_stage = two_stage;
  cfg.seeds = {1, 2, 3, 4, 5};
  cfg.output_dir = out;
  return cfg;
}

// per-seed average incremental accuracy pulled back out of the run logs
std::map<std::uint64_t, double> seed_averages(const ExperimentConfig& cfg) {
  std::map<std::uint64_t, double> out;
  fs::path root(resolve_output_dir(cfg));
  for (std::uint64_t seed : cfg.seeds) {
    std::ifstream f(root / ("seed_" + std::to_string(seed)) / "run_log.json");
    nlohmann::json j = nlohmann::json::parse(f);
    out[seed] = j.at("average_incremental_accuracy").get<double>();
  }
  return out;
}

double mean_of(const std::map<std::uint64_t, double>& m) {
  double s = 0.0;
  for (const auto& [k, v] : m) s += v;
  return s / static_cast<double>(m.size());
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct TrendResults {
  fs::path root;
  std::map<std::uint64_t, double> shuffled_two, shuffled_one;
  std::map<std::uint64_t, double> conv_two, conv_one;
  bool runs_ok = false;
};

TrendResults run_trend_experiments() {
  TrendResults r;
  r.root = fs::temp_directory_path() / "ltcil_acceptance";
  fs::remove_all(r.root);
  auto cfg_s2 = trend_config(true, false, (r.root / "shuffled_two_stage").string());
  auto cfg_s1 = trend_config(false, false, (r.root / "shuffled_one_stage").string());
  auto cfg_c2 = trend_config(true, true, (r.root / "conventional_two_stage").string());
  auto cfg_c1 = trend_config(false, true, (r.root / "conventional_one_stage").string());
  for (const auto* cfg : {&cfg_s2, &cfg_s1, &cfg_c2, &cfg_c1})
    if (run_experiment(*cfg, true) != 0) return r;
  r.shuffled_two = seed_averages(cfg_s2);
  r.shuffled_one = seed_averages(cfg_s1);
  r.conv_two = seed_averages(cfg_c2);
  r.conv_one = seed_averages(cfg_c1);
  r.runs_ok = true;
  return r;
}

bool trend_reproduction(const TrendResults& r, std::string& detail) {
  if (!r.runs_ok) {
    detail = "experiment runs failed";
    return false;
  }
  double gain = 100.0 * (mean_of(r.shuffled_two) - mean_of(r.shuffled_one));
  detail = "two-stage gain " + fmt(gain) + " points (need >= 2)";
  return gain >= 2.0;
}

bool conventional_bonus(const TrendResults& r, std::string& detail) {
  if (!r.runs_ok) {
    detail = "experiment runs failed";
    return false;
  }
  double diff = 100.0 * (mean_of(r.conv_two) - mean_of(r.conv_one));
  int wins = 0;
  for (const auto& [seed, acc] : r.conv_two)
    if (acc > r.conv_one.at(seed)) ++wins;
  detail = "diff " + fmt(diff) + " points (need >= -0.5), wins " +
           std::to_string(wins) + "/5 (need >= 3)";
  return diff >= -0.5 && wins >= 3;
}

bool determinism(const TrendResults& r, std::string& detail) {
  if (!r.runs_ok) {
    detail = "experiment runs failed";
    return false;
  }
  auto cfg = trend_config(true, false, (r.root / "shuffled_two_stage_rerun").string());
  if (run_experiment(cfg, true) != 0) {
    detail = "rerun failed";
    return false;
  }
  std::size_t diffs = 0;
  for (std::uint64_t seed : cfg.seeds) {
    std::string a = slurp(r.root / "shuffled_two_stage" /
                          ("seed_" + std::to_string(seed)) / "results.csv");
    std::string b = slurp(r.root / "shuffled_two_stage_rerun" /
                          ("seed_" + std::to_string(seed)) / "results.csv");
    if (a.empty() || a != b) ++diffs;
  }
  detail = "5 seeds re-run, differing results.csv " + std::to_string(diffs);
  return diffs == 0;
}

bool metric_identities(const TrendResults& r, std::string& detail) {
  if (!r.runs_ok) {
    detail = "experiment runs failed";
    return false;
  }
  constexpr double kTol = 1e-12;
  std::size_t logs = 0, bad_mean = 0, bad_balance = 0;
  for (const auto& entry : fs::recursive_directory_iterator(r.root)) {
    if (entry.path().filename() != "run_log.json") continue;
    nlohmann::json j = nlohmann::json::parse(slurp(entry.path()));
    ++logs;
    double sum = 0.0;
    for (const auto& t : j.at("tasks")) {
      double avg = t.at("average_accuracy").get<double>();
      sum += avg;
      // balanced test set: the class-mean accuracy must equal sample accuracy
      const auto& preds = t.at("predictions");
      const auto& labels = preds.at("labels");
      const auto& guesses = preds.at("preds");
      std::size_t right = 0;
      for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == guesses[i]) ++right;
      double sample_acc = static_cast<double>(right) / labels.size();
      if (std::abs(sample_acc - avg) > kTol) ++bad_balance;
    }
    double mean = sum / j.at("tasks").size();
    if (std::abs(mean - j.at("average_incremental_accuracy").get<double>()) > kTol)
      ++bad_mean;
  }
  detail = std::to_string(logs) + " run logs, mean-identity failures " +
           std::to_string(bad_mean) + ", balance-identity failures " +
           std::to_string(bad_balance);
  return logs > 0 && bad_mean == 0 && bad_balance == 0;
}

}  // namespace

int main() {
  std::string d;

  bool ok = profile_oracle(d);
  report(1, "profile oracle", ok, d);
  report(2, "rho=1 degeneracy", rho_one_degeneracy(d), d);
  report(3, "gradient suite", gradient_suite(d), d);
  report(4, "stage-2 freezing", stage2_freezing(d), d);
  report(5, "sampler contracts", sampler_contracts(d), d);
  report(6, "memory invariants", memory_invariants(d), d);

  TrendResults trend = run_trend_experiments();
  report(7, "trend reproduction", trend_reproduction(trend, d), d);
  report(8, "conventional bonus", conventional_bonus(trend, d), d);
  report(9, "determinism", determinism(trend, d), d);
  report(10, "metric identities", metric_identities(trend, d), d);

  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
