#include "ltcil/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ltcil/errors.hpp"
#include "ltcil/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ltcil {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void require_keys(const json& j, const std::string& path,
                  const std::set<std::string>& allowed) {
  for (const auto& [key, val] : j.items()) {
    if (!allowed.count(key))
      throw ConfigError("unknown key: " + path + key);
  }
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(std::string("bad type for key: ") + key);
    }
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (dataset.type != "synthetic" && dataset.type != "csv")
    throw ConfigError("dataset.type must be synthetic or csv");
  if (dataset.type == "csv" && dataset.path.empty())
    throw ConfigError("dataset.path required for csv datasets");
  if (!(scenario.rho > 0.0 && scenario.rho <= 1.0))
    throw ConfigError("scenario.rho must be in (0,1]");
  if (scenario.kind == ScenarioKind::Conventional && scenario.rho != 1.0)
    throw ConfigError("scenario.kind=conventional requires rho=1");
  if (scenario.num_tasks < 1) throw ConfigError("scenario.num_tasks must be >= 1");
  if (seeds.empty()) throw ConfigError("seeds must be nonempty");
  train.validate();
  if (dataset.type == "synthetic") {
    if (dataset.per_class <= test_per_class)
      throw ConfigError("dataset.per_class must exceed test_per_class");
    if (dataset.per_class - test_per_class < scenario.n_max)
      throw ConfigError("dataset.per_class - test_per_class must cover scenario.n_max");
  }
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["dataset"]["type"] = dataset.type;
  if (dataset.type == "synthetic") {
    j["dataset"]["num_classes"] = dataset.num_classes;
    j["dataset"]["per_class"] = dataset.per_class;
    j["dataset"]["feature_dim"] = dataset.feature_dim;
    j["dataset"]["cluster_spread"] = dataset.cluster_spread;
  } else {
    j["dataset"]["path"] = dataset.path;
  }
  j["test_per_class"] = test_per_class;
  j["scenario"]["kind"] = to_string(scenario.kind);
  j["scenario"]["rho"] = scenario.rho;
  j["scenario"]["n_max"] = scenario.n_max;
  j["scenario"]["num_tasks"] = scenario.num_tasks;
  j["scenario"]["base_classes"] = scenario.base_classes;
  j["memory"]["mode"] = to_string(memory.mode);
  j["memory"]["budget"] = memory.budget;
  j["memory"]["selection"] = to_string(memory.selection);
  j["train"]["epochs_stage1"] = train.epochs_stage1;
  j["train"]["epochs_stage2"] = train.epochs_stage2;
  j["train"]["lr_stage1"] = train.lr_stage1;
  j["train"]["milestones"] = train.milestones;
  j["train"]["lr_stage2"] = train.lr_stage2;
  j["train"]["momentum"] = train.momentum;
  j["train"]["batch_size"] = train.batch_size;
  j["train"]["hidden"] = train.hidden;
  j["train"]["distill_temperature"] = train.distill_temperature;
  j["train"]["feature_lambda_base"] = train.feature_lambda_base;
  j["strategy"] = to_string(strategy);
  j["head_kind"] = to_string(head_kind);
  j["two_stage"] = two_stage;
  j["predictor"] = to_string(predictor);
  j["seeds"] = seeds;
  j["output_dir"] = output_dir;
  return j.dump(2);
}

ExperimentConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  ExperimentConfig cfg;
  require_keys(j, "", {"dataset", "test_per_class", "scenario", "memory", "train",
                       "strategy", "head_kind", "two_stage", "predictor", "seeds",
                       "output_dir"});
  if (!j.contains("dataset")) throw ConfigError("missing key: dataset");
  {
    const json& d = j.at("dataset");
    require_keys(d, "dataset.",
                 {"type", "num_classes", "per_class", "feature_dim", "cluster_spread",
                  "path"});
    read_if(d, "type", cfg.dataset.type);
    read_if(d, "num_classes", cfg.dataset.num_classes);
    read_if(d, "per_class", cfg.dataset.per_class);
    read_if(d, "feature_dim", cfg.dataset.feature_dim);
    read_if(d, "cluster_spread", cfg.dataset.cluster_spread);
    read_if(d, "path", cfg.dataset.path);
  }
  read_if(j, "test_per_class", cfg.test_per_class);
  if (j.contains("scenario")) {
    const json& s = j.at("scenario");
    require_keys(s, "scenario.", {"kind", "rho", "n_max", "num_tasks", "base_classes"});
    if (s.contains("kind"))
      cfg.scenario.kind = scenario_kind_from_string(s.at("kind").get<std::string>());
    read_if(s, "rho", cfg.scenario.rho);
    read_if(s, "n_max", cfg.scenario.n_max);
    read_if(s, "num_tasks", cfg.scenario.num_tasks);
    read_if(s, "base_classes", cfg.scenario.base_classes);
    if (cfg.scenario.kind == ScenarioKind::Conventional && !s.contains("rho"))
      cfg.scenario.rho = 1.0;
  }
  if (j.contains("memory")) {
    const json& m = j.at("memory");
    require_keys(m, "memory.", {"mode", "budget", "selection"});
    if (m.contains("mode"))
      cfg.memory.mode = budget_mode_from_string(m.at("mode").get<std::string>());
    read_if(m, "budget", cfg.memory.budget);
    if (m.contains("selection"))
      cfg.memory.selection =
          selection_kind_from_string(m.at("selection").get<std::string>());
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    require_keys(t, "train.",
                 {"epochs_stage1", "epochs_stage2", "lr_stage1", "milestones",
                  "lr_stage2", "momentum", "batch_size", "hidden",
                  "distill_temperature", "feature_lambda_base"});
    read_if(t, "epochs_stage1", cfg.train.epochs_stage1);
    read_if(t, "epochs_stage2", cfg.train.epochs_stage2);
    read_if(t, "lr_stage1", cfg.train.lr_stage1);
    read_if(t, "milestones", cfg.train.milestones);
    read_if(t, "lr_stage2", cfg.train.lr_stage2);
    read_if(t, "momentum", cfg.train.momentum);
    read_if(t, "batch_size", cfg.train.batch_size);
    read_if(t, "hidden", cfg.train.hidden);
    read_if(t, "distill_temperature", cfg.train.distill_temperature);
    read_if(t, "feature_lambda_base", cfg.train.feature_lambda_base);
  }
  if (j.contains("strategy"))
    cfg.strategy = aux_kind_from_string(j.at("strategy").get<std::string>());
  if (j.contains("head_kind"))
    cfg.head_kind = head_kind_from_string(j.at("head_kind").get<std::string>());
  read_if(j, "two_stage", cfg.two_stage);
  if (j.contains("predictor"))
    cfg.predictor = predictor_from_string(j.at("predictor").get<std::string>());
  read_if(j, "seeds", cfg.seeds);
  read_if(j, "output_dir", cfg.output_dir);
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string resolve_output_dir(const ExperimentConfig& cfg) {
  const char* root = std::getenv("LTCIL_OUTPUT_ROOT");
  if (root && *root) return (fs::path(root) / cfg.output_dir).string();
  return cfg.output_dir;
}

namespace {

struct SeedRun {
  std::uint64_t seed;
  RunLog log;
};

std::size_t effective_base_classes(const ExperimentConfig& cfg, std::size_t c) {
  return cfg.scenario.base_classes == 0 ? (c + 1) / 2 : cfg.scenario.base_classes;
}

// dataset + task sequence for one seed
std::tuple<Dataset, Dataset, TaskSequence> build_inputs(const ExperimentConfig& cfg,
                                                        std::uint64_t seed) {
  Dataset full;
  if (cfg.dataset.type == "synthetic") {
    full = generate_synthetic(cfg.dataset.num_classes, cfg.dataset.per_class,
                              cfg.dataset.feature_dim, cfg.dataset.cluster_spread,
                              mix_seed(seed, 1, 0));
  } else {
    full = load_csv(cfg.dataset.path);
  }
  auto [train, test] = split_train_test(full, cfg.test_per_class, mix_seed(seed, 2, 0));
  std::size_t c = train.num_classes;
  std::size_t base = effective_base_classes(cfg, c);
  std::uint64_t sseed = mix_seed(seed, 3, 0);
  TaskSequence seq;
  switch (cfg.scenario.kind) {
    case ScenarioKind::Ordered:
      seq = build_ordered(train, make_profile(c, cfg.scenario.n_max, cfg.scenario.rho),
                          cfg.scenario.num_tasks, base, sseed);
      break;
    case ScenarioKind::Shuffled:
      seq = build_shuffled(train, make_profile(c, cfg.scenario.n_max, cfg.scenario.rho),
                           cfg.scenario.num_tasks, base, sseed);
      break;
    case ScenarioKind::Conventional:
      seq = build_conventional(train, cfg.scenario.num_tasks, base, cfg.scenario.n_max,
                               sseed);
      break;
  }
  return {std::move(train), std::move(test), std::move(seq)};
}

void write_seed_outputs(const fs::path& dir, const ExperimentConfig& cfg,
                        std::uint64_t seed, const Dataset& train,
                        const TaskSequence& seq, const RunLog& log) {
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "manifest.json");
    f << seq.to_manifest_json() << "\n";
  }
  {
    std::ofstream f(dir / "run_log.json");
    f << log.to_json() << "\n";
  }
  auto counts_vec = seq.class_counts(train);
  std::map<int, std::size_t> counts;
  for (std::size_t c = 0; c < counts_vec.size(); ++c)
    if (counts_vec[c] > 0) counts[static_cast<int>(c)] = counts_vec[c];
  {
    std::ofstream f(dir / "results.csv");
    f << "seed,task_id,num_seen_classes,average_accuracy,head_mean,tail_mean\n";
    for (const auto& ev : log.task_evals) {
      auto ht = head_tail_breakdown(ev, counts);
      f << seed << ',' << ev.task_id << ',' << ev.num_seen_classes << ','
        << fmt17(ev.average_accuracy) << ',' << fmt17(ht.head_mean) << ','
        << fmt17(ht.tail_mean) << "\n";
    }
  }
  {
    std::ofstream f(dir / "per_class_accuracy.csv");
    f << "task_id,class_id,accuracy\n";
    for (const auto& ev : log.task_evals)
      for (const auto& [cls, acc] : ev.per_class_accuracy)
        f << ev.task_id << ',' << cls << ',' << fmt17(acc) << "\n";
  }
  {
    std::ofstream f(dir / "lws_weights.csv");
    f << "task_id,class_id,weight\n";
    for (std::size_t t = 0; t < log.lws_dump.size(); ++t) {
      const auto& w = log.lws_dump[t];
      if (w.empty()) continue;
      auto cols = seq.classes_through(t);
      for (std::size_t j = 0; j < w.size() && j < cols.size(); ++j)
        f << t << ',' << cols[j] << ',' << fmt17(w[j]) << "\n";
    }
  }
  (void)cfg;
}

void write_summary(const fs::path& out, const ExperimentConfig& cfg,
                   const std::vector<SeedRun>& runs, std::ostream* extra = nullptr,
                   const std::string& axis_prefix = "") {
  double mean = 0.0;
  for (const auto& r : runs) mean += r.log.average_incremental_accuracy;
  mean /= static_cast<double>(runs.size());
  double var = 0.0;
  for (const auto& r : runs) {
    double d = r.log.average_incremental_accuracy - mean;
    var += d * d;
  }
  var /= static_cast<double>(runs.size());  // population std
  std::string row = to_string(cfg.scenario.kind) + "," + to_string(cfg.strategy) + "," +
                    (cfg.two_stage ? "true" : "false") + "," + fmt17(cfg.scenario.rho) +
                    "," + fmt17(mean) + "," + fmt17(std::sqrt(var)) + "," +
                    std::to_string(runs.size());
  std::ofstream f(out);
  f << "scenario,strategy,two_stage,rho,avg_incremental_mean,avg_incremental_std,"
       "num_seeds\n";
  f << row << "\n";
  if (extra) *extra << axis_prefix << row << "\n";
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg, bool overwrite) {
  cfg.validate();
  fs::path out(resolve_output_dir(cfg));
  if (fs::exists(out) && !fs::is_empty(out)) {
    if (!overwrite) {
      std::cerr << "output directory " << out << " exists; pass --overwrite\n";
      return 2;
    }
    fs::remove_all(out);
  }
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) {
    std::cerr << "cannot create " << out << ": " << ec.message() << "\n";
    return 3;
  }

  std::vector<SeedRun> runs;
  for (std::uint64_t seed : cfg.seeds) {
    fs::path dir = out / ("seed_" + std::to_string(seed));
    try {
      auto [train, test, seq] = build_inputs(cfg, seed);
      IncrementalOptions opts;
      opts.aux = cfg.strategy;
      opts.two_stage = cfg.two_stage;
      opts.head_kind = cfg.head_kind;
      opts.predictor = cfg.predictor;
      opts.mem_mode = cfg.memory.mode;
      opts.mem_budget = cfg.memory.budget;
      opts.selection = cfg.memory.selection;
      opts.master_seed = seed;
      RunLog partial;
      try {
        RunLog log = run_incremental(seq, train, test, cfg.train, opts, &partial);
        log.config_snapshot = cfg.to_json();
        write_seed_outputs(dir, cfg, seed, train, seq, log);
        runs.push_back({seed, std::move(log)});
      } catch (...) {
        partial.config_snapshot = cfg.to_json();
        write_seed_outputs(dir, cfg, seed, train, seq, partial);  // flush partials
        throw;
      }
    } catch (const std::exception& e) {
      std::cerr << "seed " << seed << " failed: " << e.what() << "\n";
      return 3;
    }
  }
  write_summary(out / "summary.csv", cfg, runs);
  return 0;
}

SweepAxis sweep_axis_from_string(const std::string& s) {
  if (s == "rho") return SweepAxis::Rho;
  if (s == "memory_budget") return SweepAxis::MemoryBudget;
  if (s == "num_tasks") return SweepAxis::NumTasks;
  throw ConfigError("unknown sweep axis: " + s);
}

int sweep(const ExperimentConfig& base, SweepAxis axis,
          const std::vector<double>& values, bool overwrite) {
  if (values.empty()) throw ConfigError("sweep: no values");
  fs::path root(resolve_output_dir(base));
  std::string axis_name = axis == SweepAxis::Rho          ? "rho"
                          : axis == SweepAxis::MemoryBudget ? "memory_budget"
                                                            : "num_tasks";
  std::ostringstream rows;
  for (double v : values) {
    ExperimentConfig cfg = base;
    char vbuf[32];
    std::snprintf(vbuf, sizeof(vbuf), "%g", v);
    switch (axis) {
      case SweepAxis::Rho: cfg.scenario.rho = v; break;
      case SweepAxis::MemoryBudget:
        cfg.memory.budget = static_cast<std::size_t>(v);
        break;
      case SweepAxis::NumTasks:
        cfg.scenario.num_tasks = static_cast<std::size_t>(v);
        break;
    }
    cfg.output_dir =
        (fs::path(base.output_dir) / (axis_name + "_" + vbuf)).string();
    cfg.validate();
    rows << vbuf << ",";
    {
      // re-run the single experiment; its summary row is duplicated into the
      // sweep summary with the axis column prepended
      int rc = run_experiment(cfg, overwrite);
      if (rc != 0) return rc;
      std::ifstream f(fs::path(resolve_output_dir(cfg)) / "summary.csv");
      std::string header, row;
      std::getline(f, header);
      std::getline(f, row);
      rows << row << "\n";
    }
  }
  fs::create_directories(root);
  std::ofstream f(root / "sweep_summary.csv");
  f << axis_name
    << ",scenario,strategy,two_stage,rho,avg_incremental_mean,avg_incremental_std,"
       "num_seeds\n";
  f << rows.str();
  return 0;
}

std::string make_manifest(const ExperimentConfig& cfg) {
  cfg.validate();
  auto [train, test, seq] = build_inputs(cfg, cfg.seeds.front());
  (void)train;
  (void)test;
  return seq.to_manifest_json();
}

}  // namespace ltcil
