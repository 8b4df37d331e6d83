#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ltcil/memory.hpp"
#include "ltcil/scenario.hpp"
#include "ltcil/training.hpp"

namespace ltcil {

struct DatasetSpec {
  std::string type = "synthetic";  // synthetic | csv
  // synthetic
  std::size_t num_classes = 20;
  std::size_t per_class = 220;
  std::size_t feature_dim = 16;
  double cluster_spread = 1.0;
  // csv
  std::string path;
};

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::Shuffled;
  double rho = 0.01;
  std::size_t n_max = 200;
  std::size_t num_tasks = 5;
  std::size_t base_classes = 0;  // 0 = default ceil(C/2)
};

struct MemorySpec {
  BudgetMode mode = BudgetMode::FixedPerClass;
  std::size_t budget = 20;
  SelectionKind selection = SelectionKind::Herding;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  std::size_t test_per_class = 20;
  ScenarioSpec scenario;
  MemorySpec memory;
  TrainConfig train;
  AuxKind strategy = AuxKind::None;
  HeadKind head_kind = HeadKind::Linear;
  bool two_stage = true;
  Predictor predictor = Predictor::Scaled;
  std::vector<std::uint64_t> seeds = {1};
  std::string output_dir = "out";

  void validate() const;
  std::string to_json() const;
};

// Strict parse: unknown keys rejected with their key path, missing keys
// filled from defaults, constraints checked.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

// Resolves output_dir against the LTCIL_OUTPUT_ROOT env var when set.
std::string resolve_output_dir(const ExperimentConfig& cfg);

// Per seed: build data -> scenario -> run_incremental -> write
// results.csv, run_log.json, manifest.json, lws_weights.csv and
// per_class_accuracy.csv under <output>/seed_<s>/; then summary.csv.
// Returns 0 on success, 3 on runtime failure.
int run_experiment(const ExperimentConfig& cfg, bool overwrite);

enum class SweepAxis { Rho, MemoryBudget, NumTasks };
SweepAxis sweep_axis_from_string(const std::string& s);

int sweep(const ExperimentConfig& base, SweepAxis axis,
          const std::vector<double>& values, bool overwrite);

// Scenario JSON manifest for the first seed, written to stdout-ready text.
std::string make_manifest(const ExperimentConfig& cfg);

}  // namespace ltcil
