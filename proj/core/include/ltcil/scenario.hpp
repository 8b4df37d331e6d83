#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ltcil/data.hpp"

namespace ltcil {

/// Per-class-rank sample counts for a long-tailed distribution with
/// imbalance ratio rho (rank 0 = most frequent).
struct ImbalanceProfile {
  double rho = 1.0;
  std::size_t n_max = 0;
  std::vector<std::size_t> counts;

  std::size_t num_classes() const { return counts.size(); }
};

// counts[c] = max(1, round(n_max * rho^(c/(C-1)))), round half up.
ImbalanceProfile make_profile(std::size_t num_classes, std::size_t n_max, double rho);

enum class ScenarioKind { Ordered, Shuffled, Conventional };

std::string to_string(ScenarioKind k);
ScenarioKind scenario_kind_from_string(const std::string& s);

struct TaskSpec {
  int task_id = 0;
  std::vector<int> class_ids;
  std::vector<int> example_indices;  // indices into the training Dataset
};

struct TaskSequence {
  std::vector<TaskSpec> tasks;
  ScenarioKind kind = ScenarioKind::Conventional;
  std::vector<int> class_order;  // task-membership order of class ids
  std::uint64_t seed = 0;

  std::size_t num_tasks() const { return tasks.size(); }
  std::vector<int> classes_through(std::size_t task_idx) const;
  // per-class training counts actually present in the sequence
  std::vector<std::size_t> class_counts(const Dataset& ds) const;
  std::string to_manifest_json() const;
};

// Ranks assigned to classes by a seeded permutation; task 1 holds the
// base_classes most frequent ranks, the rest are split in rank order
// (earliest non-base tasks absorb the remainder).
TaskSequence build_ordered(const Dataset& ds, const ImbalanceProfile& profile,
                           std::size_t num_tasks, std::size_t base_classes,
                           std::uint64_t seed);

// Counts assigned by one seeded permutation, task membership by a second.
TaskSequence build_shuffled(const Dataset& ds, const ImbalanceProfile& profile,
                            std::size_t num_tasks, std::size_t base_classes,
                            std::uint64_t seed);

// Balanced tasks; identical to build_shuffled with rho = 1.
TaskSequence build_conventional(const Dataset& ds, std::size_t num_tasks,
                                std::size_t base_classes, std::size_t per_class,
                                std::uint64_t seed);

}  // namespace ltcil
