#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ltcil {

struct TaskEval {
  int task_id = 0;
  std::map<int, double> per_class_accuracy;
  double average_accuracy = 0.0;  // unweighted class mean
  std::size_t num_seen_classes = 0;
};

struct TaskPredictions {
  std::vector<int> example_ids;
  std::vector<int> labels;
  std::vector<int> preds;
};

struct RunLog {
  std::string config_snapshot;  // JSON text of the executing configuration
  std::vector<TaskEval> task_evals;
  double average_incremental_accuracy = 0.0;
  std::vector<std::vector<double>> lws_dump;  // per task (empty when no lws)
  std::map<int, std::vector<int>> memory_dump;
  std::uint64_t seed = 0;
  double wall_time_seconds = 0.0;
  std::vector<TaskPredictions> predictions;  // per task, index-ordered
  bool completed = false;

  std::string to_json() const;
};

// Per-class tallies from parallel label/prediction vectors. Every class in
// seen_classes must appear among the labels.
TaskEval tally_eval(const std::vector<int>& labels, const std::vector<int>& preds,
                    const std::vector<int>& seen_classes, int task_id);

double average_incremental(const std::vector<TaskEval>& evals);

struct HeadTailMeans {
  double head_mean = 0.0;
  double tail_mean = 0.0;
};

// Splits seen classes at the median training count: count > median is head.
// When all counts tie (rho = 1) the lower half of the classes ordered by
// (count desc, id asc) is taken as head.
HeadTailMeans head_tail_breakdown(const TaskEval& eval,
                                  const std::map<int, std::size_t>& train_counts);

}  // namespace ltcil
