#include "ltcil/metrics.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "ltcil/errors.hpp"

namespace ltcil {

TaskEval tally_eval(const std::vector<int>& labels, const std::vector<int>& preds,
                    const std::vector<int>& seen_classes, int task_id) {
  if (labels.size() != preds.size())
    throw ContractError("tally_eval: labels/preds size mismatch");
  std::map<int, std::size_t> total, correct;
  for (int c : seen_classes) total[c] = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = total.find(labels[i]);
    if (it == total.end()) continue;  // class outside the seen set
    ++it->second;
    if (preds[i] == labels[i]) ++correct[labels[i]];
  }
  TaskEval ev;
  ev.task_id = task_id;
  ev.num_seen_classes = seen_classes.size();
  double sum = 0.0;
  for (int c : seen_classes) {
    if (total[c] == 0)
      throw ContractError("tally_eval: seen class " + std::to_string(c) +
                          " absent from the test set");
    double acc = static_cast<double>(correct[c]) / static_cast<double>(total[c]);
    ev.per_class_accuracy[c] = acc;
    sum += acc;
  }
  ev.average_accuracy = sum / static_cast<double>(seen_classes.size());
  return ev;
}

double average_incremental(const std::vector<TaskEval>& evals) {
  if (evals.empty()) throw ConfigError("average_incremental: empty list");
  double sum = 0.0;
  for (const auto& e : evals) sum += e.average_accuracy;
  return sum / static_cast<double>(evals.size());
}

HeadTailMeans head_tail_breakdown(const TaskEval& eval,
                                  const std::map<int, std::size_t>& train_counts) {
  std::vector<std::pair<int, std::size_t>> classes;  // (id, count)
  for (const auto& [cls, acc] : eval.per_class_accuracy) {
    auto it = train_counts.find(cls);
    if (it == train_counts.end())
      throw ContractError("head_tail_breakdown: no training count for class " +
                          std::to_string(cls));
    classes.emplace_back(cls, it->second);
  }
  std::vector<std::size_t> counts;
  for (const auto& [cls, n] : classes) counts.push_back(n);
  std::sort(counts.begin(), counts.end());
  std::size_t n = counts.size();
  double median = (n % 2 == 1)
                      ? static_cast<double>(counts[n / 2])
                      : 0.5 * static_cast<double>(counts[n / 2 - 1] + counts[n / 2]);
  std::vector<int> head, tail;
  for (const auto& [cls, cnt] : classes) {
    (static_cast<double>(cnt) > median ? head : tail).push_back(cls);
  }
  if (head.empty()) {
    // degenerate (all counts equal): lower half by (count desc, id asc)
    std::sort(classes.begin(), classes.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    head.clear();
    tail.clear();
    for (std::size_t i = 0; i < classes.size(); ++i)
      (i < classes.size() / 2 ? head : tail).push_back(classes[i].first);
  }
  auto mean_of = [&](const std::vector<int>& ids) {
    if (ids.empty()) return 0.0;
    double s = 0.0;
    for (int c : ids) s += eval.per_class_accuracy.at(c);
    return s / static_cast<double>(ids.size());
  };
  return {mean_of(head), mean_of(tail)};
}

std::string RunLog::to_json() const {
  nlohmann::json j;
  j["config"] = config_snapshot.empty() ? nlohmann::json::object()
                                        : nlohmann::json::parse(config_snapshot);
  j["seed"] = seed;
  j["completed"] = completed;
  j["wall_time_seconds"] = wall_time_seconds;
  j["average_incremental_accuracy"] = average_incremental_accuracy;
  j["tasks"] = nlohmann::json::array();
  for (std::size_t t = 0; t < task_evals.size(); ++t) {
    const auto& e = task_evals[t];
    nlohmann::json tj;
    tj["task_id"] = e.task_id;
    tj["num_seen_classes"] = e.num_seen_classes;
    tj["average_accuracy"] = e.average_accuracy;
    nlohmann::json pca = nlohmann::json::object();
    for (const auto& [cls, acc] : e.per_class_accuracy) pca[std::to_string(cls)] = acc;
    tj["per_class_accuracy"] = std::move(pca);
    if (t < lws_dump.size()) tj["lws"] = lws_dump[t];
    if (t < predictions.size()) {
      tj["predictions"] = {{"example_ids", predictions[t].example_ids},
                           {"labels", predictions[t].labels},
                           {"preds", predictions[t].preds}};
    }
    j["tasks"].push_back(std::move(tj));
  }
  nlohmann::json mem = nlohmann::json::object();
  for (const auto& [cls, idx] : memory_dump) mem[std::to_string(cls)] = idx;
  j["memory"] = std::move(mem);
  return j.dump(2);
}

}  // namespace ltcil
