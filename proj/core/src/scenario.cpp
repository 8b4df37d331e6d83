#include "ltcil/scenario.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "ltcil/errors.hpp"
#include "ltcil/rng.hpp"

namespace ltcil {

ImbalanceProfile make_profile(std::size_t num_classes, std::size_t n_max, double rho) {
  if (num_classes < 1) throw ConfigError("make_profile: num_classes must be >= 1");
  if (n_max < 1) throw ConfigError("make_profile: n_max must be >= 1");
  if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("make_profile: rho must be in (0,1]");
  ImbalanceProfile p;
  p.rho = rho;
  p.n_max = n_max;
  p.counts.resize(num_classes);
  if (num_classes == 1) {
    p.counts[0] = n_max;
    return p;
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    double expo = static_cast<double>(c) / static_cast<double>(num_classes - 1);
    double raw = static_cast<double>(n_max) * std::pow(rho, expo);
    auto rounded = static_cast<std::size_t>(std::floor(raw + 0.5));  // half-up
    p.counts[c] = std::max<std::size_t>(1, rounded);
  }
  return p;
}

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Ordered: return "ordered";
    case ScenarioKind::Shuffled: return "shuffled";
    case ScenarioKind::Conventional: return "conventional";
  }
  return "?";
}

ScenarioKind scenario_kind_from_string(const std::string& s) {
  if (s == "ordered") return ScenarioKind::Ordered;
  if (s == "shuffled") return ScenarioKind::Shuffled;
  if (s == "conventional") return ScenarioKind::Conventional;
  throw ConfigError("unknown scenario kind: " + s);
}

std::vector<int> TaskSequence::classes_through(std::size_t task_idx) const {
  std::vector<int> out;
  for (std::size_t t = 0; t <= task_idx && t < tasks.size(); ++t) {
    out.insert(out.end(), tasks[t].class_ids.begin(), tasks[t].class_ids.end());
  }
  return out;
}

std::vector<std::size_t> TaskSequence::class_counts(const Dataset& ds) const {
  std::vector<std::size_t> counts(ds.num_classes, 0);
  for (const auto& t : tasks) {
    for (int i : t.example_indices) ++counts[ds.examples[i].label];
  }
  return counts;
}

std::string TaskSequence::to_manifest_json() const {
  nlohmann::json j;
  j["scenario_kind"] = to_string(kind);
  j["seed"] = seed;
  j["class_order"] = class_order;
  j["tasks"] = nlohmann::json::array();
  for (const auto& t : tasks) {
    nlohmann::json tj;
    tj["task_id"] = t.task_id;
    tj["class_ids"] = t.class_ids;
    tj["example_indices"] = t.example_indices;
    j["tasks"].push_back(std::move(tj));
  }
  return j.dump(2);
}

namespace {

// Split class_order into task buckets: base task first, the remainder in
// order with earliest non-base tasks taking one extra class each.
std::vector<std::vector<int>> split_tasks(const std::vector<int>& class_order,
                                          std::size_t num_tasks,
                                          std::size_t base_classes) {
  std::size_t c = class_order.size();
  if (num_tasks < 1) throw ConfigError("build: num_tasks must be >= 1");
  if (num_tasks == 1) return {class_order};
  if (base_classes < 1 || base_classes >= c)
    throw ConfigError("build: base_classes must be in [1, num_classes)");
  std::size_t rest = c - base_classes;
  std::size_t later = num_tasks - 1;
  if (rest < later)
    throw ConfigError("build: not enough classes for " + std::to_string(num_tasks) +
                      " tasks");
  std::vector<std::vector<int>> buckets;
  std::size_t pos = 0;
  buckets.emplace_back(class_order.begin(), class_order.begin() + base_classes);
  pos = base_classes;
  std::size_t q = rest / later, rem = rest % later;
  for (std::size_t t = 0; t < later; ++t) {
    std::size_t take = q + (t < rem ? 1 : 0);
    buckets.emplace_back(class_order.begin() + pos, class_order.begin() + pos + take);
    pos += take;
  }
  return buckets;
}

// Subsample class `cls` of ds down to `count` examples, seeded per class.
std::vector<int> subsample_class(const Dataset& ds, int cls, std::size_t count,
                                 std::uint64_t seed) {
  const auto& pool = ds.per_class_index[cls];
  if (pool.size() < count)
    throw ConfigError("build: class " + std::to_string(cls) + " has " +
                      std::to_string(pool.size()) + " examples, profile needs " +
                      std::to_string(count));
  std::vector<int> chosen = pool;
  Rng rng(mix_seed(seed, 3000 + static_cast<std::uint64_t>(cls), 0));
  rng.shuffle(chosen);
  chosen.resize(count);
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

TaskSequence assemble(const Dataset& ds, const ImbalanceProfile& profile,
                      std::size_t num_tasks, std::size_t base_classes,
                      std::uint64_t seed, ScenarioKind kind,
                      const std::vector<int>& rank_to_class,
                      const std::vector<int>& class_order) {
  std::size_t c = profile.num_classes();
  if (ds.num_classes < c)
    throw ConfigError("build: dataset has fewer classes than the profile");
  // per-class assigned counts
  std::vector<std::size_t> count_of_class(c);
  for (std::size_t r = 0; r < c; ++r)
    count_of_class[rank_to_class[r]] = profile.counts[r];

  TaskSequence seq;
  seq.kind = kind;
  seq.seed = seed;
  seq.class_order = class_order;
  auto buckets = split_tasks(class_order, num_tasks, base_classes);
  for (std::size_t t = 0; t < buckets.size(); ++t) {
    TaskSpec task;
    task.task_id = static_cast<int>(t);
    task.class_ids = buckets[t];
    for (int cls : task.class_ids) {
      auto idx = subsample_class(ds, cls, count_of_class[cls], seed);
      task.example_indices.insert(task.example_indices.end(), idx.begin(), idx.end());
    }
    seq.tasks.push_back(std::move(task));
  }
  return seq;
}

}  // namespace

TaskSequence build_ordered(const Dataset& ds, const ImbalanceProfile& profile,
                           std::size_t num_tasks, std::size_t base_classes,
                           std::uint64_t seed) {
  std::size_t c = profile.num_classes();
  std::vector<int> rank_to_class(c);
  for (std::size_t i = 0; i < c; ++i) rank_to_class[i] = static_cast<int>(i);
  Rng rng(mix_seed(seed, 4000, 0));
  rng.shuffle(rank_to_class);
  // ordered: task membership follows frequency rank (head classes first)
  return assemble(ds, profile, num_tasks, base_classes, seed, ScenarioKind::Ordered,
                  rank_to_class, rank_to_class);
}

TaskSequence build_shuffled(const Dataset& ds, const ImbalanceProfile& profile,
                            std::size_t num_tasks, std::size_t base_classes,
                            std::uint64_t seed) {
  std::size_t c = profile.num_classes();
  std::vector<int> rank_to_class(c);
  for (std::size_t i = 0; i < c; ++i) rank_to_class[i] = static_cast<int>(i);
  Rng rng_counts(mix_seed(seed, 4000, 0));
  rng_counts.shuffle(rank_to_class);
  std::vector<int> class_order(rank_to_class.begin(), rank_to_class.end());
  Rng rng_order(mix_seed(seed, 5000, 0));
  rng_order.shuffle(class_order);
  return assemble(ds, profile, num_tasks, base_classes, seed, ScenarioKind::Shuffled,
                  rank_to_class, class_order);
}

TaskSequence build_conventional(const Dataset& ds, std::size_t num_tasks,
                                std::size_t base_classes, std::size_t per_class,
                                std::uint64_t seed) {
  ImbalanceProfile p = make_profile(ds.num_classes, per_class, 1.0);
  TaskSequence seq = build_shuffled(ds, p, num_tasks, base_classes, seed);
  seq.kind = ScenarioKind::Conventional;
  return seq;
}

}  // namespace ltcil
