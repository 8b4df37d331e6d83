#include "ltcil/memory.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "ltcil/errors.hpp"
#include "ltcil/rng.hpp"

namespace ltcil {

std::string to_string(BudgetMode m) {
  return m == BudgetMode::TotalCapacity ? "total" : "per_class";
}
std::string to_string(SelectionKind s) {
  return s == SelectionKind::Herding ? "herding" : "random";
}
BudgetMode budget_mode_from_string(const std::string& s) {
  if (s == "total") return BudgetMode::TotalCapacity;
  if (s == "per_class") return BudgetMode::FixedPerClass;
  throw ConfigError("unknown memory mode: " + s);
}
SelectionKind selection_kind_from_string(const std::string& s) {
  if (s == "herding") return SelectionKind::Herding;
  if (s == "random") return SelectionKind::Random;
  throw ConfigError("unknown selection kind: " + s);
}

std::size_t per_class_budget(std::size_t capacity, std::size_t num_seen_classes) {
  if (num_seen_classes == 0) throw ConfigError("per_class_budget: zero classes");
  return capacity / num_seen_classes;
}

std::vector<int> select_herding(const std::vector<int>& class_examples,
                                const Matrix& features, std::size_t k) {
  std::size_t n = class_examples.size();
  if (features.rows() != n)
    throw DimensionError("select_herding: features not row-aligned with examples");
  if (k > n) {
    std::cerr << "select_herding: requested " << k << " of " << n
              << " examples, truncating\n";
    k = n;
  }
  std::size_t d = features.cols();
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += features(i, j);
  for (double& v : mean) v /= static_cast<double>(n);

  std::vector<char> taken(n, 0);
  std::vector<double> sum(d, 0.0);  // sum of selected feature vectors
  std::vector<int> picks;
  picks.reserve(k);
  for (std::size_t step = 1; picks.size() < k; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_i = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      double dist2 = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        double m = (sum[j] + features(i, j)) / static_cast<double>(step);
        double diff = mean[j] - m;
        dist2 += diff * diff;
      }
      if (dist2 < best) {  // strict: ties keep the earliest position
        best = dist2;
        best_i = i;
      }
    }
    taken[best_i] = 1;
    for (std::size_t j = 0; j < d; ++j) sum[j] += features(best_i, j);
    picks.push_back(class_examples[best_i]);
  }
  return picks;
}

std::vector<int> select_random(const std::vector<int>& class_examples, std::size_t k,
                               std::uint64_t seed) {
  std::vector<int> pool = class_examples;
  if (k > pool.size()) {
    std::cerr << "select_random: requested " << k << " of " << pool.size()
              << " examples, truncating\n";
    k = pool.size();
  }
  Rng rng(seed);
  rng.shuffle(pool);
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

ExemplarMemory::ExemplarMemory(BudgetMode mode, std::size_t budget,
                               SelectionKind selection, std::uint64_t seed)
    : mode_(mode), budget_(budget), selection_(selection), seed_(seed) {}

std::size_t ExemplarMemory::total_stored() const {
  std::size_t n = 0;
  for (const auto& [cls, lst] : store_) n += lst.size();
  return n;
}

std::vector<int> ExemplarMemory::all_indices() const {
  std::vector<int> out;
  for (const auto& [cls, lst] : store_) out.insert(out.end(), lst.begin(), lst.end());
  return out;
}

std::size_t ExemplarMemory::current_per_class_budget() const {
  if (mode_ == BudgetMode::FixedPerClass) return budget_;
  if (store_.empty()) return budget_;
  return per_class_budget(budget_, store_.size());
}

void ExemplarMemory::update_after_task(const Dataset& train,
                                       const std::vector<int>& new_class_ids,
                                       const std::vector<int>& new_task_indices,
                                       const FeatureFn& extractor) {
  for (int cls : new_class_ids) {
    if (store_.count(cls))
      throw ContractError("ExemplarMemory: class " + std::to_string(cls) +
                          " already stored");
  }
  ++update_count_;
  std::size_t seen = store_.size() + new_class_ids.size();
  std::size_t budget = (mode_ == BudgetMode::FixedPerClass)
                           ? budget_
                           : per_class_budget(budget_, seen);

  // shrink existing allocations
  for (auto& [cls, lst] : store_) {
    if (lst.size() <= budget) continue;
    if (selection_ == SelectionKind::Herding) {
      lst.resize(budget);  // prefix truncation keeps the herding order
    } else {
      lst = select_random(lst, budget,
                          mix_seed(seed_, 6000 + static_cast<std::uint64_t>(cls),
                                   update_count_));
    }
  }

  // group the new task's indices per class
  std::map<int, std::vector<int>> per_class;
  for (int cls : new_class_ids) per_class[cls] = {};
  for (int idx : new_task_indices) {
    int lbl = train.examples[idx].label;
    auto it = per_class.find(lbl);
    if (it == per_class.end())
      throw ContractError("ExemplarMemory: index with label " + std::to_string(lbl) +
                          " not in the new class set");
    it->second.push_back(idx);
  }

  for (auto& [cls, pool] : per_class) {
    std::sort(pool.begin(), pool.end());
    std::size_t k = std::min(budget, pool.size());
    if (selection_ == SelectionKind::Herding) {
      Matrix feats = extractor(train.gather(pool));
      store_[cls] = select_herding(pool, feats, k);
    } else {
      store_[cls] = select_random(
          pool, k, mix_seed(seed_, 6000 + static_cast<std::uint64_t>(cls), 0));
    }
  }
}

}  // namespace ltcil
