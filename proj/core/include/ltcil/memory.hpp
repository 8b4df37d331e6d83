#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ltcil/data.hpp"

namespace ltcil {

enum class BudgetMode { TotalCapacity, FixedPerClass };
enum class SelectionKind { Herding, Random };

std::string to_string(BudgetMode m);
std::string to_string(SelectionKind s);
BudgetMode budget_mode_from_string(const std::string& s);
SelectionKind selection_kind_from_string(const std::string& s);

// floor(capacity / num_seen_classes)
std::size_t per_class_budget(std::size_t capacity, std::size_t num_seen_classes);

// Greedy herding: iteratively pick the example whose addition keeps the
// running mean of selected features closest to the class mean. Ties break by
// input position. Returns indices from class_examples in pick order.
// k greater than the pool truncates with a warning on stderr.
std::vector<int> select_herding(const std::vector<int>& class_examples,
                                const Matrix& features, std::size_t k);

std::vector<int> select_random(const std::vector<int>& class_examples, std::size_t k,
                               std::uint64_t seed);

using FeatureFn = std::function<Matrix(const Matrix&)>;

/// Bounded exemplar replay store. Herding lists are prefix-stable under
/// budget shrinks; random lists are re-drawn from the surviving pool.
class ExemplarMemory {
 public:
  ExemplarMemory(BudgetMode mode, std::size_t budget, SelectionKind selection,
                 std::uint64_t seed);

  BudgetMode mode() const { return mode_; }
  std::size_t budget() const { return budget_; }
  SelectionKind selection() const { return selection_; }

  // New task arrived: shrink old allocations if needed, then select
  // exemplars for each new class using extractor features.
  void update_after_task(const Dataset& train,
                         const std::vector<int>& new_class_ids,
                         const std::vector<int>& new_task_indices,
                         const FeatureFn& extractor);

  std::size_t num_classes() const { return store_.size(); }
  std::size_t total_stored() const;
  const std::map<int, std::vector<int>>& store() const { return store_; }
  std::vector<int> all_indices() const;
  std::size_t current_per_class_budget() const;

 private:
  BudgetMode mode_;
  std::size_t budget_;
  SelectionKind selection_;
  std::uint64_t seed_;
  std::size_t update_count_ = 0;
  std::map<int, std::vector<int>> store_;
};

}  // namespace ltcil
