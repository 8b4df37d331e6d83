#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ltcil/data.hpp"
#include "ltcil/memory.hpp"
#include "ltcil/metrics.hpp"
#include "ltcil/model.hpp"
#include "ltcil/scenario.hpp"

namespace ltcil {

enum class AuxKind { None, LogitDistill, FeatureDistill };
enum class Predictor { Scaled, Plain, Ncm };

std::string to_string(AuxKind a);
std::string to_string(Predictor p);
AuxKind aux_kind_from_string(const std::string& s);
Predictor predictor_from_string(const std::string& s);

struct TrainConfig {
  std::size_t epochs_stage1 = 60;
  std::size_t epochs_stage2 = 30;
  double lr_stage1 = 0.1;
  std::vector<std::size_t> milestones = {40, 50};  // divide lr by 10
  double lr_stage2 = 0.1;
  double momentum = 0.9;
  std::size_t batch_size = 32;
  std::vector<std::size_t> hidden = {32};  // extractor hidden layer sizes
  double distill_temperature = 2.0;
  double feature_lambda_base = 5.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LossReport {
  double ce = 0.0;
  double aux = 0.0;
  double total = 0.0;
};

struct LossGrad {
  double value = 0.0;
  Matrix grad;
};

// Mean of -log softmax(logits)[label]; grad = (softmax - onehot) / batch.
LossGrad cross_entropy(const Matrix& logits, const std::vector<int>& labels);

// LwF-style distillation on the old-class columns; targets are the
// temperature-softened old logits (no gradient); scaled by temperature^2.
LossGrad logit_distill(const Matrix& new_logits_old_cols, const Matrix& old_logits,
                       double temperature);

// lambda * mean(1 - cos(new_feat_i, old_feat_i)), lambda =
// lambda_base * sqrt(c_old / c_new). Gradient w.r.t. new_feat only.
LossGrad feature_distill(const Matrix& new_feat, const Matrix& old_feat,
                         double lambda_base, std::size_t c_old, std::size_t c_new);

// Fresh seeded permutation per epoch (seed mixed with epoch); every index
// appears exactly once, last batch may be short.
std::vector<std::vector<int>> instance_balanced_batches(const std::vector<int>& data,
                                                        std::size_t batch_size,
                                                        std::uint64_t seed,
                                                        std::size_t epoch);

// With-replacement: each slot draws a class uniformly, then an instance
// uniformly within the class pool.
std::vector<std::vector<int>> class_balanced_batches(
    const std::map<int, std::vector<int>>& per_class_pools, std::size_t batch_size,
    std::size_t steps, std::uint64_t seed);

/// Mapping between class ids and logit columns (columns are ordered by task
/// introduction, then by each task's class list).
struct ClassLayout {
  std::vector<int> col_to_class;
  std::vector<int> class_to_col;  // indexed by class id, -1 when unseen

  void extend(const std::vector<int>& new_class_ids, std::size_t num_classes);
  std::vector<int> cols_of(const std::vector<int>& labels) const;
};

std::vector<LossReport> train_stage1(IncrementalModel& model, const Dataset& train,
                                     const std::vector<int>& task_indices,
                                     const ExemplarMemory& mem,
                                     const IncrementalModel* old_model,
                                     const TrainConfig& cfg, AuxKind aux,
                                     const ClassLayout& layout);

// Freezes extractor + old heads, attaches lws, trains on class-balanced
// batches from task data plus memory. No aux loss in stage 2.
std::vector<LossReport> train_stage2(IncrementalModel& model, const Dataset& train,
                                     const std::vector<int>& task_indices,
                                     const ExemplarMemory& mem, const TrainConfig& cfg,
                                     const ClassLayout& layout);

std::pair<TaskEval, TaskPredictions> evaluate_task(const IncrementalModel& model,
                                                   const Dataset& test,
                                                   const std::vector<int>& seen_classes,
                                                   Predictor predictor, int task_id,
                                                   const ClassLayout& layout);

struct IncrementalOptions {
  AuxKind aux = AuxKind::None;
  bool two_stage = true;
  HeadKind head_kind = HeadKind::Linear;
  Predictor predictor = Predictor::Scaled;
  BudgetMode mem_mode = BudgetMode::FixedPerClass;
  std::size_t mem_budget = 20;
  SelectionKind selection = SelectionKind::Herding;
  std::uint64_t master_seed = 0;
};

// The full incremental loop: per task, add head -> stage 1 -> optional
// stage 2 -> update memory -> snapshot the deployed model for distillation
// -> evaluate over classes seen so far.
// partial_out, when given, receives the in-progress log after every task so
// callers can flush something useful if a later task throws.
RunLog run_incremental(const TaskSequence& sequence, const Dataset& train,
                       const Dataset& test, const TrainConfig& cfg,
                       const IncrementalOptions& opts, RunLog* partial_out = nullptr);

}  // namespace ltcil
