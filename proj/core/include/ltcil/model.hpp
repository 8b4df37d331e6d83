#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ltcil/matrix.hpp"
#include "ltcil/mlp.hpp"
#include "ltcil/params.hpp"

namespace ltcil {

enum class HeadKind { Linear, Cosine };

std::string to_string(HeadKind k);
HeadKind head_kind_from_string(const std::string& s);

/// Forward intermediates for IncrementalModel::backward.
struct ModelCache {
  MlpCache mlp;
  Matrix features;
  Matrix logits;  // pre-scaling
  bool scaled = false;
};

/// Shared MLP feature extractor plus a growing list of per-task heads whose
/// outputs concatenate. A per-class weight-scaling vector (lws) exists only
/// between freeze_for_stage2() and the next add_task_head().
class IncrementalModel {
 public:
  // arch = {input_dim, hidden..., feature_dim}
  IncrementalModel(std::vector<std::size_t> arch, HeadKind kind, std::uint64_t seed);

  HeadKind head_kind() const { return kind_; }
  const std::vector<std::size_t>& arch() const { return arch_; }
  std::size_t feature_dim() const { return arch_.back(); }
  std::size_t input_dim() const { return arch_.front(); }
  std::size_t num_heads() const { return head_widths_.size(); }
  const std::vector<std::size_t>& head_widths() const { return head_widths_; }
  std::size_t total_classes() const;
  bool has_lws() const { return params_.has("lws"); }

  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  void add_task_head(std::size_t num_new_classes, std::uint64_t seed);
  void freeze_for_stage2();

  Matrix features(const Matrix& x, MlpCache* cache = nullptr) const;
  Matrix forward_logits(const Matrix& x) const;
  Matrix forward_scaled(const Matrix& x) const;

  // training-path forward keeping intermediates
  Matrix forward_train(const Matrix& x, bool scaled, ModelCache& cache) const;
  // Backprop from d(output logits); accumulates parameter gradients.
  // extra_dfeatures, when given, is added to the feature gradient before the
  // extractor backward (feature-space auxiliary losses hook in here).
  Matrix backward(const Matrix& dlogits, const ModelCache& cache,
                  const Matrix* extra_dfeatures = nullptr);

  // NCM inference over L2-normalized features and means; ties to lower id.
  void set_class_means(std::map<int, std::vector<double>> means);
  bool has_class_means() const { return !class_means_.empty(); }
  std::vector<int> ncm_predict(const Matrix& x) const;

  std::vector<double> lws_vector() const;

  std::string to_checkpoint_json() const;
  static IncrementalModel from_checkpoint_json(const std::string& text);

 private:
  Matrix head_forward(const Matrix& feats) const;

  std::vector<std::size_t> arch_;
  HeadKind kind_;
  std::vector<std::size_t> head_widths_;
  ParamSet params_;
  std::map<int, std::vector<double>> class_means_;
};

}  // namespace ltcil
