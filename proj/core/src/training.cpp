#include "ltcil/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>

#include <nlohmann/json.hpp>

#include "ltcil/errors.hpp"
#include "ltcil/rng.hpp"

namespace ltcil {

std::string to_string(AuxKind a) {
  switch (a) {
    case AuxKind::None: return "none";
    case AuxKind::LogitDistill: return "logit_distill";
    case AuxKind::FeatureDistill: return "feature_distill";
  }
  return "?";
}

std::string to_string(Predictor p) {
  switch (p) {
    case Predictor::Scaled: return "scaled";
    case Predictor::Plain: return "plain";
    case Predictor::Ncm: return "ncm";
  }
  return "?";
}

AuxKind aux_kind_from_string(const std::string& s) {
  if (s == "none") return AuxKind::None;
  if (s == "logit_distill") return AuxKind::LogitDistill;
  if (s == "feature_distill") return AuxKind::FeatureDistill;
  throw ConfigError("unknown strategy: " + s);
}

Predictor predictor_from_string(const std::string& s) {
  if (s == "scaled") return Predictor::Scaled;
  if (s == "plain") return Predictor::Plain;
  if (s == "ncm") return Predictor::Ncm;
  throw ConfigError("unknown predictor: " + s);
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (distill_temperature <= 0.0) throw ConfigError("train.temperature must be > 0");
  if (hidden.empty()) throw ConfigError("train.hidden must name at least one layer");
  for (std::size_t i = 1; i < milestones.size(); ++i)
    if (milestones[i] <= milestones[i - 1])
      throw ConfigError("train.milestones must be strictly increasing");
  if (!milestones.empty() && milestones.back() >= epochs_stage1)
    throw ConfigError("train.milestones must be < epochs_stage1");
}

void ClassLayout::extend(const std::vector<int>& new_class_ids,
                         std::size_t num_classes) {
  if (class_to_col.empty()) class_to_col.assign(num_classes, -1);
  for (int cls : new_class_ids) {
    if (class_to_col[cls] != -1)
      throw ContractError("ClassLayout: class " + std::to_string(cls) +
                          " introduced twice");
    class_to_col[cls] = static_cast<int>(col_to_class.size());
    col_to_class.push_back(cls);
  }
}

std::vector<int> ClassLayout::cols_of(const std::vector<int>& labels) const {
  std::vector<int> cols(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    int c = class_to_col[labels[i]];
    if (c < 0)
      throw ContractError("ClassLayout: label " + std::to_string(labels[i]) +
                          " not yet introduced");
    cols[i] = c;
  }
  return cols;
}

LossGrad cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
  if (labels.size() != logits.rows())
    throw ContractError("cross_entropy: batch size mismatch");
  std::size_t batch = logits.rows(), k = logits.cols();
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= k)
      throw ContractError("cross_entropy: label out of range");
  LossGrad out;
  out.grad = softmax_rows(logits);
  double loss = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    // -log p via log-sum-exp for accuracy
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) mx = std::max(mx, logits(i, j));
    double lse = 0.0;
    for (std::size_t j = 0; j < k; ++j) lse += std::exp(logits(i, j) - mx);
    loss += std::log(lse) + mx - logits(i, labels[i]);
    out.grad(i, labels[i]) -= 1.0;
  }
  scale_inplace(out.grad, 1.0 / static_cast<double>(batch));
  out.value = loss / static_cast<double>(batch);
  return out;
}

LossGrad logit_distill(const Matrix& new_logits_old_cols, const Matrix& old_logits,
                       double temperature) {
  if (!new_logits_old_cols.same_shape(old_logits))
    throw DimensionError("logit_distill: shape mismatch");
  double t = temperature;
  std::size_t batch = old_logits.rows(), k = old_logits.cols();
  Matrix old_t = old_logits, new_t = new_logits_old_cols;
  scale_inplace(old_t, 1.0 / t);
  scale_inplace(new_t, 1.0 / t);
  Matrix p = softmax_rows(old_t);  // targets, no gradient
  Matrix q = softmax_rows(new_t);
  LossGrad out;
  out.grad = Matrix(batch, k);
  double loss = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) mx = std::max(mx, new_t(i, j));
    double lse = 0.0;
    for (std::size_t j = 0; j < k; ++j) lse += std::exp(new_t(i, j) - mx);
    double log_z = std::log(lse) + mx;
    for (std::size_t j = 0; j < k; ++j) {
      loss -= p(i, j) * (new_t(i, j) - log_z);
      out.grad(i, j) = t * (q(i, j) - p(i, j)) / static_cast<double>(batch);
    }
  }
  out.value = t * t * loss / static_cast<double>(batch);
  return out;
}

LossGrad feature_distill(const Matrix& new_feat, const Matrix& old_feat,
                         double lambda_base, std::size_t c_old, std::size_t c_new) {
  if (!new_feat.same_shape(old_feat))
    throw DimensionError("feature_distill: shape mismatch");
  constexpr double eps = 1e-12;
  double lambda = lambda_base * std::sqrt(static_cast<double>(c_old) /
                                          static_cast<double>(c_new));
  std::size_t batch = new_feat.rows(), d = new_feat.cols();
  LossGrad out;
  out.grad = Matrix(batch, d);
  double loss = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    double nu = 0.0, nv = 0.0, dot = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      nu += new_feat(i, j) * new_feat(i, j);
      nv += old_feat(i, j) * old_feat(i, j);
      dot += new_feat(i, j) * old_feat(i, j);
    }
    nu = std::sqrt(nu);
    nv = std::sqrt(nv);
    if (nu < eps || nv < eps) {
      std::cerr << "feature_distill: near-zero feature norm in row " << i << "\n";
    }
    nu = std::max(nu, eps);
    nv = std::max(nv, eps);
    double cosv = dot / (nu * nv);
    loss += 1.0 - cosv;
    double coef = lambda / static_cast<double>(batch);
    for (std::size_t j = 0; j < d; ++j) {
      out.grad(i, j) =
          -coef * (old_feat(i, j) / (nu * nv) - dot * new_feat(i, j) / (nu * nu * nu * nv));
    }
  }
  out.value = lambda * loss / static_cast<double>(batch);
  return out;
}

std::vector<std::vector<int>> instance_balanced_batches(const std::vector<int>& data,
                                                        std::size_t batch_size,
                                                        std::uint64_t seed,
                                                        std::size_t epoch) {
  if (data.empty()) throw ConfigError("instance_balanced_batches: empty data");
  std::vector<int> order = data;
  Rng rng(mix_seed(seed, 0xB0, epoch));
  rng.shuffle(order);
  std::vector<std::vector<int>> batches;
  for (std::size_t pos = 0; pos < order.size(); pos += batch_size) {
    std::size_t end = std::min(pos + batch_size, order.size());
    batches.emplace_back(order.begin() + pos, order.begin() + end);
  }
  return batches;
}

std::vector<std::vector<int>> class_balanced_batches(
    const std::map<int, std::vector<int>>& per_class_pools, std::size_t batch_size,
    std::size_t steps, std::uint64_t seed) {
  std::vector<const std::vector<int>*> pools;
  for (const auto& [cls, pool] : per_class_pools) {
    if (pool.empty())
      throw ConfigError("class_balanced_batches: empty pool for class " +
                        std::to_string(cls));
    pools.push_back(&pool);
  }
  if (pools.empty()) throw ConfigError("class_balanced_batches: no classes");
  Rng rng(mix_seed(seed, 0xCB, 0));
  std::vector<std::vector<int>> batches(steps);
  for (auto& batch : batches) {
    batch.resize(batch_size);
    for (std::size_t s = 0; s < batch_size; ++s) {
      const auto& pool = *pools[rng.index(pools.size())];
      batch[s] = pool[rng.index(pool.size())];
    }
  }
  return batches;
}

namespace {

double lr_at_epoch(const TrainConfig& cfg, std::size_t epoch) {
  double lr = cfg.lr_stage1;
  for (std::size_t m : cfg.milestones)
    if (epoch >= m) lr /= 10.0;
  return lr;
}

}  // namespace

std::vector<LossReport> train_stage1(IncrementalModel& model, const Dataset& train,
                                     const std::vector<int>& task_indices,
                                     const ExemplarMemory& mem,
                                     const IncrementalModel* old_model,
                                     const TrainConfig& cfg, AuxKind aux,
                                     const ClassLayout& layout) {
  if (model.has_lws()) throw ContractError("train_stage1: lws must be absent");
  std::vector<int> combined = task_indices;
  {
    auto m = mem.all_indices();
    combined.insert(combined.end(), m.begin(), m.end());
  }
  std::size_t c_old = old_model ? old_model->total_classes() : 0;
  std::size_t c_total = model.total_classes();
  std::vector<LossReport> history;
  history.reserve(cfg.epochs_stage1);
  for (std::size_t epoch = 0; epoch < cfg.epochs_stage1; ++epoch) {
    double lr = lr_at_epoch(cfg, epoch);
    auto batches = instance_balanced_batches(combined, cfg.batch_size, cfg.seed, epoch);
    LossReport ep{};
    for (const auto& batch : batches) {
      Matrix x = train.gather(batch);
      std::vector<int> cols = layout.cols_of(train.labels_of(batch));
      ModelCache cache;
      Matrix logits = model.forward_train(x, false, cache);
      LossGrad ce = cross_entropy(logits, cols);
      Matrix dlogits = ce.grad;
      double aux_loss = 0.0;
      Matrix extra_dfeat;
      bool have_extra = false;
      if (old_model && aux == AuxKind::LogitDistill) {
        Matrix old_logits = old_model->forward_logits(x);
        Matrix new_old_cols(x.rows(), c_old);
        for (std::size_t i = 0; i < x.rows(); ++i)
          for (std::size_t j = 0; j < c_old; ++j) new_old_cols(i, j) = logits(i, j);
        LossGrad ld = logit_distill(new_old_cols, old_logits, cfg.distill_temperature);
        aux_loss = ld.value;
        for (std::size_t i = 0; i < x.rows(); ++i)
          for (std::size_t j = 0; j < c_old; ++j) dlogits(i, j) += ld.grad(i, j);
      } else if (old_model && aux == AuxKind::FeatureDistill) {
        Matrix old_feat = old_model->features(x);
        LossGrad fd = feature_distill(cache.features, old_feat,
                                      cfg.feature_lambda_base, c_old, c_total);
        aux_loss = fd.value;
        extra_dfeat = std::move(fd.grad);
        have_extra = true;
      }
      model.backward(dlogits, cache, have_extra ? &extra_dfeat : nullptr);
      sgd_step(model.params(), lr, cfg.momentum);
      ep.ce += ce.value;
      ep.aux += aux_loss;
    }
    double nb = static_cast<double>(batches.size());
    ep.ce /= nb;
    ep.aux /= nb;
    ep.total = ep.ce + ep.aux;
    history.push_back(ep);
  }
  return history;
}

std::vector<LossReport> train_stage2(IncrementalModel& model, const Dataset& train,
                                     const std::vector<int>& task_indices,
                                     const ExemplarMemory& mem, const TrainConfig& cfg,
                                     const ClassLayout& layout) {
  model.freeze_for_stage2();
  std::map<int, std::vector<int>> pools;
  for (int idx : task_indices) pools[train.examples[idx].label].push_back(idx);
  for (const auto& [cls, lst] : mem.store()) {
    auto& pool = pools[cls];
    pool.insert(pool.end(), lst.begin(), lst.end());
  }
  // every seen class must be represented
  for (int cls : layout.col_to_class) {
    auto it = pools.find(cls);
    if (it == pools.end() || it->second.empty())
      throw ConfigError("train_stage2: no data or exemplars for class " +
                        std::to_string(cls));
  }
  std::size_t pool_total = 0;
  for (const auto& [cls, lst] : pools) pool_total += lst.size();
  std::size_t steps = std::max<std::size_t>(pool_total / cfg.batch_size, 1);

  std::vector<LossReport> history;
  history.reserve(cfg.epochs_stage2);
  for (std::size_t epoch = 0; epoch < cfg.epochs_stage2; ++epoch) {
    auto batches =
        class_balanced_batches(pools, cfg.batch_size, steps, mix_seed(cfg.seed, 0x52, epoch));
    LossReport ep{};
    for (const auto& batch : batches) {
      Matrix x = train.gather(batch);
      std::vector<int> cols = layout.cols_of(train.labels_of(batch));
      ModelCache cache;
      Matrix scaled = model.forward_train(x, true, cache);
      LossGrad ce = cross_entropy(scaled, cols);
      model.backward(ce.grad, cache);
      sgd_step(model.params(), cfg.lr_stage2, cfg.momentum);
      ep.ce += ce.value;
    }
    double nb = static_cast<double>(batches.size());
    ep.ce /= nb;
    ep.aux = 0.0;  // no aux loss in stage 2, by contract
    ep.total = ep.ce;
    history.push_back(ep);
  }
  return history;
}

std::pair<TaskEval, TaskPredictions> evaluate_task(const IncrementalModel& model,
                                                   const Dataset& test,
                                                   const std::vector<int>& seen_classes,
                                                   Predictor predictor, int task_id,
                                                   const ClassLayout& layout) {
  std::vector<char> seen(test.num_classes, 0);
  for (int c : seen_classes) seen[c] = 1;
  std::vector<int> idx;
  for (std::size_t i = 0; i < test.size(); ++i)
    if (seen[test.examples[i].label]) idx.push_back(static_cast<int>(i));

  TaskPredictions tp;
  tp.example_ids.reserve(idx.size());
  Matrix x = test.gather(idx);
  std::vector<int> preds;
  if (predictor == Predictor::Ncm) {
    preds = model.ncm_predict(x);
  } else {
    Matrix z = (predictor == Predictor::Scaled) ? model.forward_scaled(x)
                                                : model.forward_logits(x);
    preds.resize(z.rows());
    for (std::size_t i = 0; i < z.rows(); ++i) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < z.cols(); ++j)
        if (z(i, j) > z(i, best)) best = j;
      preds[i] = layout.col_to_class[best];
    }
  }
  for (std::size_t r = 0; r < idx.size(); ++r) {
    tp.example_ids.push_back(test.examples[idx[r]].index);
    tp.labels.push_back(test.examples[idx[r]].label);
    tp.preds.push_back(preds[r]);
  }
  TaskEval ev = tally_eval(tp.labels, tp.preds, seen_classes, task_id);
  return {std::move(ev), std::move(tp)};
}

RunLog run_incremental(const TaskSequence& sequence, const Dataset& train,
                       const Dataset& test, const TrainConfig& cfg,
                       const IncrementalOptions& opts, RunLog* partial_out) {
  cfg.validate();
  auto t_start = std::chrono::steady_clock::now();
  std::uint64_t master = opts.master_seed;

  std::vector<std::size_t> arch;
  arch.push_back(train.feature_dim);
  for (std::size_t h : cfg.hidden) arch.push_back(h);

  IncrementalModel model(arch, opts.head_kind, mix_seed(master, 10, 0));
  ExemplarMemory mem(opts.mem_mode, opts.mem_budget, opts.selection,
                     mix_seed(master, 400, 0));
  ClassLayout layout;
  std::optional<IncrementalModel> old_model;

  RunLog log;
  log.seed = master;

  for (std::size_t t = 0; t < sequence.num_tasks(); ++t) {
    const TaskSpec& task = sequence.tasks[t];
    model.add_task_head(task.class_ids.size(), mix_seed(master, 100 + t, 0));
    layout.extend(task.class_ids, train.num_classes);

    TrainConfig cfg1 = cfg;
    cfg1.seed = mix_seed(master, 200 + t, 0);
    train_stage1(model, train, task.example_indices, mem,
                 old_model ? &*old_model : nullptr, cfg1, opts.aux, layout);
    if (opts.two_stage) {
      TrainConfig cfg2 = cfg;
      cfg2.seed = mix_seed(master, 300 + t, 0);
      train_stage2(model, train, task.example_indices, mem, cfg2, layout);
    }

    // memory selection uses the deployed (post-stage-2) extractor
    FeatureFn extractor = [&model](const Matrix& m) { return model.features(m); };
    mem.update_after_task(train, task.class_ids, task.example_indices, extractor);

    old_model = model;  // frozen snapshot for the next task's distillation

    Predictor eff = opts.predictor;
    if (eff == Predictor::Scaled && !model.has_lws()) eff = Predictor::Plain;
    if (eff == Predictor::Ncm) {
      // class means from exemplar memory, plus the current task's full data
      std::map<int, std::vector<int>> mean_pools;
      for (const auto& [cls, lst] : mem.store()) mean_pools[cls] = lst;
      for (int i : task.example_indices)
        mean_pools[train.examples[i].label].push_back(i);
      std::map<int, std::vector<double>> means;
      for (auto& [cls, pool] : mean_pools) {
        std::sort(pool.begin(), pool.end());
        pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
        Matrix feats = model.features(train.gather(pool));
        std::vector<double> mean(feats.cols(), 0.0);
        for (std::size_t i = 0; i < feats.rows(); ++i)
          for (std::size_t j = 0; j < feats.cols(); ++j) mean[j] += feats(i, j);
        for (double& v : mean) v /= static_cast<double>(feats.rows());
        means[cls] = std::move(mean);
      }
      model.set_class_means(std::move(means));
    }

    auto [ev, preds] = evaluate_task(model, test, layout.col_to_class, eff,
                                     static_cast<int>(t), layout);
    log.task_evals.push_back(std::move(ev));
    log.predictions.push_back(std::move(preds));
    log.lws_dump.push_back(model.lws_vector());
    log.average_incremental_accuracy = average_incremental(log.task_evals);
    log.memory_dump = mem.store();
    if (partial_out) *partial_out = log;
  }
  log.completed = true;
  auto t_end = std::chrono::steady_clock::now();
  log.wall_time_seconds = std::chrono::duration<double>(t_end - t_start).count();
  if (partial_out) *partial_out = log;
  return log;
}

}  // namespace ltcil
