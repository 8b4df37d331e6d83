#include "ltcil/model.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "ltcil/errors.hpp"
#include "ltcil/rng.hpp"

namespace ltcil {

namespace {
constexpr double kNormEps = 1e-12;
constexpr double kCosineScaleInit = 10.0;

double guarded_norm(const double* v, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += v[i] * v[i];
  return std::max(std::sqrt(s), kNormEps);
}
}  // namespace

std::string to_string(HeadKind k) { return k == HeadKind::Linear ? "linear" : "cosine"; }

HeadKind head_kind_from_string(const std::string& s) {
  if (s == "linear") return HeadKind::Linear;
  if (s == "cosine") return HeadKind::Cosine;
  throw ConfigError("unknown head kind: " + s);
}

IncrementalModel::IncrementalModel(std::vector<std::size_t> arch, HeadKind kind,
                                   std::uint64_t seed)
    : arch_(std::move(arch)), kind_(kind) {
  Rng rng(mix_seed(seed, 7000, 0));
  mlp_init(params_, arch_, rng, "f.");
}

std::size_t IncrementalModel::total_classes() const {
  std::size_t n = 0;
  for (std::size_t w : head_widths_) n += w;
  return n;
}

void IncrementalModel::add_task_head(std::size_t num_new_classes, std::uint64_t seed) {
  if (num_new_classes < 1) throw ConfigError("add_task_head: need >= 1 class");
  if (params_.has("lws")) params_.remove("lws");  // discarded for the next task
  std::size_t t = head_widths_.size();
  std::size_t d = feature_dim();
  Rng rng(mix_seed(seed, 8000 + t, 0));
  double bound = std::sqrt(6.0 / static_cast<double>(d + num_new_classes));
  Matrix w(d, num_new_classes);
  for (double& v : w.data()) v = rng.uniform(-bound, bound);
  std::string prefix = "h" + std::to_string(t) + ".";
  params_.add(prefix + "W", std::move(w));
  if (kind_ == HeadKind::Linear) {
    params_.add(prefix + "b", Matrix(1, num_new_classes));
  } else if (!params_.has("eta")) {
    params_.add("eta", Matrix(1, 1, kCosineScaleInit));
  }
  head_widths_.push_back(num_new_classes);
  params_.set_all_trainable(true);  // stage 1 trains everything
}

void IncrementalModel::freeze_for_stage2() {
  if (head_widths_.empty()) throw ContractError("freeze_for_stage2: no heads yet");
  params_.set_all_trainable(false);
  std::size_t t = head_widths_.size() - 1;
  std::string prefix = "h" + std::to_string(t) + ".";
  params_.set_trainable(prefix + "W", true);
  if (kind_ == HeadKind::Linear) params_.set_trainable(prefix + "b", true);
  if (params_.has("lws")) params_.remove("lws");
  params_.add("lws", Matrix(1, total_classes(), 1.0));
}

Matrix IncrementalModel::features(const Matrix& x, MlpCache* cache) const {
  return mlp_forward(x, params_, arch_, cache, "f.");
}

Matrix IncrementalModel::head_forward(const Matrix& feats) const {
  if (head_widths_.empty()) throw ContractError("forward: no heads yet");
  std::size_t batch = feats.rows();
  Matrix logits(batch, total_classes());
  std::size_t col0 = 0;
  for (std::size_t t = 0; t < head_widths_.size(); ++t) {
    std::string prefix = "h" + std::to_string(t) + ".";
    const Matrix& w = params_.get(prefix + "W").value;
    if (kind_ == HeadKind::Linear) {
      const Matrix& b = params_.get(prefix + "b").value;
      for (std::size_t i = 0; i < batch; ++i) {
        for (std::size_t c = 0; c < head_widths_[t]; ++c) {
          double z = b(0, c);
          for (std::size_t j = 0; j < feats.cols(); ++j) z += feats(i, j) * w(j, c);
          logits(i, col0 + c) = z;
        }
      }
    } else {
      double eta = params_.get("eta").value(0, 0);
      std::size_t d = feats.cols();
      for (std::size_t c = 0; c < head_widths_[t]; ++c) {
        double nw = 0.0;
        for (std::size_t j = 0; j < d; ++j) nw += w(j, c) * w(j, c);
        nw = std::max(std::sqrt(nw), kNormEps);
        for (std::size_t i = 0; i < batch; ++i) {
          double nu = guarded_norm(&feats.data()[i * d], d);
          double dot = 0.0;
          for (std::size_t j = 0; j < d; ++j) dot += feats(i, j) * w(j, c);
          logits(i, col0 + c) = eta * dot / (nu * nw);
        }
      }
    }
    col0 += head_widths_[t];
  }
  return logits;
}

Matrix IncrementalModel::forward_logits(const Matrix& x) const {
  return head_forward(features(x));
}

Matrix IncrementalModel::forward_scaled(const Matrix& x) const {
  if (!has_lws()) throw ContractError("forward_scaled: lws absent");
  Matrix z = forward_logits(x);
  const Matrix& lws = params_.get("lws").value;
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) *= lws(0, j);
  return z;
}

Matrix IncrementalModel::forward_train(const Matrix& x, bool scaled,
                                       ModelCache& cache) const {
  cache.features = mlp_forward(x, params_, arch_, &cache.mlp, "f.");
  cache.logits = head_forward(cache.features);
  cache.scaled = scaled;
  if (!scaled) return cache.logits;
  if (!has_lws()) throw ContractError("forward_train: lws absent for scaled forward");
  Matrix z = cache.logits;
  const Matrix& lws = params_.get("lws").value;
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) *= lws(0, j);
  return z;
}

Matrix IncrementalModel::backward(const Matrix& dlogits, const ModelCache& cache,
                                  const Matrix* extra_dfeatures) {
  if (!dlogits.same_shape(cache.logits))
    throw ContractError("backward: gradient shape does not match cached logits");
  Matrix dz = dlogits;
  if (cache.scaled) {
    Param& lws = params_.get("lws");
    for (std::size_t i = 0; i < dz.rows(); ++i) {
      for (std::size_t j = 0; j < dz.cols(); ++j) {
        lws.grad(0, j) += dlogits(i, j) * cache.logits(i, j);
        dz(i, j) = dlogits(i, j) * lws.value(0, j);
      }
    }
  }

  const Matrix& feats = cache.features;
  std::size_t batch = feats.rows(), d = feats.cols();
  Matrix dfeats(batch, d);
  std::size_t col0 = 0;
  for (std::size_t t = 0; t < head_widths_.size(); ++t) {
    std::string prefix = "h" + std::to_string(t) + ".";
    Param& w = params_.get(prefix + "W");
    if (kind_ == HeadKind::Linear) {
      Param& b = params_.get(prefix + "b");
      for (std::size_t i = 0; i < batch; ++i) {
        for (std::size_t c = 0; c < head_widths_[t]; ++c) {
          double g = dz(i, col0 + c);
          if (g == 0.0) continue;
          b.grad(0, c) += g;
          for (std::size_t j = 0; j < d; ++j) {
            w.grad(j, c) += g * feats(i, j);
            dfeats(i, j) += g * w.value(j, c);
          }
        }
      }
    } else {
      Param& eta_p = params_.get("eta");
      double eta = eta_p.value(0, 0);
      for (std::size_t c = 0; c < head_widths_[t]; ++c) {
        double nw = 0.0;
        for (std::size_t j = 0; j < d; ++j) nw += w.value(j, c) * w.value(j, c);
        nw = std::max(std::sqrt(nw), kNormEps);
        for (std::size_t i = 0; i < batch; ++i) {
          double g = dz(i, col0 + c);
          if (g == 0.0) continue;
          double nu = guarded_norm(&feats.data()[i * d], d);
          double dot = 0.0;
          for (std::size_t j = 0; j < d; ++j) dot += feats(i, j) * w.value(j, c);
          double s = dot / (nu * nw);
          eta_p.grad(0, 0) += g * s;
          double ge = g * eta;
          for (std::size_t j = 0; j < d; ++j) {
            dfeats(i, j) += ge * (w.value(j, c) / (nu * nw) - dot * feats(i, j) / (nu * nu * nu * nw));
            w.grad(j, c) += ge * (feats(i, j) / (nu * nw) - dot * w.value(j, c) / (nu * nw * nw * nw));
          }
        }
      }
    }
    col0 += head_widths_[t];
  }
  if (extra_dfeatures) add_inplace(dfeats, *extra_dfeatures);
  return mlp_backward(dfeats, cache.mlp, params_, "f.");
}

void IncrementalModel::set_class_means(std::map<int, std::vector<double>> means) {
  class_means_ = std::move(means);
}

std::vector<int> IncrementalModel::ncm_predict(const Matrix& x) const {
  if (class_means_.empty()) throw ContractError("ncm_predict: class means not set");
  std::size_t d = feature_dim();
  std::vector<std::pair<int, std::vector<double>>> norm_means;
  for (const auto& [cls, m] : class_means_) {
    if (m.size() != d)
      throw ContractError("ncm_predict: mean for class " + std::to_string(cls) +
                          " has wrong dimension");
    std::vector<double> nm = m;
    double n = guarded_norm(nm.data(), d);
    for (double& v : nm) v /= n;
    norm_means.emplace_back(cls, std::move(nm));
  }
  Matrix feats = features(x);
  std::vector<int> preds(feats.rows());
  for (std::size_t i = 0; i < feats.rows(); ++i) {
    double fn = guarded_norm(&feats.data()[i * d], d);
    double best = std::numeric_limits<double>::infinity();
    int best_cls = -1;
    for (const auto& [cls, m] : norm_means) {
      double dist2 = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        double diff = feats(i, j) / fn - m[j];
        dist2 += diff * diff;
      }
      if (dist2 < best) {  // map is id-ascending, strict < ties to lower id
        best = dist2;
        best_cls = cls;
      }
    }
    preds[i] = best_cls;
  }
  return preds;
}

std::vector<double> IncrementalModel::lws_vector() const {
  if (!has_lws()) return {};
  const Matrix& lws = params_.get("lws").value;
  return lws.data();
}

std::string IncrementalModel::to_checkpoint_json() const {
  nlohmann::json j;
  j["version"] = 1;
  j["arch"] = arch_;
  j["head_kind"] = to_string(kind_);
  j["head_widths"] = head_widths_;
  nlohmann::json pj = nlohmann::json::object();
  for (const std::string& name : params_.names()) {
    const Param& p = params_.get(name);
    pj[name] = {{"rows", p.value.rows()},
                {"cols", p.value.cols()},
                {"data", p.value.data()},
                {"trainable", p.trainable}};
  }
  j["params"] = std::move(pj);
  j["param_order"] = params_.names();
  if (!class_means_.empty()) {
    nlohmann::json mj = nlohmann::json::object();
    for (const auto& [cls, m] : class_means_) mj[std::to_string(cls)] = m;
    j["class_means"] = std::move(mj);
  }
  return j.dump();
}

IncrementalModel IncrementalModel::from_checkpoint_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.at("version").get<int>() != 1)
    throw ParseError("checkpoint: unsupported version");
  IncrementalModel m(j.at("arch").get<std::vector<std::size_t>>(),
                     head_kind_from_string(j.at("head_kind").get<std::string>()), 0);
  m.head_widths_ = j.at("head_widths").get<std::vector<std::size_t>>();
  // rebuild the param set exactly as recorded
  m.params_ = ParamSet();
  for (const auto& name : j.at("param_order").get<std::vector<std::string>>()) {
    const auto& pj = j.at("params").at(name);
    Matrix v(pj.at("rows").get<std::size_t>(), pj.at("cols").get<std::size_t>());
    v.data() = pj.at("data").get<std::vector<double>>();
    Param& p = m.params_.add(name, std::move(v));
    p.trainable = pj.at("trainable").get<bool>();
  }
  if (j.contains("class_means")) {
    std::map<int, std::vector<double>> means;
    for (const auto& [k, v] : j.at("class_means").items())
      means[std::stoi(k)] = v.get<std::vector<double>>();
    m.class_means_ = std::move(means);
  }
  return m;
}

}  // namespace ltcil
