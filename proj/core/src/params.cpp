#include "ltcil/params.hpp"

#include <algorithm>

#include "ltcil/errors.hpp"

namespace ltcil {

Param& ParamSet::add(const std::string& name, Matrix init) {
  if (params_.count(name)) throw ContractError("ParamSet: duplicate name " + name);
  Param p;
  p.grad = Matrix(init.rows(), init.cols());
  p.velocity = Matrix(init.rows(), init.cols());
  p.value = std::move(init);
  order_.push_back(name);
  return params_.emplace(name, std::move(p)).first->second;
}

Param& ParamSet::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractError("ParamSet: unknown name " + name);
  return it->second;
}

const Param& ParamSet::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractError("ParamSet: unknown name " + name);
  return it->second;
}

void ParamSet::remove(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractError("ParamSet: unknown name " + name);
  params_.erase(it);
  order_.erase(std::find(order_.begin(), order_.end(), name));
}

void ParamSet::zero_grads() {
  for (auto& [name, p] : params_) {
    std::fill(p.grad.data().begin(), p.grad.data().end(), 0.0);
  }
}

void ParamSet::set_trainable(const std::string& name, bool trainable) {
  get(name).trainable = trainable;
}

void ParamSet::set_all_trainable(bool trainable) {
  for (auto& [name, p] : params_) p.trainable = trainable;
}

std::size_t ParamSet::num_scalars(bool trainable_only) const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) {
    if (!trainable_only || p.trainable) n += p.value.size();
  }
  return n;
}

void sgd_step(ParamSet& params, double lr, double momentum) {
  for (const std::string& name : params.names()) {
    Param& p = params.get(name);
    if (p.trainable) {
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        double v = momentum * p.velocity.data()[i] + p.grad.data()[i];
        p.velocity.data()[i] = v;
        p.value.data()[i] -= lr * v;
      }
    }
    std::fill(p.grad.data().begin(), p.grad.data().end(), 0.0);
  }
}

}  // namespace ltcil
