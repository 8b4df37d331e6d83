#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ltcil/matrix.hpp"

namespace ltcil {

struct Param {
  Matrix value;
  Matrix grad;      // same shape as value
  Matrix velocity;  // momentum buffer, same shape
  bool trainable = true;
};

/// Named parameter collection with parallel gradients. Iteration order is
/// insertion order and therefore deterministic.
class ParamSet {
 public:
  Param& add(const std::string& name, Matrix init);
  Param& get(const std::string& name);
  const Param& get(const std::string& name) const;
  bool has(const std::string& name) const { return params_.count(name) > 0; }
  void remove(const std::string& name);

  const std::vector<std::string>& names() const { return order_; }

  void zero_grads();
  void set_trainable(const std::string& name, bool trainable);
  void set_all_trainable(bool trainable);

  std::size_t num_scalars(bool trainable_only = false) const;

 private:
  std::vector<std::string> order_;
  std::map<std::string, Param> params_;
};

// Momentum SGD over all trainable params:
//   v <- momentum * v + g;  p <- p - lr * v
// Gradients are zeroed afterwards (for every param, trainable or not).
// Non-trainable params are left bit-identical.
void sgd_step(ParamSet& params, double lr, double momentum);

}  // namespace ltcil
