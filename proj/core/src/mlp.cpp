#include "ltcil/mlp.hpp"

#include <cmath>

#include "ltcil/errors.hpp"

namespace ltcil {

void mlp_init(ParamSet& params, const std::vector<std::size_t>& arch, Rng& rng,
              const std::string& prefix) {
  if (arch.size() < 2) throw ConfigError("mlp_init: arch needs >= 2 sizes");
  for (std::size_t l = 0; l + 1 < arch.size(); ++l) {
    std::size_t fan_in = arch[l], fan_out = arch[l + 1];
    double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_in, fan_out);
    for (double& v : w.data()) v = rng.uniform(-bound, bound);
    params.add(prefix + "W" + std::to_string(l), std::move(w));
    params.add(prefix + "b" + std::to_string(l), Matrix(1, fan_out));
  }
}

Matrix mlp_forward(const Matrix& x, const ParamSet& params,
                   const std::vector<std::size_t>& arch, MlpCache* cache,
                   const std::string& prefix) {
  if (x.cols() != arch.front()) {
    throw DimensionError("mlp_forward: input dim " + std::to_string(x.cols()) +
                         " != arch[0] " + std::to_string(arch.front()));
  }
  if (cache) {
    cache->input = x;
    cache->pre.clear();
    cache->post.clear();
    cache->arch = arch;
  }
  Matrix h = x;
  for (std::size_t l = 0; l + 1 < arch.size(); ++l) {
    const Matrix& w = params.get(prefix + "W" + std::to_string(l)).value;
    const Matrix& b = params.get(prefix + "b" + std::to_string(l)).value;
    Matrix z = matmul(h, w);
    for (std::size_t i = 0; i < z.rows(); ++i)
      for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) += b(0, j);
    if (cache) cache->pre.push_back(z);
    for (double& v : z.data())
      if (v < 0.0) v = 0.0;  // ReLU; derivative at 0 defined as 0
    if (cache) cache->post.push_back(z);
    h = std::move(z);
  }
  return h;
}

Matrix mlp_backward(const Matrix& grad_features, const MlpCache& cache,
                    ParamSet& params, const std::string& prefix) {
  std::size_t layers = cache.arch.size() - 1;
  if (cache.pre.size() != layers || cache.post.size() != layers) {
    throw ContractError("mlp_backward: cache does not match a forward pass");
  }
  if (!grad_features.same_shape(cache.post.back())) {
    throw ContractError("mlp_backward: upstream gradient shape mismatch");
  }
  Matrix dh = grad_features;
  for (std::size_t l = layers; l-- > 0;) {
    // through ReLU
    const Matrix& pre = cache.pre[l];
    Matrix dz = dh;
    for (std::size_t i = 0; i < dz.size(); ++i)
      if (pre.data()[i] <= 0.0) dz.data()[i] = 0.0;
    const Matrix& below = (l == 0) ? cache.input : cache.post[l - 1];
    Param& w = params.get(prefix + "W" + std::to_string(l));
    Param& b = params.get(prefix + "b" + std::to_string(l));
    add_inplace(w.grad, matmul(transpose(below), dz));
    for (std::size_t j = 0; j < dz.cols(); ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < dz.rows(); ++i) s += dz(i, j);
      b.grad(0, j) += s;
    }
    dh = matmul(dz, transpose(w.value));
  }
  return dh;
}

}  // namespace ltcil
