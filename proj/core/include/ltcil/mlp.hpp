#pragma once

#include <string>
#include <vector>

#include "ltcil/matrix.hpp"
#include "ltcil/params.hpp"
#include "ltcil/rng.hpp"

namespace ltcil {

/// Intermediates kept by mlp_forward for the matching backward pass.
struct MlpCache {
  Matrix input;
  std::vector<Matrix> pre;   // affine outputs per layer
  std::vector<Matrix> post;  // ReLU outputs per layer
  std::vector<std::size_t> arch;
};

// Layer sizes: arch = {input_dim, h1, ..., feature_dim}. Every layer is
// affine followed by ReLU; the last layer's activations are the features.
// Weights uniform in +-sqrt(6/(fan_in+fan_out)), biases zero.
// Parameter names: <prefix>W<i>, <prefix>b<i>.
void mlp_init(ParamSet& params, const std::vector<std::size_t>& arch, Rng& rng,
              const std::string& prefix = "");

Matrix mlp_forward(const Matrix& x, const ParamSet& params,
                   const std::vector<std::size_t>& arch, MlpCache* cache = nullptr,
                   const std::string& prefix = "");

// Accumulates parameter gradients into params and returns dLoss/dInput.
// ReLU derivative at exactly 0 is 0.
Matrix mlp_backward(const Matrix& grad_features, const MlpCache& cache,
                    ParamSet& params, const std::string& prefix = "");

}  // namespace ltcil
