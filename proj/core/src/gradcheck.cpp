#include "ltcil/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace ltcil {

double finite_diff_check(const std::function<double(ParamSet&)>& loss_fn,
                         ParamSet& params, double epsilon) {
  double worst = 0.0;
  for (const std::string& name : params.names()) {
    Param& p = params.get(name);
    if (!p.trainable) continue;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      double saved = p.value.data()[i];
      p.value.data()[i] = saved + epsilon;
      double lp = loss_fn(params);
      p.value.data()[i] = saved - epsilon;
      double lm = loss_fn(params);
      p.value.data()[i] = saved;
      double fd = (lp - lm) / (2.0 * epsilon);
      double g = p.grad.data()[i];
      double rel = std::abs(fd - g) / std::max(std::abs(fd) + std::abs(g), 1e-6);
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace ltcil
