#pragma once

#include <functional>

#include "ltcil/params.hpp"

namespace ltcil {

/// Central-finite-difference check of the gradients currently stored in
/// `params` against `loss_fn`. The caller is responsible for having run the
/// analytic backward pass first (grads populated, not zeroed) and for
/// evaluating at a point away from ReLU kinks.
///
/// Returns the worst relative error over all trainable coordinates,
/// |fd - g| / max(|fd| + |g|, 1e-6).
double finite_diff_check(const std::function<double(ParamSet&)>& loss_fn,
                         ParamSet& params, double epsilon);

}  // namespace ltcil
