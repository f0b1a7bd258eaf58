#pragma once

#include <functional>

#include "sanet/tensor.hpp"

namespace sanet {

struct GradCheckResult {
  double max_rel_error = 0.0;
  long long checked = 0;
  long long skipped = 0;  // coordinates excluded as nondifferentiable kinks
};

/// Compares the analytic gradient of a scalar-valued function f at x with a
/// central finite difference of step eps. Returns the maximum over checked
/// coordinates of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
/// Coordinates where the one-sided slopes disagree strongly (a kink, e.g.
/// ReLU at exactly 0) are excluded from the check and counted in `skipped`.
GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& f,
                           const Tensor& x, double eps);

}  // namespace sanet
