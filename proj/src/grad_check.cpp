#include "sanet/grad_check.hpp"

#include <cmath>

namespace sanet {

GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& f,
                           const Tensor& x, double eps) {
  if (eps <= 0.0) throw ContractError("grad_check: eps must be positive");

  Tensor leaf = x.clone(/*requires_grad=*/true);
  double base;
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor y = f(leaf);
    if (!y.is_scalar())
      throw ContractError("grad_check: f must return a scalar tensor");
    base = y.item();
    if (!std::isfinite(base))
      throw NumericError("grad_check: f evaluated to a non-finite value");
    backward(tape, y);
  }
  const Tensor analytic = leaf.grad_tensor();

  auto eval = [&](const Tensor& p) {
    Tensor y = f(p);
    if (!y.is_scalar())
      throw ContractError("grad_check: f must return a scalar tensor");
    const double v = y.item();
    if (!std::isfinite(v))
      throw NumericError("grad_check: f evaluated to a non-finite value");
    return v;
  };

  GradCheckResult result;
  const long long n = x.numel();
  for (long long i = 0; i < n; ++i) {
    Tensor probe = x.clone();
    probe.data()[i] = x.data()[i] + eps;
    const double fp = eval(probe);
    probe.data()[i] = x.data()[i] - eps;
    const double fm = eval(probe);

    // One-sided slopes; a strong disagreement marks a nondifferentiable
    // point and the coordinate is excluded.
    const double dplus = (fp - base) / eps;
    const double dminus = (base - fm) / eps;
    const double spread = std::abs(dplus - dminus);
    if (spread > 0.25 * std::max(std::abs(dplus), std::abs(dminus)) &&
        spread > 1e-6) {
      ++result.skipped;
      continue;
    }

    const double numeric = (fp - fm) / (2.0 * eps);
    const double a = analytic.data()[i];
    const double denom =
        std::max({std::abs(a), std::abs(numeric), 1e-8});
    const double err = std::abs(a - numeric) / denom;
    result.max_rel_error = std::max(result.max_rel_error, err);
    ++result.checked;
  }
  return result;
}

}  // namespace sanet
