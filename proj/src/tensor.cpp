#include "sanet/tensor.hpp"

#include <cmath>
#include <numeric>

namespace sanet {

namespace {

long long shape_numel(const std::vector<int>& shape) {
  long long n = 1;
  for (int extent : shape) {
    if (extent <= 0) throw DimensionError("tensor extents must be positive");
    n *= extent;
  }
  return n;
}

std::shared_ptr<detail::TensorImpl> make_impl(std::vector<int> shape,
                                              bool requires_grad) {
  auto impl = std::make_shared<detail::TensorImpl>();
  long long n = shape_numel(shape);
  impl->shape = std::move(shape);
  impl->data.assign(static_cast<size_t>(n), 0.0);
  impl->requires_grad = requires_grad;
  return impl;
}

}  // namespace

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  return Tensor(make_impl(std::move(shape), requires_grad));
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
  auto impl = make_impl(std::move(shape), requires_grad);
  for (auto& v : impl->data) v = value;
  return Tensor(std::move(impl));
}

Tensor Tensor::from_data(std::vector<int> shape, std::vector<double> data,
                         bool requires_grad) {
  long long n = shape_numel(shape);
  if (n != static_cast<long long>(data.size()))
    throw DimensionError("data length does not match shape");
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  Tensor t(std::move(impl));
  t.check_finite("tensor data");
  return t;
}

Tensor Tensor::uniform(std::vector<int> shape, double lo, double hi, Rng& rng,
                       bool requires_grad) {
  auto impl = make_impl(std::move(shape), requires_grad);
  for (auto& v : impl->data) v = rng.uniform(lo, hi);
  return Tensor(std::move(impl));
}

double Tensor::item() const {
  if (!is_scalar()) throw ContractError("item() requires a one-element tensor");
  return impl().data[0];
}

std::vector<double>& Tensor::grad() {
  auto& t = impl();
  if (t.grad.empty()) t.grad.assign(t.data.size(), 0.0);
  return t.grad;
}

const std::vector<double>& Tensor::grad() const {
  static const std::vector<double> empty;
  return defined() && !impl().grad.empty() ? impl().grad : empty;
}

Tensor Tensor::grad_tensor() const {
  Tensor g = zeros(shape());
  if (has_grad()) g.values() = impl().grad;
  return g;
}

void Tensor::zero_grad() {
  if (defined()) impl().grad.clear();
}

Tensor Tensor::clone(bool requires_grad) const {
  auto impl_copy = std::make_shared<detail::TensorImpl>();
  impl_copy->shape = impl().shape;
  impl_copy->data = impl().data;
  impl_copy->requires_grad = requires_grad;
  return Tensor(std::move(impl_copy));
}

void Tensor::check_finite(const std::string& what) const {
  for (double v : impl().data) {
    if (!std::isfinite(v))
      throw NumericError(what + ": non-finite value encountered");
  }
}

size_t Tensor::offset(std::initializer_list<int> idx) const {
  const auto& shape = impl().shape;
  if (idx.size() != shape.size())
    throw DimensionError("index rank does not match tensor rank");
  size_t off = 0;
  size_t d = 0;
  for (int i : idx) {
    if (i < 0 || i >= shape[d]) throw DimensionError("index out of range");
    off = off * static_cast<size_t>(shape[d]) + static_cast<size_t>(i);
    ++d;
  }
  return off;
}

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape* Tape::active() { return g_active_tape; }

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) {
  g_active_tape = &tape;
}

TapeScope::~TapeScope() { g_active_tape = previous_; }

void backward(Tape& tape, const Tensor& loss) {
  if (!loss.is_scalar())
    throw ContractError("backward: loss must be a scalar tensor");
  loss.grad()[0] = 1.0;
  for (auto it = tape.steps_.rbegin(); it != tape.steps_.rend(); ++it) (*it)();
  tape.clear();
}

}  // namespace sanet
