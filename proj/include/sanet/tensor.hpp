#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sanet/errors.hpp"
#include "sanet/rng.hpp"

namespace sanet {

namespace detail {

struct TensorImpl {
  std::vector<int> shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a gradient is accumulated
  bool requires_grad = false;
};

}  // namespace detail

/// Dense row-major double tensor. Copies share storage (handle semantics);
/// use clone() for a deep copy. Gradients live beside the data and are
/// filled in by backward().
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, double value,
                     bool requires_grad = false);
  /// Validates that every entry is finite (throws NumericError otherwise).
  static Tensor from_data(std::vector<int> shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor uniform(std::vector<int> shape, double lo, double hi, Rng& rng,
                        bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<int>& shape() const { return impl().shape; }
  int rank() const { return static_cast<int>(impl().shape.size()); }
  int dim(int i) const { return impl().shape.at(static_cast<size_t>(i)); }
  long long numel() const { return static_cast<long long>(impl().data.size()); }
  bool is_scalar() const { return defined() && impl().data.size() == 1; }

  double* data() { return impl().data.data(); }
  const double* data() const { return impl().data.data(); }
  std::vector<double>& values() { return impl().data; }
  const std::vector<double>& values() const { return impl().data; }

  /// Scalar value of a one-element tensor.
  double item() const;

  double at(int i) const { return impl().data.at(offset({i})); }
  double at(int a, int b) const { return impl().data.at(offset({a, b})); }
  double at(int a, int b, int c) const {
    return impl().data.at(offset({a, b, c}));
  }
  double at(int a, int b, int c, int d) const {
    return impl().data.at(offset({a, b, c, d}));
  }
  double& at(int i) { return impl().data.at(offset({i})); }
  double& at(int a, int b) { return impl().data.at(offset({a, b})); }
  double& at(int a, int b, int c) { return impl().data.at(offset({a, b, c})); }
  double& at(int a, int b, int c, int d) {
    return impl().data.at(offset({a, b, c, d}));
  }

  bool requires_grad() const { return defined() && impl().requires_grad; }
  void set_requires_grad(bool v) { impl().requires_grad = v; }

  bool has_grad() const { return defined() && !impl().grad.empty(); }
  /// Gradient buffer, allocated (zero-filled) on first use.
  std::vector<double>& grad();
  const std::vector<double>& grad() const;
  /// Copy of the gradient as a tensor (zeros if none accumulated).
  Tensor grad_tensor() const;
  void zero_grad();

  /// Deep copy of the data (gradient not copied).
  Tensor clone(bool requires_grad = false) const;

  /// True if both handles refer to the same storage.
  bool same_storage(const Tensor& other) const {
    return impl_ == other.impl_;
  }

  /// Throws NumericError naming `what` if any entry is non-finite.
  void check_finite(const std::string& what) const;

  detail::TensorImpl* raw() const { return impl_.get(); }
  std::shared_ptr<detail::TensorImpl> shared() const { return impl_; }

  /// Internal: adopt existing storage.
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl)
      : impl_(std::move(impl)) {}

 private:
  detail::TensorImpl& impl() {
    if (!impl_) throw ContractError("use of undefined tensor");
    return *impl_;
  }
  const detail::TensorImpl& impl() const {
    if (!impl_) throw ContractError("use of undefined tensor");
    return *impl_;
  }

  size_t offset(std::initializer_list<int> idx) const;

  std::shared_ptr<detail::TensorImpl> impl_;
};

/// Named trainable tensor. Copies share storage with the source network.
struct Parameter {
  std::string name;
  Tensor value;
};

/// Ordered record of the differentiable operations executed during one
/// forward pass. backward() replays it in exact reverse execution order.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(std::function<void()> step) { steps_.push_back(std::move(step)); }
  size_t size() const { return steps_.size(); }
  void clear() { steps_.clear(); }

  /// Tape currently recording on this thread, or nullptr.
  static Tape* active();

 private:
  friend class TapeScope;
  friend void backward(Tape&, const Tensor&);
  std::vector<std::function<void()>> steps_;
};

/// Activates a tape for the enclosing scope; operations executed while a
/// tape is active record their backward steps onto it.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

/// Seeds d(loss)/d(loss) = 1 and replays the tape backward, accumulating
/// gradients into every requires_grad tensor reachable from the loss.
/// The tape is cleared afterwards.
void backward(Tape& tape, const Tensor& loss);

namespace detail {

/// Accumulation helper used by operator backward steps.
inline double* grad_buffer(TensorImpl& t) {
  if (t.grad.empty()) t.grad.assign(t.data.size(), 0.0);
  return t.grad.data();
}

}  // namespace detail

}  // namespace sanet
