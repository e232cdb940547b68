#include "tensor.hpp"

#include <atomic>
#include <sstream>

#include "errors.hpp"

namespace sdgl {

namespace {
thread_local Tape* g_active_tape = nullptr;
std::atomic<bool> g_debug_checks{false};
}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad)
    : impl_(std::make_shared<TensorImpl>()) {
  if (shape_numel(shape) != data.size()) {
    throw DimensionError("Tensor: shape " + shape_str(shape) + " does not match " +
                         std::to_string(data.size()) + " values");
  }
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::eye(std::size_t n) {
  Tensor t = zeros({n, n});
  for (std::size_t i = 0; i < n; ++i) t.mutable_data()[i * n + i] = 1.0;
  return t;
}

double Tensor::item() const {
  if (numel() != 1) {
    throw DimensionError("item: tensor of shape " + shape_str(shape()) + " is not a scalar");
  }
  return impl_->data[0];
}

std::span<double> Tensor::mutable_grad() {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad;
}

Tensor Tensor::clone() const {
  Tensor t(impl_->shape, impl_->data, impl_->requires_grad);
  t.impl_->grad = impl_->grad;
  return t;
}

Tensor Tensor::detach() const { return Tensor(impl_->shape, impl_->data, false); }

Tape::Tape() : previous_(g_active_tape) { g_active_tape = this; }

Tape::~Tape() { g_active_tape = previous_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::record(std::function<void()> backward_fn) {
  if (consumed_) throw StateError("Tape::record: tape already consumed by backward()");
  entries_.push_back(std::move(backward_fn));
}

void Tape::backward(const Tensor& loss) {
  if (consumed_) throw StateError("backward: tape already consumed");
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " +
                        (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  }
  consumed_ = true;
  if (!loss.requires_grad()) {
    entries_.clear();
    return;
  }
  loss.impl()->grad.assign(1, 1.0);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
  entries_.clear();
}

void backward(const Tensor& loss) {
  Tape* tape = Tape::active();
  if (tape == nullptr) throw StateError("backward: no active tape");
  tape->backward(loss);
}

void set_debug_checks(bool on) { g_debug_checks = on; }
bool debug_checks() { return g_debug_checks; }

}  // namespace sdgl
