#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sdgl {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a gradient reaches this tensor
  bool requires_grad = false;
};

// Shared handle to a dense row-major f64 array. Copies alias the same
// storage; use clone() for a deep copy. Outputs of ops are never written
// after construction, parameters are written only by the optimizer between
// steps.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value);
  static Tensor eye(std::size_t n);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
  std::size_t numel() const { return impl_->data.size(); }

  std::span<const double> data() const { return impl_->data; }
  std::span<double> mutable_data() { return impl_->data; }
  double item() const;
  double operator[](std::size_t flat) const { return impl_->data[flat]; }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool on) { impl_->requires_grad = on; }
  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const double> grad() const { return impl_->grad; }
  std::span<double> mutable_grad();
  void zero_grad() { impl_->grad.clear(); }

  Tensor clone() const;
  Tensor detach() const;

  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

// Ordered record of the backward closures of executed ops. Constructing a
// Tape makes it the active tape of the calling thread until it is destroyed;
// ops executed without an active tape are not recorded and their outputs do
// not require gradients.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active();

  void record(std::function<void()> backward_fn);
  std::size_t size() const { return entries_.size(); }
  bool consumed() const { return consumed_; }

  // Seeds d(loss)/d(loss) = 1 and replays the record in reverse. A tape can
  // be replayed once.
  void backward(const Tensor& loss);

 private:
  std::vector<std::function<void()>> entries_;
  Tape* previous_;
  bool consumed_ = false;
};

// Convenience: replays the active tape.
void backward(const Tensor& loss);

// Non-finite input checks inside every primitive (off by default).
void set_debug_checks(bool on);
bool debug_checks();

}  // namespace sdgl
