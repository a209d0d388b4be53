#include "ddrecon/tensor.hpp"

#include "ddrecon/error.hpp"

#include <algorithm>
#include <sstream>

namespace ddrecon {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) {
    n *= d;
  }
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    out << (i ? "," : "") << shape[i];
  }
  out << ']';
  return out.str();
}

namespace {

void check_shape(const Shape& shape) {
  for (auto d : shape) {
    if (d == 0) {
      throw Error(ErrorCode::invalid_argument, "tensor dimensions must be positive, got " + shape_string(shape));
    }
  }
}

thread_local Tape* current_tape = nullptr;

} // namespace

Tensor::Tensor(Shape shape, double fill) : impl_(std::make_shared<detail::TensorImpl>()) {
  check_shape(shape);
  impl_->data.assign(shape_numel(shape), fill);
  impl_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : impl_(std::make_shared<detail::TensorImpl>()) {
  check_shape(shape);
  if (shape_numel(shape) != data.size()) {
    throw Error(ErrorCode::shape_mismatch, "shape " + shape_string(shape) + " holds " + std::to_string(shape_numel(shape)) +
                                               " values, got " + std::to_string(data.size()));
  }
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{1}, std::vector<double>{value}); }

const Shape& Tensor::shape() const { return impl_->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= impl_->shape.size()) {
    throw Error(ErrorCode::shape_mismatch,
                "axis " + std::to_string(axis) + " out of range for shape " + shape_string(impl_->shape));
  }
  return impl_->shape[axis];
}

std::size_t Tensor::numel() const { return impl_->data.size(); }

std::span<const double> Tensor::data() const { return impl_->data; }

std::span<double> Tensor::mutable_data() { return impl_->data; }

double Tensor::item() const {
  if (numel() != 1) {
    throw Error(ErrorCode::shape_mismatch, "item() on tensor of shape " + shape_string(shape()));
  }
  return impl_->data[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool value) {
  impl_->requires_grad = value;
  return *this;
}

bool Tensor::has_grad() const { return !impl_->grad.empty(); }

std::span<const double> Tensor::grad() const { return impl_->grad; }

std::span<double> Tensor::mutable_grad() {
  if (impl_->grad.empty()) {
    impl_->grad.assign(impl_->data.size(), 0.0);
  }
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (!impl_->grad.empty()) {
    std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
  }
}

Tensor Tensor::clone() const { return Tensor(impl_->shape, impl_->data); }

void Tape::record(std::vector<Tensor> inputs, Tensor output, BackwardRule rule) {
  nodes_.push_back(Node{std::move(inputs), std::move(output), std::move(rule)});
}

void Tape::backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw Error(ErrorCode::shape_mismatch, "backward needs a scalar loss, got shape " + shape_string(loss.shape()));
  }
  auto seed = Tensor(loss).mutable_grad();
  seed[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->output.has_grad()) {
      it->rule(it->output.grad());
    }
  }
}

Tape::Recording::Recording(Tape& tape) : previous_(current_tape) { current_tape = &tape; }

Tape::Recording::~Recording() { current_tape = previous_; }

Tape* active_tape() { return current_tape; }

void backward(const Tensor& loss, Tape& tape) { tape.backward(loss); }

bool record_op(std::initializer_list<Tensor> inputs, Tensor& output, Tape::BackwardRule rule) {
  Tape* tape = current_tape;
  if (tape == nullptr) {
    return false;
  }
  const bool any = std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
  if (!any) {
    return false;
  }
  output.set_requires_grad(true);
  tape->record(std::vector<Tensor>(inputs), output, std::move(rule));
  return true;
}

void accumulate_grad(const Tensor& t, std::span<const double> values) {
  if (!t.requires_grad()) {
    return;
  }
  auto g = Tensor(t).mutable_grad();
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] += values[i];
  }
}

} // namespace ddrecon
