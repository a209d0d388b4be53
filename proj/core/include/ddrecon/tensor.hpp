#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ddrecon {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad; // empty until the first accumulation
  bool requires_grad = false;
};

} // namespace detail

/// Dense row-major array of doubles. Copies share storage; use clone() for a
/// deep copy. Gradients are attached to the shared storage so that the tape
/// can find them after the forward pass returns.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  /// Writable view. Only leaves (parameters, inputs) should be written, and
  /// never while a tape that references them is pending.
  std::span<double> mutable_data();
  double item() const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool value);

  bool has_grad() const;
  std::span<const double> grad() const;
  /// Allocates a zero gradient on first use.
  std::span<double> mutable_grad();
  void zero_grad();

  /// Deep copy of the values; the copy does not require grad.
  Tensor clone() const;

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

  const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }

private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Ordered record of differentiable operations. Operations append in
/// execution order, which is a valid topological order for the reverse sweep.
class Tape {
public:
  using BackwardRule = std::function<void(std::span<const double> grad_output)>;

  struct Node {
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardRule rule;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(std::vector<Tensor> inputs, Tensor output, BackwardRule rule);

  /// Seeds d(loss)/d(loss) = 1 and runs every rule once in reverse order.
  /// Gradients accumulate into existing buffers.
  void backward(const Tensor& loss);

  std::size_t size() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  void clear() { nodes_.clear(); }

  /// Makes `tape` the recording target for ops on this thread while alive.
  class Recording {
  public:
    explicit Recording(Tape& tape);
    ~Recording();
    Recording(const Recording&) = delete;
    Recording& operator=(const Recording&) = delete;

  private:
    Tape* previous_;
  };

private:
  std::vector<Node> nodes_;
};

/// The tape currently recording on this thread, or nullptr.
Tape* active_tape();

void backward(const Tensor& loss, Tape& tape);

/// Records `output` as produced from `inputs` when a tape is active and any
/// input requires grad; marks the output as requiring grad in that case.
/// Returns whether the node was recorded.
bool record_op(std::initializer_list<Tensor> inputs, Tensor& output, Tape::BackwardRule rule);

/// Adds `values` into the gradient of `t` if it participates in autodiff.
void accumulate_grad(const Tensor& t, std::span<const double> values);

} // namespace ddrecon
