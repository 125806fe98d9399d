#pragma once

#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "rdn/common.hpp"

namespace rdn {

class Tape;
class Tensor;

enum class OpKind : uint8_t {
  leaf,
  add,
  sub,
  mul,
  div,
  pow_int,
  sqrt,
  exp,
  log,
  tanh,
  clamp,
  max_scalar,
  matmul,
  conv2d,           // periodic, stride 1 or 2, optionally depthwise
  conv_transpose2,  // periodic, stride-2 upsampling
  reduce_sum,
  reduce_mean,
  reshape,
  slice,
  concat,
  translate,  // periodic roll along one axis
};

const char* op_name(OpKind k);

struct OpAttrs {
  int64_t i0 = 0, i1 = 0, i2 = 0;  // op-specific integers (axis, start, stride...)
  double f0 = 0.0, f1 = 0.0;       // op-specific floats (clamp bounds...)
  std::vector<int64_t> axes;       // reduction axes
  Shape shape;                     // target shape for reshape
};

Tensor record_op(OpKind kind, OpAttrs attrs, const std::vector<Tensor>& inputs,
                 Shape out_shape, std::vector<double> out_values);

// Dense n-dimensional array of 64-bit floats. Value-semantic; the underlying
// buffer is immutable and shared, so copies are cheap. A tensor is either a
// free constant (node() < 0) or a recorded node on exactly one tape.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor scalar(double v) { return constant({}, {v}); }
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double v);

  const Shape& shape() const { return shape_; }
  int64_t rank() const { return static_cast<int64_t>(shape_.size()); }
  int64_t numel() const { return data_ ? static_cast<int64_t>(data_->size()) : 0; }
  int64_t dim(int64_t axis) const { return shape_[static_cast<size_t>(axis)]; }
  bool defined() const { return data_ != nullptr; }

  std::span<const double> values() const {
    return data_ ? std::span<const double>(data_->data(), data_->size())
                 : std::span<const double>();
  }

  /// Scalar extraction; requires numel() == 1.
  double item() const;

  const double* data() const { return data_->data(); }

  bool tracked() const { return node_ >= 0; }
  int64_t node() const { return node_; }
  Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  friend Tensor record_op(OpKind kind, OpAttrs attrs,
                          const std::vector<Tensor>& inputs, Shape out_shape,
                          std::vector<double> out_values);

  std::shared_ptr<const std::vector<double>> data_;
  Shape shape_;
  Tape* tape_ = nullptr;
  int64_t node_ = -1;
};

// Gradient map produced by a backward pass: node id -> adjoint tensor.
class Gradients {
 public:
  /// Gradient of the root w.r.t. a recorded tensor. Zero for tracked tensors
  /// the root does not depend on; throws for untracked constants.
  Tensor grad(const Tensor& t) const;
  bool has(const Tensor& t) const;

 private:
  friend class Tape;
  std::unordered_map<int64_t, Tensor> by_node_;
};

// Records every operation performed on tracked tensors so that a reverse
// sweep can accumulate adjoints. One tape belongs to one optimization run;
// tapes are independent and must not be shared across concurrent runs.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// New tracked leaf with the given values.
  Tensor leaf(Shape shape, std::vector<double> values);
  Tensor leaf_like(const Tensor& values);

  int64_t size() const { return static_cast<int64_t>(nodes_.size()); }

  /// Total doubles retained by recorded outputs; the memory-contract figure.
  int64_t saved_elements() const { return saved_elements_; }

  /// Reverse-mode sweep from a scalar root. Returns gradients for every leaf.
  Gradients backward(const Tensor& root) const;

  /// Reverse sweep seeded with explicit adjoints; gradients are retained for
  /// all leaves plus `keep`. Used by backpropagation-through-time drivers.
  Gradients backward_seeds(const std::vector<std::pair<Tensor, Tensor>>& seeds,
                           const std::vector<Tensor>& keep = {}) const;

  /// Recompute every node's output from the leaves, in record order.
  /// Verification hook: results must be bit-identical to the recorded values.
  std::vector<Tensor> replay() const;

  /// Floor under which log/div inputs are treated as numerically invalid.
  double value_floor = 1e-30;

 private:
  friend Tensor record_op(OpKind kind, OpAttrs attrs,
                          const std::vector<Tensor>& inputs, Shape out_shape,
                          std::vector<double> out_values);

  struct Node {
    OpKind kind;
    OpAttrs attrs;
    std::vector<Tensor> inputs;  // saved input tensors (values + node links)
    Tensor output;               // recorded forward result
  };

  std::vector<Node> nodes_;
  int64_t saved_elements_ = 0;
};

}  // namespace rdn
