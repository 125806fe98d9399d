#include "rdn/tensor.hpp"

#include <cmath>
#include <cstring>

#include "op_kernels.hpp"

namespace rdn {

const char* op_name(OpKind k) {
  switch (k) {
    case OpKind::leaf: return "leaf";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::div: return "div";
    case OpKind::pow_int: return "pow-int";
    case OpKind::sqrt: return "sqrt";
    case OpKind::exp: return "exp";
    case OpKind::log: return "log";
    case OpKind::tanh: return "tanh";
    case OpKind::clamp: return "clamp";
    case OpKind::max_scalar: return "max-with-scalar";
    case OpKind::matmul: return "matmul";
    case OpKind::conv2d: return "conv2d-periodic";
    case OpKind::conv_transpose2: return "conv-transpose-stride2";
    case OpKind::reduce_sum: return "reduce-sum";
    case OpKind::reduce_mean: return "reduce-mean";
    case OpKind::reshape: return "reshape";
    case OpKind::slice: return "slice";
    case OpKind::concat: return "concat";
    case OpKind::translate: return "spatial-translate";
  }
  return "?";
}

namespace {

void check_finite_or_throw(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw NumericError(std::string(what) + " produced a non-finite value");
    }
  }
}

}  // namespace

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  if (rdn::numel(shape) != static_cast<int64_t>(values.size())) {
    throw ShapeError("tensor values length " + std::to_string(values.size()) +
                     " does not match shape " + shape_str(shape));
  }
  check_finite_or_throw(values, "constant");
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = std::make_shared<const std::vector<double>>(std::move(values));
  return t;
}

Tensor Tensor::zeros(Shape shape) {
  return full(std::move(shape), 0.0);
}

Tensor Tensor::full(Shape shape, double v) {
  std::vector<double> vals(static_cast<size_t>(rdn::numel(shape)), v);
  return constant(std::move(shape), std::move(vals));
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError("item() on tensor of shape " + shape_str(shape_));
  }
  return (*data_)[0];
}

Tensor record_op(OpKind kind, OpAttrs attrs, const std::vector<Tensor>& inputs,
                 Shape out_shape, std::vector<double> out_values) {
  check_finite_or_throw(out_values, op_name(kind));

  Tape* tape = nullptr;
  for (const Tensor& in : inputs) {
    if (!in.tracked()) continue;
    if (tape && tape != in.tape()) {
      throw Error(std::string(op_name(kind)) + ": inputs belong to different tapes");
    }
    tape = in.tape();
  }

  Tensor out;
  out.shape_ = std::move(out_shape);
  out.data_ = std::make_shared<const std::vector<double>>(std::move(out_values));
  if (tape == nullptr && kind != OpKind::leaf) {
    return out;  // pure constant computation, nothing to record
  }

  out.tape_ = tape;
  out.node_ = tape->size();
  Tape::Node node;
  node.kind = kind;
  node.attrs = std::move(attrs);
  node.inputs = inputs;
  node.output = out;
  tape->nodes_.push_back(std::move(node));
  tape->saved_elements_ += out.numel();
  return out;
}

Tensor Tape::leaf(Shape shape, std::vector<double> values) {
  if (rdn::numel(shape) != static_cast<int64_t>(values.size())) {
    throw ShapeError("leaf values length does not match shape " + shape_str(shape));
  }
  check_finite_or_throw(values, "leaf");
  Tensor out;
  out.shape_ = std::move(shape);
  out.data_ = std::make_shared<const std::vector<double>>(std::move(values));
  out.tape_ = this;
  out.node_ = size();
  Node node;
  node.kind = OpKind::leaf;
  node.output = out;
  nodes_.push_back(std::move(node));
  saved_elements_ += out.numel();
  return out;
}

Tensor Tape::leaf_like(const Tensor& values) {
  auto v = values.values();
  return leaf(values.shape(), std::vector<double>(v.begin(), v.end()));
}

Gradients Tape::backward(const Tensor& root) const {
  if (!root.tracked() || root.tape() != this) {
    throw Error("backward: root is not recorded on this tape");
  }
  if (root.numel() != 1) {
    throw ShapeError("backward: root must be scalar, got shape " +
                     shape_str(root.shape()));
  }
  return backward_seeds({{root, Tensor::full(root.shape(), 1.0)}});
}

Gradients Tape::backward_seeds(const std::vector<std::pair<Tensor, Tensor>>& seeds,
                               const std::vector<Tensor>& keep) const {
  const size_t n = nodes_.size();
  std::vector<std::vector<double>> adj(n);
  std::vector<bool> want(n, false);
  for (size_t i = 0; i < n; ++i) {
    if (nodes_[i].kind == OpKind::leaf) want[i] = true;
  }
  for (const Tensor& t : keep) {
    if (!t.tracked() || t.tape() != this) {
      throw Error("backward_seeds: keep tensor not recorded on this tape");
    }
    want[static_cast<size_t>(t.node())] = true;
  }

  int64_t top = -1;
  for (const auto& [t, g] : seeds) {
    if (!t.tracked() || t.tape() != this) {
      throw Error("backward_seeds: seed tensor not recorded on this tape");
    }
    if (g.shape() != t.shape()) {
      throw ShapeError("backward_seeds: seed adjoint shape mismatch");
    }
    auto& a = adj[static_cast<size_t>(t.node())];
    auto gv = g.values();
    if (a.empty()) {
      a.assign(gv.begin(), gv.end());
    } else {
      for (size_t j = 0; j < a.size(); ++j) a[j] += gv[j];
    }
    top = std::max(top, t.node());
  }

  for (int64_t i = top; i >= 0; --i) {
    auto& gout = adj[static_cast<size_t>(i)];
    if (gout.empty()) continue;
    const Node& node = nodes_[static_cast<size_t>(i)];
    if (node.kind == OpKind::leaf) continue;

    auto sink = [&](size_t input_idx, std::vector<double>&& g) {
      const Tensor& in = node.inputs[input_idx];
      if (!in.tracked()) return;
      for (double x : g) {
        if (!std::isfinite(x)) {
          throw NumericError(std::string(op_name(node.kind)) +
                             " backward produced a non-finite adjoint");
        }
      }
      auto& a = adj[static_cast<size_t>(in.node())];
      if (a.empty()) {
        a = std::move(g);
      } else {
        for (size_t j = 0; j < a.size(); ++j) a[j] += g[j];
      }
    };
    detail::backward_op(node.kind, node.attrs, node.inputs, node.output, gout, sink);

    if (!want[static_cast<size_t>(i)]) {
      gout.clear();
      gout.shrink_to_fit();
    }
  }

  Gradients out;
  for (size_t i = 0; i < n; ++i) {
    if (!want[i] || adj[i].empty()) continue;
    out.by_node_[static_cast<int64_t>(i)] =
        Tensor::constant(nodes_[i].output.shape(), std::move(adj[i]));
  }
  return out;
}

std::vector<Tensor> Tape::replay() const {
  std::vector<Tensor> replayed;
  replayed.reserve(nodes_.size());
  for (const Node& node : nodes_) {
    if (node.kind == OpKind::leaf) {
      replayed.push_back(node.output);
      continue;
    }
    // Recompute from the predecessors' replayed values.
    std::vector<Tensor> ins;
    ins.reserve(node.inputs.size());
    for (const Tensor& in : node.inputs) {
      if (in.tracked()) {
        ins.push_back(replayed[static_cast<size_t>(in.node())]);
      } else {
        ins.push_back(in);
      }
    }
    Shape shape;
    auto vals = detail::eval_op(node.kind, node.attrs, ins, &shape, value_floor);
    replayed.push_back(Tensor::constant(std::move(shape), std::move(vals)));
  }
  return replayed;
}

Tensor Gradients::grad(const Tensor& t) const {
  if (!t.tracked()) {
    throw Error("gradient requested for an untracked constant");
  }
  auto it = by_node_.find(t.node());
  if (it == by_node_.end()) return Tensor::zeros(t.shape());
  return it->second;
}

bool Gradients::has(const Tensor& t) const {
  return t.tracked() && by_node_.count(t.node()) > 0;
}

}  // namespace rdn
