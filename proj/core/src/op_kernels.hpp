#pragma once

// Internal forward/backward kernels shared by ops.cpp, conv.cpp and the tape
// backward dispatch in tensor.cpp. Not installed.

#include <functional>
#include <vector>

#include "rdn/tensor.hpp"

namespace rdn::detail {

using GradSink = std::function<void(size_t input_idx, std::vector<double>&& grad)>;

/// Pure forward evaluation of one op. Validates shapes, writes the output
/// shape, returns the output values. Used both when recording and when
/// replaying a tape.
std::vector<double> eval_op(OpKind kind, const OpAttrs& attrs,
                            const std::vector<Tensor>& inputs, Shape* out_shape,
                            double value_floor);

/// Adjoint propagation for one op: hands each input's gradient to the sink.
void backward_op(OpKind kind, const OpAttrs& attrs,
                 const std::vector<Tensor>& inputs, const Tensor& output,
                 const std::vector<double>& gout, const GradSink& sink);

Tensor record_or_constant(OpKind kind, OpAttrs attrs, std::vector<Tensor> inputs);

// conv.cpp
std::vector<double> conv2d_forward(const Tensor& x, const Tensor& k,
                                   int64_t stride, bool depthwise, Shape* out_shape);
void conv2d_backward(const Tensor& x, const Tensor& k, int64_t stride,
                     bool depthwise, const std::vector<double>& gout,
                     const GradSink& sink, bool want_gx, bool want_gk);
std::vector<double> conv_transpose2_forward(const Tensor& x, const Tensor& k,
                                            Shape* out_shape);
void conv_transpose2_backward(const Tensor& x, const Tensor& k,
                              const std::vector<double>& gout, const GradSink& sink,
                              bool want_gx, bool want_gk);

}  // namespace rdn::detail

namespace rdn {
/// Creates a recorded tensor on `tape` (internal; friend of Tensor and Tape).
Tensor record_op(OpKind kind, OpAttrs attrs, const std::vector<Tensor>& inputs,
                 Shape out_shape, std::vector<double> out_values);
}  // namespace rdn
