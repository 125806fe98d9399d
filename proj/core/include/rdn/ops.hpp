#pragma once

#include <vector>

#include "rdn/tensor.hpp"

namespace rdn {

// Elementwise binary ops with numpy-style broadcasting (trailing-dim
// alignment; sizes must match or be 1). Result is recorded on the operands'
// tape when either operand is tracked.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

// Elementwise unary.
Tensor pow_int(const Tensor& x, int64_t exponent);  // exponent >= 0
Tensor sqrt(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor clamp(const Tensor& x, double lo, double hi);
Tensor max_scalar(const Tensor& x, double c);

// Linear algebra; both operands rank 2, inner dimensions equal.
Tensor matmul(const Tensor& a, const Tensor& b);

// Periodic (toroidal) 2D convolutions. x is [B,C,H,W] or [C,H,W]; the output
// rank mirrors the input. Regular kernels are [C_out,C_in,kh,kw] with
// stride 1 or 2; depthwise kernels are [kh,kw] applied per channel (stride 1).
Tensor conv2d_periodic(const Tensor& x, const Tensor& kernel, int64_t stride = 1);
Tensor conv2d_depthwise_periodic(const Tensor& x, const Tensor& kernel);
// Stride-2 transposed convolution, kernel [C_in,C_out,kh,kw]; output H,W double.
Tensor conv_transpose2_periodic(const Tensor& x, const Tensor& kernel);

// Reductions over the given axes (all axes when empty).
Tensor reduce_sum(const Tensor& x, std::vector<int64_t> axes = {}, bool keepdims = false);
Tensor reduce_mean(const Tensor& x, std::vector<int64_t> axes = {}, bool keepdims = false);

// Shape ops.
Tensor reshape(const Tensor& x, Shape shape);
Tensor slice(const Tensor& x, int64_t axis, int64_t start, int64_t len);
Tensor concat(const std::vector<Tensor>& xs, int64_t axis);
/// Periodic roll: element at index i along `axis` moves to (i+offset) mod n.
Tensor translate(const Tensor& x, int64_t axis, int64_t offset);

// Composite helpers built from the primitives above.
Tensor neg(const Tensor& x);
Tensor square(const Tensor& x);
Tensor abs_val(const Tensor& x);  // relu(x) + relu(-x); subgradient 0 at the kink
Tensor sigmoid(const Tensor& x);
Tensor scale_shift(const Tensor& x, const Tensor& scale, const Tensor& shift);
Tensor reduce_var(const Tensor& x, std::vector<int64_t> axes = {}, bool keepdims = false);
/// Per-channel normalization over batch+spatial axes of a [B,C,H,W] tensor,
/// followed by a learned scale and shift ([C] each).
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);

/// Sum of all elements as a scalar tensor.
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);

}  // namespace rdn
