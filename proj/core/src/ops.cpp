#include "rdn/ops.hpp"

#include <algorithm>
#include <cmath>

#include "op_kernels.hpp"

namespace rdn {
namespace detail {
namespace {

// ---------------------------------------------------------------------------
// Broadcasting machinery (numpy-style, trailing-dimension alignment).

struct BcastPlan {
  Shape out;
  std::vector<int64_t> sa, sb;  // per-out-dim strides into a and b (0 = broadcast)
  int64_t n = 0;
  bool same = false;
};

BcastPlan make_bcast_plan(const Shape& a, const Shape& b, const char* opname) {
  BcastPlan p;
  const size_t ra = a.size(), rb = b.size();
  const size_t r = std::max(ra, rb);
  p.out.resize(r);
  Shape pa(r, 1), pb(r, 1);
  std::copy(a.begin(), a.end(), pa.begin() + (r - ra));
  std::copy(b.begin(), b.end(), pb.begin() + (r - rb));
  for (size_t d = 0; d < r; ++d) {
    if (pa[d] == pb[d]) {
      p.out[d] = pa[d];
    } else if (pa[d] == 1) {
      p.out[d] = pb[d];
    } else if (pb[d] == 1) {
      p.out[d] = pa[d];
    } else {
      throw ShapeError(std::string(opname) + ": cannot broadcast " + shape_str(a) +
                       " with " + shape_str(b));
    }
  }
  p.sa.assign(r, 0);
  p.sb.assign(r, 0);
  int64_t stride = 1;
  for (size_t d = r; d-- > 0;) {
    if (pa[d] != 1) p.sa[d] = stride;
    stride *= pa[d];
  }
  stride = 1;
  for (size_t d = r; d-- > 0;) {
    if (pb[d] != 1) p.sb[d] = stride;
    stride *= pb[d];
  }
  p.n = numel(p.out);
  p.same = (a == b);
  return p;
}

template <class F>
std::vector<double> bcast_apply(const BcastPlan& p, const double* a, const double* b,
                                F f) {
  std::vector<double> out(static_cast<size_t>(p.n));
  if (p.same) {
    for (int64_t i = 0; i < p.n; ++i) out[static_cast<size_t>(i)] = f(a[i], b[i]);
    return out;
  }
  const size_t r = p.out.size();
  std::vector<int64_t> idx(r, 0);
  int64_t offa = 0, offb = 0;
  for (int64_t i = 0; i < p.n; ++i) {
    out[static_cast<size_t>(i)] = f(a[offa], b[offb]);
    for (size_t d = r; d-- > 0;) {
      ++idx[d];
      offa += p.sa[d];
      offb += p.sb[d];
      if (idx[d] < p.out[d]) break;
      idx[d] = 0;
      offa -= p.sa[d] * p.out[d];
      offb -= p.sb[d] * p.out[d];
    }
  }
  return out;
}

/// Accumulates `g` (laid out over gshape) into a buffer shaped like `target`
/// (broadcast operand); the reverse of broadcasting.
std::vector<double> reduce_grad_to(const std::vector<double>& g, const Shape& gshape,
                                   const Shape& target) {
  std::vector<double> acc(static_cast<size_t>(numel(target)), 0.0);
  const size_t r = gshape.size();
  Shape pt(r, 1);
  std::copy(target.begin(), target.end(), pt.begin() + (r - target.size()));
  std::vector<int64_t> st(r, 0);
  int64_t stride = 1;
  for (size_t d = r; d-- > 0;) {
    if (pt[d] != 1) st[d] = stride;
    stride *= pt[d];
  }
  std::vector<int64_t> idx(r, 0);
  int64_t off = 0;
  const int64_t n = numel(gshape);
  for (int64_t i = 0; i < n; ++i) {
    acc[static_cast<size_t>(off)] += g[static_cast<size_t>(i)];
    for (size_t d = r; d-- > 0;) {
      ++idx[d];
      off += st[d];
      if (idx[d] < gshape[d]) break;
      idx[d] = 0;
      off -= st[d] * gshape[d];
    }
  }
  return acc;
}

/// Shared-offset iteration for reductions: visits every element of `big`,
/// pairing it with the offset into `small` (same rank, dims 1 or equal).
template <class F>
void paired_iterate(const Shape& big, const Shape& small, F f) {
  const size_t r = big.size();
  std::vector<int64_t> ss(r, 0);
  int64_t stride = 1;
  for (size_t d = r; d-- > 0;) {
    if (small[d] != 1) ss[d] = stride;
    stride *= small[d];
  }
  std::vector<int64_t> idx(r, 0);
  int64_t off = 0;
  const int64_t n = numel(big);
  for (int64_t i = 0; i < n; ++i) {
    f(i, off);
    for (size_t d = r; d-- > 0;) {
      ++idx[d];
      off += ss[d];
      if (idx[d] < big[d]) break;
      idx[d] = 0;
      off -= ss[d] * big[d];
    }
  }
}

std::vector<int64_t> normalize_axes(const Shape& shape, std::vector<int64_t> axes) {
  if (axes.empty()) {
    axes.resize(shape.size());
    for (size_t d = 0; d < shape.size(); ++d) axes[d] = static_cast<int64_t>(d);
    return axes;
  }
  for (int64_t& a : axes) {
    if (a < 0) a += static_cast<int64_t>(shape.size());
    if (a < 0 || a >= static_cast<int64_t>(shape.size())) {
      throw ShapeError("reduction axis out of range for shape " + shape_str(shape));
    }
  }
  std::sort(axes.begin(), axes.end());
  axes.erase(std::unique(axes.begin(), axes.end()), axes.end());
  return axes;
}

Shape keep_shape_of(const Shape& shape, const std::vector<int64_t>& axes) {
  Shape keep = shape;
  for (int64_t a : axes) keep[static_cast<size_t>(a)] = 1;
  return keep;
}

Shape squeeze_axes(const Shape& shape, const std::vector<int64_t>& axes) {
  Shape out;
  size_t ai = 0;
  for (size_t d = 0; d < shape.size(); ++d) {
    if (ai < axes.size() && static_cast<int64_t>(d) == axes[ai]) {
      ++ai;
      continue;
    }
    out.push_back(shape[d]);
  }
  return out;
}

struct SliceDims {
  int64_t outer, axis_n, inner;
};

SliceDims slice_dims(const Shape& shape, int64_t axis) {
  SliceDims d{1, shape[static_cast<size_t>(axis)], 1};
  for (int64_t i = 0; i < axis; ++i) d.outer *= shape[static_cast<size_t>(i)];
  for (size_t i = static_cast<size_t>(axis) + 1; i < shape.size(); ++i) {
    d.inner *= shape[i];
  }
  return d;
}

int64_t wrap_index(int64_t i, int64_t n) {
  i %= n;
  return i < 0 ? i + n : i;
}

double pow_i(double x, int64_t e) {
  double p = 1.0;
  for (int64_t t = 0; t < e; ++t) p *= x;
  return p;
}

// ---------------------------------------------------------------------------
// Forward kernels.

std::vector<double> fwd_binary(OpKind kind, const Tensor& a, const Tensor& b,
                               Shape* out_shape, double floor) {
  auto plan = make_bcast_plan(a.shape(), b.shape(), op_name(kind));
  *out_shape = plan.out;
  const double* pa = a.data();
  const double* pb = b.data();
  switch (kind) {
    case OpKind::add:
      return bcast_apply(plan, pa, pb, [](double x, double y) { return x + y; });
    case OpKind::sub:
      return bcast_apply(plan, pa, pb, [](double x, double y) { return x - y; });
    case OpKind::mul:
      return bcast_apply(plan, pa, pb, [](double x, double y) { return x * y; });
    case OpKind::div:
      for (double v : b.values()) {
        if (std::abs(v) < floor) {
          throw NumericError("div: denominator below floor " + std::to_string(floor));
        }
      }
      return bcast_apply(plan, pa, pb, [](double x, double y) { return x / y; });
    default:
      throw Error("fwd_binary: bad kind");
  }
}

std::vector<double> fwd_unary(OpKind kind, const OpAttrs& at, const Tensor& x,
                              Shape* out_shape, double floor) {
  *out_shape = x.shape();
  auto xs = x.values();
  std::vector<double> out(xs.size());
  switch (kind) {
    case OpKind::pow_int: {
      const int64_t e = at.i0;
      if (e < 0) throw Error("pow-int: exponent must be >= 0");
      for (size_t i = 0; i < xs.size(); ++i) out[i] = pow_i(xs[i], e);
      break;
    }
    case OpKind::sqrt:
      for (size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] < 0) throw NumericError("sqrt of negative value");
        out[i] = std::sqrt(xs[i]);
      }
      break;
    case OpKind::exp:
      for (size_t i = 0; i < xs.size(); ++i) out[i] = std::exp(xs[i]);
      break;
    case OpKind::log:
      for (size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] < floor) {
          throw NumericError("log input below floor; stabilize upstream");
        }
        out[i] = std::log(xs[i]);
      }
      break;
    case OpKind::tanh:
      for (size_t i = 0; i < xs.size(); ++i) out[i] = std::tanh(xs[i]);
      break;
    case OpKind::clamp:
      for (size_t i = 0; i < xs.size(); ++i) {
        out[i] = std::min(std::max(xs[i], at.f0), at.f1);
      }
      break;
    case OpKind::max_scalar:
      for (size_t i = 0; i < xs.size(); ++i) out[i] = std::max(xs[i], at.f0);
      break;
    default:
      throw Error("fwd_unary: bad kind");
  }
  return out;
}

std::vector<double> fwd_matmul(const Tensor& a, const Tensor& b, Shape* out_shape) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  }
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  *out_shape = {m, n};
  std::vector<double> out(static_cast<size_t>(m * n), 0.0);
  const double* pa = a.data();
  const double* pb = b.data();
  for (int64_t i = 0; i < m; ++i) {
    double* po = out.data() + i * n;
    const double* ar = pa + i * k;
    for (int64_t l = 0; l < k; ++l) {
      const double av = ar[l];
      const double* br = pb + l * n;
      for (int64_t j = 0; j < n; ++j) po[j] += av * br[j];
    }
  }
  return out;
}

std::vector<double> fwd_reduce(OpKind kind, const OpAttrs& at, const Tensor& x,
                               Shape* out_shape) {
  auto axes = normalize_axes(x.shape(), at.axes);
  const Shape keep = keep_shape_of(x.shape(), axes);
  std::vector<double> acc(static_cast<size_t>(numel(keep)), 0.0);
  const double* px = x.data();
  paired_iterate(x.shape(), keep, [&](int64_t i, int64_t off) {
    acc[static_cast<size_t>(off)] += px[i];
  });
  if (kind == OpKind::reduce_mean) {
    const double count = static_cast<double>(x.numel() / numel(keep));
    for (double& v : acc) v /= count;
  }
  *out_shape = at.i0 ? keep : squeeze_axes(x.shape(), axes);
  return acc;
}

std::vector<double> fwd_slice(const OpAttrs& at, const Tensor& x, Shape* out_shape) {
  const int64_t axis = at.i0, start = at.i1, len = at.i2;
  if (axis < 0 || axis >= x.rank()) throw ShapeError("slice: axis out of range");
  if (start < 0 || len <= 0 || start + len > x.dim(axis)) {
    throw ShapeError("slice: range [" + std::to_string(start) + "," +
                     std::to_string(start + len) + ") out of bounds for axis size " +
                     std::to_string(x.dim(axis)));
  }
  auto d = slice_dims(x.shape(), axis);
  Shape os = x.shape();
  os[static_cast<size_t>(axis)] = len;
  *out_shape = os;
  std::vector<double> out(static_cast<size_t>(d.outer * len * d.inner));
  const double* px = x.data();
  for (int64_t o = 0; o < d.outer; ++o) {
    const double* src = px + (o * d.axis_n + start) * d.inner;
    std::copy(src, src + len * d.inner, out.begin() + o * len * d.inner);
  }
  return out;
}

std::vector<double> fwd_concat(const OpAttrs& at, const std::vector<Tensor>& xs,
                               Shape* out_shape) {
  if (xs.empty()) throw ShapeError("concat: no inputs");
  const int64_t axis = at.i0;
  const Shape& s0 = xs[0].shape();
  if (axis < 0 || axis >= xs[0].rank()) throw ShapeError("concat: axis out of range");
  int64_t total = 0;
  for (const Tensor& t : xs) {
    if (t.rank() != xs[0].rank()) throw ShapeError("concat: rank mismatch");
    for (int64_t d = 0; d < t.rank(); ++d) {
      if (d != axis && t.dim(d) != s0[static_cast<size_t>(d)]) {
        throw ShapeError("concat: shape mismatch " + shape_str(t.shape()) + " vs " +
                         shape_str(s0));
      }
    }
    total += t.dim(axis);
  }
  Shape os = s0;
  os[static_cast<size_t>(axis)] = total;
  *out_shape = os;
  auto dd = slice_dims(os, axis);
  std::vector<double> out(static_cast<size_t>(numel(os)));
  int64_t at_pos = 0;
  for (const Tensor& t : xs) {
    const int64_t len = t.dim(axis);
    const double* px = t.data();
    for (int64_t o = 0; o < dd.outer; ++o) {
      std::copy(px + o * len * dd.inner, px + (o + 1) * len * dd.inner,
                out.begin() + (o * dd.axis_n + at_pos) * dd.inner);
    }
    at_pos += len;
  }
  return out;
}

std::vector<double> fwd_translate(const OpAttrs& at, const Tensor& x,
                                  Shape* out_shape) {
  const int64_t axis = at.i0, offset = at.i1;
  if (axis < 0 || axis >= x.rank()) throw ShapeError("translate: axis out of range");
  *out_shape = x.shape();
  auto d = slice_dims(x.shape(), axis);
  std::vector<double> out(static_cast<size_t>(x.numel()));
  const double* px = x.data();
  for (int64_t o = 0; o < d.outer; ++o) {
    for (int64_t i = 0; i < d.axis_n; ++i) {
      const int64_t j = wrap_index(i + offset, d.axis_n);
      std::copy(px + (o * d.axis_n + i) * d.inner,
                px + (o * d.axis_n + i + 1) * d.inner,
                out.begin() + (o * d.axis_n + j) * d.inner);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Backward kernels for the ops above.

void bwd_binary(OpKind kind, const Tensor& a, const Tensor& b, const Tensor& out,
                const std::vector<double>& g, const GradSink& sink) {
  const Shape& gs = out.shape();
  const double* pa = a.data();
  const double* pb = b.data();
  auto finish = [&](size_t idx, std::vector<double>&& full, const Shape& target) {
    if (gs == target) {
      sink(idx, std::move(full));
    } else {
      sink(idx, reduce_grad_to(full, gs, target));
    }
  };
  switch (kind) {
    case OpKind::add:
      finish(0, std::vector<double>(g), a.shape());
      finish(1, std::vector<double>(g), b.shape());
      break;
    case OpKind::sub: {
      finish(0, std::vector<double>(g), a.shape());
      std::vector<double> gb(g.size());
      for (size_t i = 0; i < g.size(); ++i) gb[i] = -g[i];
      finish(1, std::move(gb), b.shape());
      break;
    }
    case OpKind::mul: {
      auto plan_ga = make_bcast_plan(gs, b.shape(), "mul-bwd");
      auto plan_gb = make_bcast_plan(gs, a.shape(), "mul-bwd");
      auto ga = bcast_apply(plan_ga, g.data(), pb, [](double x, double y) { return x * y; });
      auto gb = bcast_apply(plan_gb, g.data(), pa, [](double x, double y) { return x * y; });
      finish(0, std::move(ga), a.shape());
      finish(1, std::move(gb), b.shape());
      break;
    }
    case OpKind::div: {
      auto plan_ga = make_bcast_plan(gs, b.shape(), "div-bwd");
      auto ga = bcast_apply(plan_ga, g.data(), pb, [](double x, double y) { return x / y; });
      // gb = -g * out / b
      std::vector<double> tmp(g.size());
      const double* po = out.data();
      for (size_t i = 0; i < g.size(); ++i) tmp[i] = -g[i] * po[i];
      auto gb = bcast_apply(plan_ga, tmp.data(), pb, [](double x, double y) { return x / y; });
      finish(0, std::move(ga), a.shape());
      finish(1, std::move(gb), b.shape());
      break;
    }
    default:
      throw Error("bwd_binary: bad kind");
  }
}

void bwd_unary(OpKind kind, const OpAttrs& at, const Tensor& x, const Tensor& out,
               const std::vector<double>& g, const GradSink& sink) {
  auto xs = x.values();
  auto os = out.values();
  std::vector<double> gx(g.size());
  switch (kind) {
    case OpKind::pow_int: {
      const int64_t e = at.i0;
      for (size_t i = 0; i < g.size(); ++i) {
        gx[i] = e == 0 ? 0.0 : g[i] * static_cast<double>(e) * pow_i(xs[i], e - 1);
      }
      break;
    }
    case OpKind::sqrt:
      for (size_t i = 0; i < g.size(); ++i) gx[i] = g[i] * 0.5 / os[i];
      break;
    case OpKind::exp:
      for (size_t i = 0; i < g.size(); ++i) gx[i] = g[i] * os[i];
      break;
    case OpKind::log:
      for (size_t i = 0; i < g.size(); ++i) gx[i] = g[i] / xs[i];
      break;
    case OpKind::tanh:
      for (size_t i = 0; i < g.size(); ++i) gx[i] = g[i] * (1.0 - os[i] * os[i]);
      break;
    case OpKind::clamp:
      // Subgradient 0 at both kink boundaries.
      for (size_t i = 0; i < g.size(); ++i) {
        gx[i] = (xs[i] > at.f0 && xs[i] < at.f1) ? g[i] : 0.0;
      }
      break;
    case OpKind::max_scalar:
      for (size_t i = 0; i < g.size(); ++i) gx[i] = xs[i] > at.f0 ? g[i] : 0.0;
      break;
    default:
      throw Error("bwd_unary: bad kind");
  }
  sink(0, std::move(gx));
}

void bwd_matmul(const Tensor& a, const Tensor& b, const std::vector<double>& g,
                const GradSink& sink) {
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  const double* pa = a.data();
  const double* pb = b.data();
  // gA = g @ B^T : dot of g-row i with b-row l (both contiguous).
  std::vector<double> ga(static_cast<size_t>(m * k));
  for (int64_t i = 0; i < m; ++i) {
    const double* gr = g.data() + i * n;
    for (int64_t l = 0; l < k; ++l) {
      const double* br = pb + l * n;
      double acc = 0.0;
      for (int64_t j = 0; j < n; ++j) acc += gr[j] * br[j];
      ga[static_cast<size_t>(i * k + l)] = acc;
    }
  }
  sink(0, std::move(ga));
  // gB = A^T @ g : accumulate a[i,l] * g-row i into gb-row l.
  std::vector<double> gb(static_cast<size_t>(k * n), 0.0);
  for (int64_t i = 0; i < m; ++i) {
    const double* gr = g.data() + i * n;
    const double* ar = pa + i * k;
    for (int64_t l = 0; l < k; ++l) {
      const double av = ar[l];
      if (av == 0.0) continue;
      double* gbr = gb.data() + l * n;
      for (int64_t j = 0; j < n; ++j) gbr[j] += av * gr[j];
    }
  }
  sink(1, std::move(gb));
}

void bwd_reduce(OpKind kind, const OpAttrs& at, const Tensor& x,
                const std::vector<double>& g, const GradSink& sink) {
  auto axes = normalize_axes(x.shape(), at.axes);
  const Shape keep = keep_shape_of(x.shape(), axes);
  const double scale =
      kind == OpKind::reduce_mean
          ? 1.0 / static_cast<double>(x.numel() / numel(keep))
          : 1.0;
  std::vector<double> gx(static_cast<size_t>(x.numel()));
  paired_iterate(x.shape(), keep, [&](int64_t i, int64_t off) {
    gx[static_cast<size_t>(i)] = g[static_cast<size_t>(off)] * scale;
  });
  sink(0, std::move(gx));
}

void bwd_slice(const OpAttrs& at, const Tensor& x, const std::vector<double>& g,
               const GradSink& sink) {
  const int64_t axis = at.i0, start = at.i1, len = at.i2;
  auto d = slice_dims(x.shape(), axis);
  std::vector<double> gx(static_cast<size_t>(x.numel()), 0.0);
  for (int64_t o = 0; o < d.outer; ++o) {
    std::copy(g.begin() + o * len * d.inner, g.begin() + (o + 1) * len * d.inner,
              gx.begin() + (o * d.axis_n + start) * d.inner);
  }
  sink(0, std::move(gx));
}

void bwd_concat(const OpAttrs& at, const std::vector<Tensor>& xs, const Tensor& out,
                const std::vector<double>& g, const GradSink& sink) {
  const int64_t axis = at.i0;
  auto dd = slice_dims(out.shape(), axis);
  int64_t at_pos = 0;
  for (size_t t = 0; t < xs.size(); ++t) {
    const int64_t len = xs[t].dim(axis);
    std::vector<double> gx(static_cast<size_t>(xs[t].numel()));
    for (int64_t o = 0; o < dd.outer; ++o) {
      const double* src = g.data() + (o * dd.axis_n + at_pos) * dd.inner;
      std::copy(src, src + len * dd.inner, gx.begin() + o * len * dd.inner);
    }
    sink(t, std::move(gx));
    at_pos += len;
  }
}

}  // namespace

std::vector<double> eval_op(OpKind kind, const OpAttrs& attrs,
                            const std::vector<Tensor>& inputs, Shape* out_shape,
                            double value_floor) {
  switch (kind) {
    case OpKind::add:
    case OpKind::sub:
    case OpKind::mul:
    case OpKind::div:
      return fwd_binary(kind, inputs[0], inputs[1], out_shape, value_floor);
    case OpKind::pow_int:
    case OpKind::sqrt:
    case OpKind::exp:
    case OpKind::log:
    case OpKind::tanh:
    case OpKind::clamp:
    case OpKind::max_scalar:
      return fwd_unary(kind, attrs, inputs[0], out_shape, value_floor);
    case OpKind::matmul:
      return fwd_matmul(inputs[0], inputs[1], out_shape);
    case OpKind::conv2d:
      return conv2d_forward(inputs[0], inputs[1], attrs.i0, attrs.i1 != 0, out_shape);
    case OpKind::conv_transpose2:
      return conv_transpose2_forward(inputs[0], inputs[1], out_shape);
    case OpKind::reduce_sum:
    case OpKind::reduce_mean:
      return fwd_reduce(kind, attrs, inputs[0], out_shape);
    case OpKind::reshape: {
      if (numel(attrs.shape) != inputs[0].numel()) {
        throw ShapeError("reshape: element count mismatch " +
                         shape_str(inputs[0].shape()) + " -> " +
                         shape_str(attrs.shape));
      }
      *out_shape = attrs.shape;
      auto v = inputs[0].values();
      return std::vector<double>(v.begin(), v.end());
    }
    case OpKind::slice:
      return fwd_slice(attrs, inputs[0], out_shape);
    case OpKind::concat:
      return fwd_concat(attrs, inputs, out_shape);
    case OpKind::translate:
      return fwd_translate(attrs, inputs[0], out_shape);
    case OpKind::leaf:
      throw Error("eval_op on leaf");
  }
  throw Error("eval_op: unknown kind");
}

void backward_op(OpKind kind, const OpAttrs& attrs,
                 const std::vector<Tensor>& inputs, const Tensor& output,
                 const std::vector<double>& gout, const GradSink& sink) {
  switch (kind) {
    case OpKind::add:
    case OpKind::sub:
    case OpKind::mul:
    case OpKind::div:
      bwd_binary(kind, inputs[0], inputs[1], output, gout, sink);
      return;
    case OpKind::pow_int:
    case OpKind::sqrt:
    case OpKind::exp:
    case OpKind::log:
    case OpKind::tanh:
    case OpKind::clamp:
    case OpKind::max_scalar:
      bwd_unary(kind, attrs, inputs[0], output, gout, sink);
      return;
    case OpKind::matmul:
      bwd_matmul(inputs[0], inputs[1], gout, sink);
      return;
    case OpKind::conv2d:
      conv2d_backward(inputs[0], inputs[1], attrs.i0, attrs.i1 != 0, gout, sink,
                      inputs[0].tracked(), inputs[1].tracked());
      return;
    case OpKind::conv_transpose2:
      conv_transpose2_backward(inputs[0], inputs[1], gout, sink, inputs[0].tracked(),
                               inputs[1].tracked());
      return;
    case OpKind::reduce_sum:
    case OpKind::reduce_mean:
      bwd_reduce(kind, attrs, inputs[0], gout, sink);
      return;
    case OpKind::reshape: {
      sink(0, std::vector<double>(gout));
      return;
    }
    case OpKind::slice:
      bwd_slice(attrs, inputs[0], gout, sink);
      return;
    case OpKind::concat:
      bwd_concat(attrs, inputs, output, gout, sink);
      return;
    case OpKind::translate: {
      OpAttrs inv = attrs;
      inv.i1 = -attrs.i1;
      Shape s;
      Tensor gt = Tensor::constant(output.shape(), std::vector<double>(gout));
      sink(0, fwd_translate(inv, gt, &s));
      return;
    }
    case OpKind::leaf:
      return;
  }
  throw Error("backward_op: unknown kind");
}

Tensor record_or_constant(OpKind kind, OpAttrs attrs, std::vector<Tensor> inputs) {
  double floor = 1e-30;
  for (const Tensor& in : inputs) {
    if (in.tracked()) {
      floor = in.tape()->value_floor;
      break;
    }
  }
  Shape shape;
  auto vals = eval_op(kind, attrs, inputs, &shape, floor);
  return record_op(kind, std::move(attrs), inputs, std::move(shape), std::move(vals));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public op surface.

Tensor add(const Tensor& a, const Tensor& b) {
  return detail::record_or_constant(OpKind::add, {}, {a, b});
}
Tensor sub(const Tensor& a, const Tensor& b) {
  return detail::record_or_constant(OpKind::sub, {}, {a, b});
}
Tensor mul(const Tensor& a, const Tensor& b) {
  return detail::record_or_constant(OpKind::mul, {}, {a, b});
}
Tensor div(const Tensor& a, const Tensor& b) {
  return detail::record_or_constant(OpKind::div, {}, {a, b});
}

Tensor pow_int(const Tensor& x, int64_t exponent) {
  OpAttrs at;
  at.i0 = exponent;
  return detail::record_or_constant(OpKind::pow_int, at, {x});
}
Tensor sqrt(const Tensor& x) {
  return detail::record_or_constant(OpKind::sqrt, {}, {x});
}
Tensor exp(const Tensor& x) {
  return detail::record_or_constant(OpKind::exp, {}, {x});
}
Tensor log(const Tensor& x) {
  return detail::record_or_constant(OpKind::log, {}, {x});
}
Tensor tanh(const Tensor& x) {
  return detail::record_or_constant(OpKind::tanh, {}, {x});
}
Tensor clamp(const Tensor& x, double lo, double hi) {
  OpAttrs at;
  at.f0 = lo;
  at.f1 = hi;
  return detail::record_or_constant(OpKind::clamp, at, {x});
}
Tensor max_scalar(const Tensor& x, double c) {
  OpAttrs at;
  at.f0 = c;
  return detail::record_or_constant(OpKind::max_scalar, at, {x});
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  return detail::record_or_constant(OpKind::matmul, {}, {a, b});
}

Tensor conv2d_periodic(const Tensor& x, const Tensor& kernel, int64_t stride) {
  OpAttrs at;
  at.i0 = stride;
  at.i1 = 0;
  return detail::record_or_constant(OpKind::conv2d, at, {x, kernel});
}
Tensor conv2d_depthwise_periodic(const Tensor& x, const Tensor& kernel) {
  OpAttrs at;
  at.i0 = 1;
  at.i1 = 1;
  return detail::record_or_constant(OpKind::conv2d, at, {x, kernel});
}
Tensor conv_transpose2_periodic(const Tensor& x, const Tensor& kernel) {
  return detail::record_or_constant(OpKind::conv_transpose2, {}, {x, kernel});
}

Tensor reduce_sum(const Tensor& x, std::vector<int64_t> axes, bool keepdims) {
  OpAttrs at;
  at.axes = std::move(axes);
  at.i0 = keepdims ? 1 : 0;
  return detail::record_or_constant(OpKind::reduce_sum, at, {x});
}
Tensor reduce_mean(const Tensor& x, std::vector<int64_t> axes, bool keepdims) {
  OpAttrs at;
  at.axes = std::move(axes);
  at.i0 = keepdims ? 1 : 0;
  return detail::record_or_constant(OpKind::reduce_mean, at, {x});
}

Tensor reshape(const Tensor& x, Shape shape) {
  OpAttrs at;
  at.shape = std::move(shape);
  return detail::record_or_constant(OpKind::reshape, at, {x});
}
Tensor slice(const Tensor& x, int64_t axis, int64_t start, int64_t len) {
  OpAttrs at;
  at.i0 = axis;
  at.i1 = start;
  at.i2 = len;
  return detail::record_or_constant(OpKind::slice, at, {x});
}
Tensor concat(const std::vector<Tensor>& xs, int64_t axis) {
  OpAttrs at;
  at.i0 = axis;
  return detail::record_or_constant(OpKind::concat, at, xs);
}
Tensor translate(const Tensor& x, int64_t axis, int64_t offset) {
  OpAttrs at;
  at.i0 = axis;
  at.i1 = offset;
  return detail::record_or_constant(OpKind::translate, at, {x});
}

// ---------------------------------------------------------------------------
// Composites.

Tensor neg(const Tensor& x) { return mul(x, Tensor::scalar(-1.0)); }
Tensor square(const Tensor& x) { return pow_int(x, 2); }

Tensor abs_val(const Tensor& x) {
  return add(max_scalar(x, 0.0), max_scalar(neg(x), 0.0));
}

Tensor sigmoid(const Tensor& x) {
  // 0.5 * (tanh(x/2) + 1); stable for large |x|.
  return mul(add(tanh(mul(x, Tensor::scalar(0.5))), Tensor::scalar(1.0)),
             Tensor::scalar(0.5));
}

Tensor scale_shift(const Tensor& x, const Tensor& scale, const Tensor& shift) {
  return add(mul(x, scale), shift);
}

Tensor reduce_var(const Tensor& x, std::vector<int64_t> axes, bool keepdims) {
  Tensor m = reduce_mean(x, axes, true);
  Tensor d = sub(x, m);
  return reduce_mean(mul(d, d), std::move(axes), keepdims);
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps) {
  if (x.rank() != 4) {
    throw ShapeError("batch_norm expects [B,C,H,W], got " + shape_str(x.shape()));
  }
  const int64_t c = x.dim(1);
  if (gamma.numel() != c || beta.numel() != c) {
    throw ShapeError("batch_norm: scale/shift must have C elements");
  }
  std::vector<int64_t> axes{0, 2, 3};
  Tensor mu = reduce_mean(x, axes, true);
  Tensor xc = sub(x, mu);
  Tensor var = reduce_mean(mul(xc, xc), axes, true);
  Tensor denom = sqrt(add(var, Tensor::scalar(eps)));
  Tensor y = div(xc, denom);
  Tensor g = reshape(gamma, {1, c, 1, 1});
  Tensor b = reshape(beta, {1, c, 1, 1});
  return add(mul(y, g), b);
}

Tensor sum_all(const Tensor& x) { return reduce_sum(x, {}, false); }
Tensor mean_all(const Tensor& x) { return reduce_mean(x, {}, false); }

}  // namespace rdn
