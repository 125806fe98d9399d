#include <vector>

#include "op_kernels.hpp"

// Periodic (toroidal) convolution kernels. Forward passes are gathers over
// precomputed wrapped index tables; backward passes replay the same index
// arithmetic, so the adjoints are exact by construction.

namespace rdn::detail {
namespace {

int64_t wrap(int64_t i, int64_t n) {
  i %= n;
  return i < 0 ? i + n : i;
}

struct ConvDims {
  int64_t b, cin, h, w;      // input
  int64_t cout, kh, kw;      // kernel
  int64_t ho, wo;            // output spatial
  bool rank3;                // input was [C,H,W]
};

ConvDims parse_conv(const Tensor& x, const Tensor& k, int64_t stride,
                    bool depthwise) {
  ConvDims d{};
  if (x.rank() == 3) {
    d.rank3 = true;
    d.b = 1;
    d.cin = x.dim(0);
    d.h = x.dim(1);
    d.w = x.dim(2);
  } else if (x.rank() == 4) {
    d.b = x.dim(0);
    d.cin = x.dim(1);
    d.h = x.dim(2);
    d.w = x.dim(3);
  } else {
    throw ShapeError("conv2d-periodic: input must be [C,H,W] or [B,C,H,W], got " +
                     shape_str(x.shape()));
  }
  if (depthwise) {
    if (k.rank() != 2) {
      throw ShapeError("depthwise conv kernel must be [kh,kw], got " +
                       shape_str(k.shape()));
    }
    if (stride != 1) throw ShapeError("depthwise conv supports stride 1 only");
    d.cout = d.cin;
    d.kh = k.dim(0);
    d.kw = k.dim(1);
  } else {
    if (k.rank() != 4) {
      throw ShapeError("conv2d-periodic kernel must be [Cout,Cin,kh,kw], got " +
                       shape_str(k.shape()));
    }
    if (k.dim(1) != d.cin) {
      throw ShapeError("conv2d-periodic: kernel expects " + std::to_string(k.dim(1)) +
                       " input channels, input has " + std::to_string(d.cin));
    }
    d.cout = k.dim(0);
    d.kh = k.dim(2);
    d.kw = k.dim(3);
  }
  if (stride != 1 && stride != 2) throw ShapeError("conv2d-periodic: stride must be 1 or 2");
  if (d.h % stride != 0 || d.w % stride != 0) {
    throw ShapeError("conv2d-periodic: spatial extent not divisible by stride");
  }
  d.ho = d.h / stride;
  d.wo = d.w / stride;
  return d;
}

/// wrapped input index for output position o and kernel offset t, centered.
std::vector<int64_t> index_table(int64_t n_out, int64_t kk, int64_t stride,
                                 int64_t n_in) {
  std::vector<int64_t> t(static_cast<size_t>(n_out * kk));
  for (int64_t o = 0; o < n_out; ++o) {
    for (int64_t d = 0; d < kk; ++d) {
      t[static_cast<size_t>(o * kk + d)] = wrap(o * stride + d - kk / 2, n_in);
    }
  }
  return t;
}

}  // namespace

std::vector<double> conv2d_forward(const Tensor& x, const Tensor& k, int64_t stride,
                                   bool depthwise, Shape* out_shape) {
  const ConvDims d = parse_conv(x, k, stride, depthwise);
  *out_shape = d.rank3 ? Shape{d.cout, d.ho, d.wo} : Shape{d.b, d.cout, d.ho, d.wo};
  std::vector<double> out(static_cast<size_t>(d.b * d.cout * d.ho * d.wo), 0.0);
  const auto ri = index_table(d.ho, d.kh, stride, d.h);
  const auto ci = index_table(d.wo, d.kw, stride, d.w);
  const double* px = x.data();
  const double* pk = k.data();

  if (depthwise) {
    for (int64_t b = 0; b < d.b; ++b) {
      for (int64_t c = 0; c < d.cin; ++c) {
        const double* xc = px + (b * d.cin + c) * d.h * d.w;
        double* oc = out.data() + (b * d.cin + c) * d.ho * d.wo;
        for (int64_t oi = 0; oi < d.ho; ++oi) {
          for (int64_t oj = 0; oj < d.wo; ++oj) {
            double acc = 0.0;
            for (int64_t di = 0; di < d.kh; ++di) {
              const double* xr = xc + ri[oi * d.kh + di] * d.w;
              const double* kr = pk + di * d.kw;
              for (int64_t dj = 0; dj < d.kw; ++dj) {
                acc += xr[ci[oj * d.kw + dj]] * kr[dj];
              }
            }
            oc[oi * d.wo + oj] = acc;
          }
        }
      }
    }
    return out;
  }

  for (int64_t b = 0; b < d.b; ++b) {
    for (int64_t o = 0; o < d.cout; ++o) {
      double* oc = out.data() + (b * d.cout + o) * d.ho * d.wo;
      for (int64_t c = 0; c < d.cin; ++c) {
        const double* xc = px + (b * d.cin + c) * d.h * d.w;
        const double* kc = pk + (o * d.cin + c) * d.kh * d.kw;
        for (int64_t oi = 0; oi < d.ho; ++oi) {
          for (int64_t oj = 0; oj < d.wo; ++oj) {
            double acc = 0.0;
            for (int64_t di = 0; di < d.kh; ++di) {
              const double* xr = xc + ri[oi * d.kh + di] * d.w;
              const double* kr = kc + di * d.kw;
              for (int64_t dj = 0; dj < d.kw; ++dj) {
                acc += xr[ci[oj * d.kw + dj]] * kr[dj];
              }
            }
            oc[oi * d.wo + oj] += acc;
          }
        }
      }
    }
  }
  return out;
}

void conv2d_backward(const Tensor& x, const Tensor& k, int64_t stride,
                     bool depthwise, const std::vector<double>& gout,
                     const GradSink& sink, bool want_gx, bool want_gk) {
  const ConvDims d = parse_conv(x, k, stride, depthwise);
  const auto ri = index_table(d.ho, d.kh, stride, d.h);
  const auto ci = index_table(d.wo, d.kw, stride, d.w);
  const double* px = x.data();
  const double* pk = k.data();
  std::vector<double> gx, gk;
  if (want_gx) gx.assign(static_cast<size_t>(x.numel()), 0.0);
  if (want_gk) gk.assign(static_cast<size_t>(k.numel()), 0.0);

  for (int64_t b = 0; b < d.b; ++b) {
    for (int64_t o = 0; o < d.cout; ++o) {
      const double* gc = gout.data() + (b * d.cout + o) * d.ho * d.wo;
      const int64_t c_lo = depthwise ? o : 0;
      const int64_t c_hi = depthwise ? o + 1 : d.cin;
      for (int64_t c = c_lo; c < c_hi; ++c) {
        const double* xc = px + (b * d.cin + c) * d.h * d.w;
        double* gxc = want_gx ? gx.data() + (b * d.cin + c) * d.h * d.w : nullptr;
        const int64_t koff = depthwise ? 0 : (o * d.cin + c) * d.kh * d.kw;
        for (int64_t oi = 0; oi < d.ho; ++oi) {
          for (int64_t oj = 0; oj < d.wo; ++oj) {
            const double g = gc[oi * d.wo + oj];
            if (g == 0.0) continue;
            for (int64_t di = 0; di < d.kh; ++di) {
              const int64_t xi = ri[oi * d.kh + di];
              for (int64_t dj = 0; dj < d.kw; ++dj) {
                const int64_t xj = ci[oj * d.kw + dj];
                if (want_gx) gxc[xi * d.w + xj] += g * pk[koff + di * d.kw + dj];
                if (want_gk) gk[koff + di * d.kw + dj] += g * xc[xi * d.w + xj];
              }
            }
          }
        }
      }
    }
  }
  if (want_gx) sink(0, std::move(gx));
  if (want_gk) sink(1, std::move(gk));
}

namespace {

struct TConvDims {
  int64_t b, cin, h, w, cout, kh, kw, ho, wo, pad;
  bool rank3;
};

TConvDims parse_tconv(const Tensor& x, const Tensor& k) {
  TConvDims d{};
  if (x.rank() == 3) {
    d.rank3 = true;
    d.b = 1;
    d.cin = x.dim(0);
    d.h = x.dim(1);
    d.w = x.dim(2);
  } else if (x.rank() == 4) {
    d.b = x.dim(0);
    d.cin = x.dim(1);
    d.h = x.dim(2);
    d.w = x.dim(3);
  } else {
    throw ShapeError("conv-transpose-stride2: input must be [C,H,W] or [B,C,H,W]");
  }
  if (k.rank() != 4 || k.dim(0) != d.cin) {
    throw ShapeError("conv-transpose-stride2 kernel must be [Cin,Cout,kh,kw] with Cin=" +
                     std::to_string(d.cin) + ", got " + shape_str(k.shape()));
  }
  d.cout = k.dim(1);
  d.kh = k.dim(2);
  d.kw = k.dim(3);
  if (d.kh % 2 != 0 || d.kw % 2 != 0) {
    throw ShapeError("conv-transpose-stride2 requires even kernel extents");
  }
  d.ho = 2 * d.h;
  d.wo = 2 * d.w;
  d.pad = (d.kh - 2) / 2;
  return d;
}

}  // namespace

std::vector<double> conv_transpose2_forward(const Tensor& x, const Tensor& k,
                                            Shape* out_shape) {
  const TConvDims d = parse_tconv(x, k);
  *out_shape = d.rank3 ? Shape{d.cout, d.ho, d.wo} : Shape{d.b, d.cout, d.ho, d.wo};
  std::vector<double> out(static_cast<size_t>(d.b * d.cout * d.ho * d.wo), 0.0);
  const double* px = x.data();
  const double* pk = k.data();

  // Gather form: output position p receives x[i] for kernel rows di with
  // p = (2i + di - pad) mod 2H, i.e. 2i = (p + pad - di) mod 2H when even.
  for (int64_t b = 0; b < d.b; ++b) {
    for (int64_t o = 0; o < d.cout; ++o) {
      double* oc = out.data() + (b * d.cout + o) * d.ho * d.wo;
      for (int64_t p = 0; p < d.ho; ++p) {
        for (int64_t q = 0; q < d.wo; ++q) {
          double acc = 0.0;
          for (int64_t di = 0; di < d.kh; ++di) {
            const int64_t tp = wrap(p + d.pad - di, d.ho);
            if (tp % 2 != 0) continue;
            const int64_t i = tp / 2;
            for (int64_t dj = 0; dj < d.kw; ++dj) {
              const int64_t tq = wrap(q + d.pad - dj, d.wo);
              if (tq % 2 != 0) continue;
              const int64_t j = tq / 2;
              for (int64_t c = 0; c < d.cin; ++c) {
                acc += px[((b * d.cin + c) * d.h + i) * d.w + j] *
                       pk[((c * d.cout + o) * d.kh + di) * d.kw + dj];
              }
            }
          }
          oc[p * d.wo + q] = acc;
        }
      }
    }
  }
  return out;
}

void conv_transpose2_backward(const Tensor& x, const Tensor& k,
                              const std::vector<double>& gout, const GradSink& sink,
                              bool want_gx, bool want_gk) {
  const TConvDims d = parse_tconv(x, k);
  const double* px = x.data();
  const double* pk = k.data();
  std::vector<double> gx, gk;
  if (want_gx) gx.assign(static_cast<size_t>(x.numel()), 0.0);
  if (want_gk) gk.assign(static_cast<size_t>(k.numel()), 0.0);

  // Every forward contribution out[b,o,p,q] += x[b,c,i,j] * k[c,o,di,dj]
  // with p=(2i+di-pad)%2H, q=(2j+dj-pad)%2W is mirrored here.
  for (int64_t b = 0; b < d.b; ++b) {
    for (int64_t c = 0; c < d.cin; ++c) {
      for (int64_t i = 0; i < d.h; ++i) {
        for (int64_t j = 0; j < d.w; ++j) {
          const double xv = px[((b * d.cin + c) * d.h + i) * d.w + j];
          double gxv = 0.0;
          for (int64_t o = 0; o < d.cout; ++o) {
            const double* gc = gout.data() + (b * d.cout + o) * d.ho * d.wo;
            for (int64_t di = 0; di < d.kh; ++di) {
              const int64_t p = wrap(2 * i + di - d.pad, d.ho);
              for (int64_t dj = 0; dj < d.kw; ++dj) {
                const int64_t q = wrap(2 * j + dj - d.pad, d.wo);
                const double g = gc[p * d.wo + q];
                const int64_t ki = ((c * d.cout + o) * d.kh + di) * d.kw + dj;
                gxv += g * pk[ki];
                if (want_gk) gk[ki] += g * xv;
              }
            }
          }
          if (want_gx) gx[((b * d.cin + c) * d.h + i) * d.w + j] = gxv;
        }
      }
    }
  }
  if (want_gx) sink(0, std::move(gx));
  if (want_gk) sink(1, std::move(gk));
}

}  // namespace rdn::detail
