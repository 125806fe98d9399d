#include "rdn/gradcheck.hpp"

#include <cmath>

namespace rdn {

double grad_check(const ScalarFn& f, const Tensor& point, double fd_step) {
  // Analytic pass on a fresh tape.
  Tape tape;
  auto pv = point.values();
  Tensor x = tape.leaf(point.shape(), std::vector<double>(pv.begin(), pv.end()));
  Tensor y = f(x);
  if (y.numel() != 1) {
    throw ShapeError("grad_check: function must return a scalar");
  }
  Gradients grads = tape.backward(y);
  Tensor g = grads.grad(x);
  auto gv = g.values();

  // Central differences on untracked constants.
  double worst = 0.0;
  std::vector<double> probe(pv.begin(), pv.end());
  for (size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + fd_step;
    const double up = f(Tensor::constant(point.shape(), probe)).item();
    probe[i] = saved - fd_step;
    const double dn = f(Tensor::constant(point.shape(), probe)).item();
    probe[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(dn)) {
      throw NumericError("grad_check: non-finite value while probing");
    }
    const double fd = (up - dn) / (2.0 * fd_step);
    const double err = std::abs(gv[i] - fd) / (std::abs(gv[i]) + 1e-8);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace rdn
