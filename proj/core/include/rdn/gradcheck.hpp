#pragma once

#include <functional>

#include "rdn/ops.hpp"

namespace rdn {

/// A scalar-valued function of one tensor, used by grad_check. The argument
/// is a tracked leaf during the analytic pass and an untracked constant
/// during finite-difference probing; implementations must accept both.
using ScalarFn = std::function<Tensor(const Tensor&)>;

/// Max over coordinates of |analytic - central difference| / (|analytic| + 1e-8).
/// Throws NumericError if probing produces non-finite values.
double grad_check(const ScalarFn& f, const Tensor& point, double fd_step = 1e-5);

}  // namespace rdn
