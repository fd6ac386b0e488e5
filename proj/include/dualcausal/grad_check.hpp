#pragma once

#include <functional>
#include <vector>

#include "dualcausal/tape.hpp"

namespace dcl {

// Compares analytic gradients against central differences.
//
// `loss` is evaluated at the current parameter values; when `want_grad` is
// true it must also accumulate gradients into the given params (grads are
// reset beforehand). Returns the max over all parameter entries of
//   |analytic - fd| / max(1e-8, |analytic| + |fd|).
double grad_check(const std::function<double(bool want_grad)>& loss,
                  const std::vector<Param*>& params,
                  double step = 1e-5);

} // namespace dcl
