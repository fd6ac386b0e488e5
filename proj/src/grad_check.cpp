#include "dualcausal/grad_check.hpp"

#include <cmath>

#include "dualcausal/errors.hpp"

namespace dcl {

double grad_check(const std::function<double(bool)>& loss,
                  const std::vector<Param*>& params,
                  double step) {
    if (!(step > 0.0)) throw InvalidArgumentError("grad_check: step must be positive");

    for (Param* p : params) p->reset_grad();
    const double base = loss(true);
    if (!std::isfinite(base)) throw NumericError("grad_check: non-finite loss at evaluation point");

    std::vector<Tensor> analytic;
    analytic.reserve(params.size());
    for (Param* p : params) analytic.push_back(p->grad);

    double worst = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Param& p = *params[pi];
        for (std::size_t i = 0; i < p.value.data.size(); ++i) {
            const double saved = p.value.data[i];
            p.value.data[i] = saved + step;
            const double up = loss(false);
            p.value.data[i] = saved - step;
            const double down = loss(false);
            p.value.data[i] = saved;
            if (!std::isfinite(up) || !std::isfinite(down)) {
                throw NumericError("grad_check: non-finite loss while probing " + p.name);
            }
            const double fd = (up - down) / (2.0 * step);
            const double a = analytic[pi].data[i];
            const double rel = std::abs(a - fd) / std::max(1e-8, std::abs(a) + std::abs(fd));
            if (rel > worst) worst = rel;
        }
    }
    return worst;
}

} // namespace dcl
