#include "rq/quantizer.hpp"

#include <algorithm>
#include <cmath>

namespace rq {

double quantize_scalar(double x, const QuantizerConfig& cfg) {
    if (!std::isfinite(x))
        throw std::invalid_argument("quantize_scalar: non-finite input");
    const double tau = cfg.threshold();
    if (x > tau) return tau;
    if (x < -tau) return -tau;
    // std::round is nearest with ties away from zero
    return cfg.step * std::round(x / cfg.step);
}

Tensor quantize_tensor(const Tensor& t, const QuantizerConfig& cfg) {
    t.check_finite("quantize_tensor");
    Tensor out = t;
    for (double& v : out.data) v = quantize_scalar(v, cfg);
    return out;
}

QuantizerConfig step_from_range(const Tensor& t, int bits) {
    if (t.numel() == 0)
        throw std::invalid_argument("step_from_range: empty tensor");
    t.check_finite("step_from_range");
    double max_abs = 0.0;
    for (double v : t.data) max_abs = std::max(max_abs, std::fabs(v));
    if (max_abs == 0.0)
        throw std::domain_error("step_from_range: all-zero tensor has no range");
    return QuantizerConfig(bits, std::ldexp(max_abs, 1 - bits));
}

}  // namespace rq
