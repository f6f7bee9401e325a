#include "rq/kure.hpp"

#include <cmath>
#include <string>

namespace rq {

namespace {

struct Moments {
    double mean, m2, m3, m4;  // central moments, population normalization
};

Moments central_moments(const Tensor& t) {
    if (t.numel() < 4)
        throw std::invalid_argument("kurtosis: need at least 4 elements");
    t.check_finite("kurtosis");
    const double n = static_cast<double>(t.numel());
    double mean = 0.0;
    for (double v : t.data) mean += v;
    mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : t.data) {
        double d = v - mean;
        double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (m2 < 1e-24)
        throw std::domain_error("kurtosis: degenerate variance (constant tensor)");
    return {mean, m2, m3, m4};
}

}  // namespace

double kurtosis(const Tensor& t) {
    Moments m = central_moments(t);
    return m.m4 / (m.m2 * m.m2);
}

double kure_loss(const std::vector<Tensor>& weights, const KureConfig& cfg) {
    if (weights.empty())
        throw std::invalid_argument("kure_loss: empty layer list");
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        double d;
        try {
            d = kurtosis(weights[i]) - cfg.target;
        } catch (const std::exception& e) {
            throw std::domain_error("kure_loss: layer " + std::to_string(i) + ": " + e.what());
        }
        acc += d * d;
    }
    return acc / static_cast<double>(weights.size());
}

double total_loss(double task_loss, double kure_term, const KureConfig& cfg) {
    if (!std::isfinite(task_loss) || !std::isfinite(kure_term))
        throw std::invalid_argument("total_loss: non-finite input");
    return task_loss + cfg.coefficient * kure_term;
}

Tensor kure_grad(const Tensor& t, const KureConfig& cfg) {
    Moments m = central_moments(t);
    const double n = static_cast<double>(t.numel());
    const double kurt = m.m4 / (m.m2 * m.m2);
    const double outer = 2.0 * (kurt - cfg.target);
    // dK/dx_j = (4/n)[(x_j-mu)^3 - m3]/m2^2 - (4K/n)(x_j-mu)/m2
    const double c3 = 4.0 / (n * m.m2 * m.m2);
    const double c1 = 4.0 * kurt / (n * m.m2);
    Tensor g = t;
    for (double& v : g.data) {
        double d = v - m.mean;
        v = outer * (c3 * (d * d * d - m.m3) - c1 * d);
    }
    return g;
}

}  // namespace rq
