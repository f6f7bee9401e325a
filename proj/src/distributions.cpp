#include "rq/distributions.hpp"

#include <cmath>
#include <random>

namespace rq {

namespace {

double scale_of(const SourceDistribution& dist) {
    return std::visit([](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Uniform>) return d.a;
        else if constexpr (std::is_same_v<T, Normal>) return d.sigma;
        else return d.b;
    }, dist);
}

// Strictly inside (0,1): (k + 0.5) * 2^-53 with k drawn from the top 53 bits.
double unit_open(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

void validate(const SourceDistribution& dist) {
    double s = scale_of(dist);
    if (!(s > 0.0) || !std::isfinite(s))
        throw std::invalid_argument("SourceDistribution: scale must be positive and finite");
}

const char* name(const SourceDistribution& dist) {
    if (std::holds_alternative<Uniform>(dist)) return "uniform";
    if (std::holds_alternative<Normal>(dist)) return "normal";
    return "laplace";
}

Tensor sample(const SourceDistribution& dist, std::size_t n, std::uint64_t seed) {
    validate(dist);
    if (n == 0) throw std::invalid_argument("sample: n must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<double> out(n);
    if (const auto* u = std::get_if<Uniform>(&dist)) {
        for (double& v : out) v = u->a * (2.0 * unit_open(rng) - 1.0);
    } else if (const auto* g = std::get_if<Normal>(&dist)) {
        // Box-Muller; the second draw of each pair is kept for the next slot.
        for (std::size_t i = 0; i < n; i += 2) {
            double u1 = unit_open(rng), u2 = unit_open(rng);
            double r = std::sqrt(-2.0 * std::log(u1));
            out[i] = g->sigma * r * std::cos(2.0 * M_PI * u2);
            if (i + 1 < n) out[i + 1] = g->sigma * r * std::sin(2.0 * M_PI * u2);
        }
    } else {
        const auto& l = std::get<Laplace>(dist);
        for (double& v : out) {
            double t = unit_open(rng) - 0.5;  // (-1/2, 1/2)
            v = -std::copysign(l.b * std::log1p(-2.0 * std::fabs(t)), t);
        }
    }
    return Tensor::from_vector(std::move(out));
}

double theoretical_kurtosis(const SourceDistribution& dist) {
    if (std::holds_alternative<Uniform>(dist)) return 1.8;
    if (std::holds_alternative<Normal>(dist)) return 3.0;
    return 6.0;
}

double variance(const SourceDistribution& dist) {
    return std::visit([](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Uniform>) return d.a * d.a / 3.0;
        else if constexpr (std::is_same_v<T, Normal>) return d.sigma * d.sigma;
        else return 2.0 * d.b * d.b;
    }, dist);
}

}  // namespace rq
