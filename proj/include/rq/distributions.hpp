#pragma once

#include <cstdint>
#include <variant>

#include "rq/tensor.hpp"

namespace rq {

/// Zero-mean symmetric source distributions.
struct Uniform {
    double a;  // support [-a, a]
};
struct Normal {
    double sigma;
};
struct Laplace {
    double b;  // scale
};

using SourceDistribution = std::variant<Uniform, Normal, Laplace>;

/// Throws if the scale parameter is not positive and finite.
void validate(const SourceDistribution& dist);

const char* name(const SourceDistribution& dist);

/// n i.i.d. draws, deterministic per (dist, n, seed). Uses mt19937_64;
/// uniform by affine transform of the unit draw, normal by Box-Muller,
/// Laplace by inverse CDF.
Tensor sample(const SourceDistribution& dist, std::size_t n, std::uint64_t seed);

/// 1.8 / 3.0 / 6.0 for uniform / normal / Laplace, independent of scale.
double theoretical_kurtosis(const SourceDistribution& dist);

double variance(const SourceDistribution& dist);

}  // namespace rq
