#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "rq/distributions.hpp"
#include "rq/quantizer.hpp"

namespace rq {

/// Expected quantization MSE for a uniform source on [-a,a]:
///   (a - 2^(M-1) D)^3 / (3a) + 2^M D^3 / (24a)
/// Valid for 0 < D <= a / 2^(M-1) (threshold inside the support).
double mse_uniform_closed(double a, int bits, double delta);

/// First and second derivatives of mse_uniform_closed in delta.
double mse_uniform_d1(double a, int bits, double delta);
double mse_uniform_d2(double a, int bits, double delta);

/// Expected quantization MSE for N(0, sigma), with tau = 2^(M-1) D:
///   (tau^2+sigma^2)(1-erf(tau/(sqrt2 sigma))) + tau^2/(3*2^(2M))
///   - sqrt2 tau sigma exp(-tau^2/(2 sigma^2)) / sqrt(pi)
double mse_normal_closed(double sigma, int bits, double delta);

/// Second derivative of mse_normal_closed in delta:
///   2/(3*2^(2M)) - 2 erf(2^(M-1) D / (sqrt2 sigma)) - 2
double mse_normal_d2(double sigma, int bits, double delta);

/// MSE-minimizing step size. Uniform: closed form 2a/(2^M + 1).
/// Normal: golden-section minimization of the closed form on
/// (0, 8 sigma / 2^(M-1)], relative tolerance 1e-6.
/// Laplace: same minimization over the empirical MSE of a fixed seeded
/// sample (no closed form available).
double optimal_step(const SourceDistribution& dist, int bits);

/// Step-size sensitivity per the second-order Taylor model:
/// Gamma(eps) = |MSE''| * eps^2 / 2, with the second derivative taken at the
/// operating step the sensitivity analysis is written around (the clamp-edge
/// step a/2^(M-1) for uniform sources, the numeric optimum otherwise).
struct SensitivityReport {
    SourceDistribution dist;
    int bits;
    double delta_opt;
    double mse_opt;
    double second_derivative_at_opt;
    bool empirical;  // true when the derivative came from finite differences
    std::vector<std::pair<double, double>> gamma;  // (epsilon, value)
};

SensitivityReport sensitivity(const SourceDistribution& dist, int bits,
                              const std::vector<double>& epsilons);

/// Monte-Carlo MSE: mean of (x - Q(x))^2 over sample(dist, n, seed).
double mc_mse(const SourceDistribution& dist, const QuantizerConfig& cfg,
              std::size_t n, std::uint64_t seed);

/// MSE at the optimal step, per bit-width.
std::vector<std::pair<int, double>> min_mse_vs_bits(const SourceDistribution& dist,
                                                    const std::vector<int>& bits_list);

struct MseCurve {
    int bits;
    SourceDistribution dist;
    struct Row {
        double delta;
        double mse_closed;
        std::optional<double> mse_mc;
    };
    std::vector<Row> rows;
};

/// Golden-section minimizer on [lo, hi], relative tolerance rel_tol in x.
double golden_minimize(const std::function<double(double)>& f, double lo, double hi,
                       double rel_tol = 1e-6);

}  // namespace rq
