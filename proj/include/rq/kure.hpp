#pragma once

#include <vector>

#include "rq/tensor.hpp"

namespace rq {

/// Kurtosis regularization settings: target K_T and coefficient lambda.
/// Defaults follow the experiments' hyperparameters.
struct KureConfig {
    double target = 1.8;
    double coefficient = 1.0;

    KureConfig() = default;
    KureConfig(double target_, double coefficient_) : target(target_), coefficient(coefficient_) {
        if (!(target > 1.0))
            throw std::invalid_argument("KureConfig: target must exceed 1");
        if (!(coefficient >= 0.0))
            throw std::invalid_argument("KureConfig: coefficient must be >= 0");
    }
};

/// Fourth standardized moment over the tensor's elements, population moments
/// (divide by N, biased variance). Requires N >= 4 and nonzero variance.
double kurtosis(const Tensor& t);

/// (1/L) sum over layers of |Kurt[W_i] - K_T|^2.
double kure_loss(const std::vector<Tensor>& weights, const KureConfig& cfg);

/// task_loss + lambda * kure_term.
double total_loss(double task_loss, double kure_term, const KureConfig& cfg);

/// Analytic gradient of |Kurt[t] - K_T|^2 with respect to each element.
Tensor kure_grad(const Tensor& t, const KureConfig& cfg);

}  // namespace rq
