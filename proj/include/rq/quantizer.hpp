#pragma once

#include "rq/tensor.hpp"

namespace rq {

/// Symmetric uniform M-bit quantizer: step size `step` (Delta), values clamp
/// at +/- threshold() = 2^(bits-1) * step.
struct QuantizerConfig {
    int bits;
    double step;

    QuantizerConfig(int bits_, double step_) : bits(bits_), step(step_) {
        if (bits < 1 || bits > 32)
            throw std::invalid_argument("QuantizerConfig: bits must be in [1,32]");
        if (!(step > 0.0) || !std::isfinite(step))
            throw std::invalid_argument("QuantizerConfig: step must be positive and finite");
        if (!std::isfinite(threshold()))
            throw std::invalid_argument("QuantizerConfig: clamp threshold overflows");
    }

    double threshold() const { return std::ldexp(step, bits - 1); }
};

/// Round to the nearest multiple of the step, ties away from zero; clamp at
/// the symmetric threshold.
double quantize_scalar(double x, const QuantizerConfig& cfg);

/// Elementwise quantize_scalar, shape preserved.
Tensor quantize_tensor(const Tensor& t, const QuantizerConfig& cfg);

/// Max-abs calibration: step chosen so the largest-magnitude element sits at
/// the clamp threshold.
QuantizerConfig step_from_range(const Tensor& t, int bits);

}  // namespace rq
