#include <random>

#include "doctest.h"
#include "rq/quantizer.hpp"

using namespace rq;

TEST_CASE("quantize_scalar rounds to the nearest step multiple") {
    QuantizerConfig cfg(4, 1.0);
    CHECK(quantize_scalar(3.4, cfg) == 3.0);
    CHECK(quantize_scalar(100.0, cfg) == 8.0);
    CHECK(quantize_scalar(-8.7, cfg) == -8.0);
    // tie away from zero
    CHECK(quantize_scalar(2.5, cfg) == 3.0);
    CHECK(quantize_scalar(-2.5, cfg) == -3.0);
}

TEST_CASE("quantize_scalar saturates exactly at the threshold") {
    QuantizerConfig cfg(4, 0.25);
    const double tau = cfg.threshold();
    CHECK(tau == 2.0);
    CHECK(quantize_scalar(tau, cfg) == tau);
    CHECK(quantize_scalar(-tau, cfg) == -tau);
}

TEST_CASE("quantize_scalar rejects non-finite input") {
    QuantizerConfig cfg(4, 1.0);
    CHECK_THROWS_AS(quantize_scalar(std::numeric_limits<double>::infinity(), cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(quantize_scalar(std::nan(""), cfg), std::invalid_argument);
}

TEST_CASE("QuantizerConfig validates its fields") {
    CHECK_THROWS_AS(QuantizerConfig(0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(QuantizerConfig(33, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(QuantizerConfig(4, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(QuantizerConfig(4, -1.0), std::invalid_argument);
}

TEST_CASE("quantize_tensor applies elementwise and names bad indices") {
    QuantizerConfig cfg(4, 1.0);
    Tensor t = Tensor::from_vector({3.4, 100.0});
    Tensor q = quantize_tensor(t, cfg);
    CHECK(q[0] == 3.0);
    CHECK(q[1] == 8.0);
    CHECK(quantize_tensor(Tensor::from_vector({0.0, 0.0}), cfg)[0] == 0.0);

    Tensor bad = Tensor::from_vector({1.0, std::nan("")});
    try {
        quantize_tensor(bad, cfg);
        FAIL("expected throw");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("index 1") != std::string::npos);
    }
}

TEST_CASE("step_from_range maps max-abs to the clamp threshold") {
    CHECK(step_from_range(Tensor::from_vector({-1.0, 0.5, 1.0}), 4).step == 0.125);
    CHECK(step_from_range(Tensor::from_vector({2.0, -4.0}), 2).step == 2.0);
    CHECK_THROWS_AS(step_from_range(Tensor::from_vector({0.0, 0.0, 0.0}), 4),
                    std::domain_error);
}

TEST_CASE("quantizer properties on random inputs") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> xs(-20.0, 20.0);
    std::uniform_real_distribution<double> steps(0.01, 2.0);
    std::uniform_int_distribution<int> bits(1, 8);
    for (int trial = 0; trial < 2000; ++trial) {
        QuantizerConfig cfg(bits(rng), steps(rng));
        double x = xs(rng);
        double q = quantize_scalar(x, cfg);
        // idempotence (exact)
        CHECK(quantize_scalar(q, cfg) == q);
        // magnitude bound
        CHECK(std::fabs(q) <= cfg.threshold());
        // in-range error bound
        if (std::fabs(x) <= cfg.threshold())
            CHECK(std::fabs(x - q) <= cfg.step / 2.0 + 1e-15);
        // odd symmetry away from ties
        double frac = std::fabs(x / cfg.step) - std::floor(std::fabs(x / cfg.step));
        if (std::fabs(frac - 0.5) > 1e-9)
            CHECK(quantize_scalar(-x, cfg) == -q);
        // monotonicity
        double y = xs(rng);
        if (x > y) std::swap(x, y);
        CHECK(quantize_scalar(x, cfg) <= quantize_scalar(y, cfg));
    }
}
