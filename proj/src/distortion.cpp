#include "rq/distortion.hpp"

#include <cmath>
#include <sstream>

namespace rq {

namespace {

constexpr std::uint64_t kLaplaceFitSeed = 0x4c41504cu;
constexpr std::size_t kLaplaceFitSamples = 200000;

void check_uniform_domain(double a, int bits, double delta, double upper) {
    if (!(a > 0.0) || !std::isfinite(a))
        throw std::invalid_argument("uniform MSE: a must be positive and finite");
    if (!(delta > 0.0) || delta > upper) {
        std::ostringstream os;
        os << "uniform MSE: delta must lie in (0, " << upper << "] for a=" << a
           << ", bits=" << bits;
        throw std::domain_error(os.str());
    }
}

// Threshold-inside-support domain of the closed form.
double uniform_domain_upper(double a, int bits) { return a / std::ldexp(1.0, bits - 1); }

// The derivative polynomials stay meaningful slightly past the clamp-edge
// step, up to the curvature zero 2a/(2^M - 2^-M).
double uniform_derivative_upper(double a, int bits) {
    return 2.0 * a / (std::ldexp(1.0, bits) - std::ldexp(1.0, -bits));
}

double empirical_mse(const Tensor& xs, const QuantizerConfig& cfg) {
    double acc = 0.0;
    for (double x : xs.data) {
        double e = x - quantize_scalar(x, cfg);
        acc += e * e;
    }
    return acc / static_cast<double>(xs.numel());
}

// Empirical-MSE objective over a fixed sample, as a function of delta.
std::function<double(double)> sample_mse_objective(const Tensor& xs, int bits) {
    return [&xs, bits](double delta) { return empirical_mse(xs, QuantizerConfig(bits, delta)); };
}

}  // namespace

double mse_uniform_closed(double a, int bits, double delta) {
    check_uniform_domain(a, bits, delta, uniform_domain_upper(a, bits));
    const double tau = std::ldexp(delta, bits - 1);
    const double clip = a - tau;
    return clip * clip * clip / (3.0 * a) +
           std::ldexp(delta * delta * delta, bits) / (24.0 * a);
}

double mse_uniform_d1(double a, int bits, double delta) {
    check_uniform_domain(a, bits, delta, uniform_derivative_upper(a, bits));
    const double clip = a - std::ldexp(delta, bits - 1);
    return (std::ldexp(delta * delta, bits - 3) - std::ldexp(clip * clip, bits - 1)) / a;
}

double mse_uniform_d2(double a, int bits, double delta) {
    check_uniform_domain(a, bits, delta, uniform_derivative_upper(a, bits));
    const double clip = a - std::ldexp(delta, bits - 1);
    return (std::ldexp(clip, 2 * bits - 1) + std::ldexp(delta, bits - 2)) / a;
}

double mse_normal_closed(double sigma, int bits, double delta) {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw std::invalid_argument("normal MSE: sigma must be positive and finite");
    if (!(delta > 0.0))
        throw std::domain_error("normal MSE: delta must be positive");
    const double tau = std::ldexp(delta, bits - 1);
    const double z = tau / (std::sqrt(2.0) * sigma);
    return (tau * tau + sigma * sigma) * (1.0 - std::erf(z)) +
           tau * tau / (3.0 * std::ldexp(1.0, 2 * bits)) -
           std::sqrt(2.0) * tau * sigma * std::exp(-tau * tau / (2.0 * sigma * sigma)) /
               std::sqrt(M_PI);
}

double mse_normal_d2(double sigma, int bits, double delta) {
    if (!(sigma > 0.0) || !(delta > 0.0))
        throw std::invalid_argument("normal MSE d2: sigma and delta must be positive");
    const double tau = std::ldexp(delta, bits - 1);
    return 2.0 / (3.0 * std::ldexp(1.0, 2 * bits)) -
           2.0 * std::erf(tau / (std::sqrt(2.0) * sigma)) - 2.0;
}

double golden_minimize(const std::function<double(double)>& f, double lo, double hi,
                       double rel_tol) {
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double x1 = b - phi * (b - a);
    double x2 = a + phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while ((b - a) > rel_tol * (std::fabs(a) + std::fabs(b)) * 0.5) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

double optimal_step(const SourceDistribution& dist, int bits) {
    validate(dist);
    if (bits < 1) throw std::invalid_argument("optimal_step: bits must be >= 1");
    if (const auto* u = std::get_if<Uniform>(&dist)) {
        // The in-domain root of the first derivative.
        return 2.0 * u->a / (std::ldexp(1.0, bits) + 1.0);
    }
    if (const auto* g = std::get_if<Normal>(&dist)) {
        const double hi = 8.0 * g->sigma / std::ldexp(1.0, bits - 1);
        return golden_minimize(
            [&](double d) { return mse_normal_closed(g->sigma, bits, d); }, 1e-12, hi);
    }
    const auto& l = std::get<Laplace>(dist);
    Tensor xs = sample(dist, kLaplaceFitSamples, kLaplaceFitSeed);
    const double hi = 16.0 * l.b / std::ldexp(1.0, bits - 1);
    return golden_minimize(sample_mse_objective(xs, bits), 1e-12, hi);
}

SensitivityReport sensitivity(const SourceDistribution& dist, int bits,
                              const std::vector<double>& epsilons) {
    if (epsilons.empty())
        throw std::invalid_argument("sensitivity: epsilon list must be nonempty");
    for (double e : epsilons)
        if (!(e > 0.0) || !std::isfinite(e))
            throw std::invalid_argument("sensitivity: epsilons must be positive and finite");

    SensitivityReport rep;
    rep.dist = dist;
    rep.bits = bits;
    rep.delta_opt = optimal_step(dist, bits);
    rep.empirical = false;

    if (const auto* u = std::get_if<Uniform>(&dist)) {
        rep.mse_opt = mse_uniform_closed(u->a, bits, rep.delta_opt);
        // Second derivative at the clamp-edge step a/2^(M-1), where the
        // clipping term vanishes and MSE'' = 1/2 exactly.
        rep.second_derivative_at_opt =
            mse_uniform_d2(u->a, bits, u->a / std::ldexp(1.0, bits - 1));
    } else if (const auto* g = std::get_if<Normal>(&dist)) {
        rep.mse_opt = mse_normal_closed(g->sigma, bits, rep.delta_opt);
        rep.second_derivative_at_opt = mse_normal_d2(g->sigma, bits, rep.delta_opt);
    } else {
        // No closed form: central differences of the fixed-sample MSE.
        Tensor xs = sample(dist, kLaplaceFitSamples, kLaplaceFitSeed);
        auto f = sample_mse_objective(xs, bits);
        rep.mse_opt = f(rep.delta_opt);
        const double h = 0.01 * rep.delta_opt;
        rep.second_derivative_at_opt =
            (f(rep.delta_opt + h) - 2.0 * rep.mse_opt + f(rep.delta_opt - h)) / (h * h);
        rep.empirical = true;
    }

    rep.gamma.reserve(epsilons.size());
    for (double e : epsilons)
        rep.gamma.emplace_back(e, std::fabs(rep.second_derivative_at_opt) * e * e / 2.0);
    return rep;
}

double mc_mse(const SourceDistribution& dist, const QuantizerConfig& cfg, std::size_t n,
              std::uint64_t seed) {
    return empirical_mse(sample(dist, n, seed), cfg);
}

std::vector<std::pair<int, double>> min_mse_vs_bits(const SourceDistribution& dist,
                                                    const std::vector<int>& bits_list) {
    if (bits_list.empty())
        throw std::invalid_argument("min_mse_vs_bits: bits list must be nonempty");
    std::vector<std::pair<int, double>> out;
    out.reserve(bits_list.size());
    for (int m : bits_list) {
        const double d = optimal_step(dist, m);
        double v;
        if (const auto* u = std::get_if<Uniform>(&dist))
            v = mse_uniform_closed(u->a, m, d);
        else if (const auto* g = std::get_if<Normal>(&dist))
            v = mse_normal_closed(g->sigma, m, d);
        else
            v = mc_mse(dist, QuantizerConfig(m, d), kLaplaceFitSamples, kLaplaceFitSeed);
        out.emplace_back(m, v);
    }
    return out;
}

}  // namespace rq
