// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria 9-11 share two trained models (baseline and KURE).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rq/checkpoint.hpp"
#include "rq/distortion.hpp"
#include "rq/kure.hpp"
#include "rq/trainer.hpp"

using namespace rq;

namespace {

int g_failures = 0;

void report(int num, const std::string& name, bool ok, double seconds,
            const std::string& detail = "") {
    std::printf("%s  criterion %2d: %s (%.1fs)%s%s\n", ok ? "PASS" : "FAIL", num, name.c_str(),
                seconds, detail.empty() ? "" : " -- ", detail.c_str());
    if (!ok) ++g_failures;
}

template <typename F>
void criterion(int num, const std::string& name, double time_limit, F body) {
    auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok;
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        ok = false;
        detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (time_limit > 0.0 && secs > time_limit) {
        ok = false;
        detail += " exceeded time limit";
    }
    report(num, name, ok, secs, detail);
}

bool mc_agreement_uniform(std::string& detail) {
    const double a = 1.0;
    const std::size_t n = 1000000;
    for (int m : {2, 4, 8}) {
        const double opt = optimal_step(Uniform{a}, m);
        const double lo = 0.2 * opt, hi = a / std::ldexp(1.0, m - 1);
        for (int i = 1; i <= 50; ++i) {
            double d = lo + (hi - lo) * i / 50.0;
            double closed = mse_uniform_closed(a, m, d);
            double mc = mc_mse(Uniform{a}, QuantizerConfig(m, d), n, 1000u + i + 100u * m);
            double rel = std::fabs(closed - mc) / closed;
            if (rel > 0.05) {
                std::ostringstream os;
                os << "M=" << m << " delta=" << d << " rel=" << rel;
                detail = os.str();
                return false;
            }
        }
    }
    return true;
}

bool mc_agreement_normal(std::string& detail) {
    const std::size_t n = 1000000;
    for (int m : {2, 4, 8}) {
        const double opt = optimal_step(Normal{1.0}, m);
        const double lo = 0.2 * opt, hi = 3.0 * opt;
        for (int i = 1; i <= 50; ++i) {
            double d = lo + (hi - lo) * i / 50.0;
            double closed = mse_normal_closed(1.0, m, d);
            double mc = mc_mse(Normal{1.0}, QuantizerConfig(m, d), n, 2000u + i + 100u * m);
            double rel = std::fabs(closed - mc) / closed;
            if (rel > 0.05) {
                std::ostringstream os;
                os << "M=" << m << " delta=" << d << " rel=" << rel;
                detail = os.str();
                return false;
            }
        }
    }
    return true;
}

bool lemma3(std::string& detail) {
    const double a = 1.0;
    for (int m = 2; m <= 8; ++m) {
        const double analytic = optimal_step(Uniform{a}, m);
        const double hi = a / std::ldexp(1.0, m - 1);
        const std::size_t points = 100000;
        double best_x = hi, best_v = mse_uniform_closed(a, m, hi);
        for (std::size_t i = 1; i < points; ++i) {
            double x = hi * static_cast<double>(points - i) / static_cast<double>(points);
            double v = mse_uniform_closed(a, m, x);
            if (v < best_v) {
                best_v = v;
                best_x = x;
            }
        }
        if (std::fabs(analytic - best_x) > hi / static_cast<double>(points)) {
            detail = "grid mismatch at M=" + std::to_string(m);
            return false;
        }
        if (std::fabs(analytic - 2.0 * a / std::ldexp(1.0, m)) / analytic >
            std::ldexp(1.0, -m + 1)) {
            detail = "coarse-form bound violated at M=" + std::to_string(m);
            return false;
        }
    }
    return true;
}

bool theorem1(std::string& detail) {
    for (int m = 2; m <= 8; ++m) {
        SensitivityReport ru = sensitivity(Uniform{1.0}, m, {1.0});
        const double dref = ru.delta_opt;
        for (int i = 0; i < 20; ++i) {
            double eps = (0.01 + (0.2 - 0.01) * i / 19.0) * dref;
            SensitivityReport u = sensitivity(Uniform{1.0}, m, {eps});
            SensitivityReport nrm = sensitivity(Normal{1.0}, m, {eps});
            double gu = u.gamma[0].second, gn = nrm.gamma[0].second;
            if (std::fabs(gu - eps * eps / 4.0) / (eps * eps / 4.0) > 1e-8) {
                detail = "gamma_U not eps^2/4 at M=" + std::to_string(m);
                return false;
            }
            if (gn < 11.0 * eps * eps / 12.0 || gu >= gn) {
                detail = "normal bound or ordering failed at M=" + std::to_string(m);
                return false;
            }
        }
    }
    return true;
}

bool coincidence(std::string& detail) {
    const double a = 1.0;
    for (int m = 2; m <= 8; ++m) {
        const double zero = 2.0 * a / (std::ldexp(1.0, m) - std::ldexp(1.0, -m));
        const double scale = std::ldexp(1.0, 2 * m);  // magnitude of the d2 terms
        if (std::fabs(mse_uniform_d2(a, m, zero)) > 1e-10 * scale) {
            detail = "d2 not zero at M=" + std::to_string(m);
            return false;
        }
        const double opt = optimal_step(Uniform{a}, m);
        if (std::fabs(zero - opt) / opt > std::ldexp(1.0, -m + 1)) {
            detail = "zero far from optimum at M=" + std::to_string(m);
            return false;
        }
    }
    return true;
}

bool fig2_ordering(std::string& detail) {
    std::vector<int> bits{2, 3, 4, 5, 6, 7, 8};
    auto uni = min_mse_vs_bits(Uniform{std::sqrt(3.0)}, bits);
    auto nor = min_mse_vs_bits(Normal{1.0}, bits);
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (!(uni[i].second < nor[i].second)) {
            detail = "ordering failed at M=" + std::to_string(bits[i]);
            return false;
        }
    return true;
}

bool kurtosis_targets(std::string& detail) {
    const std::size_t n = 1000000;
    struct Case {
        SourceDistribution dist;
        double target, tol;
    };
    for (const Case& c : {Case{Uniform{1.0}, 1.8, 0.05}, Case{Normal{1.0}, 3.0, 0.1},
                          Case{Laplace{1.0}, 6.0, 0.5}}) {
        double k = kurtosis(sample(c.dist, n, 777));
        if (std::fabs(k - c.target) > c.tol) {
            std::ostringstream os;
            os << name(c.dist) << " kurtosis " << k;
            detail = os.str();
            return false;
        }
    }
    return true;
}

bool kure_gradient_oracle(std::string& detail) {
    KureConfig cfg(1.8, 1.0);
    std::mt19937_64 rng(4242);
    std::normal_distribution<double> nd(0.0, 1.0);
    const std::size_t sizes[] = {16, 64, 256};
    auto loss_of = [&](const Tensor& t) {
        double d = kurtosis(t) - cfg.target;
        return d * d;
    };
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = sizes[trial % 3];
        std::vector<double> v(n);
        for (double& x : v) x = nd(rng);
        Tensor t = Tensor::from_vector(std::move(v));
        Tensor g = kure_grad(t, cfg);
        const double h = 1e-5;
        double err2 = 0.0, norm2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            Tensor p = t, m = t;
            p.data[i] += h;
            m.data[i] -= h;
            double fd = (loss_of(p) - loss_of(m)) / (2.0 * h);
            err2 += (fd - g[i]) * (fd - g[i]);
            norm2 += g[i] * g[i];
        }
        if (std::sqrt(err2 / norm2) > 1e-5) {
            detail = "gradient mismatch on trial " + std::to_string(trial);
            return false;
        }
    }
    return true;
}

// Shared trained models for criteria 9-11.
struct TrainedPair {
    TrainResult baseline;
    TrainResult kure;
    MlpModel init_snapshot_base;  // epoch-0 kurtosis captured from history
    Dataset test;
};

TrainConfig experiment_config() {
    TrainConfig cfg;
    cfg.layer_sizes = {2, 64, 64, 2};
    cfg.epochs = 300;
    cfg.batch_size = 64;
    cfg.learning_rate = 0.2;
    cfg.seed = 1;
    return cfg;
}

TrainedPair train_models() {
    TrainedPair tp;
    DatasetPair data = make_dataset(2000, 1000, 1);
    tp.test = data.test;
    TrainConfig base = experiment_config();
    tp.baseline = train(base, data.train);
    TrainConfig kure_cfg = base;
    kure_cfg.kure = KureConfig(1.8, 1.0);
    tp.kure = train(kure_cfg, data.train);
    return tp;
}

bool shaping(const TrainedPair& tp, std::string& detail) {
    for (const DenseLayer& l : tp.kure.model.layers) {
        double k = kurtosis(l.weight);
        if (std::fabs(k - 1.8) > 0.3) {
            std::ostringstream os;
            os << "layer kurtosis " << k;
            detail = os.str();
            return false;
        }
    }
    double acc_b = evaluate(tp.baseline.model, tp.test);
    double acc_k = evaluate(tp.kure.model, tp.test);
    if (std::fabs(acc_b - acc_k) > 0.02) {
        std::ostringstream os;
        os << "fp accuracy gap " << std::fabs(acc_b - acc_k);
        detail = os.str();
        return false;
    }
    return true;
}

bool robustness_ordering(const TrainedPair& tp, std::string& detail) {
    std::vector<double> ratios;
    for (int i = 0; i < 9; ++i) ratios.push_back(0.8 + 0.05 * i);
    SweepResult sb = sweep_step_size(tp.baseline.model, 4, ratios, tp.test);
    SweepResult sk = sweep_step_size(tp.kure.model, 4, ratios, tp.test);
    for (std::size_t i = 0; i < ratios.size(); ++i)
        if (sk.rows[i].accuracy < sb.rows[i].accuracy - 0.01) {
            std::ostringstream os;
            os << "step ratio " << sk.rows[i].value << ": kure " << sk.rows[i].accuracy
               << " vs base " << sb.rows[i].accuracy;
            detail = os.str();
            return false;
        }
    for (int b : {2, 3, 4}) {
        double ab = ptq_evaluate(tp.baseline.model, b, 1.0, tp.test);
        double ak = ptq_evaluate(tp.kure.model, b, 1.0, tp.test);
        if (ak < ab) {
            std::ostringstream os;
            os << b << "-bit: kure " << ak << " vs base " << ab;
            detail = os.str();
            return false;
        }
    }
    return true;
}

bool pow2_stress(const TrainedPair& tp, std::string& detail) {
    for (int b : {3, 4}) {
        double base_plain = ptq_evaluate(tp.baseline.model, b, 1.0, tp.test, false);
        double base_pow2 = ptq_evaluate(tp.baseline.model, b, 1.0, tp.test, true);
        double kure_plain = ptq_evaluate(tp.kure.model, b, 1.0, tp.test, false);
        double kure_pow2 = ptq_evaluate(tp.kure.model, b, 1.0, tp.test, true);
        double drop_base = base_plain - base_pow2;
        double drop_kure = kure_plain - kure_pow2;
        if (drop_kure > drop_base + 1e-12) {
            std::ostringstream os;
            os << b << "-bit drops: kure " << drop_kure << " vs base " << drop_base;
            detail = os.str();
            return false;
        }
    }
    return true;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

bool cli_determinism(std::string& detail) {
    auto run = [](const std::string& args) {
        std::string cmd = std::string(RQ_CLI_PATH) + " " + args + " > /dev/null 2>&1";
        return WEXITSTATUS(std::system(cmd.c_str()));
    };
    struct Cmd {
        std::string flags;
        std::string out_a, out_b;
    };
    std::vector<Cmd> cmds = {
        {"mse-curve --dist uniform --a 1 --bits 4 --delta-min 0.03 --delta-max 0.125 "
         "--delta-steps 25 --mc-samples 50000 --seed 5 --out ",
         "acc_det_mse_a.csv", "acc_det_mse_b.csv"},
        {"sensitivity --dist normal --sigma 1 --bits 4 --epsilon 0.01 --epsilon 0.05 --out ",
         "acc_det_sens_a.csv", "acc_det_sens_b.csv"},
        {"train --layer-sizes 2 16 16 2 --epochs 8 --batch-size 32 --lr 0.1 --seed 3 "
         "--n-train 300 --n-test 100 --kure --out ",
         "acc_det_model_a.json", "acc_det_model_b.json"},
    };
    for (const Cmd& c : cmds) {
        if (run(c.flags + c.out_a) != 0 || run(c.flags + c.out_b) != 0) {
            detail = "command failed: " + c.flags;
            return false;
        }
        if (slurp(c.out_a) != slurp(c.out_b) || slurp(c.out_a).empty()) {
            detail = "outputs differ for: " + c.flags;
            return false;
        }
    }
    // sweep from the frozen checkpoint
    std::string sweep_flags = "sweep --checkpoint acc_det_model_a.json --knob bits "
                              "--bits-list 3 4 --n-test 100 --out ";
    if (run(sweep_flags + "acc_det_sw_a.csv") != 0 || run(sweep_flags + "acc_det_sw_b.csv") != 0 ||
        slurp("acc_det_sw_a.csv") != slurp("acc_det_sw_b.csv")) {
        detail = "sweep outputs differ";
        return false;
    }
    return true;
}

}  // namespace

int main() {
    criterion(1, "uniform closed form vs Monte Carlo (5% on 50-point grids, M=2/4/8)", 30.0,
              [](std::string& d) { return mc_agreement_uniform(d); });
    criterion(2, "normal closed form vs Monte Carlo (5% on 50-point grids, M=2/4/8)", 30.0,
              [](std::string& d) { return mc_agreement_normal(d); });
    criterion(3, "analytic optimal step matches grid search and the coarse 2a/2^M form", 0.0,
              [](std::string& d) { return lemma3(d); });
    criterion(4, "gamma_U = eps^2/4 and gamma_N >= 11 eps^2/12, M=2..8", 5.0,
              [](std::string& d) { return theorem1(d); });
    criterion(5, "second-derivative zero coincides with the optimal step", 0.0,
              [](std::string& d) { return coincidence(d); });
    criterion(6, "min MSE: uniform below normal at equal variance, M=2..8", 0.0,
              [](std::string& d) { return fig2_ordering(d); });
    criterion(7, "sample kurtosis hits 1.8 / 3.0 / 6.0 within tolerance", 0.0,
              [](std::string& d) { return kurtosis_targets(d); });
    criterion(8, "analytic kurtosis-penalty gradient vs finite differences", 10.0,
              [](std::string& d) { return kure_gradient_oracle(d); });

    TrainedPair tp;
    bool trained = true;
    {
        auto t0 = std::chrono::steady_clock::now();
        try {
            tp = train_models();
        } catch (const std::exception& e) {
            trained = false;
            std::printf("FAIL  training setup threw: %s\n", e.what());
            g_failures += 3;
        }
        double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (trained && secs > 120.0) {
            std::printf("FAIL  training setup exceeded 120s (%.1fs)\n", secs);
            // charged to criterion 9's runtime budget
            g_failures += 1;
            trained = false;
        }
    }
    if (trained) {
        criterion(9, "KURE shapes every layer toward 1.8 without hurting fp accuracy", 120.0,
                  [&](std::string& d) { return shaping(tp, d); });
        criterion(10, "KURE curve dominates baseline over step ratios and low bit-widths", 0.0,
                  [&](std::string& d) { return robustness_ordering(tp, d); });
        criterion(11, "power-of-two step rounding hurts the KURE model no more than baseline", 0.0,
                  [&](std::string& d) { return pow2_stress(tp, d); });
    }
    criterion(12, "CLI commands are byte-deterministic per flags and seed", 0.0,
              [](std::string& d) { return cli_determinism(d); });

    std::printf("%d criteria failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
