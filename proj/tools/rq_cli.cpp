#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "rq/checkpoint.hpp"
#include "rq/distortion.hpp"
#include "rq/trainer.hpp"

namespace {

using nlohmann::json;
using namespace rq;

constexpr int kExitUsage = 2;
constexpr int kExitDomain = 3;
constexpr int kExitCheckFailed = 4;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct DistFlags {
    std::string dist = "uniform";
    double a = 1.0;
    double sigma = 1.0;
    double b = 1.0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--dist", dist, "Source distribution")
            ->check(CLI::IsMember({"uniform", "normal", "laplace"}));
        cmd->add_option("--a", a, "Uniform half-range");
        cmd->add_option("--sigma", sigma, "Normal standard deviation");
        cmd->add_option("--b", b, "Laplace scale");
    }

    SourceDistribution make() const {
        if (dist == "uniform") return Uniform{a};
        if (dist == "normal") return Normal{sigma};
        return Laplace{b};
    }
};

class ManifestWriter {
  public:
    ManifestWriter(std::string command, json params)
        : command_(std::move(command)), params_(std::move(params)),
          start_(std::chrono::steady_clock::now()) {}

    void add_output(const std::string& path) { outputs_.push_back(path); }

    // Written alongside the first output as <out>.manifest.json.
    void write(std::uint64_t seed) const {
        if (outputs_.empty()) return;
        json m;
        m["command"] = command_;
        m["parameters"] = params_;
        m["seed"] = seed;
        m["outputs"] = outputs_;
        m["duration_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        std::ofstream f(outputs_.front() + ".manifest.json");
        f << m.dump(2) << '\n';
    }

  private:
    std::string command_;
    json params_;
    std::vector<std::string> outputs_;
    std::chrono::steady_clock::time_point start_;
};

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open output file " + path);
    return f;
}

int cmd_mse_curve(const DistFlags& df, int bits, double dmin, double dmax, int dsteps,
                  std::size_t mc_samples, std::uint64_t seed, const std::string& out) {
    SourceDistribution dist = df.make();
    ManifestWriter manifest("mse-curve",
                            json{{"dist", df.dist}, {"a", df.a}, {"sigma", df.sigma},
                                 {"b", df.b}, {"bits", bits}, {"delta_min", dmin},
                                 {"delta_max", dmax}, {"delta_steps", dsteps},
                                 {"mc_samples", mc_samples}});
    if (!(dmin > 0.0) || !(dmax >= dmin) || dsteps < 1)
        throw CLI::ValidationError("--delta-min/--delta-max/--delta-steps must define a grid");

    std::ofstream f = open_out(out);
    f << "delta,mse_closed,mse_mc\n";
    for (int i = 0; i < dsteps; ++i) {
        double delta = dsteps == 1 ? dmin
                                   : dmin + (dmax - dmin) * static_cast<double>(i) /
                                                static_cast<double>(dsteps - 1);
        std::string closed;
        if (const auto* u = std::get_if<Uniform>(&dist))
            closed = fmt(mse_uniform_closed(u->a, bits, delta));
        else if (const auto* g = std::get_if<Normal>(&dist))
            closed = fmt(mse_normal_closed(g->sigma, bits, delta));
        // Laplace has no closed form here; the column stays empty.
        std::string mc;
        if (mc_samples > 0)
            mc = fmt(mc_mse(dist, QuantizerConfig(bits, delta), mc_samples, seed));
        f << fmt(delta) << ',' << closed << ',' << mc << '\n';
    }
    f.close();
    manifest.add_output(out);
    manifest.write(seed);
    return 0;
}

int cmd_sensitivity(const DistFlags& df, int bits, const std::vector<double>& epsilons,
                    const std::string& out) {
    if (epsilons.empty())
        throw CLI::ValidationError("at least one --epsilon is required");
    SensitivityReport rep = sensitivity(df.make(), bits, epsilons);
    ManifestWriter manifest("sensitivity",
                            json{{"dist", df.dist}, {"a", df.a}, {"sigma", df.sigma},
                                 {"b", df.b}, {"bits", bits}, {"epsilons", epsilons}});
    std::ofstream f = open_out(out);
    f << "dist,bits,delta_opt,mse_opt,second_derivative,empirical,epsilon,gamma\n";
    for (const auto& [eps, gamma] : rep.gamma)
        f << name(rep.dist) << ',' << rep.bits << ',' << fmt(rep.delta_opt) << ','
          << fmt(rep.mse_opt) << ',' << fmt(rep.second_derivative_at_opt) << ','
          << (rep.empirical ? 1 : 0) << ',' << fmt(eps) << ',' << fmt(gamma) << '\n';
    f.close();
    manifest.add_output(out);
    manifest.write(0);
    return 0;
}

int cmd_theorem_check(int bits_min, int bits_max, const std::vector<double>& epsilons) {
    if (bits_min < 1 || bits_max < bits_min)
        throw CLI::ValidationError("malformed --bits-min/--bits-max range");
    if (epsilons.empty())
        throw CLI::ValidationError("at least one --epsilon is required");

    // Unit-variance sources on both sides.
    bool ok = true;
    std::printf("bits,epsilon,gamma_uniform,gamma_normal,uniform_more_robust\n");
    for (int m = bits_min; m <= bits_max; ++m) {
        SensitivityReport ru = sensitivity(Uniform{std::sqrt(3.0)}, m, epsilons);
        SensitivityReport rn = sensitivity(Normal{1.0}, m, epsilons);
        for (std::size_t i = 0; i < epsilons.size(); ++i) {
            double gu = ru.gamma[i].second, gn = rn.gamma[i].second;
            bool point = gu < gn;
            ok = ok && point;
            std::printf("%d,%s,%s,%s,%d\n", m, fmt(epsilons[i]).c_str(), fmt(gu).c_str(),
                        fmt(gn).c_str(), point ? 1 : 0);
        }
    }
    std::printf("%s\n", ok ? "theorem-check: PASS" : "theorem-check: FAIL");
    return ok ? 0 : kExitCheckFailed;
}

int cmd_train(TrainConfig cfg, bool kure_on, double kure_target, double kure_lambda,
              int qat_bits, std::size_t n_train, std::size_t n_test, const std::string& out) {
    if (kure_on) cfg.kure = KureConfig(kure_target, kure_lambda);
    if (qat_bits > 0) cfg.qat_bits = qat_bits;
    ManifestWriter manifest("train", json{{"layer_sizes", cfg.layer_sizes},
                                          {"epochs", cfg.epochs},
                                          {"batch_size", cfg.batch_size},
                                          {"learning_rate", cfg.learning_rate},
                                          {"kure", kure_on},
                                          {"kure_target", kure_target},
                                          {"kure_lambda", kure_lambda},
                                          {"qat_bits", qat_bits},
                                          {"n_train", n_train},
                                          {"n_test", n_test}});
    DatasetPair data = make_dataset(n_train, n_test, cfg.seed);
    TrainResult res = train(cfg, data.train);
    save_checkpoint(out, res.model, cfg);
    const EpochStats& last = res.history.back();
    std::printf("final: loss=%s train_acc=%s test_acc=%s mean_kurtosis=%s\n",
                fmt(last.loss).c_str(), fmt(last.accuracy).c_str(),
                fmt(evaluate(res.model, data.test)).c_str(),
                fmt(last.mean_weight_kurtosis).c_str());
    manifest.add_output(out);
    manifest.write(cfg.seed);
    return 0;
}

int cmd_sweep(const std::string& checkpoint_path, const std::string& knob, int bits,
              double rmin, double rmax, int rsteps, std::vector<int> bits_list, bool pow2,
              std::uint64_t seed, bool seed_given, std::size_t n_test,
              const std::string& out) {
    Checkpoint cp = load_checkpoint(checkpoint_path);
    std::uint64_t data_seed = seed_given ? seed : cp.config.seed;
    ManifestWriter manifest("sweep", json{{"checkpoint", checkpoint_path},
                                          {"knob", knob},
                                          {"bits", bits},
                                          {"step_ratio_min", rmin},
                                          {"step_ratio_max", rmax},
                                          {"step_ratio_steps", rsteps},
                                          {"bits_list", bits_list},
                                          {"pow2_steps", pow2},
                                          {"n_test", n_test}});
    // The test split depends only on (n_test, seed), so a dummy train size works.
    DatasetPair data = make_dataset(1, n_test, data_seed);
    Dataset& test = data.test;

    SweepResult res;
    if (knob == "step") {
        if (rsteps < 1 || !(rmin > 0.0) || !(rmax >= rmin))
            throw CLI::ValidationError("malformed --step-ratio range");
        std::vector<double> ratios;
        for (int i = 0; i < rsteps; ++i)
            ratios.push_back(rsteps == 1 ? rmin
                                         : rmin + (rmax - rmin) * static_cast<double>(i) /
                                                      static_cast<double>(rsteps - 1));
        res = sweep_step_size(cp.model, bits, ratios, test, pow2);
    } else {
        res = sweep_bits(cp.model, bits_list, test, pow2);
    }

    std::ofstream f = open_out(out);
    f << "knob,value,accuracy,weight_kurtosis_mean\n";
    for (const SweepRow& r : res.rows)
        f << r.knob << ',' << fmt(r.value) << ',' << fmt(r.accuracy) << ','
          << fmt(r.weight_kurtosis_mean) << '\n';
    f.close();
    manifest.add_output(out);
    manifest.write(data_seed);
    return 0;
}

int cmd_kurtosis(const std::string& checkpoint_path, const std::string& out) {
    Checkpoint cp = load_checkpoint(checkpoint_path);
    std::ostringstream report;
    report << "layer,kurtosis\n";
    std::vector<Tensor> ws = cp.model.weight_tensors();
    for (std::size_t i = 0; i < ws.size(); ++i)
        report << i << ',' << fmt(kurtosis(ws[i])) << '\n';
    std::fputs(report.str().c_str(), stdout);
    if (!out.empty()) {
        ManifestWriter manifest("kurtosis", json{{"checkpoint", checkpoint_path}});
        std::ofstream f = open_out(out);
        f << report.str();
        f.close();
        manifest.add_output(out);
        manifest.write(cp.config.seed);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantization robustness analysis and desk-scale KURE experiments"};
    app.require_subcommand(1);

    // mse-curve
    auto* mse = app.add_subcommand("mse-curve", "Closed-form and Monte-Carlo MSE over a step grid");
    DistFlags mse_dist;
    mse_dist.attach(mse);
    int mse_bits = 4, mse_steps = 50;
    double mse_dmin = 0.01, mse_dmax = 0.25;
    std::size_t mse_samples = 1000000;
    std::uint64_t mse_seed = 0;
    std::string mse_out = "mse_curve.csv";
    mse->add_option("--bits", mse_bits);
    mse->add_option("--delta-min", mse_dmin);
    mse->add_option("--delta-max", mse_dmax);
    mse->add_option("--delta-steps", mse_steps);
    mse->add_option("--mc-samples", mse_samples, "0 disables the Monte-Carlo column");
    mse->add_option("--seed", mse_seed);
    mse->add_option("--out", mse_out);

    // sensitivity
    auto* sens = app.add_subcommand("sensitivity", "Second-order step-size sensitivity");
    DistFlags sens_dist;
    sens_dist.attach(sens);
    int sens_bits = 4;
    std::vector<double> sens_eps;
    std::string sens_out = "sensitivity.csv";
    sens->add_option("--bits", sens_bits);
    sens->add_option("--epsilon", sens_eps, "Step-size perturbation (repeatable)");
    sens->add_option("--out", sens_out);

    // theorem-check
    auto* thm = app.add_subcommand("theorem-check",
                                   "Verify uniform sources are less step-size sensitive than normal");
    int thm_bmin = 2, thm_bmax = 8;
    std::vector<double> thm_eps;
    thm->add_option("--bits-min", thm_bmin);
    thm->add_option("--bits-max", thm_bmax);
    thm->add_option("--epsilon", thm_eps, "Perturbation grid (repeatable)");

    // train
    auto* tr = app.add_subcommand("train", "Train the toy MLP on the spiral dataset");
    TrainConfig tcfg;
    bool tr_kure = false;
    double tr_ktarget = 1.8, tr_klambda = 1.0;
    int tr_qat = 0;
    std::size_t tr_ntrain = 2000, tr_ntest = 1000;
    std::string tr_out = "model.json";
    std::vector<std::size_t> tr_sizes;
    tr->add_option("--layer-sizes", tr_sizes, "Layer widths including input and output");
    tr->add_option("--epochs", tcfg.epochs);
    tr->add_option("--batch-size", tcfg.batch_size);
    tr->add_option("--lr", tcfg.learning_rate);
    tr->add_option("--seed", tcfg.seed);
    tr->add_flag("--kure", tr_kure, "Enable kurtosis regularization");
    tr->add_option("--kure-target", tr_ktarget);
    tr->add_option("--kure-lambda", tr_klambda);
    tr->add_option("--qat-bits", tr_qat, "Enable weight QAT at this bit-width");
    tr->add_option("--n-train", tr_ntrain);
    tr->add_option("--n-test", tr_ntest);
    tr->add_option("--out", tr_out, "Checkpoint path");

    // sweep
    auto* sw = app.add_subcommand("sweep", "PTQ robustness sweep over step ratios or bit-widths");
    std::string sw_ckpt, sw_knob = "step", sw_out = "sweep.csv";
    int sw_bits = 4, sw_rsteps = 9;
    double sw_rmin = 0.8, sw_rmax = 1.2;
    std::vector<int> sw_bits_list{2, 3, 4, 5, 6, 7, 8};
    bool sw_pow2 = false;
    std::uint64_t sw_seed = 0;
    std::size_t sw_ntest = 1000;
    sw->add_option("--checkpoint", sw_ckpt)->required();
    sw->add_option("--knob", sw_knob)->check(CLI::IsMember({"step", "bits"}));
    sw->add_option("--bits", sw_bits, "Bit-width for the step-ratio sweep");
    sw->add_option("--step-ratio-min", sw_rmin);
    sw->add_option("--step-ratio-max", sw_rmax);
    sw->add_option("--step-ratio-steps", sw_rsteps);
    sw->add_option("--bits-list", sw_bits_list, "Bit-widths for the bits sweep");
    sw->add_flag("--pow2-steps", sw_pow2, "Snap each step size to the nearest power of two");
    auto* sw_seed_opt = sw->add_option("--seed", sw_seed, "Dataset seed (default: checkpoint seed)");
    sw->add_option("--n-test", sw_ntest);
    sw->add_option("--out", sw_out);

    // kurtosis
    auto* ku = app.add_subcommand("kurtosis", "Per-layer weight kurtosis of a checkpoint");
    std::string ku_ckpt, ku_out;
    ku->add_option("--checkpoint", ku_ckpt)->required();
    ku->add_option("--out", ku_out, "Optional CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*mse)
            return cmd_mse_curve(mse_dist, mse_bits, mse_dmin, mse_dmax, mse_steps, mse_samples,
                                 mse_seed, mse_out);
        if (*sens) return cmd_sensitivity(sens_dist, sens_bits, sens_eps, sens_out);
        if (*thm) return cmd_theorem_check(thm_bmin, thm_bmax, thm_eps);
        if (*tr) {
            if (!tr_sizes.empty()) tcfg.layer_sizes = tr_sizes;
            return cmd_train(tcfg, tr_kure, tr_ktarget, tr_klambda, tr_qat, tr_ntrain, tr_ntest,
                             tr_out);
        }
        if (*sw)
            return cmd_sweep(sw_ckpt, sw_knob, sw_bits, sw_rmin, sw_rmax, sw_rsteps, sw_bits_list,
                             sw_pow2, sw_seed, sw_seed_opt->count() > 0, sw_ntest, sw_out);
        if (*ku) return cmd_kurtosis(ku_ckpt, ku_out);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::domain_error& e) {
        std::cerr << "domain error: " << e.what() << '\n';
        return kExitDomain;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitDomain;
    }
    return 0;
}
