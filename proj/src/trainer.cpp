#include "rq/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace rq {

namespace {

Dataset make_spirals(std::size_t n, std::mt19937_64& rng) {
    if (n == 0) throw std::invalid_argument("make_dataset: counts must be >= 1");
    std::normal_distribution<double> noise(0.0, 0.05);
    Tensor feats = Tensor::zeros({n, 2});
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        int c = static_cast<int>(i % 2);
        double t = static_cast<double>(i / 2) / std::max<double>(1.0, (n + 1) / 2);
        double r = 0.15 + 0.85 * t;
        double theta = 3.0 * M_PI * t + c * M_PI;
        feats.at(i, 0) = r * std::cos(theta) + noise(rng);
        feats.at(i, 1) = r * std::sin(theta) + noise(rng);
        labels[i] = c;
    }
    return Dataset{std::move(feats), std::move(labels)};
}

// Forward activations for one batch. acts[0] is the input; zs[k] the
// pre-activation of layer k.
struct ForwardPass {
    std::vector<Tensor> acts;
    std::vector<Tensor> zs;
};

ForwardPass forward_batch(const std::vector<DenseLayer>& layers, const Tensor& x) {
    ForwardPass fp;
    fp.acts.push_back(x);
    const std::size_t batch = x.shape[0];
    for (std::size_t k = 0; k < layers.size(); ++k) {
        const Tensor& w = layers[k].weight;
        const Tensor& b = layers[k].bias;
        const std::size_t out = w.shape[0], in = w.shape[1];
        Tensor z = Tensor::zeros({batch, out});
        for (std::size_t r = 0; r < batch; ++r)
            for (std::size_t o = 0; o < out; ++o) {
                double acc = b[o];
                for (std::size_t i = 0; i < in; ++i) acc += w.at(o, i) * fp.acts[k].at(r, i);
                z.at(r, o) = acc;
            }
        fp.zs.push_back(z);
        if (k + 1 < layers.size())
            for (double& v : z.data) v = std::max(0.0, v);
        fp.acts.push_back(std::move(z));
    }
    return fp;
}

// Softmax cross-entropy; writes dL/dlogits (averaged over the batch) and
// returns the mean loss.
double softmax_ce(const Tensor& logits, const std::vector<int>& labels,
                  const std::vector<std::size_t>& idx, Tensor& dlogits) {
    const std::size_t batch = logits.shape[0], k = logits.shape[1];
    double loss = 0.0;
    for (std::size_t r = 0; r < batch; ++r) {
        double mx = logits.at(r, 0);
        for (std::size_t c = 1; c < k; ++c) mx = std::max(mx, logits.at(r, c));
        double denom = 0.0;
        for (std::size_t c = 0; c < k; ++c) denom += std::exp(logits.at(r, c) - mx);
        int y = labels[idx[r]];
        loss -= (logits.at(r, y) - mx) - std::log(denom);
        for (std::size_t c = 0; c < k; ++c) {
            double p = std::exp(logits.at(r, c) - mx) / denom;
            dlogits.at(r, c) = (p - (c == static_cast<std::size_t>(y) ? 1.0 : 0.0)) /
                               static_cast<double>(batch);
        }
    }
    return loss / static_cast<double>(batch);
}

int argmax_row(const Tensor& t, std::size_t r) {
    int best = 0;
    for (std::size_t c = 1; c < t.shape[1]; ++c)
        if (t.at(r, c) > t.at(r, best)) best = static_cast<int>(c);
    return best;
}

std::vector<DenseLayer> quantized_layers(const MlpModel& model, int bits, double step_scale,
                                         bool pow2_steps) {
    std::vector<DenseLayer> out;
    out.reserve(model.layers.size());
    for (const DenseLayer& l : model.layers) {
        QuantizerConfig base = step_from_range(l.weight, bits);
        double step = base.step * step_scale;
        if (pow2_steps) step = power_of_two_round(step);
        out.push_back(DenseLayer{quantize_tensor(l.weight, QuantizerConfig(bits, step)), l.bias});
    }
    return out;
}

}  // namespace

DatasetPair make_dataset(std::size_t n_train, std::size_t n_test, std::uint64_t seed) {
    if (n_train == 0 || n_test == 0)
        throw std::invalid_argument("make_dataset: counts must be >= 1");
    // Independent streams so the test set depends only on (n_test, seed).
    std::mt19937_64 rng_train(seed);
    std::mt19937_64 rng_test(seed ^ 0x9e3779b97f4a7c15ull);
    Dataset train = make_spirals(n_train, rng_train);
    Dataset test = make_spirals(n_test, rng_test);
    return DatasetPair{std::move(train), std::move(test)};
}

std::vector<Tensor> MlpModel::weight_tensors() const {
    std::vector<Tensor> out;
    out.reserve(layers.size());
    for (const DenseLayer& l : layers) out.push_back(l.weight);
    return out;
}

double MlpModel::mean_weight_kurtosis() const {
    double acc = 0.0;
    for (const DenseLayer& l : layers) acc += kurtosis(l.weight);
    return acc / static_cast<double>(layers.size());
}

void TrainConfig::validate() const {
    if (layer_sizes.size() < 2)
        throw std::invalid_argument("TrainConfig: need at least input and output sizes");
    for (std::size_t s : layer_sizes)
        if (s == 0) throw std::invalid_argument("TrainConfig: zero layer size");
    if (epochs <= 0 || batch_size == 0 || !(learning_rate > 0.0))
        throw std::invalid_argument("TrainConfig: counts and learning rate must be positive");
    if (qat_bits && (*qat_bits < 1 || *qat_bits > 32))
        throw std::invalid_argument("TrainConfig: qat bits out of range");
}

TrainResult train(const TrainConfig& cfg, const Dataset& train_set) {
    cfg.validate();
    if (train_set.dim() != cfg.layer_sizes.front())
        throw std::invalid_argument("train: dataset dimension does not match input layer");

    std::mt19937_64 rng(cfg.seed);

    // Symmetric uniform fan-in init: U(-sqrt(1/fan_in), sqrt(1/fan_in)).
    MlpModel model;
    model.layer_sizes = cfg.layer_sizes;
    for (std::size_t k = 0; k + 1 < cfg.layer_sizes.size(); ++k) {
        const std::size_t in = cfg.layer_sizes[k], out = cfg.layer_sizes[k + 1];
        double bound = std::sqrt(1.0 / static_cast<double>(in));
        std::uniform_real_distribution<double> u(-bound, bound);
        DenseLayer layer{Tensor::zeros({out, in}), Tensor::zeros({out})};
        for (double& v : layer.weight.data) v = u(rng);
        model.layers.push_back(std::move(layer));
    }

    const std::size_t n = train_set.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    const double num_weight_layers = static_cast<double>(model.layers.size());

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t batches = 0;

        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t end = std::min(n, start + cfg.batch_size);
            const std::size_t batch = end - start;
            std::vector<std::size_t> idx(order.begin() + start, order.begin() + end);

            Tensor x = Tensor::zeros({batch, train_set.dim()});
            for (std::size_t r = 0; r < batch; ++r)
                for (std::size_t c = 0; c < train_set.dim(); ++c)
                    x.at(r, c) = train_set.features.at(idx[r], c);

            // QAT: forward through quantized weights, gradients straight
            // through inside the clamp range.
            std::vector<DenseLayer> active = model.layers;
            if (cfg.qat_bits)
                active = quantized_layers(model, *cfg.qat_bits, 1.0, false);

            ForwardPass fp = forward_batch(active, x);
            const Tensor& logits = fp.acts.back();
            Tensor dlogits = Tensor::zeros(logits.shape);
            double batch_loss = softmax_ce(logits, train_set.labels, idx, dlogits);

            // Backprop.
            std::vector<Tensor> dw(model.layers.size());
            std::vector<Tensor> db(model.layers.size());
            Tensor delta = dlogits;
            for (std::size_t k = model.layers.size(); k-- > 0;) {
                const Tensor& w = active[k].weight;
                const std::size_t out = w.shape[0], in = w.shape[1];
                dw[k] = Tensor::zeros({out, in});
                db[k] = Tensor::zeros({out});
                for (std::size_t r = 0; r < batch; ++r)
                    for (std::size_t o = 0; o < out; ++o) {
                        double d = delta.at(r, o);
                        db[k][o] += d;
                        for (std::size_t i = 0; i < in; ++i)
                            dw[k].at(o, i) += d * fp.acts[k].at(r, i);
                    }
                if (k > 0) {
                    Tensor prev = Tensor::zeros({batch, in});
                    for (std::size_t r = 0; r < batch; ++r)
                        for (std::size_t i = 0; i < in; ++i) {
                            double acc = 0.0;
                            for (std::size_t o = 0; o < out; ++o)
                                acc += delta.at(r, o) * w.at(o, i);
                            prev.at(r, i) = fp.zs[k - 1].at(r, i) > 0.0 ? acc : 0.0;
                        }
                    delta = std::move(prev);
                }
            }

            double kure_term = 0.0;
            if (cfg.kure) {
                kure_term = kure_loss(model.weight_tensors(), *cfg.kure);
                for (std::size_t k = 0; k < model.layers.size(); ++k) {
                    Tensor g = kure_grad(model.layers[k].weight, *cfg.kure);
                    const double scale = cfg.kure->coefficient / num_weight_layers;
                    for (std::size_t i = 0; i < g.numel(); ++i)
                        dw[k][i] += scale * g[i];
                }
            }

            // STE mask: zero gradient where the latent weight saturated.
            if (cfg.qat_bits)
                for (std::size_t k = 0; k < model.layers.size(); ++k) {
                    const double tau = step_from_range(model.layers[k].weight, *cfg.qat_bits)
                                           .threshold();
                    for (std::size_t i = 0; i < dw[k].numel(); ++i)
                        if (std::fabs(model.layers[k].weight[i]) > tau) dw[k][i] = 0.0;
                }

            for (std::size_t k = 0; k < model.layers.size(); ++k) {
                for (std::size_t i = 0; i < dw[k].numel(); ++i)
                    model.layers[k].weight[i] -= cfg.learning_rate * dw[k][i];
                for (std::size_t i = 0; i < db[k].numel(); ++i)
                    model.layers[k].bias[i] -= cfg.learning_rate * db[k][i];
            }

            double total = cfg.kure ? total_loss(batch_loss, kure_term, *cfg.kure) : batch_loss;
            if (!std::isfinite(total))
                throw std::runtime_error("train: loss diverged at epoch " +
                                         std::to_string(epoch));
            loss_sum += total;
            ++batches;
        }

        EpochStats stats;
        stats.loss = loss_sum / static_cast<double>(batches);
        stats.accuracy = evaluate(model, train_set);
        stats.mean_weight_kurtosis = model.mean_weight_kurtosis();
        result.history.push_back(stats);
    }

    result.model = std::move(model);
    return result;
}

double evaluate(const MlpModel& model, const Dataset& data) {
    ForwardPass fp = forward_batch(model.layers, data.features);
    const Tensor& logits = fp.acts.back();
    std::size_t correct = 0;
    for (std::size_t r = 0; r < data.size(); ++r)
        if (argmax_row(logits, r) == data.labels[r]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

double ptq_evaluate(const MlpModel& model, int bits, double step_scale, const Dataset& test,
                    bool pow2_steps) {
    if (bits < 2) throw std::invalid_argument("ptq_evaluate: bits must be >= 2");
    if (!(step_scale > 0.0)) throw std::invalid_argument("ptq_evaluate: step scale must be > 0");
    MlpModel q;
    q.layer_sizes = model.layer_sizes;
    q.layers = quantized_layers(model, bits, step_scale, pow2_steps);
    return evaluate(q, test);
}

SweepResult sweep_step_size(const MlpModel& model, int bits, std::vector<double> ratios,
                            const Dataset& test, bool pow2_steps) {
    if (ratios.empty()) throw std::invalid_argument("sweep_step_size: empty ratio list");
    std::sort(ratios.begin(), ratios.end());
    const double kurt = model.mean_weight_kurtosis();
    SweepResult res;
    for (double r : ratios)
        res.rows.push_back({"step_ratio", r, ptq_evaluate(model, bits, r, test, pow2_steps), kurt});
    return res;
}

SweepResult sweep_bits(const MlpModel& model, std::vector<int> bits_list, const Dataset& test,
                       bool pow2_steps) {
    if (bits_list.empty()) throw std::invalid_argument("sweep_bits: empty bits list");
    std::sort(bits_list.begin(), bits_list.end());
    const double kurt = model.mean_weight_kurtosis();
    SweepResult res;
    for (int b : bits_list)
        res.rows.push_back({"bits", static_cast<double>(b),
                            ptq_evaluate(model, b, 1.0, test, pow2_steps), kurt});
    return res;
}

double power_of_two_round(double delta) {
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw std::invalid_argument("power_of_two_round: delta must be positive and finite");
    const double l = std::log2(delta);
    const double fl = std::floor(l);
    const int k = static_cast<int>(fl) + ((l - fl) >= 0.5 ? 1 : 0);
    return std::ldexp(1.0, k);
}

}  // namespace rq
