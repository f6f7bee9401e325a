#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rq/kure.hpp"
#include "rq/quantizer.hpp"
#include "rq/tensor.hpp"

namespace rq {

struct Dataset {
    Tensor features;          // [n x d], row-major
    std::vector<int> labels;  // class index per row

    std::size_t size() const { return labels.size(); }
    std::size_t dim() const { return features.shape[1]; }
};

struct DatasetPair {
    Dataset train;
    Dataset test;
};

/// Two interleaved spirals, two classes, deterministic per seed.
DatasetPair make_dataset(std::size_t n_train, std::size_t n_test, std::uint64_t seed);

struct DenseLayer {
    Tensor weight;  // [out x in]
    Tensor bias;    // [out]
};

struct MlpModel {
    std::vector<std::size_t> layer_sizes;  // input dim, hidden..., classes
    std::vector<DenseLayer> layers;

    std::vector<Tensor> weight_tensors() const;
    /// Mean over layers of each weight tensor's kurtosis.
    double mean_weight_kurtosis() const;
};

struct TrainConfig {
    std::vector<std::size_t> layer_sizes{2, 32, 32, 2};
    int epochs = 100;
    std::size_t batch_size = 32;
    double learning_rate = 0.1;
    std::uint64_t seed = 0;
    std::optional<KureConfig> kure;
    std::optional<int> qat_bits;

    void validate() const;
};

struct EpochStats {
    double loss;                   // mean total loss over batches
    double accuracy;               // on the training set
    double mean_weight_kurtosis;
};

struct TrainResult {
    MlpModel model;
    std::vector<EpochStats> history;
};

/// Minibatch SGD on softmax cross-entropy, optional KURE term, optional
/// weight-only QAT with a clipped straight-through estimator. Deterministic
/// per config.
TrainResult train(const TrainConfig& cfg, const Dataset& train_set);

/// Classification accuracy, full precision.
double evaluate(const MlpModel& model, const Dataset& data);

/// Accuracy after weight-only PTQ: per layer, step = step_scale * max-abs
/// step (optionally snapped to the nearest power of two). Biases untouched;
/// the model itself is not modified.
double ptq_evaluate(const MlpModel& model, int bits, double step_scale, const Dataset& test,
                    bool pow2_steps = false);

struct SweepRow {
    std::string knob;  // "step_ratio" or "bits"
    double value;
    double accuracy;
    double weight_kurtosis_mean;
};

struct SweepResult {
    std::vector<SweepRow> rows;
};

SweepResult sweep_step_size(const MlpModel& model, int bits, std::vector<double> ratios,
                            const Dataset& test, bool pow2_steps = false);

SweepResult sweep_bits(const MlpModel& model, std::vector<int> bits_list, const Dataset& test,
                       bool pow2_steps = false);

/// Nearest power of two in log-space; ties round up.
double power_of_two_round(double delta);

}  // namespace rq
