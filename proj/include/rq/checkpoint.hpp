#pragma once

#include <string>

#include "rq/trainer.hpp"

namespace rq {

inline constexpr int kCheckpointFormatVersion = 1;

/// JSON checkpoint: format_version, layer_sizes, row-major weight and bias
/// arrays, training-config echo, seed. Doubles are serialized with full
/// round-trip precision.
void save_checkpoint(const std::string& path, const MlpModel& model, const TrainConfig& cfg);

struct Checkpoint {
    MlpModel model;
    TrainConfig config;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace rq
