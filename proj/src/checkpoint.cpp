#include "rq/checkpoint.hpp"

#include <fstream>

#include "json.hpp"

namespace rq {

using nlohmann::json;

void save_checkpoint(const std::string& path, const MlpModel& model, const TrainConfig& cfg) {
    json j;
    j["format_version"] = kCheckpointFormatVersion;
    j["layer_sizes"] = model.layer_sizes;
    json layers = json::array();
    for (const DenseLayer& l : model.layers) {
        json jl;
        jl["weight"] = l.weight.data;  // row-major [out x in]
        jl["bias"] = l.bias.data;
        layers.push_back(std::move(jl));
    }
    j["layers"] = std::move(layers);
    json cfgj;
    cfgj["layer_sizes"] = cfg.layer_sizes;
    cfgj["epochs"] = cfg.epochs;
    cfgj["batch_size"] = cfg.batch_size;
    cfgj["learning_rate"] = cfg.learning_rate;
    cfgj["seed"] = cfg.seed;
    if (cfg.kure) {
        cfgj["kure"] = {{"target", cfg.kure->target}, {"coefficient", cfg.kure->coefficient}};
    } else {
        cfgj["kure"] = nullptr;
    }
    cfgj["qat_bits"] = cfg.qat_bits ? json(*cfg.qat_bits) : json(nullptr);
    j["config"] = std::move(cfgj);
    j["seed"] = cfg.seed;

    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    json j;
    in >> j;
    if (j.at("format_version").get<int>() != kCheckpointFormatVersion)
        throw std::runtime_error("load_checkpoint: unsupported format version");

    Checkpoint cp;
    cp.model.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    const auto& sizes = cp.model.layer_sizes;
    const json& layers = j.at("layers");
    if (layers.size() + 1 != sizes.size())
        throw std::runtime_error("load_checkpoint: layer count mismatch");
    for (std::size_t k = 0; k < layers.size(); ++k) {
        DenseLayer l;
        l.weight = Tensor({sizes[k + 1], sizes[k]},
                          layers[k].at("weight").get<std::vector<double>>());
        l.bias = Tensor({sizes[k + 1]}, layers[k].at("bias").get<std::vector<double>>());
        cp.model.layers.push_back(std::move(l));
    }

    const json& c = j.at("config");
    cp.config.layer_sizes = c.at("layer_sizes").get<std::vector<std::size_t>>();
    cp.config.epochs = c.at("epochs").get<int>();
    cp.config.batch_size = c.at("batch_size").get<std::size_t>();
    cp.config.learning_rate = c.at("learning_rate").get<double>();
    cp.config.seed = c.at("seed").get<std::uint64_t>();
    if (!c.at("kure").is_null())
        cp.config.kure = KureConfig(c["kure"].at("target").get<double>(),
                                    c["kure"].at("coefficient").get<double>());
    if (!c.at("qat_bits").is_null()) cp.config.qat_bits = c["qat_bits"].get<int>();
    return cp;
}

}  // namespace rq
