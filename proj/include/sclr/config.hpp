#pragma once

#include <cstdint>
#include <string>

#include "sclr/attack.hpp"
#include "sclr/losses.hpp"
#include "sclr/model.hpp"
#include "sclr/train.hpp"

namespace sclr {

struct DatasetConfig {
    std::string kind = "blobs";  // "blobs" | "cifar100"
    // blobs
    int num_classes = 3;
    int per_class = 200;
    int test_per_class = 50;
    int image_size = 8;
    double noise_sigma = 8.0;
    std::uint64_t seed = 0;
    // cifar100: directory holding train.bin and test.bin
    std::string dir;
};

struct RunConfig {
    std::string mode = "baseline";
    bool augment = false;
    DatasetConfig dataset;
    ModelConfig model;
    LossConfig loss;
    OptimizerConfig optimizer;
    int epochs = 10;
    int batch_size = 128;
    int max_steps = 0;
    std::uint64_t seed = 0;
    AttackConfig attack;

    TrainConfig to_train_config() const;
};

// Strict parse: unknown keys are rejected and every constraint is re-validated;
// errors carry the offending field path. Absent fields take the documented
// defaults (model geometry defaults follow the dataset).
RunConfig parse_config(const std::string& text);
RunConfig load_config_file(const std::string& path);

std::string serialize_config(const RunConfig& config);

struct LoadedDataset {
    std::vector<Sample> train_split;
    std::vector<Sample> test_split;
    DatasetMeta meta;
};

// Generates blobs (train and test carved from one generation pass) or loads
// the CIFAR-100 binaries; meta statistics always come from the train split.
LoadedDataset load_dataset(const DatasetConfig& config);

}  // namespace sclr
