#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sclr/data.hpp"
#include "sclr/losses.hpp"
#include "sclr/model.hpp"

namespace sclr {

struct OptimizerConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate(const std::string& path = "optimizer") const;
};

struct AdamState {
    struct Moments {
        std::vector<double> m;
        std::vector<double> v;
    };
    std::map<std::string, Moments> moments;
    long step = 0;
    OptimizerConfig config;
};

AdamState init_adam(const ModelParams& params, const OptimizerConfig& config);

// m <- b1*m + (1-b1)*g; v <- b2*v + (1-b2)*g^2; bias-corrected m_hat, v_hat;
// theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
void adam_step(AdamState& state, ModelParams& params,
               const std::map<std::string, Tensor>& grads);

enum class TrainMode { baseline, scl_joint, margin_joint, refined_scl, refined_margin };

std::string mode_name(TrainMode mode);
TrainMode mode_from_name(const std::string& name);
bool mode_is_refined(TrainMode mode);
bool mode_uses_margin(TrainMode mode);

struct TrainConfig {
    TrainMode mode = TrainMode::baseline;
    bool augment = false;
    int epochs = 10;
    int batch_size = 128;
    int max_steps = 0;  // 0 = bounded by epochs only
    LossConfig loss;
    OptimizerConfig optimizer;
    std::uint64_t seed = 0;

    void validate(const std::string& path = "train") const;
};

struct EpochRecord {
    int epoch = 0;  // 1-based
    double task_loss = 0.0;
    double contrastive_loss = 0.0;
    double total_loss = 0.0;
    double clean_accuracy = 0.0;
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochRecord> history;
};

// Baseline trains CE-only (alpha forced to 0, CE on view A). Joint modes train
// the combined objective from scratch on the concatenated two-view batch with
// CE averaged over both views. Refined modes continue from `initial`
// (required) with the combined objective and fresh optimizer moments.
TrainResult train(const TrainConfig& config, const ModelConfig& model_config,
                  const DatasetMeta& meta, std::span<const Sample> train_split,
                  std::span<const Sample> eval_split, const ModelParams* initial = nullptr);

// The eight training regimes: {baseline, scl, margin} x {aug, noaug} plus
// refined_scl and refined_margin continued from the baseline_noaug checkpoint.
// Writes metrics_<name>.csv and <name>.ckpt per run.
struct SuiteResult {
    std::vector<std::string> names;
    std::vector<std::filesystem::path> csv_paths;
};

SuiteResult run_suite(const TrainConfig& base, const ModelConfig& model_config,
                      const DatasetMeta& meta, std::span<const Sample> train_split,
                      std::span<const Sample> eval_split,
                      const std::filesystem::path& out_dir);

}  // namespace sclr
