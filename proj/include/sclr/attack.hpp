#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sclr/data.hpp"
#include "sclr/model.hpp"

namespace sclr {

struct AttackConfig {
    std::vector<double> epsilons = {0.01, 0.02, 0.03};
    bool clamp_to_domain = false;

    void validate(const std::string& path = "attack") const;
};

struct FgsmResult {
    Tensor x_adv;  // x + delta, coordinate-wise
    Tensor delta;  // every coordinate is exactly -eps, 0 or +eps before clamping
};

// The sign step applied to a precomputed input gradient: delta = eps * sign(g)
// with sign(0) = 0, x_adv = x + delta coordinate-wise.
FgsmResult fgsm_step(const Tensor& x, const Tensor& grad, double epsilon);

// x_adv = x + eps * sign(grad_x CE(logits(x), labels)), sign(0) = 0. The loss
// attacked is plain cross-entropy on the true labels regardless of how the
// model was trained. `x` is a normalized B x C x H x W batch; with clamp the
// result is clipped to the normalized image domain from `meta`.
FgsmResult fgsm(const ModelConfig& config, const ModelParams& params, const Tensor& x,
                const std::vector<int>& labels, double epsilon, bool clamp = false,
                const DatasetMeta* meta = nullptr);

// One (epsilon, adversarial accuracy) row per configured epsilon over the full
// split, with the clean-accuracy row (epsilon = 0) prepended.
std::vector<std::pair<double, double>> epsilon_sweep(const ModelConfig& config,
                                                     const ModelParams& params,
                                                     std::span<const Sample> dataset,
                                                     const DatasetMeta& meta,
                                                     const AttackConfig& attack);

}  // namespace sclr
