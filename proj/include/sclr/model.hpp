#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sclr/tensor.hpp"

namespace sclr {

struct ModelConfig {
    int input_channels = 3;
    int input_size = 8;  // square input
    std::vector<int> channel_widths = {16, 32, 32};
    bool use_residual = true;
    int feature_dim = 32;  // must equal channel_widths.back()
    int projection_hidden = 32;
    int projection_out = 64;
    int num_classes = 3;

    void validate(const std::string& path = "model") const;
    // canonical one-line form; also the checkpoint digest input
    std::string canonical() const;
};

// Named parameter tensors keyed by stable path strings. Both model streams
// resolve to these same tensors; there are never per-stream copies.
struct ModelParams {
    std::map<std::string, Tensor> tensors;

    const Tensor& get(const std::string& name) const;
    void set(const std::string& name, Tensor t) { tensors[name] = std::move(t); }
};

// Tracked (or plain) views of the parameters in use by a forward pass.
using ParamMap = std::map<std::string, Tensor>;

struct ForwardResult {
    Tensor features;   // B x F
    Tensor logits;     // B x K, from backbone features
    Tensor embedding;  // B x projection_out, L2-normalized rows
};

struct TwoStreamResult {
    ForwardResult stream_a;
    ForwardResult stream_b;
};

// Deterministic init: weights uniform in [-sqrt(1/fan_in), +sqrt(1/fan_in)],
// biases zero, drawn in fixed architectural order from the seeded generator.
ModelParams init_model(const ModelConfig& config, std::uint64_t seed);

// Watches every parameter exactly once so that all uses share one leaf node.
ParamMap bind_params(const ModelParams& params, Tape& tape);

ForwardResult forward(const ModelConfig& config, const ParamMap& params, const Tensor& x);
ForwardResult forward(const ModelConfig& config, const ModelParams& params, const Tensor& x);

TwoStreamResult two_stream_forward(const ModelConfig& config, const ParamMap& params,
                                   const Tensor& view_a, const Tensor& view_b);

}  // namespace sclr
