#include "sclr/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "sclr/rng.hpp"

namespace sclr {

void ModelConfig::validate(const std::string& path) const {
    if (input_channels < 1) throw std::invalid_argument(path + ".input_channels: must be >= 1");
    if (input_size < 1) throw std::invalid_argument(path + ".input_size: must be >= 1");
    if (channel_widths.empty())
        throw std::invalid_argument(path + ".channel_widths: must name at least one stage");
    for (int w : channel_widths)
        if (w < 1) throw std::invalid_argument(path + ".channel_widths: widths must be >= 1");
    if (feature_dim != channel_widths.back())
        throw std::invalid_argument(path + ".feature_dim: must equal the last channel width (" +
                                    std::to_string(channel_widths.back()) + ")");
    if (projection_hidden < 1)
        throw std::invalid_argument(path + ".projection_hidden: must be >= 1");
    if (projection_out < 1) throw std::invalid_argument(path + ".projection_out: must be >= 1");
    if (num_classes < 2) throw std::invalid_argument(path + ".num_classes: must be >= 2");
    int spatial = input_size;
    for (std::size_t s = 1; s < channel_widths.size(); ++s) spatial = (spatial + 1) / 2;
    if (spatial < 1)
        throw std::invalid_argument(path + ".channel_widths: too many strided stages for input size " +
                                    std::to_string(input_size));
}

std::string ModelConfig::canonical() const {
    std::ostringstream os;
    os << "ic=" << input_channels << ";is=" << input_size << ";cw=";
    for (std::size_t i = 0; i < channel_widths.size(); ++i) {
        if (i) os << ",";
        os << channel_widths[i];
    }
    os << ";res=" << (use_residual ? 1 : 0) << ";fd=" << feature_dim
       << ";ph=" << projection_hidden << ";po=" << projection_out << ";nc=" << num_classes;
    return os.str();
}

const Tensor& ModelParams::get(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end())
        throw std::invalid_argument("unknown parameter '" + name + "'");
    return it->second;
}

namespace {

struct StageSpec {
    int in_ch = 0;
    int out_ch = 0;
    std::size_t stride = 1;
    bool skip = false;       // residual connection around this stage
    bool projected = false;  // skip needs a 1x1 strided shortcut
};

std::vector<StageSpec> stage_specs(const ModelConfig& c) {
    std::vector<StageSpec> stages;
    int in_ch = c.input_channels;
    for (std::size_t s = 0; s < c.channel_widths.size(); ++s) {
        StageSpec sp;
        sp.in_ch = in_ch;
        sp.out_ch = c.channel_widths[s];
        sp.stride = s == 0 ? 1 : 2;
        sp.skip = c.use_residual && s > 0;
        sp.projected = sp.skip && (sp.in_ch != sp.out_ch || sp.stride != 1);
        stages.push_back(sp);
        in_ch = sp.out_ch;
    }
    return stages;
}

Tensor uniform_init(Rng& rng, Shape shape, std::size_t fan_in) {
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    std::vector<double> data(shape_size(shape));
    for (double& v : data) v = rng.uniform(-bound, bound);
    return Tensor(std::move(shape), std::move(data));
}

}  // namespace

ModelParams init_model(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(derive_seed(seed, 0x0d0dfeedULL));
    ModelParams p;

    const auto stages = stage_specs(config);
    for (std::size_t s = 0; s < stages.size(); ++s) {
        const auto& sp = stages[s];
        const std::string prefix = "stage" + std::to_string(s + 1);
        const std::size_t oc = static_cast<std::size_t>(sp.out_ch);
        const std::size_t ic = static_cast<std::size_t>(sp.in_ch);
        p.set(prefix + ".conv.w", uniform_init(rng, {oc, ic, 3, 3}, ic * 9));
        p.set(prefix + ".conv.b", Tensor::zeros({oc}));
        if (sp.projected) {
            p.set(prefix + ".short.w", uniform_init(rng, {oc, ic, 1, 1}, ic));
            p.set(prefix + ".short.b", Tensor::zeros({oc}));
        }
    }

    const std::size_t f = static_cast<std::size_t>(config.feature_dim);
    const std::size_t k = static_cast<std::size_t>(config.num_classes);
    const std::size_t h = static_cast<std::size_t>(config.projection_hidden);
    const std::size_t e = static_cast<std::size_t>(config.projection_out);
    p.set("fc.w", uniform_init(rng, {f, k}, f));
    p.set("fc.b", Tensor::zeros({k}));
    p.set("proj1.w", uniform_init(rng, {f, h}, f));
    p.set("proj1.b", Tensor::zeros({h}));
    p.set("proj2.w", uniform_init(rng, {h, e}, h));
    p.set("proj2.b", Tensor::zeros({e}));
    return p;
}

ParamMap bind_params(const ModelParams& params, Tape& tape) {
    ParamMap bound;
    for (const auto& [name, tensor] : params.tensors) bound.emplace(name, tape.watch(tensor));
    return bound;
}

namespace {

const Tensor& pget(const ParamMap& p, const std::string& name) {
    auto it = p.find(name);
    if (it == p.end()) throw std::invalid_argument("missing parameter '" + name + "'");
    return it->second;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    return add_rows(matmul(x, w), b);
}

}  // namespace

ForwardResult forward(const ModelConfig& config, const ParamMap& params, const Tensor& x) {
    if (x.rank() != 4 || x.dim(1) != static_cast<std::size_t>(config.input_channels) ||
        x.dim(2) != static_cast<std::size_t>(config.input_size) ||
        x.dim(3) != static_cast<std::size_t>(config.input_size))
        throw std::invalid_argument("forward: input " + shape_to_string(x.shape()) +
                                    " does not match configured " +
                                    std::to_string(config.input_channels) + "x" +
                                    std::to_string(config.input_size) + "x" +
                                    std::to_string(config.input_size));

    const auto stages = stage_specs(config);
    Tensor h = x;
    for (std::size_t s = 0; s < stages.size(); ++s) {
        const auto& sp = stages[s];
        const std::string prefix = "stage" + std::to_string(s + 1);
        Tensor y = conv2d(h, pget(params, prefix + ".conv.w"), pget(params, prefix + ".conv.b"),
                          sp.stride, 1);
        if (sp.skip) {
            const Tensor shortcut =
                sp.projected ? conv2d(h, pget(params, prefix + ".short.w"),
                                      pget(params, prefix + ".short.b"), sp.stride, 0)
                             : h;
            y = add(y, shortcut);
        }
        h = relu(y);
    }

    ForwardResult out;
    out.features = global_avg_pool(h);
    out.logits = linear(out.features, pget(params, "fc.w"), pget(params, "fc.b"));
    const Tensor hidden = relu(linear(out.features, pget(params, "proj1.w"), pget(params, "proj1.b")));
    out.embedding = l2_normalize(linear(hidden, pget(params, "proj2.w"), pget(params, "proj2.b")));
    return out;
}

ForwardResult forward(const ModelConfig& config, const ModelParams& params, const Tensor& x) {
    return forward(config, params.tensors, x);
}

TwoStreamResult two_stream_forward(const ModelConfig& config, const ParamMap& params,
                                   const Tensor& view_a, const Tensor& view_b) {
    if (view_a.shape() != view_b.shape())
        throw std::invalid_argument("two_stream_forward: view shapes differ, " +
                                    shape_to_string(view_a.shape()) + " vs " +
                                    shape_to_string(view_b.shape()));
    TwoStreamResult out;
    out.stream_a = forward(config, params, view_a);
    out.stream_b = forward(config, params, view_b);
    return out;
}

}  // namespace sclr
