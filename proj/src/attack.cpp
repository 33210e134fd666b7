#include "sclr/attack.hpp"

#include <algorithm>
#include <stdexcept>

#include "sclr/eval.hpp"
#include "sclr/losses.hpp"

namespace sclr {

void AttackConfig::validate(const std::string& path) const {
    double prev = 0.0;
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        if (!(epsilons[i] > 0.0))
            throw std::invalid_argument(path + ".epsilons: values must be > 0");
        if (i > 0 && epsilons[i] <= prev)
            throw std::invalid_argument(path +
                                        ".epsilons: values must be strictly ascending");
        prev = epsilons[i];
    }
}

FgsmResult fgsm_step(const Tensor& x, const Tensor& grad, double epsilon) {
    if (!(epsilon > 0.0))
        throw std::invalid_argument("fgsm: epsilon must be > 0, got " + std::to_string(epsilon));
    if (x.shape() != grad.shape())
        throw std::invalid_argument("fgsm: gradient shape " + shape_to_string(grad.shape()) +
                                    " does not match input " + shape_to_string(x.shape()));
    const std::size_t n = x.size();
    std::vector<double> delta(n), adv(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grad.data()[i];
        const double s = g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
        delta[i] = epsilon * s;
        adv[i] = x.data()[i] + delta[i];
    }
    FgsmResult res;
    res.delta = Tensor(x.shape(), std::move(delta));
    res.x_adv = Tensor(x.shape(), std::move(adv));
    return res;
}

FgsmResult fgsm(const ModelConfig& config, const ModelParams& params, const Tensor& x,
                const std::vector<int>& labels, double epsilon, bool clamp,
                const DatasetMeta* meta) {
    if (clamp && !meta)
        throw std::invalid_argument("fgsm: clamp_to_domain requires dataset meta");

    Tape tape;
    const Tensor xt = tape.watch(x);
    const ForwardResult out = forward(config, params.tensors, xt);
    const Tensor loss = cross_entropy(out.logits, labels);
    tape.backward(loss);

    FgsmResult res = fgsm_step(x, tape.grad(xt), epsilon);
    if (clamp) {
        const auto lo = meta->domain_lo();
        const auto hi = meta->domain_hi();
        const std::size_t plane = x.dim(2) * x.dim(3);
        std::vector<double> adv = res.x_adv.data();
        for (std::size_t b = 0; b < x.dim(0); ++b)
            for (std::size_t c = 0; c < x.dim(1); ++c) {
                const std::size_t base = (b * x.dim(1) + c) * plane;
                for (std::size_t i = 0; i < plane; ++i)
                    adv[base + i] = std::clamp(adv[base + i], lo[c], hi[c]);
            }
        res.x_adv = Tensor(x.shape(), std::move(adv));
    }
    return res;
}

std::vector<std::pair<double, double>> epsilon_sweep(const ModelConfig& config,
                                                     const ModelParams& params,
                                                     std::span<const Sample> dataset,
                                                     const DatasetMeta& meta,
                                                     const AttackConfig& attack) {
    if (dataset.empty()) throw std::invalid_argument("epsilon_sweep: empty dataset");
    attack.validate();
    std::vector<std::pair<double, double>> rows;
    rows.emplace_back(0.0, clean_accuracy(config, params, dataset, meta));
    for (double eps : attack.epsilons)
        rows.emplace_back(eps, adversarial_accuracy(config, params, dataset, meta, eps,
                                                    attack.clamp_to_domain));
    return rows;
}

}  // namespace sclr
