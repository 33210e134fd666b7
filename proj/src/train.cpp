#include "sclr/train.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sclr/checkpoint.hpp"
#include "sclr/eval.hpp"
#include "sclr/io.hpp"
#include "sclr/rng.hpp"

namespace sclr {

void OptimizerConfig::validate(const std::string& path) const {
    if (!(lr > 0.0)) throw std::invalid_argument(path + ".lr: must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0))
        throw std::invalid_argument(path + ".beta1: must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0))
        throw std::invalid_argument(path + ".beta2: must be in [0, 1)");
    if (!(eps > 0.0)) throw std::invalid_argument(path + ".eps: must be > 0");
}

AdamState init_adam(const ModelParams& params, const OptimizerConfig& config) {
    config.validate();
    AdamState state;
    state.config = config;
    for (const auto& [name, tensor] : params.tensors) {
        AdamState::Moments mom;
        mom.m.assign(tensor.size(), 0.0);
        mom.v.assign(tensor.size(), 0.0);
        state.moments.emplace(name, std::move(mom));
    }
    return state;
}

void adam_step(AdamState& state, ModelParams& params,
               const std::map<std::string, Tensor>& grads) {
    ++state.step;
    const auto& c = state.config;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    for (auto& [name, tensor] : params.tensors) {
        const auto git = grads.find(name);
        if (git == grads.end())
            throw std::invalid_argument("adam_step: missing gradient for '" + name + "'");
        const Tensor& g = git->second;
        if (g.shape() != tensor.shape())
            throw std::invalid_argument("adam_step: gradient shape " +
                                        shape_to_string(g.shape()) + " for '" + name +
                                        "' does not match parameter " +
                                        shape_to_string(tensor.shape()));
        auto& mom = state.moments.at(name);
        std::vector<double> next(tensor.size());
        for (std::size_t i = 0; i < next.size(); ++i) {
            const double gi = g.data()[i];
            mom.m[i] = c.beta1 * mom.m[i] + (1.0 - c.beta1) * gi;
            mom.v[i] = c.beta2 * mom.v[i] + (1.0 - c.beta2) * gi * gi;
            const double m_hat = mom.m[i] / bc1;
            const double v_hat = mom.v[i] / bc2;
            next[i] = tensor.data()[i] - c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
        }
        tensor = Tensor(tensor.shape(), std::move(next));
    }
}

std::string mode_name(TrainMode mode) {
    switch (mode) {
        case TrainMode::baseline: return "baseline";
        case TrainMode::scl_joint: return "scl_joint";
        case TrainMode::margin_joint: return "margin_joint";
        case TrainMode::refined_scl: return "refined_scl";
        case TrainMode::refined_margin: return "refined_margin";
    }
    throw std::logic_error("mode_name: bad mode");
}

TrainMode mode_from_name(const std::string& name) {
    if (name == "baseline") return TrainMode::baseline;
    if (name == "scl_joint") return TrainMode::scl_joint;
    if (name == "margin_joint") return TrainMode::margin_joint;
    if (name == "refined_scl") return TrainMode::refined_scl;
    if (name == "refined_margin") return TrainMode::refined_margin;
    throw std::invalid_argument("mode: unknown value '" + name +
                                "' (expected baseline, scl_joint, margin_joint, refined_scl "
                                "or refined_margin)");
}

bool mode_is_refined(TrainMode mode) {
    return mode == TrainMode::refined_scl || mode == TrainMode::refined_margin;
}

bool mode_uses_margin(TrainMode mode) {
    return mode == TrainMode::margin_joint || mode == TrainMode::refined_margin;
}

void TrainConfig::validate(const std::string& path) const {
    if (epochs < 1) throw std::invalid_argument(path + ".epochs: must be >= 1");
    if (batch_size < 2)
        throw std::invalid_argument(path + ".batch_size: must be >= 2 (contrastive losses "
                                    "need pairs)");
    if (max_steps < 0) throw std::invalid_argument(path + ".max_steps: must be >= 0");
    loss.validate();
    optimizer.validate();
}

namespace {

struct StepLoss {
    double task = 0.0;
    double contrastive = 0.0;
    double total = 0.0;
};

StepLoss train_step(const TrainConfig& config, const ModelConfig& model_config,
                    const DatasetMeta& meta, std::span<const Sample> batch, Rng& data_rng,
                    ModelParams& params, AdamState& adam) {
    const TwoViewBatch views =
        make_two_view_batch(batch, meta.image_size, data_rng, config.augment);
    const Tensor a = normalize_batch(views.view_a, meta);

    Tape tape;
    const ParamMap bound = bind_params(params, tape);

    CombinedLoss combined;
    if (config.mode == TrainMode::baseline) {
        const ForwardResult out = forward(model_config, bound, a);
        const Tensor task = cross_entropy(out.logits, views.labels);
        combined = combine_losses(task, nullptr, 0.0, config.loss.beta);
    } else {
        const Tensor b = normalize_batch(views.view_b, meta);
        const TwoStreamResult out = two_stream_forward(model_config, bound, a, b);
        const Tensor task = scale(add(cross_entropy(out.stream_a.logits, views.labels),
                                      cross_entropy(out.stream_b.logits, views.labels)),
                                  0.5);
        if (config.loss.alpha == 0.0) {
            combined = combine_losses(task, nullptr, 0.0, config.loss.beta);
        } else {
            ContrastiveBatch cb;
            cb.embeddings = concat_rows(out.stream_a.embedding, out.stream_b.embedding);
            cb.labels = views.labels;
            cb.labels.insert(cb.labels.end(), views.labels.begin(), views.labels.end());
            const Tensor contrastive =
                mode_uses_margin(config.mode)
                    ? margin_contrastive_loss(cb, config.loss.m_p, config.loss.m_n)
                    : supervised_contrastive_loss(cb, config.loss.tau);
            combined = combine_losses(task, &contrastive, config.loss.alpha, config.loss.beta);
        }
    }

    tape.backward(combined.total);
    std::map<std::string, Tensor> grads;
    for (const auto& [name, tensor] : bound) grads.emplace(name, tape.grad(tensor));
    adam_step(adam, params, grads);

    return {combined.breakdown.task_loss, combined.breakdown.contrastive_loss,
            combined.breakdown.total_loss};
}

}  // namespace

TrainResult train(const TrainConfig& config, const ModelConfig& model_config,
                  const DatasetMeta& meta, std::span<const Sample> train_split,
                  std::span<const Sample> eval_split, const ModelParams* initial) {
    config.validate();
    model_config.validate();
    if (train_split.empty()) throw std::invalid_argument("train: empty training split");
    if (mode_is_refined(config.mode) && !initial)
        throw std::invalid_argument("train: " + mode_name(config.mode) +
                                    " requires a source checkpoint");

    TrainResult result;
    result.params = initial ? *initial : init_model(model_config, config.seed);
    AdamState adam = init_adam(result.params, config.optimizer);
    Rng data_rng(derive_seed(config.seed, 0xda7aULL));

    std::vector<std::size_t> order(train_split.size());
    std::iota(order.begin(), order.end(), 0);

    int step = 0;
    bool stop = false;
    for (int epoch = 1; epoch <= config.epochs && !stop; ++epoch) {
        data_rng.shuffle(order);
        double task_sum = 0.0, contrastive_sum = 0.0, total_sum = 0.0;
        int steps_this_epoch = 0;
        for (std::size_t start = 0; start < order.size() && !stop;
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t n =
                std::min(static_cast<std::size_t>(config.batch_size), order.size() - start);
            if (n < 2) break;  // contrastive losses need pairs
            std::vector<Sample> batch;
            batch.reserve(n);
            for (std::size_t i = 0; i < n; ++i) batch.push_back(train_split[order[start + i]]);

            const StepLoss loss =
                train_step(config, model_config, meta, batch, data_rng, result.params, adam);
            task_sum += loss.task;
            contrastive_sum += loss.contrastive;
            total_sum += loss.total;
            ++steps_this_epoch;
            ++step;
            if (config.max_steps > 0 && step >= config.max_steps) stop = true;
        }
        if (steps_this_epoch == 0) break;
        EpochRecord rec;
        rec.epoch = epoch;
        rec.task_loss = task_sum / steps_this_epoch;
        rec.contrastive_loss = contrastive_sum / steps_this_epoch;
        rec.total_loss = total_sum / steps_this_epoch;
        rec.clean_accuracy = eval_split.empty()
                                 ? clean_accuracy(model_config, result.params, train_split, meta)
                                 : clean_accuracy(model_config, result.params, eval_split, meta);
        result.history.push_back(rec);
    }
    return result;
}

SuiteResult run_suite(const TrainConfig& base, const ModelConfig& model_config,
                      const DatasetMeta& meta, std::span<const Sample> train_split,
                      std::span<const Sample> eval_split,
                      const std::filesystem::path& out_dir) {
    struct Run {
        std::string name;
        TrainMode mode;
        bool augment;
    };
    const std::vector<Run> runs = {
        {"baseline_aug", TrainMode::baseline, true},
        {"baseline_noaug", TrainMode::baseline, false},
        {"scl_aug", TrainMode::scl_joint, true},
        {"scl_noaug", TrainMode::scl_joint, false},
        {"margin_aug", TrainMode::margin_joint, true},
        {"margin_noaug", TrainMode::margin_joint, false},
        {"refined_scl", TrainMode::refined_scl, false},
        {"refined_margin", TrainMode::refined_margin, false},
    };

    std::filesystem::create_directories(out_dir);
    SuiteResult result;
    ModelParams baseline_noaug_params;
    bool have_baseline = false;
    for (const Run& run : runs) {
        TrainConfig config = base;
        config.mode = run.mode;
        config.augment = run.augment;
        const ModelParams* initial = nullptr;
        if (mode_is_refined(run.mode)) {
            if (!have_baseline)
                throw std::logic_error("run_suite: refined run scheduled before its baseline");
            initial = &baseline_noaug_params;
        }
        TrainResult trained;
        try {
            trained = train(config, model_config, meta, train_split, eval_split, initial);
        } catch (const std::exception& e) {
            throw std::runtime_error("suite run '" + run.name + "' failed: " + e.what());
        }
        if (run.name == "baseline_noaug") {
            baseline_noaug_params = trained.params;
            have_baseline = true;
        }
        const auto csv = out_dir / ("metrics_" + run.name + ".csv");
        write_metrics_csv(csv, trained.history);
        save_checkpoint(out_dir / (run.name + ".ckpt"), trained.params, model_config);
        result.names.push_back(run.name);
        result.csv_paths.push_back(csv);
    }
    return result;
}

}  // namespace sclr
