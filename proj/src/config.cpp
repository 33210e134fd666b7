#include "sclr/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sclr/errors.hpp"
#include "sclr/io.hpp"

namespace sclr {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::string& path,
                         const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key))
            throw ConfigError("config: unknown key '" + key + "'" +
                              (path.empty() ? "" : " in " + path));
}

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

template <class T>
void read_field(const json& obj, const std::string& path, const std::string& key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(join(path, key) + ": wrong type");
    }
}

void parse_dataset(const json& obj, DatasetConfig& out) {
    reject_unknown_keys(obj, "dataset",
                        {"kind", "num_classes", "per_class", "test_per_class", "image_size",
                         "noise_sigma", "seed", "dir"});
    read_field(obj, "dataset", "kind", out.kind);
    if (out.kind != "blobs" && out.kind != "cifar100")
        throw ConfigError("dataset.kind: expected 'blobs' or 'cifar100', got '" + out.kind + "'");
    read_field(obj, "dataset", "num_classes", out.num_classes);
    read_field(obj, "dataset", "per_class", out.per_class);
    read_field(obj, "dataset", "test_per_class", out.test_per_class);
    read_field(obj, "dataset", "image_size", out.image_size);
    read_field(obj, "dataset", "noise_sigma", out.noise_sigma);
    read_field(obj, "dataset", "seed", out.seed);
    read_field(obj, "dataset", "dir", out.dir);
    if (out.kind == "blobs") {
        if (out.num_classes < 2) throw ConfigError("dataset.num_classes: must be >= 2");
        if (out.per_class < 1) throw ConfigError("dataset.per_class: must be >= 1");
        if (out.test_per_class < 0) throw ConfigError("dataset.test_per_class: must be >= 0");
        if (out.image_size < 1) throw ConfigError("dataset.image_size: must be >= 1");
        if (out.noise_sigma < 0.0) throw ConfigError("dataset.noise_sigma: must be >= 0");
    } else if (out.dir.empty()) {
        throw ConfigError("dataset.dir: required for kind 'cifar100'");
    }
}

void parse_model(const json& obj, ModelConfig& out) {
    reject_unknown_keys(obj, "model",
                        {"input_channels", "input_size", "channel_widths", "use_residual",
                         "feature_dim", "projection_hidden", "projection_out", "num_classes"});
    read_field(obj, "model", "input_channels", out.input_channels);
    read_field(obj, "model", "input_size", out.input_size);
    bool widths_given = obj.contains("channel_widths");
    read_field(obj, "model", "channel_widths", out.channel_widths);
    read_field(obj, "model", "use_residual", out.use_residual);
    if (widths_given && !obj.contains("feature_dim") && !out.channel_widths.empty())
        out.feature_dim = out.channel_widths.back();
    read_field(obj, "model", "feature_dim", out.feature_dim);
    if (widths_given && !obj.contains("projection_hidden") && !out.channel_widths.empty())
        out.projection_hidden = out.channel_widths.back();
    read_field(obj, "model", "projection_hidden", out.projection_hidden);
    read_field(obj, "model", "projection_out", out.projection_out);
    read_field(obj, "model", "num_classes", out.num_classes);
}

void parse_loss(const json& obj, LossConfig& out) {
    reject_unknown_keys(obj, "loss", {"tau", "m_p", "m_n", "alpha", "beta"});
    read_field(obj, "loss", "tau", out.tau);
    read_field(obj, "loss", "m_p", out.m_p);
    read_field(obj, "loss", "m_n", out.m_n);
    read_field(obj, "loss", "alpha", out.alpha);
    read_field(obj, "loss", "beta", out.beta);
    try {
        out.validate("loss");
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

void parse_optimizer(const json& obj, OptimizerConfig& out) {
    reject_unknown_keys(obj, "optimizer", {"lr", "beta1", "beta2", "eps"});
    read_field(obj, "optimizer", "lr", out.lr);
    read_field(obj, "optimizer", "beta1", out.beta1);
    read_field(obj, "optimizer", "beta2", out.beta2);
    read_field(obj, "optimizer", "eps", out.eps);
    try {
        out.validate("optimizer");
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

void parse_train(const json& obj, RunConfig& out) {
    reject_unknown_keys(obj, "train", {"epochs", "batch_size", "max_steps", "seed"});
    read_field(obj, "train", "epochs", out.epochs);
    read_field(obj, "train", "batch_size", out.batch_size);
    read_field(obj, "train", "max_steps", out.max_steps);
    read_field(obj, "train", "seed", out.seed);
    if (out.epochs < 1) throw ConfigError("train.epochs: must be >= 1");
    if (out.batch_size < 2) throw ConfigError("train.batch_size: must be >= 2");
    if (out.max_steps < 0) throw ConfigError("train.max_steps: must be >= 0");
}

void parse_attack(const json& obj, AttackConfig& out) {
    reject_unknown_keys(obj, "attack", {"epsilons", "clamp"});
    read_field(obj, "attack", "epsilons", out.epsilons);
    read_field(obj, "attack", "clamp", out.clamp_to_domain);
    try {
        out.validate("attack");
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace

TrainConfig RunConfig::to_train_config() const {
    TrainConfig t;
    t.mode = mode_from_name(mode);
    t.augment = augment;
    t.epochs = epochs;
    t.batch_size = batch_size;
    t.max_steps = max_steps;
    t.loss = loss;
    t.optimizer = optimizer;
    t.seed = seed;
    return t;
}

RunConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config: top level must be an object");
    reject_unknown_keys(root, "",
                        {"mode", "augment", "dataset", "model", "loss", "optimizer", "train",
                         "attack"});
    if (!root.contains("mode")) throw ConfigError("mode: required");
    if (!root.contains("dataset")) throw ConfigError("dataset: required");

    RunConfig out;
    read_field(root, "", "mode", out.mode);
    try {
        mode_from_name(out.mode);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    read_field(root, "", "augment", out.augment);
    parse_dataset(root.at("dataset"), out.dataset);

    // model geometry follows the dataset unless given explicitly
    const bool cifar = out.dataset.kind == "cifar100";
    out.model.input_size = cifar ? 32 : out.dataset.image_size;
    out.model.num_classes = cifar ? 100 : out.dataset.num_classes;
    if (root.contains("model")) parse_model(root.at("model"), out.model);
    try {
        out.model.validate("model");
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const int data_classes = cifar ? 100 : out.dataset.num_classes;
    if (out.model.num_classes != data_classes)
        throw ConfigError("model.num_classes: " + std::to_string(out.model.num_classes) +
                          " does not match the dataset's " + std::to_string(data_classes));
    const int data_size = cifar ? 32 : out.dataset.image_size;
    if (out.model.input_size != data_size)
        throw ConfigError("model.input_size: " + std::to_string(out.model.input_size) +
                          " does not match the dataset's " + std::to_string(data_size));

    if (root.contains("loss")) parse_loss(root.at("loss"), out.loss);
    if (root.contains("optimizer")) parse_optimizer(root.at("optimizer"), out.optimizer);
    if (root.contains("train")) parse_train(root.at("train"), out);
    if (root.contains("attack")) parse_attack(root.at("attack"), out.attack);
    return out;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
    json root;
    root["mode"] = c.mode;
    root["augment"] = c.augment;
    json ds;
    ds["kind"] = c.dataset.kind;
    if (c.dataset.kind == "blobs") {
        ds["num_classes"] = c.dataset.num_classes;
        ds["per_class"] = c.dataset.per_class;
        ds["test_per_class"] = c.dataset.test_per_class;
        ds["image_size"] = c.dataset.image_size;
        ds["noise_sigma"] = c.dataset.noise_sigma;
        ds["seed"] = c.dataset.seed;
    } else {
        ds["dir"] = c.dataset.dir;
    }
    root["dataset"] = ds;
    root["model"] = {{"input_channels", c.model.input_channels},
                     {"input_size", c.model.input_size},
                     {"channel_widths", c.model.channel_widths},
                     {"use_residual", c.model.use_residual},
                     {"feature_dim", c.model.feature_dim},
                     {"projection_hidden", c.model.projection_hidden},
                     {"projection_out", c.model.projection_out},
                     {"num_classes", c.model.num_classes}};
    root["loss"] = {{"tau", c.loss.tau},
                    {"m_p", c.loss.m_p},
                    {"m_n", c.loss.m_n},
                    {"alpha", c.loss.alpha},
                    {"beta", c.loss.beta}};
    root["optimizer"] = {{"lr", c.optimizer.lr},
                         {"beta1", c.optimizer.beta1},
                         {"beta2", c.optimizer.beta2},
                         {"eps", c.optimizer.eps}};
    root["train"] = {{"epochs", c.epochs},
                     {"batch_size", c.batch_size},
                     {"max_steps", c.max_steps},
                     {"seed", c.seed}};
    root["attack"] = {{"epsilons", c.attack.epsilons}, {"clamp", c.attack.clamp_to_domain}};
    return root.dump(2) + "\n";
}

LoadedDataset load_dataset(const DatasetConfig& config) {
    LoadedDataset out;
    if (config.kind == "blobs") {
        const int total_per_class = config.per_class + config.test_per_class;
        const BlobDataset blobs =
            synthesize_blobs(config.num_classes, total_per_class,
                             static_cast<std::size_t>(config.image_size), config.noise_sigma,
                             config.seed);
        // class-major generation: the first per_class samples of each class
        // form the train split, the rest the test split
        for (int k = 0; k < config.num_classes; ++k) {
            const std::size_t base = static_cast<std::size_t>(k) * total_per_class;
            for (int i = 0; i < config.per_class; ++i)
                out.train_split.push_back(blobs.samples[base + static_cast<std::size_t>(i)]);
            for (int i = config.per_class; i < total_per_class; ++i)
                out.test_split.push_back(blobs.samples[base + static_cast<std::size_t>(i)]);
        }
        out.meta = compute_meta("blobs", config.num_classes,
                                static_cast<std::size_t>(config.image_size), out.train_split);
        out.meta.test_count = out.test_split.size();
    } else {
        const std::filesystem::path dir = config.dir;
        out.train_split = load_cifar100(dir / "train.bin", Cifar100Split::train);
        out.test_split = load_cifar100(dir / "test.bin", Cifar100Split::test);
        out.meta = compute_meta("cifar100", 100, kCifarImageSize, out.train_split);
        out.meta.test_count = out.test_split.size();
    }
    return out;
}

}  // namespace sclr
