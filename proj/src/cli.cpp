#include "sclr/cli.hpp"

#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "sclr/attack.hpp"
#include "sclr/checkpoint.hpp"
#include "sclr/config.hpp"
#include "sclr/errors.hpp"
#include "sclr/eval.hpp"
#include "sclr/io.hpp"
#include "sclr/train.hpp"

namespace sclr::cli {

namespace {

namespace fs = std::filesystem;

struct CommonArgs {
    std::string config_path;
    std::string out;
    std::string from;
    std::string ckpt;
    std::string eps_list;
};

std::vector<double> parse_eps_list(const std::string& text) {
    std::vector<double> eps;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::string tok = text.substr(start, comma == std::string::npos
                                                       ? std::string::npos
                                                       : comma - start);
        if (tok.empty()) throw ConfigError("--eps: empty value in list '" + text + "'");
        try {
            std::size_t used = 0;
            eps.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ConfigError("--eps: '" + tok + "' is not a number");
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return eps;
}

int cmd_train(const CommonArgs& args, bool refine) {
    const RunConfig config = load_config_file(args.config_path);
    TrainConfig tc = config.to_train_config();
    if (refine && !mode_is_refined(tc.mode))
        throw ConfigError("mode: refine requires refined_scl or refined_margin, got '" +
                          config.mode + "'");
    if (!refine && mode_is_refined(tc.mode))
        throw ConfigError("mode: '" + config.mode + "' needs the refine subcommand "
                          "(a --from checkpoint)");

    const LoadedDataset data = load_dataset(config.dataset);
    std::optional<ModelParams> initial;
    if (refine) initial = load_checkpoint(args.from, config.model);

    const TrainResult result = train(tc, config.model, data.meta, data.train_split,
                                     data.test_split, initial ? &*initial : nullptr);

    const fs::path out_dir = args.out;
    fs::create_directories(out_dir);
    save_checkpoint(out_dir / "model.ckpt", result.params, config.model);
    write_metrics_csv(out_dir / "metrics.csv", result.history);
    std::cout << (out_dir / "model.ckpt").string() << "\n"
              << (out_dir / "metrics.csv").string() << "\n";
    return kExitOk;
}

int cmd_attack(const CommonArgs& args) {
    const RunConfig config = load_config_file(args.config_path);
    AttackConfig attack = config.attack;
    if (!args.eps_list.empty()) {
        attack.epsilons = parse_eps_list(args.eps_list);
        try {
            attack.validate("--eps");
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    const LoadedDataset data = load_dataset(config.dataset);
    const ModelParams params = load_checkpoint(args.ckpt, config.model);
    const auto sweep =
        epsilon_sweep(config.model, params, data.test_split, data.meta, attack);
    write_attack_csv(args.out, sweep);
    std::cout << args.out << "\n";
    return kExitOk;
}

int cmd_eval(const CommonArgs& args) {
    const RunConfig config = load_config_file(args.config_path);
    const LoadedDataset data = load_dataset(config.dataset);
    const ModelParams params = load_checkpoint(args.ckpt, config.model);
    const EvalReport report = evaluate(config.model, params, data.test_split, data.meta,
                                       config.attack.epsilons, config.attack.clamp_to_domain);
    write_eval_report(args.out, report);
    std::cout << args.out << "\n";
    return kExitOk;
}

int cmd_suite(const CommonArgs& args) {
    const RunConfig config = load_config_file(args.config_path);
    const LoadedDataset data = load_dataset(config.dataset);
    const SuiteResult result = run_suite(config.to_train_config(), config.model, data.meta,
                                         data.train_split, data.test_split, args.out);
    for (const auto& p : result.csv_paths) std::cout << p.string() << "\n";
    return kExitOk;
}

int cmd_gen_data(const CommonArgs& args) {
    const RunConfig config = load_config_file(args.config_path);
    if (config.dataset.kind != "blobs")
        throw ConfigError("dataset.kind: gen-data requires 'blobs'");
    if (config.dataset.image_size != static_cast<int>(kCifarImageSize))
        throw ConfigError("dataset.image_size: binary fixtures use the 3074-byte record "
                          "format and need image_size 32, got " +
                          std::to_string(config.dataset.image_size));
    const LoadedDataset data = load_dataset(config.dataset);
    std::vector<Sample> all = data.train_split;
    all.insert(all.end(), data.test_split.begin(), data.test_split.end());
    if (fs::path(args.out).has_parent_path())
        fs::create_directories(fs::path(args.out).parent_path());
    write_cifar_records(args.out, all);
    std::cout << args.out << "\n";
    return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
    CLI::App app{"supervised-contrastive robustness lab"};
    app.require_subcommand(1);

    CommonArgs a;

    auto* train_cmd = app.add_subcommand("train", "train a model from scratch");
    train_cmd->add_option("--config", a.config_path, "run config JSON")->required();
    train_cmd->add_option("--out", a.out, "output directory")->required();

    auto* refine_cmd = app.add_subcommand("refine", "continue from a checkpoint with a "
                                                    "combined objective");
    refine_cmd->add_option("--config", a.config_path, "run config JSON")->required();
    refine_cmd->add_option("--from", a.from, "source checkpoint")->required();
    refine_cmd->add_option("--out", a.out, "output directory")->required();

    auto* attack_cmd = app.add_subcommand("attack", "FGSM epsilon sweep");
    attack_cmd->add_option("--config", a.config_path, "run config JSON")->required();
    attack_cmd->add_option("--ckpt", a.ckpt, "model checkpoint")->required();
    attack_cmd->add_option("--out", a.out, "output CSV")->required();
    attack_cmd->add_option("--eps", a.eps_list, "comma-separated epsilon override");

    auto* eval_cmd = app.add_subcommand("eval", "clean + adversarial accuracy and "
                                                "embedding stats");
    eval_cmd->add_option("--config", a.config_path, "run config JSON")->required();
    eval_cmd->add_option("--ckpt", a.ckpt, "model checkpoint")->required();
    eval_cmd->add_option("--out", a.out, "output report CSV")->required();

    auto* suite_cmd = app.add_subcommand("suite", "the eight-configuration protocol");
    suite_cmd->add_option("--config", a.config_path, "run config JSON")->required();
    suite_cmd->add_option("--out", a.out, "output directory")->required();

    auto* gen_cmd = app.add_subcommand("gen-data", "write a blobs fixture in the binary "
                                                   "record format");
    gen_cmd->add_option("--config", a.config_path, "run config JSON")->required();
    gen_cmd->add_option("--out", a.out, "output .bin file")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (train_cmd->parsed()) return cmd_train(a, false);
        if (refine_cmd->parsed()) return cmd_train(a, true);
        if (attack_cmd->parsed()) return cmd_attack(a);
        if (eval_cmd->parsed()) return cmd_eval(a);
        if (suite_cmd->parsed()) return cmd_suite(a);
        if (gen_cmd->parsed()) return cmd_gen_data(a);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    std::cerr << "error: no subcommand\n";
    return kExitUsage;
}

}  // namespace sclr::cli
