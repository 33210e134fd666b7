#include "sclr/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "sclr/errors.hpp"

namespace sclr {

std::string format_double(double v) {
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        double parsed = 0.0;
        std::sscanf(buf, "%lf", &parsed);
        if (parsed == v) break;
    }
    return buf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    return out;
}

}  // namespace

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<EpochRecord>& history) {
    auto out = open_out(path);
    out << "epoch,task_loss,contrastive_loss,total_loss,clean_accuracy\n";
    for (const EpochRecord& r : history)
        out << r.epoch << ',' << format_double(r.task_loss) << ','
            << format_double(r.contrastive_loss) << ',' << format_double(r.total_loss) << ','
            << format_double(r.clean_accuracy) << '\n';
    if (!out) throw IoError("short write to '" + path.string() + "'");
}

void write_attack_csv(const std::filesystem::path& path,
                      const std::vector<std::pair<double, double>>& sweep) {
    auto out = open_out(path);
    out << "epsilon,accuracy\n";
    for (const auto& [eps, acc] : sweep)
        out << format_double(eps) << ',' << format_double(acc) << '\n';
    if (!out) throw IoError("short write to '" + path.string() + "'");
}

void write_eval_report(const std::filesystem::path& path, const EvalReport& report) {
    auto out = open_out(path);
    out << "epsilon,accuracy\n";
    for (const auto& [eps, acc] : report.adversarial)
        out << format_double(eps) << ',' << format_double(acc) << '\n';
    out << "\nkey,value\n";
    out << "clean_accuracy," << format_double(report.clean_accuracy) << '\n';
    out << "mean_intra_cosine," << format_double(report.embedding.mean_intra) << '\n';
    out << "mean_inter_cosine," << format_double(report.embedding.mean_inter) << '\n';
    out << "embedding_gap," << format_double(report.embedding.gap) << '\n';
    if (!out) throw IoError("short write to '" + path.string() + "'");
}

}  // namespace sclr
