#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "sclr/eval.hpp"
#include "sclr/train.hpp"

namespace sclr {

// Shortest round-trippable decimal form of v (no timestamps or locale state
// anywhere in these files; identical inputs give byte-identical output).
std::string format_double(double v);

// Header: epoch,task_loss,contrastive_loss,total_loss,clean_accuracy
void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<EpochRecord>& history);

// Header: epsilon,accuracy (the epsilon = 0 row comes first)
void write_attack_csv(const std::filesystem::path& path,
                      const std::vector<std::pair<double, double>>& sweep);

// Sweep rows followed by a blank line and a key,value summary block.
void write_eval_report(const std::filesystem::path& path, const EvalReport& report);

}  // namespace sclr
