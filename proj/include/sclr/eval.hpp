#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "sclr/data.hpp"
#include "sclr/model.hpp"

namespace sclr {

struct EmbeddingStats {
    double mean_intra = 0.0;  // mean cosine over same-class pairs (i < j)
    double mean_inter = 0.0;  // mean cosine over cross-class pairs (i < j)
    double gap = 0.0;         // mean_intra - mean_inter
};

struct EvalReport {
    double clean_accuracy = 0.0;
    std::vector<std::pair<double, double>> adversarial;  // (epsilon, accuracy)
    EmbeddingStats embedding;
};

// Fraction of samples whose argmax logit (lowest index on ties) equals the
// fine label; inputs are normalized, never augmented.
double clean_accuracy(const ModelConfig& config, const ModelParams& params,
                      std::span<const Sample> dataset, const DatasetMeta& meta,
                      std::size_t batch_size = 256);

// epsilon == 0 runs the clean path exactly.
double adversarial_accuracy(const ModelConfig& config, const ModelParams& params,
                            std::span<const Sample> dataset, const DatasetMeta& meta,
                            double epsilon, bool clamp = false, std::size_t batch_size = 256);

// Pairwise cosine statistics over at most `max_samples` embeddings, subsampled
// deterministically by seed when the split is larger.
EmbeddingStats embedding_stats(const ModelConfig& config, const ModelParams& params,
                               std::span<const Sample> dataset, const DatasetMeta& meta,
                               std::size_t max_samples = 2000, std::uint64_t seed = 0,
                               std::size_t batch_size = 256);

EvalReport evaluate(const ModelConfig& config, const ModelParams& params,
                    std::span<const Sample> dataset, const DatasetMeta& meta,
                    const std::vector<double>& epsilons, bool clamp = false);

}  // namespace sclr
