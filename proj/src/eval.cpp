#include "sclr/eval.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sclr/attack.hpp"
#include "sclr/rng.hpp"

namespace sclr {

namespace {

Tensor raw_batch(std::span<const Sample> samples, std::size_t image_size) {
    const std::size_t elems = 3 * image_size * image_size;
    std::vector<double> data(samples.size() * elems);
    for (std::size_t i = 0; i < samples.size(); ++i)
        std::copy(samples[i].image.begin(), samples[i].image.end(), data.begin() + i * elems);
    return Tensor({samples.size(), 3, image_size, image_size}, std::move(data));
}

std::vector<int> batch_labels(std::span<const Sample> samples) {
    std::vector<int> labels;
    labels.reserve(samples.size());
    for (const Sample& s : samples) labels.push_back(s.fine_label);
    return labels;
}

std::size_t count_correct(const Tensor& logits, const std::vector<int>& labels) {
    const std::size_t b_n = logits.dim(0), k_n = logits.dim(1);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < b_n; ++i) {
        const double* row = logits.data().data() + i * k_n;
        std::size_t best = 0;
        for (std::size_t k = 1; k < k_n; ++k)
            if (row[k] > row[best]) best = k;
        if (static_cast<int>(best) == labels[i]) ++correct;
    }
    return correct;
}

double accuracy_over(const ModelConfig& config, const ModelParams& params,
                     std::span<const Sample> dataset, const DatasetMeta& meta,
                     double epsilon, bool clamp, std::size_t batch_size) {
    if (dataset.empty()) throw std::invalid_argument("accuracy: empty dataset");
    std::size_t correct = 0;
    for (std::size_t start = 0; start < dataset.size(); start += batch_size) {
        const std::size_t n = std::min(batch_size, dataset.size() - start);
        const auto chunk = dataset.subspan(start, n);
        const Tensor x = normalize_batch(raw_batch(chunk, meta.image_size), meta);
        const std::vector<int> labels = batch_labels(chunk);
        Tensor input = x;
        if (epsilon > 0.0)
            input = fgsm(config, params, x, labels, epsilon, clamp, &meta).x_adv;
        const ForwardResult out = forward(config, params, input);
        correct += count_correct(out.logits, labels);
    }
    return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

}  // namespace

double clean_accuracy(const ModelConfig& config, const ModelParams& params,
                      std::span<const Sample> dataset, const DatasetMeta& meta,
                      std::size_t batch_size) {
    return accuracy_over(config, params, dataset, meta, 0.0, false, batch_size);
}

double adversarial_accuracy(const ModelConfig& config, const ModelParams& params,
                            std::span<const Sample> dataset, const DatasetMeta& meta,
                            double epsilon, bool clamp, std::size_t batch_size) {
    if (epsilon < 0.0)
        throw std::invalid_argument("adversarial_accuracy: epsilon must be >= 0, got " +
                                    std::to_string(epsilon));
    return accuracy_over(config, params, dataset, meta, epsilon, clamp, batch_size);
}

EmbeddingStats embedding_stats(const ModelConfig& config, const ModelParams& params,
                               std::span<const Sample> dataset, const DatasetMeta& meta,
                               std::size_t max_samples, std::uint64_t seed,
                               std::size_t batch_size) {
    if (dataset.empty()) throw std::invalid_argument("embedding_stats: empty dataset");

    std::vector<std::size_t> indices(dataset.size());
    std::iota(indices.begin(), indices.end(), 0);
    if (dataset.size() > max_samples) {
        Rng rng(derive_seed(seed, 0xe1b5aULL));
        rng.shuffle(indices);
        indices.resize(max_samples);
    }

    const std::size_t n = indices.size();
    const std::size_t d = static_cast<std::size_t>(config.projection_out);
    std::vector<double> emb(n * d);
    std::vector<int> labels(n);
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t count = std::min(batch_size, n - start);
        std::vector<Sample> chunk;
        chunk.reserve(count);
        for (std::size_t i = 0; i < count; ++i) chunk.push_back(dataset[indices[start + i]]);
        const Tensor x = normalize_batch(raw_batch(chunk, meta.image_size), meta);
        const ForwardResult out = forward(config, params, x);
        std::copy(out.embedding.data().begin(), out.embedding.data().end(),
                  emb.begin() + start * d);
        for (std::size_t i = 0; i < count; ++i)
            labels[start + i] = chunk[i].fine_label;
    }

    // Per-anchor partial sums combined in ascending anchor order keep the
    // reduction independent of any batching above.
    double intra_sum = 0.0, inter_sum = 0.0;
    std::size_t intra_n = 0, inter_n = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double row_intra = 0.0, row_inter = 0.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double* a = emb.data() + i * d;
            const double* b = emb.data() + j * d;
            double dot = 0.0, na = 0.0, nb = 0.0;
            for (std::size_t t = 0; t < d; ++t) {
                dot += a[t] * b[t];
                na += a[t] * a[t];
                nb += b[t] * b[t];
            }
            const double cos = dot / (std::sqrt(na) * std::sqrt(nb));
            if (labels[i] == labels[j]) {
                row_intra += cos;
                ++intra_n;
            } else {
                row_inter += cos;
                ++inter_n;
            }
        }
        intra_sum += row_intra;
        inter_sum += row_inter;
    }
    if (intra_n == 0 || inter_n == 0)
        throw std::invalid_argument("embedding_stats: need at least one same-class and one "
                                    "cross-class pair");
    EmbeddingStats stats;
    stats.mean_intra = intra_sum / static_cast<double>(intra_n);
    stats.mean_inter = inter_sum / static_cast<double>(inter_n);
    stats.gap = stats.mean_intra - stats.mean_inter;
    return stats;
}

EvalReport evaluate(const ModelConfig& config, const ModelParams& params,
                    std::span<const Sample> dataset, const DatasetMeta& meta,
                    const std::vector<double>& epsilons, bool clamp) {
    EvalReport report;
    report.clean_accuracy = clean_accuracy(config, params, dataset, meta);
    report.adversarial.emplace_back(0.0, report.clean_accuracy);
    for (double eps : epsilons)
        report.adversarial.emplace_back(
            eps, adversarial_accuracy(config, params, dataset, meta, eps, clamp));
    report.embedding = embedding_stats(config, params, dataset, meta);
    return report;
}

}  // namespace sclr
