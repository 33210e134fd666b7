#pragma once

#include <vector>

#include "sclr/tensor.hpp"

namespace sclr {

// Unit-norm embeddings (rows of `embeddings`, N x d) with their class labels.
// The positive / negative / anchor-complement sets are derived from the
// labels inside the loss ops.
struct ContrastiveBatch {
    Tensor embeddings;
    std::vector<int> labels;
};

struct LossConfig {
    double tau = 0.07;
    double m_p = 0.5;
    double m_n = 0.1;
    double alpha = 0.5;
    double beta = 0.5;

    void validate(const std::string& path = "loss") const;
};

struct LossBreakdown {
    double task_loss = 0.0;
    double contrastive_loss = 0.0;
    double total_loss = 0.0;
};

enum class ContrastiveKind { scl, margin };

// S[i][j] = z_i . z_j / (|z_i| |z_j|); symmetric, unit diagonal.
Tensor cosine_similarity_matrix(const Tensor& z);

// Mean over rows of -log softmax(logits)[label], max-shifted for stability.
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels);

// Anchors with no in-batch positive contribute 0; the outer divisor stays N.
Tensor supervised_contrastive_loss(const ContrastiveBatch& batch, double tau);

// Per anchor: mean positive hinge max(0, m_p - sim) plus mean negative hinge
// max(0, sim - m_n); empty sets contribute 0.
Tensor margin_contrastive_loss(const ContrastiveBatch& batch, double m_p, double m_n);

struct CombinedLoss {
    Tensor total;
    LossBreakdown breakdown;
};

// total = alpha * contrastive + beta * task. `contrastive` may be null when
// the contrastive side is weighted out (alpha == 0).
CombinedLoss combine_losses(const Tensor& task, const Tensor* contrastive,
                            double alpha, double beta);

CombinedLoss combined_loss(ContrastiveKind kind, const Tensor& logits,
                           const ContrastiveBatch& batch, const LossConfig& config);

}  // namespace sclr
