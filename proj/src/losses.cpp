#include "sclr/losses.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

namespace sclr {

void LossConfig::validate(const std::string& path) const {
    if (!(tau > 0.0)) throw std::invalid_argument(path + ".tau: must be > 0");
    if (!(m_p > 0.0 && m_p <= 1.0))
        throw std::invalid_argument(path + ".m_p: must be in (0, 1]");
    if (!(m_n >= 0.0 && m_n < 1.0))
        throw std::invalid_argument(path + ".m_n: must be in [0, 1)");
    if (!(m_p > m_n)) throw std::invalid_argument(path + ".m_p: must exceed " + path + ".m_n");
    if (alpha < 0.0) throw std::invalid_argument(path + ".alpha: must be >= 0");
    if (beta < 0.0) throw std::invalid_argument(path + ".beta: must be >= 0");
    if (!(alpha + beta > 0.0))
        throw std::invalid_argument(path + ": alpha + beta must be > 0");
}

Tensor cosine_similarity_matrix(const Tensor& z) {
    if (z.rank() != 2)
        throw std::invalid_argument("cosine_similarity_matrix: expected rank-2 tensor, got " +
                                    shape_to_string(z.shape()));
    const Tensor u = l2_normalize(z);
    return matmul(u, transpose(u));
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2)
        throw std::invalid_argument("cross_entropy: expected rank-2 logits, got " +
                                    shape_to_string(logits.shape()));
    const std::size_t b_n = logits.dim(0), k_n = logits.dim(1);
    if (labels.size() != b_n)
        throw std::invalid_argument("cross_entropy: " + std::to_string(labels.size()) +
                                    " labels for " + std::to_string(b_n) + " rows");
    for (std::size_t i = 0; i < b_n; ++i)
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k_n)
            throw std::invalid_argument("cross_entropy: label " + std::to_string(labels[i]) +
                                        " out of range [0, " + std::to_string(k_n) + ")");

    const double inv_b = 1.0 / static_cast<double>(b_n);
    double loss = 0.0;
    for (std::size_t i = 0; i < b_n; ++i) {
        const double* row = logits.data().data() + i * k_n;
        double m = row[0];
        for (std::size_t k = 1; k < k_n; ++k) m = std::max(m, row[k]);
        double s = 0.0;
        for (std::size_t k = 0; k < k_n; ++k) s += std::exp(row[k] - m);
        loss += (m + std::log(s)) - row[static_cast<std::size_t>(labels[i])];
    }
    loss *= inv_b;

    const int ln = logits.node();
    auto ld = logits.data_ptr();
    auto lab = std::make_shared<std::vector<int>>(labels);
    return make_op({1}, {loss}, {&logits},
                   [ln, ld, lab, b_n, k_n, inv_b](Tape& t, const std::vector<double>& g) {
                       auto* gl = t.grad_buffer(ln);
                       if (!gl) return;
                       const double go = g[0] * inv_b;
                       for (std::size_t i = 0; i < b_n; ++i) {
                           const double* row = ld->data() + i * k_n;
                           double m = row[0];
                           for (std::size_t k = 1; k < k_n; ++k) m = std::max(m, row[k]);
                           double s = 0.0;
                           for (std::size_t k = 0; k < k_n; ++k) s += std::exp(row[k] - m);
                           const double inv_s = 1.0 / s;
                           for (std::size_t k = 0; k < k_n; ++k)
                               (*gl)[i * k_n + k] += go * std::exp(row[k] - m) * inv_s;
                           (*gl)[i * k_n + static_cast<std::size_t>(lab->at(i))] -= go;
                       }
                   });
}

namespace {

struct PairSets {
    std::size_t n = 0;
    std::vector<std::size_t> pos_count;
    std::vector<std::size_t> neg_count;
};

PairSets derive_sets(const ContrastiveBatch& batch, const char* op) {
    if (batch.embeddings.rank() != 2)
        throw std::invalid_argument(std::string(op) + ": expected rank-2 embeddings, got " +
                                    shape_to_string(batch.embeddings.shape()));
    const std::size_t n = batch.embeddings.dim(0);
    if (n < 2)
        throw std::invalid_argument(std::string(op) + ": batch needs at least 2 samples, got " +
                                    std::to_string(n));
    if (batch.labels.size() != n)
        throw std::invalid_argument(std::string(op) + ": " + std::to_string(batch.labels.size()) +
                                    " labels for " + std::to_string(n) + " embeddings");
    PairSets s;
    s.n = n;
    s.pos_count.assign(n, 0);
    s.neg_count.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            if (batch.labels[j] == batch.labels[i])
                ++s.pos_count[i];
            else
                ++s.neg_count[i];
        }
    return s;
}

// log-sum-exp over each row's off-diagonal entries, max-shifted
Tensor row_lse_offdiag(const Tensor& t) {
    const std::size_t n = t.dim(0);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = t.data().data() + i * n;
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) m = std::max(m, row[j]);
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) s += std::exp(row[j] - m);
        out[i] = m + std::log(s);
    }
    const int tn = t.node();
    auto td = t.data_ptr();
    return make_op({n}, std::move(out), {&t},
                   [tn, td, n](Tape& tape, const std::vector<double>& g) {
                       auto* gt = tape.grad_buffer(tn);
                       if (!gt) return;
                       for (std::size_t i = 0; i < n; ++i) {
                           const double* row = td->data() + i * n;
                           double m = -std::numeric_limits<double>::infinity();
                           for (std::size_t j = 0; j < n; ++j)
                               if (j != i) m = std::max(m, row[j]);
                           double s = 0.0;
                           for (std::size_t j = 0; j < n; ++j)
                               if (j != i) s += std::exp(row[j] - m);
                           const double scale = g[i] / s;
                           for (std::size_t j = 0; j < n; ++j)
                               if (j != i) (*gt)[i * n + j] += scale * std::exp(row[j] - m);
                       }
                   });
}

}  // namespace

Tensor supervised_contrastive_loss(const ContrastiveBatch& batch, double tau) {
    if (!(tau > 0.0))
        throw std::invalid_argument("supervised_contrastive_loss: tau must be > 0, got " +
                                    std::to_string(tau));
    const PairSets sets = derive_sets(batch, "supervised_contrastive_loss");
    const std::size_t n = sets.n;

    const Tensor sims = cosine_similarity_matrix(batch.embeddings);
    const Tensor scaled = scale(sims, 1.0 / tau);
    const Tensor lse = row_lse_offdiag(scaled);

    // w[i][p] = 1 / (N * |P(i)|) on positive pairs, 0 elsewhere; anchors with
    // empty P(i) get an all-zero row and contribute nothing.
    std::vector<double> w(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (sets.pos_count[i] == 0) continue;
        const double v = 1.0 / (static_cast<double>(n) * static_cast<double>(sets.pos_count[i]));
        for (std::size_t p = 0; p < n; ++p)
            if (p != i && batch.labels[p] == batch.labels[i]) w[i * n + p] = v;
    }
    const Tensor weights({n, n}, std::move(w));

    // per-pair term lse_i - scaled_ip is >= 0, so the weighted sum stays >= 0
    // in floating point as well
    const Tensor lse_grid = matmul(reshape(lse, {n, 1}), Tensor::full({1, n}, 1.0));
    return sum(mul(sub(lse_grid, scaled), weights));
}

Tensor margin_contrastive_loss(const ContrastiveBatch& batch, double m_p, double m_n) {
    const PairSets sets = derive_sets(batch, "margin_contrastive_loss");
    const std::size_t n = sets.n;

    const Tensor sims = cosine_similarity_matrix(batch.embeddings);

    std::vector<double> wp(n * n, 0.0), wn(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double vp = sets.pos_count[i]
                              ? 1.0 / (static_cast<double>(n) * static_cast<double>(sets.pos_count[i]))
                              : 0.0;
        const double vn = sets.neg_count[i]
                              ? 1.0 / (static_cast<double>(n) * static_cast<double>(sets.neg_count[i]))
                              : 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            if (batch.labels[j] == batch.labels[i])
                wp[i * n + j] = vp;
            else
                wn[i * n + j] = vn;
        }
    }
    const Tensor pos_w({n, n}, std::move(wp));
    const Tensor neg_w({n, n}, std::move(wn));

    const Tensor pos_term = sum(mul(relu(sub(m_p, sims)), pos_w));
    const Tensor neg_term = sum(mul(relu(sub(sims, m_n)), neg_w));
    return add(pos_term, neg_term);
}

CombinedLoss combine_losses(const Tensor& task, const Tensor* contrastive,
                            double alpha, double beta) {
    CombinedLoss out;
    out.breakdown.task_loss = task.item();
    out.breakdown.contrastive_loss = contrastive ? contrastive->item() : 0.0;
    if (alpha == 0.0 || !contrastive) {
        out.total = scale(task, beta);
    } else if (beta == 0.0) {
        out.total = scale(*contrastive, alpha);
    } else {
        out.total = add(scale(*contrastive, alpha), scale(task, beta));
    }
    out.breakdown.total_loss = out.total.item();
    return out;
}

CombinedLoss combined_loss(ContrastiveKind kind, const Tensor& logits,
                           const ContrastiveBatch& batch, const LossConfig& config) {
    if (logits.rank() != 2 || logits.dim(0) != batch.embeddings.dim(0))
        throw std::invalid_argument("combined_loss: logits " + shape_to_string(logits.shape()) +
                                    " inconsistent with batch of " +
                                    std::to_string(batch.embeddings.dim(0)));
    const Tensor task = cross_entropy(logits, batch.labels);
    if (config.alpha == 0.0) return combine_losses(task, nullptr, config.alpha, config.beta);
    const Tensor contrastive = kind == ContrastiveKind::scl
                                   ? supervised_contrastive_loss(batch, config.tau)
                                   : margin_contrastive_loss(batch, config.m_p, config.m_n);
    return combine_losses(task, &contrastive, config.alpha, config.beta);
}

}  // namespace sclr
