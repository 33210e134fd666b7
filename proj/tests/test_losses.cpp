#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "sclr/losses.hpp"
#include "sclr/rng.hpp"
#include "support/fd.hpp"
#include "support/oracles.hpp"

using namespace sclr;
using testsupport::central_difference;
using testsupport::max_rel_error;

namespace {

testsupport::Matrix random_unit_rows(std::size_t n, std::size_t d, Rng& rng) {
    testsupport::Matrix rows(n, std::vector<double>(d));
    for (auto& row : rows) {
        double norm = 0.0;
        for (double& v : row) {
            v = rng.normal();
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (double& v : row) v /= norm;
    }
    return rows;
}

Tensor to_tensor(const testsupport::Matrix& rows) {
    std::vector<double> flat;
    for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
    return Tensor({rows.size(), rows[0].size()}, std::move(flat));
}

std::vector<int> random_labels(std::size_t n, int classes, Rng& rng) {
    std::vector<int> labels(n);
    for (int& l : labels) l = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
    return labels;
}

}  // namespace

TEST_CASE("cosine similarity matrix: diagonal, symmetry, analytic entries") {
    const Tensor z({3, 2}, {1.0, 0.0, 0.0, 1.0, 1.0, 1.0});
    const Tensor s = cosine_similarity_matrix(z);
    CHECK(s.shape() == Shape{3, 3});
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(s.data()[i * 3 + i] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.data()[0 * 3 + 1] == doctest::Approx(0.0).epsilon(1e-12));  // orthogonal
    CHECK(s.data()[2 * 3 + 0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(s.data()[i * 3 + j] == s.data()[j * 3 + i]);
            CHECK(std::abs(s.data()[i * 3 + j]) <= 1.0 + 1e-12);
        }
    CHECK_THROWS_AS(cosine_similarity_matrix(Tensor({2, 2}, {0.0, 0.0, 1.0, 0.0})),
                    std::domain_error);
}

TEST_CASE("cross entropy: uniform logits, saturation, naive oracle") {
    const Tensor uniform = Tensor::zeros({4, 100});
    std::vector<int> labels = {0, 17, 42, 99};
    CHECK(cross_entropy(uniform, labels).item() ==
          doctest::Approx(std::log(100.0)).epsilon(1e-12));

    std::vector<double> winner(10, 0.0);
    winner[3] = 1000.0;
    CHECK(cross_entropy(Tensor({1, 10}, winner), {3}).item() ==
          doctest::Approx(0.0).epsilon(1e-12));

    Rng rng(5);
    testsupport::Matrix logits(4, std::vector<double>(5));
    for (auto& row : logits)
        for (double& v : row) v = rng.uniform(-2.0, 2.0);
    const auto batch_labels = random_labels(4, 5, rng);
    std::vector<double> flat;
    for (const auto& r : logits) flat.insert(flat.end(), r.begin(), r.end());
    CHECK(std::abs(cross_entropy(Tensor({4, 5}, flat), batch_labels).item() -
                   testsupport::ce_naive(logits, batch_labels)) < 1e-12);

    CHECK_THROWS_AS(cross_entropy(uniform, std::vector<int>{0, 1, 2, 100}),
                    std::invalid_argument);
    CHECK_THROWS_AS(cross_entropy(uniform, std::vector<int>{0, 1, 2, -1}),
                    std::invalid_argument);
}

TEST_CASE("SCL: lone positive over the full anchor complement gives zero") {
    ContrastiveBatch batch{Tensor({2, 2}, {1.0, 0.0, 1.0, 0.0}), {4, 4}};
    CHECK(supervised_contrastive_loss(batch, 0.07).item() == 0.0);
}

TEST_CASE("SCL: three-sample closed form") {
    ContrastiveBatch batch{Tensor({3, 2}, {1.0, 0.0, 1.0, 0.0, 0.0, 1.0}), {0, 0, 1}};
    const double expected = 2.0 * std::log1p(std::exp(-1.0)) / 3.0;  // 0.2088411250...
    CHECK(supervised_contrastive_loss(batch, 1.0).item() ==
          doctest::Approx(expected).epsilon(1e-12));
    // and the loop oracle lands on the same number
    testsupport::Matrix z = {{1.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
    CHECK(testsupport::scl_bruteforce(z, {0, 0, 1}, 1.0) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("SCL matches the brute-force oracle on random batches") {
    Rng rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + rng.below(7);
        const std::size_t d = 2 + rng.below(3);
        const int classes = 1 + static_cast<int>(rng.below(3));
        const auto rows = random_unit_rows(n, d, rng);
        const auto labels = random_labels(n, classes, rng);
        ContrastiveBatch batch{to_tensor(rows), labels};
        const double got = supervised_contrastive_loss(batch, 0.5).item();
        const double want = testsupport::scl_bruteforce(rows, labels, 0.5);
        CHECK(std::abs(got - want) < 1e-9);
        CHECK(got >= 0.0);
    }
}

TEST_CASE("SCL rejects bad inputs") {
    ContrastiveBatch batch{Tensor({1, 2}, {1.0, 0.0}), {0}};
    CHECK_THROWS_AS(supervised_contrastive_loss(batch, 0.07), std::invalid_argument);
    ContrastiveBatch ok{Tensor({2, 2}, {1.0, 0.0, 0.0, 1.0}), {0, 1}};
    CHECK_THROWS_AS(supervised_contrastive_loss(ok, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(supervised_contrastive_loss(ok, -1.0), std::invalid_argument);
}

TEST_CASE("margin loss: inactive hinges give exactly zero") {
    // same-class pair at sim 1, cross-class pairs at sim 0
    ContrastiveBatch batch{Tensor({3, 2}, {1.0, 0.0, 1.0, 0.0, 0.0, 1.0}), {0, 0, 1}};
    CHECK(margin_contrastive_loss(batch, 0.5, 0.1).item() == 0.0);
}

TEST_CASE("margin loss: two-sample analytic case") {
    // sim(z1, z2) = 0.3 by construction
    ContrastiveBatch batch{Tensor({2, 2}, {1.0, 0.0, 0.3, std::sqrt(1.0 - 0.09)}), {7, 7}};
    CHECK(margin_contrastive_loss(batch, 0.5, 0.1).item() ==
          doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("margin loss matches the brute-force oracle on random batches") {
    Rng rng(13);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + rng.below(7);
        const std::size_t d = 2 + rng.below(3);
        const int classes = 1 + static_cast<int>(rng.below(3));
        const auto rows = random_unit_rows(n, d, rng);
        const auto labels = random_labels(n, classes, rng);
        ContrastiveBatch batch{to_tensor(rows), labels};
        const double got = margin_contrastive_loss(batch, 0.5, 0.1).item();
        const double want = testsupport::margin_bruteforce(rows, labels, 0.5, 0.1);
        CHECK(std::abs(got - want) < 1e-9);
        CHECK(got >= 0.0);
    }
}

TEST_CASE("margin loss is strictly increasing as a positive pair drops below m_p") {
    auto loss_at = [](double sim) {
        ContrastiveBatch batch{
            Tensor({2, 2}, {1.0, 0.0, sim, std::sqrt(1.0 - sim * sim)}), {0, 0}};
        return margin_contrastive_loss(batch, 0.5, 0.1).item();
    };
    double prev = loss_at(0.45);
    for (double sim : {0.3, 0.1, -0.2, -0.6}) {
        const double cur = loss_at(sim);
        CHECK(cur > prev);
        prev = cur;
    }
}

TEST_CASE("SCL and margin gradients w.r.t. Z match finite differences") {
    Rng rng(17);
    int done = 0;
    while (done < 10) {
        const std::size_t n = 3 + rng.below(4);
        const std::size_t d = 2 + rng.below(3);
        const auto rows = random_unit_rows(n, d, rng);
        const auto labels = random_labels(n, 3, rng);

        // finite differences are meaningless within h of a hinge kink
        bool near_kink = false;
        for (std::size_t i = 0; i < n && !near_kink; ++i)
            for (std::size_t j = 0; j < n && !near_kink; ++j) {
                if (i == j) continue;
                const double s = testsupport::cosine(rows[i], rows[j]);
                if (std::abs(s - 0.5) < 1e-3 || std::abs(s - 0.1) < 1e-3) near_kink = true;
            }
        if (near_kink) continue;
        ++done;

        std::vector<double> flat;
        for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());

        auto scl_at = [&](const std::vector<double>& v) {
            ContrastiveBatch b{Tensor({n, d}, v), labels};
            return supervised_contrastive_loss(b, 0.5).item();
        };
        auto margin_at = [&](const std::vector<double>& v) {
            ContrastiveBatch b{Tensor({n, d}, v), labels};
            return margin_contrastive_loss(b, 0.5, 0.1).item();
        };

        Tape t1;
        const Tensor z1 = t1.leaf({n, d}, flat);
        t1.backward(supervised_contrastive_loss({z1, labels}, 0.5));
        CHECK(max_rel_error(t1.grad(z1).data(), central_difference(scl_at, flat)) < 1e-4);

        Tape t2;
        const Tensor z2 = t2.leaf({n, d}, flat);
        t2.backward(margin_contrastive_loss({z2, labels}, 0.5, 0.1));
        CHECK(max_rel_error(t2.grad(z2).data(), central_difference(margin_at, flat)) < 1e-4);
    }
}

TEST_CASE("permutation and relabeling invariance") {
    Rng rng(23);
    const std::size_t n = 6, d = 3;
    const auto rows = random_unit_rows(n, d, rng);
    const auto labels = random_labels(n, 3, rng);
    ContrastiveBatch batch{to_tensor(rows), labels};
    const double scl0 = supervised_contrastive_loss(batch, 0.5).item();
    const double margin0 = margin_contrastive_loss(batch, 0.5, 0.1).item();

    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);
    testsupport::Matrix prows(n);
    std::vector<int> plabels(n);
    for (std::size_t i = 0; i < n; ++i) {
        prows[i] = rows[perm[i]];
        plabels[i] = labels[perm[i]];
    }
    ContrastiveBatch permuted{to_tensor(prows), plabels};
    CHECK(std::abs(supervised_contrastive_loss(permuted, 0.5).item() - scl0) < 1e-10);
    CHECK(std::abs(margin_contrastive_loss(permuted, 0.5, 0.1).item() - margin0) < 1e-10);

    // bijective relabeling leaves the derived sets unchanged
    std::vector<int> renamed(n);
    for (std::size_t i = 0; i < n; ++i) renamed[i] = 10 - labels[i] * 3;
    ContrastiveBatch relabeled{to_tensor(rows), renamed};
    CHECK(supervised_contrastive_loss(relabeled, 0.5).item() == scl0);
    CHECK(margin_contrastive_loss(relabeled, 0.5, 0.1).item() == margin0);
}

TEST_CASE("combined loss: degenerate weights and the half-half split") {
    Rng rng(29);
    const std::size_t n = 5, d = 4;
    const auto rows = random_unit_rows(n, d, rng);
    const auto labels = random_labels(n, 3, rng);
    ContrastiveBatch batch{to_tensor(rows), labels};
    std::vector<double> logits(n * 3);
    for (double& v : logits) v = rng.uniform(-1.0, 1.0);
    const Tensor logits_t({n, 3}, logits);

    LossConfig cfg;
    cfg.alpha = 0.0;
    cfg.beta = 1.0;
    const CombinedLoss ce_only = combined_loss(ContrastiveKind::scl, logits_t, batch, cfg);
    CHECK(ce_only.breakdown.total_loss == cross_entropy(logits_t, labels).item());
    CHECK(ce_only.breakdown.contrastive_loss == 0.0);

    cfg.alpha = 1.0;
    cfg.beta = 0.0;
    ContrastiveBatch inactive{Tensor({2, 2}, {1.0, 0.0, 1.0, 0.0}), {0, 0}};
    const Tensor two_logits = Tensor::zeros({2, 2});
    const CombinedLoss margin_only =
        combined_loss(ContrastiveKind::margin, two_logits, inactive, cfg);
    CHECK(margin_only.breakdown.total_loss == 0.0);

    cfg.alpha = 0.5;
    cfg.beta = 0.5;
    const CombinedLoss both = combined_loss(ContrastiveKind::margin, logits_t, batch, cfg);
    const double recomputed =
        0.5 * both.breakdown.contrastive_loss + 0.5 * both.breakdown.task_loss;
    CHECK(std::abs(both.breakdown.total_loss - recomputed) < 1e-12);
}

TEST_CASE("loss config validation") {
    LossConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.tau = -1.0;
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("loss.tau"), std::invalid_argument);
    cfg = LossConfig{};
    cfg.m_p = 0.1;
    cfg.m_n = 0.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = LossConfig{};
    cfg.alpha = 0.0;
    cfg.beta = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
