#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "sclr/eval.hpp"
#include "sclr/rng.hpp"
#include "support/oracles.hpp"

using namespace sclr;

namespace {

ModelConfig small_config(int classes = 3) {
    ModelConfig c;
    c.input_size = 8;
    c.channel_widths = {4, 6, 6};
    c.feature_dim = 6;
    c.projection_hidden = 6;
    c.projection_out = 5;
    c.num_classes = classes;
    return c;
}

struct Setup {
    BlobDataset data;
    DatasetMeta meta;
};

Setup blobs(int classes = 3, int per_class = 20, std::uint64_t seed = 0) {
    Setup s{synthesize_blobs(classes, per_class, 8, 6.0, seed), {}};
    s.meta = compute_meta("blobs", classes, 8, s.data.samples);
    return s;
}

ModelParams constant_class0(const ModelConfig& config) {
    ModelParams params = init_model(config, 0);
    for (auto& [name, tensor] : params.tensors) tensor = Tensor::zeros(tensor.shape());
    const std::size_t k = static_cast<std::size_t>(config.num_classes);
    std::vector<double> bias(k, 0.0);
    bias[0] = 1.0;
    params.set("fc.b", Tensor({k}, std::move(bias)));
    params.set("proj2.b",
               Tensor::full({static_cast<std::size_t>(config.projection_out)}, 0.5));
    return params;
}

}  // namespace

TEST_CASE("a constant classifier scores 1/K on uniformly labeled data") {
    const auto setup = blobs(4, 10, 3);
    const ModelConfig config = small_config(4);
    const ModelParams params = constant_class0(config);
    CHECK(clean_accuracy(config, params, setup.data.samples, setup.meta) ==
          doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("one correctly classified sample scores 1.0") {
    const auto setup = blobs(3, 5, 4);
    const ModelConfig config = small_config();
    const ModelParams params = constant_class0(config);
    std::vector<Sample> one = {setup.data.samples.front()};  // class 0
    REQUIRE(one[0].fine_label == 0);
    CHECK(clean_accuracy(config, params, one, setup.meta) == 1.0);
    CHECK_THROWS_AS(clean_accuracy(config, params, {}, setup.meta), std::invalid_argument);
}

TEST_CASE("clean accuracy equals a per-sample loop oracle") {
    const auto setup = blobs(3, 22, 5);  // 66 samples, exercises batching at 64
    const ModelConfig config = small_config();
    const ModelParams params = init_model(config, 12);

    std::size_t correct = 0;
    for (const Sample& s : setup.data.samples) {
        const auto img = normalize_image(s.image, setup.meta);
        const ForwardResult out = forward(config, params, Tensor({1, 3, 8, 8}, img));
        const auto& row = out.logits.data();
        const std::size_t best = static_cast<std::size_t>(
            std::max_element(row.begin(), row.end()) - row.begin());
        if (static_cast<int>(best) == s.fine_label) ++correct;
    }
    const double want = static_cast<double>(correct) / setup.data.samples.size();
    CHECK(clean_accuracy(config, params, setup.data.samples, setup.meta, 64) == want);
}

TEST_CASE("epsilon zero reduces to clean accuracy bitwise") {
    const auto setup = blobs();
    const ModelConfig config = small_config();
    const ModelParams params = init_model(config, 8);
    const double clean = clean_accuracy(config, params, setup.data.samples, setup.meta);
    CHECK(adversarial_accuracy(config, params, setup.data.samples, setup.meta, 0.0) == clean);
    CHECK_THROWS_AS(
        adversarial_accuracy(config, params, setup.data.samples, setup.meta, -0.01),
        std::invalid_argument);
}

TEST_CASE("embedding stats: degenerate and orthogonal constructions") {
    // identical embeddings across classes: intra = inter = 1, gap = 0
    const auto setup = blobs(2, 6, 7);
    const ModelConfig config = small_config(2);
    const ModelParams params = constant_class0(config);  // every input maps to one embedding
    const EmbeddingStats degenerate =
        embedding_stats(config, params, setup.data.samples, setup.meta);
    CHECK(degenerate.mean_intra == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(degenerate.mean_inter == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(degenerate.gap == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(degenerate.gap == degenerate.mean_intra - degenerate.mean_inter);

    // two classes on orthogonal unit vectors via the pair oracle
    testsupport::Matrix emb = {{1, 0}, {1, 0}, {0, 1}, {0, 1}};
    const auto oracle = testsupport::pair_stats_bruteforce(emb, {0, 0, 1, 1});
    CHECK(oracle.intra == doctest::Approx(1.0));
    CHECK(oracle.inter == doctest::Approx(0.0));
    CHECK(oracle.gap == doctest::Approx(1.0));
}

TEST_CASE("embedding stats match the pair-enumeration oracle on 32 samples") {
    const auto setup = blobs(3, 11, 9);  // 33 samples
    const ModelConfig config = small_config();
    const ModelParams params = init_model(config, 31);
    const auto subset = std::span(setup.data.samples).subspan(0, 32);

    // oracle from the same embeddings the model produces
    testsupport::Matrix emb;
    std::vector<int> labels;
    for (const Sample& s : subset) {
        const auto img = normalize_image(s.image, setup.meta);
        const ForwardResult out = forward(config, params, Tensor({1, 3, 8, 8}, img));
        emb.push_back(out.embedding.data());
        labels.push_back(s.fine_label);
    }
    const auto want = testsupport::pair_stats_bruteforce(emb, labels);
    const EmbeddingStats got = embedding_stats(config, params, subset, setup.meta);
    CHECK(std::abs(got.mean_intra - want.intra) < 1e-12);
    CHECK(std::abs(got.mean_inter - want.inter) < 1e-12);
    CHECK(std::abs(got.gap - want.gap) < 1e-12);
}

TEST_CASE("embedding stats are invariant under sample permutation") {
    const auto setup = blobs(3, 8, 13);
    const ModelConfig config = small_config();
    const ModelParams params = init_model(config, 17);
    const EmbeddingStats a = embedding_stats(config, params, setup.data.samples, setup.meta);

    std::vector<Sample> shuffled = setup.data.samples;
    Rng rng(99);
    rng.shuffle(shuffled);
    const EmbeddingStats b = embedding_stats(config, params, shuffled, setup.meta);
    CHECK(std::abs(a.mean_intra - b.mean_intra) < 1e-12);
    CHECK(std::abs(a.mean_inter - b.mean_inter) < 1e-12);
    CHECK(std::abs(a.gap - b.gap) < 1e-12);
}

TEST_CASE("the full report is self-consistent and deterministic") {
    const auto setup = blobs();
    const ModelConfig config = small_config();
    const ModelParams params = init_model(config, 23);
    const std::vector<double> eps = {0.01, 0.02};

    const EvalReport r1 = evaluate(config, params, setup.data.samples, setup.meta, eps);
    const EvalReport r2 = evaluate(config, params, setup.data.samples, setup.meta, eps);
    REQUIRE(r1.adversarial.size() == 3);
    CHECK(r1.adversarial[0].first == 0.0);
    CHECK(r1.adversarial[0].second == r1.clean_accuracy);
    CHECK(r1.embedding.gap == r1.embedding.mean_intra - r1.embedding.mean_inter);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(r1.adversarial[i].first == r2.adversarial[i].first);
        CHECK(r1.adversarial[i].second == r2.adversarial[i].second);
    }
    for (const auto& [e, acc] : r1.adversarial) {
        CHECK(acc >= 0.0);
        CHECK(acc <= 1.0);
    }
}
