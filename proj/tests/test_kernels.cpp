#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <vector>

#include "sclr/kernels.hpp"
#include "sclr/rng.hpp"

using namespace sclr;
using kernels::Conv2dDims;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("matmul serial and parallel agree bitwise") {
    Rng rng(11);
    for (auto [m, k, n] : {std::tuple<std::size_t, std::size_t, std::size_t>{1, 1, 1},
                           {3, 5, 2},
                           {7, 7, 7},
                           {16, 33, 9},
                           {64, 64, 64}}) {
        const auto a = random_vec(m * k, rng);
        const auto at = random_vec(k * m, rng);
        const auto b = random_vec(k * n, rng);
        const auto bt = random_vec(n * k, rng);
        std::vector<double> cs(m * n), cp(m * n);

        kernels::serial::matmul_nn(a.data(), b.data(), cs.data(), m, k, n, false);
        kernels::parallel::matmul_nn(a.data(), b.data(), cp.data(), m, k, n, false);
        CHECK(same_bits(cs, cp));

        kernels::serial::matmul_tn(at.data(), b.data(), cs.data(), m, k, n, false);
        kernels::parallel::matmul_tn(at.data(), b.data(), cp.data(), m, k, n, false);
        CHECK(same_bits(cs, cp));

        kernels::serial::matmul_nt(a.data(), bt.data(), cs.data(), m, k, n, false);
        kernels::parallel::matmul_nt(a.data(), bt.data(), cp.data(), m, k, n, false);
        CHECK(same_bits(cs, cp));
    }
}

TEST_CASE("matmul_nn against a hand-rolled triple loop") {
    Rng rng(3);
    const std::size_t m = 4, k = 6, n = 5;
    const auto a = random_vec(m * k, rng);
    const auto b = random_vec(k * n, rng);
    std::vector<double> c(m * n);
    kernels::matmul_nn(a.data(), b.data(), c.data(), m, k, n, false);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double want = 0.0;
            for (std::size_t t = 0; t < k; ++t) want += a[i * k + t] * b[t * n + j];
            CHECK(c[i * n + j] == doctest::Approx(want).epsilon(1e-14));
        }
}

TEST_CASE("accumulate flag adds instead of overwriting") {
    Rng rng(5);
    const std::size_t m = 3, k = 3, n = 3;
    const auto a = random_vec(m * k, rng);
    const auto b = random_vec(k * n, rng);
    std::vector<double> once(m * n, 0.0), twice(m * n, 0.0);
    kernels::serial::matmul_nn(a.data(), b.data(), once.data(), m, k, n, false);
    kernels::serial::matmul_nn(a.data(), b.data(), twice.data(), m, k, n, true);
    kernels::serial::matmul_nn(a.data(), b.data(), twice.data(), m, k, n, true);
    for (std::size_t i = 0; i < m * n; ++i)
        CHECK(twice[i] == doctest::Approx(2.0 * once[i]).epsilon(1e-14));
}

TEST_CASE("conv2d serial and parallel agree bitwise across shapes") {
    Rng rng(17);
    for (const auto& [stride, pad] : {std::pair<std::size_t, std::size_t>{1, 0},
                                      {1, 1},
                                      {2, 0},
                                      {2, 1}}) {
        Conv2dDims d;
        d.batch = 2;
        d.in_ch = 3;
        d.in_h = 7;
        d.in_w = 6;
        d.out_ch = 4;
        d.k_h = 3;
        d.k_w = 2;
        d.stride = stride;
        d.pad = pad;

        const auto x = random_vec(d.batch * d.in_ch * d.in_h * d.in_w, rng);
        const auto w = random_vec(d.out_ch * d.in_ch * d.k_h * d.k_w, rng);
        const auto bias = random_vec(d.out_ch, rng);
        const std::size_t out_n = d.batch * d.out_ch * d.out_h() * d.out_w();
        const auto dy = random_vec(out_n, rng);

        std::vector<double> ys(out_n), yp(out_n);
        kernels::serial::conv2d_forward(x.data(), w.data(), bias.data(), ys.data(), d);
        kernels::parallel::conv2d_forward(x.data(), w.data(), bias.data(), yp.data(), d);
        CHECK(same_bits(ys, yp));

        std::vector<double> dxs(x.size()), dxp(x.size());
        kernels::serial::conv2d_backward_input(dy.data(), w.data(), dxs.data(), d, false);
        kernels::parallel::conv2d_backward_input(dy.data(), w.data(), dxp.data(), d, false);
        CHECK(same_bits(dxs, dxp));

        std::vector<double> dws(w.size()), dwp(w.size());
        kernels::serial::conv2d_backward_weights(x.data(), dy.data(), dws.data(), d, false);
        kernels::parallel::conv2d_backward_weights(x.data(), dy.data(), dwp.data(), d, false);
        CHECK(same_bits(dws, dwp));

        std::vector<double> dbs(d.out_ch), dbp(d.out_ch);
        kernels::serial::conv2d_backward_bias(dy.data(), dbs.data(), d, false);
        kernels::parallel::conv2d_backward_bias(dy.data(), dbp.data(), d, false);
        CHECK(same_bits(dbs, dbp));
    }
}

TEST_CASE("conv2d forward against an explicit padded-image loop") {
    Rng rng(23);
    Conv2dDims d;
    d.batch = 1;
    d.in_ch = 2;
    d.in_h = d.in_w = 5;
    d.out_ch = 3;
    d.k_h = d.k_w = 3;
    d.stride = 2;
    d.pad = 1;
    const auto x = random_vec(d.batch * d.in_ch * d.in_h * d.in_w, rng);
    const auto w = random_vec(d.out_ch * d.in_ch * d.k_h * d.k_w, rng);
    const auto bias = random_vec(d.out_ch, rng);
    std::vector<double> y(d.batch * d.out_ch * d.out_h() * d.out_w());
    kernels::conv2d_forward(x.data(), w.data(), bias.data(), y.data(), d);

    // build the padded image explicitly, then correlate
    const std::size_t ph = d.in_h + 2 * d.pad, pw = d.in_w + 2 * d.pad;
    std::vector<double> padded(d.in_ch * ph * pw, 0.0);
    for (std::size_t c = 0; c < d.in_ch; ++c)
        for (std::size_t i = 0; i < d.in_h; ++i)
            for (std::size_t j = 0; j < d.in_w; ++j)
                padded[(c * ph + i + d.pad) * pw + j + d.pad] =
                    x[(c * d.in_h + i) * d.in_w + j];
    for (std::size_t o = 0; o < d.out_ch; ++o)
        for (std::size_t oh = 0; oh < d.out_h(); ++oh)
            for (std::size_t ow = 0; ow < d.out_w(); ++ow) {
                double want = bias[o];
                for (std::size_t c = 0; c < d.in_ch; ++c)
                    for (std::size_t ki = 0; ki < d.k_h; ++ki)
                        for (std::size_t kj = 0; kj < d.k_w; ++kj)
                            want += padded[(c * ph + oh * d.stride + ki) * pw +
                                           ow * d.stride + kj] *
                                    w[((o * d.in_ch + c) * d.k_h + ki) * d.k_w + kj];
                CHECK(y[(o * d.out_h() + oh) * d.out_w() + ow] ==
                      doctest::Approx(want).epsilon(1e-13));
            }
}

TEST_CASE("dispatcher result is identical with the parallel path disabled") {
    Rng rng(29);
    const std::size_t n = 40;  // big enough to cross the parallel cutoff
    const auto a = random_vec(n * n, rng);
    const auto b = random_vec(n * n, rng);
    std::vector<double> c1(n * n), c2(n * n);
    kernels::set_parallel_enabled(true);
    kernels::matmul_nn(a.data(), b.data(), c1.data(), n, n, n, false);
    kernels::set_parallel_enabled(false);
    kernels::matmul_nn(a.data(), b.data(), c2.data(), n, n, n, false);
    kernels::set_parallel_enabled(true);
    CHECK(same_bits(c1, c2));
}
