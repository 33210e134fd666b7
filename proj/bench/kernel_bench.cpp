// Times the serial reference kernels against the OpenMP variants and checks
// that both produce identical bits. Sizes are modest; pass --big for larger
// problems.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sclr/kernels.hpp"
#include "sclr/rng.hpp"

namespace {

using sclr::kernels::Conv2dDims;

double now_ms() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

template <class F>
double best_of(int reps, F&& fn) {
    double best = 1e30;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now_ms();
        fn();
        best = std::min(best, now_ms() - t0);
    }
    return best;
}

std::vector<double> random_vec(std::size_t n, sclr::Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

void report(const char* name, double serial_ms, double parallel_ms, bool bit_equal) {
    std::printf("%-24s %10.3f ms %10.3f ms %8.2fx   %s\n", name, serial_ms, parallel_ms,
                serial_ms / parallel_ms, bit_equal ? "bit-equal" : "MISMATCH");
}

void bench_matmul(std::size_t n, int reps, sclr::Rng& rng) {
    const auto a = random_vec(n * n, rng);
    const auto b = random_vec(n * n, rng);
    std::vector<double> cs(n * n), cp(n * n);
    const double ts = best_of(reps, [&] {
        sclr::kernels::serial::matmul_nn(a.data(), b.data(), cs.data(), n, n, n, false);
    });
    const double tp = best_of(reps, [&] {
        sclr::kernels::parallel::matmul_nn(a.data(), b.data(), cp.data(), n, n, n, false);
    });
    const std::string label = "matmul_nn " + std::to_string(n) + "^3";
    report(label.c_str(), ts, tp, same_bits(cs, cp));
}

void bench_conv(const Conv2dDims& d, int reps, sclr::Rng& rng) {
    const auto x = random_vec(d.batch * d.in_ch * d.in_h * d.in_w, rng);
    const auto w = random_vec(d.out_ch * d.in_ch * d.k_h * d.k_w, rng);
    const auto bias = random_vec(d.out_ch, rng);
    const std::size_t out_n = d.batch * d.out_ch * d.out_h() * d.out_w();
    std::vector<double> ys(out_n), yp(out_n);

    double ts = best_of(reps, [&] {
        sclr::kernels::serial::conv2d_forward(x.data(), w.data(), bias.data(), ys.data(), d);
    });
    double tp = best_of(reps, [&] {
        sclr::kernels::parallel::conv2d_forward(x.data(), w.data(), bias.data(), yp.data(), d);
    });
    report("conv2d_forward", ts, tp, same_bits(ys, yp));

    const auto dy = random_vec(out_n, rng);
    std::vector<double> dxs(x.size()), dxp(x.size());
    ts = best_of(reps, [&] {
        sclr::kernels::serial::conv2d_backward_input(dy.data(), w.data(), dxs.data(), d, false);
    });
    tp = best_of(reps, [&] {
        sclr::kernels::parallel::conv2d_backward_input(dy.data(), w.data(), dxp.data(), d, false);
    });
    report("conv2d_backward_input", ts, tp, same_bits(dxs, dxp));

    std::vector<double> dws(w.size()), dwp(w.size());
    ts = best_of(reps, [&] {
        sclr::kernels::serial::conv2d_backward_weights(x.data(), dy.data(), dws.data(), d, false);
    });
    tp = best_of(reps, [&] {
        sclr::kernels::parallel::conv2d_backward_weights(x.data(), dy.data(), dwp.data(), d, false);
    });
    report("conv2d_backward_weights", ts, tp, same_bits(dws, dwp));
}

}  // namespace

int main(int argc, char** argv) {
    bool big = false;
    for (int i = 1; i < argc; ++i)
        if (std::string(argv[i]) == "--big") big = true;

#ifdef _OPENMP
    std::printf("OpenMP: %d thread(s)\n", omp_get_max_threads());
#else
    std::printf("OpenMP: not enabled at compile time\n");
#endif
    std::printf("%-24s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

    sclr::Rng rng(7);
    const int reps = 3;
    bench_matmul(big ? 512 : 192, reps, rng);

    Conv2dDims d;
    d.batch = big ? 64 : 16;
    d.in_ch = 16;
    d.in_h = d.in_w = 32;
    d.out_ch = 32;
    d.k_h = d.k_w = 3;
    d.stride = 1;
    d.pad = 1;
    bench_conv(d, reps, rng);
    return 0;
}
