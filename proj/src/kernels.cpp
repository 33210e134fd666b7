#include "sclr/kernels.hpp"

#include <atomic>
#include <cstdint>

namespace sclr::kernels {

namespace {

using i64 = std::int64_t;

inline double conv_out_element(const double* x, const double* w, const Conv2dDims& d,
                               std::size_t b, std::size_t o, std::size_t oh, std::size_t ow) {
    double acc = 0.0;
    const std::size_t x_base = b * d.in_ch * d.in_h * d.in_w;
    const std::size_t w_base = o * d.in_ch * d.k_h * d.k_w;
    for (std::size_t c = 0; c < d.in_ch; ++c) {
        for (std::size_t ki = 0; ki < d.k_h; ++ki) {
            const i64 ih = static_cast<i64>(oh * d.stride + ki) - static_cast<i64>(d.pad);
            if (ih < 0 || ih >= static_cast<i64>(d.in_h)) continue;
            for (std::size_t kj = 0; kj < d.k_w; ++kj) {
                const i64 iw = static_cast<i64>(ow * d.stride + kj) - static_cast<i64>(d.pad);
                if (iw < 0 || iw >= static_cast<i64>(d.in_w)) continue;
                acc += x[x_base + (c * d.in_h + static_cast<std::size_t>(ih)) * d.in_w +
                         static_cast<std::size_t>(iw)] *
                       w[w_base + (c * d.k_h + ki) * d.k_w + kj];
            }
        }
    }
    return acc;
}

// gather form: dx[b,c,ih,iw] = sum over (o,ki,kj) hitting that input cell
inline double conv_dx_element(const double* dy, const double* w, const Conv2dDims& d,
                              std::size_t b, std::size_t c, std::size_t ih, std::size_t iw) {
    const std::size_t oh_n = d.out_h();
    const std::size_t ow_n = d.out_w();
    double acc = 0.0;
    for (std::size_t o = 0; o < d.out_ch; ++o) {
        const std::size_t dy_base = (b * d.out_ch + o) * oh_n * ow_n;
        const std::size_t w_base = (o * d.in_ch + c) * d.k_h * d.k_w;
        for (std::size_t ki = 0; ki < d.k_h; ++ki) {
            const i64 num_h = static_cast<i64>(ih + d.pad) - static_cast<i64>(ki);
            if (num_h < 0 || num_h % static_cast<i64>(d.stride) != 0) continue;
            const i64 oh = num_h / static_cast<i64>(d.stride);
            if (oh >= static_cast<i64>(oh_n)) continue;
            for (std::size_t kj = 0; kj < d.k_w; ++kj) {
                const i64 num_w = static_cast<i64>(iw + d.pad) - static_cast<i64>(kj);
                if (num_w < 0 || num_w % static_cast<i64>(d.stride) != 0) continue;
                const i64 ow = num_w / static_cast<i64>(d.stride);
                if (ow >= static_cast<i64>(ow_n)) continue;
                acc += w[w_base + ki * d.k_w + kj] *
                       dy[dy_base + static_cast<std::size_t>(oh) * ow_n +
                          static_cast<std::size_t>(ow)];
            }
        }
    }
    return acc;
}

inline double conv_dw_element(const double* x, const double* dy, const Conv2dDims& d,
                              std::size_t o, std::size_t c, std::size_t ki, std::size_t kj) {
    const std::size_t oh_n = d.out_h();
    const std::size_t ow_n = d.out_w();
    double acc = 0.0;
    for (std::size_t b = 0; b < d.batch; ++b) {
        const std::size_t x_base = (b * d.in_ch + c) * d.in_h * d.in_w;
        const std::size_t dy_base = (b * d.out_ch + o) * oh_n * ow_n;
        for (std::size_t oh = 0; oh < oh_n; ++oh) {
            const i64 ih = static_cast<i64>(oh * d.stride + ki) - static_cast<i64>(d.pad);
            if (ih < 0 || ih >= static_cast<i64>(d.in_h)) continue;
            for (std::size_t ow = 0; ow < ow_n; ++ow) {
                const i64 iw = static_cast<i64>(ow * d.stride + kj) - static_cast<i64>(d.pad);
                if (iw < 0 || iw >= static_cast<i64>(d.in_w)) continue;
                acc += x[x_base + static_cast<std::size_t>(ih) * d.in_w +
                         static_cast<std::size_t>(iw)] *
                       dy[dy_base + oh * ow_n + ow];
            }
        }
    }
    return acc;
}

inline void store(double* dst, double v, bool accumulate) {
    if (accumulate) {
        *dst += v;
    } else {
        *dst = v;
    }
}

std::atomic<bool> g_parallel{true};

}  // namespace

namespace serial {

void matmul_nn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) acc += a[i * k + t] * b[t * n + j];
            store(&c[i * n + j], acc, accumulate);
        }
    }
}

void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) acc += a[t * m + i] * b[t * n + j];
            store(&c[i * n + j], acc, accumulate);
        }
    }
}

void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) acc += a[i * k + t] * b[j * k + t];
            store(&c[i * n + j], acc, accumulate);
        }
    }
}

void conv2d_forward(const double* x, const double* w, const double* bias,
                    double* y, const Conv2dDims& d) {
    const std::size_t oh_n = d.out_h();
    const std::size_t ow_n = d.out_w();
    for (std::size_t b = 0; b < d.batch; ++b) {
        for (std::size_t o = 0; o < d.out_ch; ++o) {
            double* out = y + (b * d.out_ch + o) * oh_n * ow_n;
            const double base = bias ? bias[o] : 0.0;
            for (std::size_t oh = 0; oh < oh_n; ++oh)
                for (std::size_t ow = 0; ow < ow_n; ++ow)
                    out[oh * ow_n + ow] = base + conv_out_element(x, w, d, b, o, oh, ow);
        }
    }
}

void conv2d_backward_input(const double* dy, const double* w, double* dx,
                           const Conv2dDims& d, bool accumulate) {
    for (std::size_t b = 0; b < d.batch; ++b)
        for (std::size_t c = 0; c < d.in_ch; ++c)
            for (std::size_t ih = 0; ih < d.in_h; ++ih)
                for (std::size_t iw = 0; iw < d.in_w; ++iw)
                    store(&dx[((b * d.in_ch + c) * d.in_h + ih) * d.in_w + iw],
                          conv_dx_element(dy, w, d, b, c, ih, iw), accumulate);
}

void conv2d_backward_weights(const double* x, const double* dy, double* dw,
                             const Conv2dDims& d, bool accumulate) {
    for (std::size_t o = 0; o < d.out_ch; ++o)
        for (std::size_t c = 0; c < d.in_ch; ++c)
            for (std::size_t ki = 0; ki < d.k_h; ++ki)
                for (std::size_t kj = 0; kj < d.k_w; ++kj)
                    store(&dw[((o * d.in_ch + c) * d.k_h + ki) * d.k_w + kj],
                          conv_dw_element(x, dy, d, o, c, ki, kj), accumulate);
}

void conv2d_backward_bias(const double* dy, double* db, const Conv2dDims& d,
                          bool accumulate) {
    const std::size_t spatial = d.out_h() * d.out_w();
    for (std::size_t o = 0; o < d.out_ch; ++o) {
        double acc = 0.0;
        for (std::size_t b = 0; b < d.batch; ++b) {
            const double* p = dy + (b * d.out_ch + o) * spatial;
            for (std::size_t s = 0; s < spatial; ++s) acc += p[s];
        }
        store(&db[o], acc, accumulate);
    }
}

}  // namespace serial

namespace parallel {

void matmul_nn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
#pragma omp parallel for schedule(static)
    for (i64 i = 0; i < static_cast<i64>(m); ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) acc += a[i * k + t] * b[t * n + j];
            store(&c[i * n + j], acc, accumulate);
        }
    }
}

void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
#pragma omp parallel for schedule(static)
    for (i64 i = 0; i < static_cast<i64>(m); ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) acc += a[t * m + i] * b[t * n + j];
            store(&c[i * n + j], acc, accumulate);
        }
    }
}

void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
#pragma omp parallel for schedule(static)
    for (i64 i = 0; i < static_cast<i64>(m); ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) acc += a[i * k + t] * b[j * k + t];
            store(&c[i * n + j], acc, accumulate);
        }
    }
}

void conv2d_forward(const double* x, const double* w, const double* bias,
                    double* y, const Conv2dDims& d) {
    const std::size_t oh_n = d.out_h();
    const std::size_t ow_n = d.out_w();
#pragma omp parallel for collapse(2) schedule(static)
    for (i64 b = 0; b < static_cast<i64>(d.batch); ++b) {
        for (i64 o = 0; o < static_cast<i64>(d.out_ch); ++o) {
            double* out = y + (b * d.out_ch + o) * oh_n * ow_n;
            const double base = bias ? bias[o] : 0.0;
            for (std::size_t oh = 0; oh < oh_n; ++oh)
                for (std::size_t ow = 0; ow < ow_n; ++ow)
                    out[oh * ow_n + ow] =
                        base + conv_out_element(x, w, d, static_cast<std::size_t>(b),
                                                static_cast<std::size_t>(o), oh, ow);
        }
    }
}

void conv2d_backward_input(const double* dy, const double* w, double* dx,
                           const Conv2dDims& d, bool accumulate) {
#pragma omp parallel for collapse(2) schedule(static)
    for (i64 b = 0; b < static_cast<i64>(d.batch); ++b) {
        for (i64 c = 0; c < static_cast<i64>(d.in_ch); ++c) {
            for (std::size_t ih = 0; ih < d.in_h; ++ih)
                for (std::size_t iw = 0; iw < d.in_w; ++iw)
                    store(&dx[((b * d.in_ch + c) * d.in_h + ih) * d.in_w + iw],
                          conv_dx_element(dy, w, d, static_cast<std::size_t>(b),
                                          static_cast<std::size_t>(c), ih, iw),
                          accumulate);
        }
    }
}

void conv2d_backward_weights(const double* x, const double* dy, double* dw,
                             const Conv2dDims& d, bool accumulate) {
#pragma omp parallel for collapse(2) schedule(static)
    for (i64 o = 0; o < static_cast<i64>(d.out_ch); ++o) {
        for (i64 c = 0; c < static_cast<i64>(d.in_ch); ++c) {
            for (std::size_t ki = 0; ki < d.k_h; ++ki)
                for (std::size_t kj = 0; kj < d.k_w; ++kj)
                    store(&dw[((o * d.in_ch + c) * d.k_h + ki) * d.k_w + kj],
                          conv_dw_element(x, dy, d, static_cast<std::size_t>(o),
                                          static_cast<std::size_t>(c), ki, kj),
                          accumulate);
        }
    }
}

void conv2d_backward_bias(const double* dy, double* db, const Conv2dDims& d,
                          bool accumulate) {
    const std::size_t spatial = d.out_h() * d.out_w();
#pragma omp parallel for schedule(static)
    for (i64 o = 0; o < static_cast<i64>(d.out_ch); ++o) {
        double acc = 0.0;
        for (std::size_t b = 0; b < d.batch; ++b) {
            const double* p = dy + (b * d.out_ch + o) * spatial;
            for (std::size_t s = 0; s < spatial; ++s) acc += p[s];
        }
        store(&db[o], acc, accumulate);
    }
}

}  // namespace parallel

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }

void set_parallel_enabled(bool enabled) {
    g_parallel.store(enabled, std::memory_order_relaxed);
}

namespace {
constexpr std::size_t kMinParallelWork = 1u << 15;

inline bool go_parallel(std::size_t work) {
    return parallel_enabled() && work >= kMinParallelWork;
}
}  // namespace

void matmul_nn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    if (go_parallel(m * k * n)) return parallel::matmul_nn(a, b, c, m, k, n, accumulate);
    serial::matmul_nn(a, b, c, m, k, n, accumulate);
}

void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    if (go_parallel(m * k * n)) return parallel::matmul_tn(a, b, c, m, k, n, accumulate);
    serial::matmul_tn(a, b, c, m, k, n, accumulate);
}

void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    if (go_parallel(m * k * n)) return parallel::matmul_nt(a, b, c, m, k, n, accumulate);
    serial::matmul_nt(a, b, c, m, k, n, accumulate);
}

namespace {
inline std::size_t conv_work(const Conv2dDims& d) {
    return d.batch * d.out_ch * d.out_h() * d.out_w() * d.in_ch * d.k_h * d.k_w;
}
}  // namespace

void conv2d_forward(const double* x, const double* w, const double* bias,
                    double* y, const Conv2dDims& d) {
    if (go_parallel(conv_work(d))) return parallel::conv2d_forward(x, w, bias, y, d);
    serial::conv2d_forward(x, w, bias, y, d);
}

void conv2d_backward_input(const double* dy, const double* w, double* dx,
                           const Conv2dDims& d, bool accumulate) {
    if (go_parallel(conv_work(d)))
        return parallel::conv2d_backward_input(dy, w, dx, d, accumulate);
    serial::conv2d_backward_input(dy, w, dx, d, accumulate);
}

void conv2d_backward_weights(const double* x, const double* dy, double* dw,
                             const Conv2dDims& d, bool accumulate) {
    if (go_parallel(conv_work(d)))
        return parallel::conv2d_backward_weights(x, dy, dw, d, accumulate);
    serial::conv2d_backward_weights(x, dy, dw, d, accumulate);
}

void conv2d_backward_bias(const double* dy, double* db, const Conv2dDims& d,
                          bool accumulate) {
    if (go_parallel(d.batch * d.out_ch * d.out_h() * d.out_w()))
        return parallel::conv2d_backward_bias(dy, db, d, accumulate);
    serial::conv2d_backward_bias(dy, db, d, accumulate);
}

}  // namespace sclr::kernels
