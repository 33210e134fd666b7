#pragma once

#include <cstddef>

namespace sclr::kernels {

// Inner-loop kernels for the dense ops. Each kernel exists twice: a serial
// reference under kernels::serial and an OpenMP variant under
// kernels::parallel. The parallel variants distribute whole output elements
// across threads and keep every per-element reduction in the serial order, so
// serial and parallel results are bit-identical for any thread count.
//
// `accumulate == false` overwrites the output; `accumulate == true` adds into
// it (used by the reverse pass, whose gradient buffers may already hold
// contributions from other consumers).

struct Conv2dDims {
    std::size_t batch = 0;
    std::size_t in_ch = 0;
    std::size_t in_h = 0;
    std::size_t in_w = 0;
    std::size_t out_ch = 0;
    std::size_t k_h = 0;
    std::size_t k_w = 0;
    std::size_t stride = 1;
    std::size_t pad = 0;

    std::size_t out_h() const { return (in_h + 2 * pad - k_h) / stride + 1; }
    std::size_t out_w() const { return (in_w + 2 * pad - k_w) / stride + 1; }
};

namespace serial {

// c[m x n] = a[m x k] * b[k x n]
void matmul_nn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate);
// c[m x n] = a[k x m]^T * b[k x n]
void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate);
// c[m x n] = a[m x k] * b[n x k]^T
void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate);

void conv2d_forward(const double* x, const double* w, const double* bias,
                    double* y, const Conv2dDims& d);
void conv2d_backward_input(const double* dy, const double* w, double* dx,
                           const Conv2dDims& d, bool accumulate);
void conv2d_backward_weights(const double* x, const double* dy, double* dw,
                             const Conv2dDims& d, bool accumulate);
void conv2d_backward_bias(const double* dy, double* db, const Conv2dDims& d,
                          bool accumulate);

}  // namespace serial

namespace parallel {

void matmul_nn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate);

void conv2d_forward(const double* x, const double* w, const double* bias,
                    double* y, const Conv2dDims& d);
void conv2d_backward_input(const double* dy, const double* w, double* dx,
                           const Conv2dDims& d, bool accumulate);
void conv2d_backward_weights(const double* x, const double* dy, double* dw,
                             const Conv2dDims& d, bool accumulate);
void conv2d_backward_bias(const double* dy, double* db, const Conv2dDims& d,
                          bool accumulate);

}  // namespace parallel

// Runtime switch consulted by the dispatching entry points below. Defaults to
// true; small problems fall back to the serial path regardless.
bool parallel_enabled();
void set_parallel_enabled(bool enabled);

void matmul_nn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);
void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);
void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);
void conv2d_forward(const double* x, const double* w, const double* bias,
                    double* y, const Conv2dDims& d);
void conv2d_backward_input(const double* dy, const double* w, double* dx,
                           const Conv2dDims& d, bool accumulate = false);
void conv2d_backward_weights(const double* x, const double* dy, double* dw,
                             const Conv2dDims& d, bool accumulate = false);
void conv2d_backward_bias(const double* dy, double* db, const Conv2dDims& d,
                          bool accumulate = false);

}  // namespace sclr::kernels
