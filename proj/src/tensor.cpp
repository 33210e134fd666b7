#include "sclr/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "sclr/kernels.hpp"

namespace sclr {

std::size_t shape_size(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

std::string shape_to_string(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << ", ";
        os << s[i];
    }
    os << "]";
    return os.str();
}

namespace {

void check_shape(const Shape& s, const std::vector<double>& data) {
    if (s.empty()) throw std::invalid_argument("tensor shape must be non-empty");
    for (std::size_t d : s)
        if (d == 0) throw std::invalid_argument("tensor dimensions must be positive");
    if (shape_size(s) != data.size())
        throw std::invalid_argument("tensor data size " + std::to_string(data.size()) +
                                    " does not match shape " + shape_to_string(s));
}

#ifndef NDEBUG
void debug_check_finite(const std::vector<double>& v, const char* op) {
    for (double x : v)
        if (!std::isfinite(x))
            throw std::runtime_error(std::string(op) + ": non-finite value in forward result");
}
#define SCLR_CHECK_FINITE(v, op) debug_check_finite(v, op)
#else
#define SCLR_CHECK_FINITE(v, op) ((void)0)
#endif

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                    shape_to_string(a.shape()) + " vs " +
                                    shape_to_string(b.shape()));
}

void axpy(std::vector<double>* dst, const std::vector<double>& src, double a = 1.0) {
    if (!dst) return;
    for (std::size_t i = 0; i < src.size(); ++i) (*dst)[i] += a * src[i];
}

}  // namespace

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)) {
    check_shape(shape_, data);
    data_ = std::make_shared<const std::vector<double>>(std::move(data));
}

Tensor Tensor::zeros(Shape shape) {
    std::vector<double> d(shape_size(shape), 0.0);
    return Tensor(std::move(shape), std::move(d));
}

Tensor Tensor::full(Shape shape, double value) {
    std::vector<double> d(shape_size(shape), value);
    return Tensor(std::move(shape), std::move(d));
}

double Tensor::item() const {
    if (size() != 1)
        throw std::invalid_argument("item(): tensor has " + std::to_string(size()) +
                                    " elements, expected 1");
    return (*data_)[0];
}

Tensor Tape::leaf(Shape shape, std::vector<double> data) {
    Tensor t(std::move(shape), std::move(data));
    t.tape_ = this;
    t.node_ = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{t.size(), nullptr});
    return t;
}

Tensor Tape::watch(const Tensor& t) {
    if (!t.defined()) throw std::invalid_argument("watch: undefined tensor");
    Tensor out = t;
    out.tape_ = this;
    out.node_ = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{t.size(), nullptr});
    return out;
}

Tensor Tape::record(Shape shape, std::vector<double> data, BackwardFn fn) {
    Tensor t(std::move(shape), std::move(data));
    t.tape_ = this;
    t.node_ = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{t.size(), std::move(fn)});
    return t;
}

std::vector<double>* Tape::grad_buffer(int node) {
    if (node < 0) return nullptr;
    auto& slot = grads_[static_cast<std::size_t>(node)];
    if (!slot)
        slot = std::make_unique<std::vector<double>>(nodes_[static_cast<std::size_t>(node)].size, 0.0);
    return slot.get();
}

void Tape::backward(const Tensor& root) {
    if (root.tape() != this)
        throw std::invalid_argument("backward: root tensor is not on this tape");
    if (root.size() != 1)
        throw std::invalid_argument("backward: root must be a scalar, got shape " +
                                    shape_to_string(root.shape()));
    grads_.clear();
    grads_.resize(nodes_.size());
    ran_backward_ = true;
    *grad_buffer(root.node()) = {1.0};
    for (int i = root.node(); i >= 0; --i) {
        const auto& slot = grads_[static_cast<std::size_t>(i)];
        if (!slot) continue;
        const auto& node = nodes_[static_cast<std::size_t>(i)];
        if (node.backward) node.backward(*this, *slot);
    }
}

Tensor Tape::grad(const Tensor& t) const {
    if (t.tape() != this)
        throw std::invalid_argument("grad: tensor is not on this tape");
    if (!ran_backward_) throw std::logic_error("grad: backward() has not run");
    const auto& slot = grads_[static_cast<std::size_t>(t.node())];
    if (!slot) return Tensor::zeros(t.shape());
    return Tensor(t.shape(), *slot);
}

Tape* common_tape(std::initializer_list<const Tensor*> inputs) {
    Tape* tape = nullptr;
    for (const Tensor* t : inputs) {
        if (!t->tracked()) continue;
        if (tape && tape != t->tape())
            throw std::invalid_argument("op inputs belong to different tapes");
        tape = t->tape();
    }
    return tape;
}

Tensor make_op(Shape shape, std::vector<double> data,
               std::initializer_list<const Tensor*> inputs, Tape::BackwardFn fn) {
    SCLR_CHECK_FINITE(data, "op");
    Tape* tape = common_tape(inputs);
    if (!tape) return Tensor(std::move(shape), std::move(data));
    return tape->record(std::move(shape), std::move(data), std::move(fn));
}

// ---- elementwise ----

namespace {

template <class Fwd>
Tensor binary_same_shape(const char* name, const Tensor& a, const Tensor& b, Fwd f,
                         double da, double db) {
    check_same_shape(name, a, b);
    const std::size_t n = a.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = f(a.data()[i], b.data()[i]);
    const int an = a.node(), bn = b.node();
    return make_op(a.shape(), std::move(out), {&a, &b},
                   [an, bn, da, db](Tape& t, const std::vector<double>& g) {
                       axpy(t.grad_buffer(an), g, da);
                       axpy(t.grad_buffer(bn), g, db);
                   });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_same_shape("add", a, b, [](double x, double y) { return x + y; }, 1.0, 1.0);
}

Tensor add(const Tensor& a, double b) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a.data()[i] + b;
    const int an = a.node();
    return make_op(a.shape(), std::move(out), {&a},
                   [an](Tape& t, const std::vector<double>& g) { axpy(t.grad_buffer(an), g); });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_same_shape("sub", a, b, [](double x, double y) { return x - y; }, 1.0, -1.0);
}

Tensor sub(const Tensor& a, double b) { return add(a, -b); }

Tensor sub(double a, const Tensor& b) {
    std::vector<double> out(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) out[i] = a - b.data()[i];
    const int bn = b.node();
    return make_op(b.shape(), std::move(out), {&b},
                   [bn](Tape& t, const std::vector<double>& g) { axpy(t.grad_buffer(bn), g, -1.0); });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape("mul", a, b);
    const std::size_t n = a.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = a.data()[i] * b.data()[i];
    const int an = a.node(), bn = b.node();
    auto ad = a.data_ptr(), bd = b.data_ptr();
    return make_op(a.shape(), std::move(out), {&a, &b},
                   [an, bn, ad, bd, n](Tape& t, const std::vector<double>& g) {
                       if (auto* ga = t.grad_buffer(an))
                           for (std::size_t i = 0; i < n; ++i) (*ga)[i] += g[i] * (*bd)[i];
                       if (auto* gb = t.grad_buffer(bn))
                           for (std::size_t i = 0; i < n; ++i) (*gb)[i] += g[i] * (*ad)[i];
                   });
}

Tensor scale(const Tensor& a, double s) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a.data()[i] * s;
    const int an = a.node();
    return make_op(a.shape(), std::move(out), {&a},
                   [an, s](Tape& t, const std::vector<double>& g) { axpy(t.grad_buffer(an), g, s); });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor relu(const Tensor& a) {
    const std::size_t n = a.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = a.data()[i] > 0.0 ? a.data()[i] : 0.0;
    const int an = a.node();
    auto ad = a.data_ptr();
    return make_op(a.shape(), std::move(out), {&a},
                   [an, ad, n](Tape& t, const std::vector<double>& g) {
                       if (auto* ga = t.grad_buffer(an))
                           for (std::size_t i = 0; i < n; ++i)
                               if ((*ad)[i] > 0.0) (*ga)[i] += g[i];
                   });
}

Tensor exp(const Tensor& a) {
    const std::size_t n = a.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(a.data()[i]);
    const int an = a.node();
    auto yd = std::make_shared<std::vector<double>>(out);
    return make_op(a.shape(), std::move(out), {&a},
                   [an, yd, n](Tape& t, const std::vector<double>& g) {
                       if (auto* ga = t.grad_buffer(an))
                           for (std::size_t i = 0; i < n; ++i) (*ga)[i] += g[i] * (*yd)[i];
                   });
}

Tensor log(const Tensor& a) {
    const std::size_t n = a.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(a.data()[i] > 0.0))
            throw std::domain_error("log: non-positive input " + std::to_string(a.data()[i]) +
                                    " at index " + std::to_string(i));
        out[i] = std::log(a.data()[i]);
    }
    const int an = a.node();
    auto ad = a.data_ptr();
    return make_op(a.shape(), std::move(out), {&a},
                   [an, ad, n](Tape& t, const std::vector<double>& g) {
                       if (auto* ga = t.grad_buffer(an))
                           for (std::size_t i = 0; i < n; ++i) (*ga)[i] += g[i] / (*ad)[i];
                   });
}

// ---- linear algebra ----

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw std::invalid_argument("matmul: expected rank-2 tensors, got " +
                                    shape_to_string(a.shape()) + " and " +
                                    shape_to_string(b.shape()));
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k)
        throw std::invalid_argument("matmul: inner dimensions disagree, " +
                                    shape_to_string(a.shape()) + " vs " +
                                    shape_to_string(b.shape()));
    std::vector<double> out(m * n);
    kernels::matmul_nn(a.data().data(), b.data().data(), out.data(), m, k, n, false);
    const int an = a.node(), bn = b.node();
    auto ad = a.data_ptr(), bd = b.data_ptr();
    return make_op({m, n}, std::move(out), {&a, &b},
                   [an, bn, ad, bd, m, k, n](Tape& t, const std::vector<double>& g) {
                       if (auto* ga = t.grad_buffer(an))  // dA = g * B^T
                           kernels::matmul_nt(g.data(), bd->data(), ga->data(), m, n, k, true);
                       if (auto* gb = t.grad_buffer(bn))  // dB = A^T * g
                           kernels::matmul_tn(ad->data(), g.data(), gb->data(), k, m, n, true);
                   });
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2)
        throw std::invalid_argument("transpose: expected rank-2 tensor, got " +
                                    shape_to_string(a.shape()));
    const std::size_t m = a.dim(0), n = a.dim(1);
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a.data()[i * n + j];
    const int an = a.node();
    return make_op({n, m}, std::move(out), {&a},
                   [an, m, n](Tape& t, const std::vector<double>& g) {
                       if (auto* ga = t.grad_buffer(an))
                           for (std::size_t i = 0; i < m; ++i)
                               for (std::size_t j = 0; j < n; ++j)
                                   (*ga)[i * n + j] += g[j * m + i];
                   });
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias,
              std::size_t stride, std::size_t pad) {
    if (x.rank() != 4 || w.rank() != 4)
        throw std::invalid_argument("conv2d: expected rank-4 input and weights, got " +
                                    shape_to_string(x.shape()) + " and " +
                                    shape_to_string(w.shape()));
    kernels::Conv2dDims d;
    d.batch = x.dim(0);
    d.in_ch = x.dim(1);
    d.in_h = x.dim(2);
    d.in_w = x.dim(3);
    d.out_ch = w.dim(0);
    d.k_h = w.dim(2);
    d.k_w = w.dim(3);
    d.stride = stride;
    d.pad = pad;
    if (w.dim(1) != d.in_ch)
        throw std::invalid_argument("conv2d: channel mismatch " + shape_to_string(x.shape()) +
                                    " vs " + shape_to_string(w.shape()));
    if (stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
    if (d.k_h > d.in_h + 2 * pad || d.k_w > d.in_w + 2 * pad)
        throw std::invalid_argument("conv2d: kernel " + shape_to_string(w.shape()) +
                                    " larger than padded input " + shape_to_string(x.shape()) +
                                    " with pad " + std::to_string(pad));
    if (bias.rank() != 1 || bias.dim(0) != d.out_ch)
        throw std::invalid_argument("conv2d: bias shape " + shape_to_string(bias.shape()) +
                                    " does not match " + std::to_string(d.out_ch) + " filters");

    std::vector<double> out(d.batch * d.out_ch * d.out_h() * d.out_w());
    kernels::conv2d_forward(x.data().data(), w.data().data(), bias.data().data(), out.data(), d);

    const int xn = x.node(), wn = w.node(), bn = bias.node();
    auto xd = x.data_ptr(), wd = w.data_ptr();
    return make_op({d.batch, d.out_ch, d.out_h(), d.out_w()}, std::move(out), {&x, &w, &bias},
                   [xn, wn, bn, xd, wd, d](Tape& t, const std::vector<double>& g) {
                       if (auto* gx = t.grad_buffer(xn))
                           kernels::conv2d_backward_input(g.data(), wd->data(), gx->data(), d, true);
                       if (auto* gw = t.grad_buffer(wn))
                           kernels::conv2d_backward_weights(xd->data(), g.data(), gw->data(), d, true);
                       if (auto* gb = t.grad_buffer(bn))
                           kernels::conv2d_backward_bias(g.data(), gb->data(), d, true);
                   });
}

// ---- reductions & shape ----

Tensor sum(const Tensor& a) {
    double acc = 0.0;
    for (double v : a.data()) acc += v;
    const int an = a.node();
    const std::size_t n = a.size();
    return make_op({1}, {acc}, {&a}, [an, n](Tape& t, const std::vector<double>& g) {
        if (auto* ga = t.grad_buffer(an))
            for (std::size_t i = 0; i < n; ++i) (*ga)[i] += g[0];
    });
}

Tensor mean(const Tensor& a) {
    double acc = 0.0;
    for (double v : a.data()) acc += v;
    const std::size_t n = a.size();
    const double inv = 1.0 / static_cast<double>(n);
    const int an = a.node();
    return make_op({1}, {acc * inv}, {&a}, [an, n, inv](Tape& t, const std::vector<double>& g) {
        if (auto* ga = t.grad_buffer(an))
            for (std::size_t i = 0; i < n; ++i) (*ga)[i] += g[0] * inv;
    });
}

Tensor global_avg_pool(const Tensor& x) {
    if (x.rank() != 4)
        throw std::invalid_argument("global_avg_pool: expected rank-4 tensor, got " +
                                    shape_to_string(x.shape()));
    const std::size_t b_n = x.dim(0), c_n = x.dim(1), spatial = x.dim(2) * x.dim(3);
    const double inv = 1.0 / static_cast<double>(spatial);
    std::vector<double> out(b_n * c_n);
    for (std::size_t b = 0; b < b_n; ++b)
        for (std::size_t c = 0; c < c_n; ++c) {
            const double* p = x.data().data() + (b * c_n + c) * spatial;
            double acc = 0.0;
            for (std::size_t s = 0; s < spatial; ++s) acc += p[s];
            out[b * c_n + c] = acc * inv;
        }
    const int xn = x.node();
    return make_op({b_n, c_n}, std::move(out), {&x},
                   [xn, b_n, c_n, spatial, inv](Tape& t, const std::vector<double>& g) {
                       if (auto* gx = t.grad_buffer(xn))
                           for (std::size_t b = 0; b < b_n; ++b)
                               for (std::size_t c = 0; c < c_n; ++c) {
                                   const double gv = g[b * c_n + c] * inv;
                                   double* p = gx->data() + (b * c_n + c) * spatial;
                                   for (std::size_t s = 0; s < spatial; ++s) p[s] += gv;
                               }
                   });
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1))
        throw std::invalid_argument("concat_rows: incompatible shapes " +
                                    shape_to_string(a.shape()) + " and " +
                                    shape_to_string(b.shape()));
    const std::size_t ra = a.dim(0), rb = b.dim(0), d = a.dim(1);
    std::vector<double> out;
    out.reserve((ra + rb) * d);
    out.insert(out.end(), a.data().begin(), a.data().end());
    out.insert(out.end(), b.data().begin(), b.data().end());
    const int an = a.node(), bn = b.node();
    const std::size_t na = ra * d, nb = rb * d;
    return make_op({ra + rb, d}, std::move(out), {&a, &b},
                   [an, bn, na, nb](Tape& t, const std::vector<double>& g) {
                       if (auto* ga = t.grad_buffer(an))
                           for (std::size_t i = 0; i < na; ++i) (*ga)[i] += g[i];
                       if (auto* gb = t.grad_buffer(bn))
                           for (std::size_t i = 0; i < nb; ++i) (*gb)[i] += g[na + i];
                   });
}

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_size(shape) != a.size())
        throw std::invalid_argument("reshape: cannot view " + shape_to_string(a.shape()) +
                                    " as " + shape_to_string(shape));
    const int an = a.node();
    std::vector<double> out = a.data();
    return make_op(std::move(shape), std::move(out), {&a},
                   [an](Tape& t, const std::vector<double>& g) { axpy(t.grad_buffer(an), g); });
}

Tensor add_rows(const Tensor& a, const Tensor& row) {
    if (a.rank() != 2 || row.rank() != 1 || row.dim(0) != a.dim(1))
        throw std::invalid_argument("add_rows: incompatible shapes " +
                                    shape_to_string(a.shape()) + " and " +
                                    shape_to_string(row.shape()));
    const std::size_t n = a.dim(0), d = a.dim(1);
    std::vector<double> out(n * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) out[i * d + j] = a.data()[i * d + j] + row.data()[j];
    const int an = a.node(), rn = row.node();
    return make_op(a.shape(), std::move(out), {&a, &row},
                   [an, rn, n, d](Tape& t, const std::vector<double>& g) {
                       axpy(t.grad_buffer(an), g);
                       if (auto* gr = t.grad_buffer(rn)) {
                           // column sums land in the buffer as one rounded
                           // contribution per element, like the kernels do
                           std::vector<double> cols(d, 0.0);
                           for (std::size_t i = 0; i < n; ++i)
                               for (std::size_t j = 0; j < d; ++j) cols[j] += g[i * d + j];
                           for (std::size_t j = 0; j < d; ++j) (*gr)[j] += cols[j];
                       }
                   });
}

Tensor l2_normalize(const Tensor& z) {
    if (z.rank() != 2)
        throw std::invalid_argument("l2_normalize: expected rank-2 tensor, got " +
                                    shape_to_string(z.shape()));
    const std::size_t n = z.dim(0), d = z.dim(1);
    std::vector<double> out(n * d);
    auto norms = std::make_shared<std::vector<double>>(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) sq += z.data()[i * d + j] * z.data()[i * d + j];
        const double r = std::sqrt(sq);
        if (r <= 1e-12)
            throw std::domain_error("l2_normalize: row " + std::to_string(i) +
                                    " has near-zero norm (degenerate embedding)");
        (*norms)[i] = r;
        const double inv = 1.0 / r;
        for (std::size_t j = 0; j < d; ++j) out[i * d + j] = z.data()[i * d + j] * inv;
    }
    const int zn = z.node();
    auto ud = std::make_shared<std::vector<double>>(out);
    return make_op(z.shape(), std::move(out), {&z},
                   [zn, ud, norms, n, d](Tape& t, const std::vector<double>& g) {
                       auto* gz = t.grad_buffer(zn);
                       if (!gz) return;
                       // d(z/r)/dz applied to g: (g - u * (g . u)) / r per row
                       for (std::size_t i = 0; i < n; ++i) {
                           const double* u = ud->data() + i * d;
                           const double* gi = g.data() + i * d;
                           double dot = 0.0;
                           for (std::size_t j = 0; j < d; ++j) dot += gi[j] * u[j];
                           const double inv = 1.0 / (*norms)[i];
                           for (std::size_t j = 0; j < d; ++j)
                               (*gz)[i * d + j] += (gi[j] - u[j] * dot) * inv;
                       }
                   });
}

}  // namespace sclr
