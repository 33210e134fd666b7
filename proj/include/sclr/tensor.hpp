#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

namespace sclr {

class Tape;

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& s);
std::string shape_to_string(const Shape& s);

// Dense row-major f64 tensor. The buffer is immutable after construction and
// shared freely between tensors. A tensor is "tracked" when it additionally
// carries a node handle on a Tape; a tracked tensor must not outlive its tape.
class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, std::vector<double> data);

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double value);
    static Tensor scalar(double value) { return Tensor({1}, {value}); }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }
    std::size_t size() const { return data_ ? data_->size() : 0; }
    bool defined() const { return static_cast<bool>(data_); }

    const std::vector<double>& data() const { return *data_; }
    std::shared_ptr<const std::vector<double>> data_ptr() const { return data_; }
    double at(std::size_t flat) const { return (*data_)[flat]; }
    double item() const;  // requires size() == 1

    bool tracked() const { return tape_ != nullptr; }
    Tape* tape() const { return tape_; }
    int node() const { return node_; }

private:
    friend class Tape;
    Shape shape_;
    std::shared_ptr<const std::vector<double>> data_;
    Tape* tape_ = nullptr;
    int node_ = -1;
};

// Reverse-mode Wengert list. Nodes are appended in evaluation order, so every
// node's parents precede it; backward() is a single reverse sweep. Not
// thread-safe: construction and backward belong to one thread of control.
class Tape {
public:
    // (tape, upstream gradient of this node's value) -> accumulate into the
    // parents' buffers via grad_buffer().
    using BackwardFn = std::function<void(Tape&, const std::vector<double>&)>;

    Tensor leaf(Shape shape, std::vector<double> data);
    // Tracked alias of `t` sharing its buffer. Each call creates a new leaf.
    Tensor watch(const Tensor& t);
    Tensor record(Shape shape, std::vector<double> data, BackwardFn fn);

    // Accumulation buffer for a node, zero-initialized on first access during
    // a backward sweep; nullptr for node < 0 (untracked parents).
    std::vector<double>* grad_buffer(int node);

    // root must be a single-element tensor on this tape. Populates gradients
    // for every node that can reach root; unreachable leaves read back as
    // zeros from grad().
    void backward(const Tensor& root);
    Tensor grad(const Tensor& t) const;

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        std::size_t size = 0;
        BackwardFn backward;
    };
    std::vector<Node> nodes_;
    std::vector<std::unique_ptr<std::vector<double>>> grads_;
    bool ran_backward_ = false;
};

// Resolves the tape shared by the tracked inputs (nullptr if none are
// tracked); throws if two inputs live on different tapes.
Tape* common_tape(std::initializer_list<const Tensor*> inputs);

// Registers a custom differentiable op: result tracks iff any input tracks.
Tensor make_op(Shape shape, std::vector<double> data,
               std::initializer_list<const Tensor*> inputs, Tape::BackwardFn fn);

// Elementwise ops support identical shapes plus scalar-vs-tensor overloads.
Tensor add(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, double b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, double b);
Tensor sub(double a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor neg(const Tensor& a);
Tensor relu(const Tensor& a);  // gradient at exactly 0 is 0
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);  // rejects non-positive inputs

Tensor matmul(const Tensor& a, const Tensor& b);  // [m x k] * [k x n]
Tensor transpose(const Tensor& a);                // rank 2
// x[B x C x H x W], w[O x C x kh x kw], bias[O]; zero padding
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias,
              std::size_t stride, std::size_t pad);

Tensor sum(const Tensor& a);   // scalar
Tensor mean(const Tensor& a);  // scalar
Tensor global_avg_pool(const Tensor& x);  // [B x C x H x W] -> [B x C]
Tensor concat_rows(const Tensor& a, const Tensor& b);  // rank 2, same cols
Tensor reshape(const Tensor& a, Shape shape);
Tensor add_rows(const Tensor& a, const Tensor& row);  // a[N x d] + row[d]
Tensor l2_normalize(const Tensor& z);  // unit rows of z[N x d]

}  // namespace sclr
