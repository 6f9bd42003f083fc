#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace airgrid {

using Shape = std::vector<int>;

std::int64_t shape_size(const Shape& s);
std::string shape_str(const Shape& s);

class Tape;

// Dense float64 value. Data is shared and treated as immutable once the
// tensor exists; gradient tracking happens on the tape that created it.
class Tensor {
public:
    Tensor() = default;

    bool defined() const { return static_cast<bool>(data_); }
    const Shape& shape() const { return shape_; }
    std::int64_t size() const { return data_ ? static_cast<std::int64_t>(data_->size()) : 0; }
    const std::vector<double>& values() const { return *data_; }
    bool requires_grad() const { return node_ >= 0; }
    int node() const { return node_; }

private:
    friend class Tape;
    Tensor(Shape shape, std::shared_ptr<std::vector<double>> data, int node)
        : data_(std::move(data)), shape_(std::move(shape)), node_(node) {}

    std::shared_ptr<std::vector<double>> data_;
    Shape shape_;
    int node_ = -1;
};

// Edge list of a neighborhood structure, grouped by destination segment.
// seg[e] is the receiving node, nbr[e] the contributing node.
struct EdgeList {
    std::vector<int> seg;
    std::vector<int> nbr;
    int n_nodes = 0;
};

// Records operations for reverse-mode differentiation. Values are computed
// eagerly; a node (with its backward rule) is recorded only when some input
// requires a gradient, so pure inference pays no tape cost. backward()
// visits nodes in exact reverse recording order.
class Tape {
public:
    Tensor leaf(Shape shape, std::vector<double> values, bool requires_grad = false);
    Tensor zeros(Shape shape, bool requires_grad = false);

    Tensor add(const Tensor& a, const Tensor& b);
    Tensor sub(const Tensor& a, const Tensor& b);
    Tensor mul(const Tensor& a, const Tensor& b);
    // scale * x + shift, elementwise
    Tensor affine(const Tensor& x, double scale, double shift);
    // x is [n x m], bias is [m], broadcast over rows
    Tensor add_bias(const Tensor& x, const Tensor& bias);
    Tensor matmul(const Tensor& a, const Tensor& b);
    Tensor tanh(const Tensor& x);
    Tensor sigmoid(const Tensor& x);
    Tensor relu(const Tensor& x);
    Tensor leaky_relu(const Tensor& x, double slope = 0.2);
    Tensor concat_cols(const Tensor& a, const Tensor& b);
    Tensor slice_rows(const Tensor& x, int row_begin, int row_end);
    Tensor gather_rows(const Tensor& x, std::vector<int> idx);
    // Softmax over contiguous groups of logits sharing a segment id.
    Tensor segment_softmax(const Tensor& logits, std::vector<int> seg, int n_seg);
    // out[i] = sum over edges e with seg[e] == i of alpha[e] * feats[nbr[e], :]
    Tensor attention_aggregate(const Tensor& alpha, const Tensor& feats, const EdgeList& edges);
    // in [c_in, h, w], kernel [c_out, c_in, kh, kw], zero padding, same size
    Tensor conv2d(const Tensor& in, const Tensor& kernel);
    Tensor conv2d(const Tensor& in, const Tensor& kernel, const Tensor& bias);
    Tensor sum(const Tensor& x);
    Tensor scale(const Tensor& x, double factor);
    // Sum of squared error over entries where mask is nonzero. Gradients of
    // masked-out entries are exactly zero; target and mask are constants.
    Tensor masked_sse(const Tensor& pred, const Tensor& target, const Tensor& mask);
    // masked_sse / max(1, #masked-true); empty mask yields loss 0.
    Tensor masked_mse(const Tensor& pred, const Tensor& target, const Tensor& mask);

    void backward(const Tensor& root);
    const std::vector<double>& grad(const Tensor& t) const;
    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        std::int64_t size = 0;
        std::function<void(Tape&)> back;  // empty for leaves
    };

    int record(std::int64_t out_size, std::function<void(Tape&)> back);
    Tensor make(Shape shape, std::vector<double> values, std::function<void(Tape&)> back,
                bool any_grad);
    std::vector<double>& grad_buf(int node) { return grads_[static_cast<std::size_t>(node)]; }

    std::vector<Node> nodes_;
    std::vector<std::vector<double>> grads_;
};

// Max relative error between an analytic gradient and central differences of
// f around x. rel err = |a - n| / max(1e-8, |a| + |n|).
double grad_check_max_rel_err(const std::function<double(const std::vector<double>&)>& f,
                              const std::vector<double>& x, const std::vector<double>& analytic,
                              double eps = 1e-5);

}  // namespace airgrid
