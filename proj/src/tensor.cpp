#include "airgrid/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "airgrid/kernels.hpp"

namespace airgrid {

std::int64_t shape_size(const Shape& s) {
    std::int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ']';
    return os.str();
}

namespace {

void check_same(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                    " vs " + shape_str(b.shape()));
    }
}

using Data = std::shared_ptr<std::vector<double>>;

}  // namespace

int Tape::record(std::int64_t out_size, std::function<void(Tape&)> back) {
    nodes_.push_back(Node{out_size, std::move(back)});
    return static_cast<int>(nodes_.size()) - 1;
}

Tensor Tape::make(Shape shape, std::vector<double> values, std::function<void(Tape&)> back,
                  bool any_grad) {
    auto data = std::make_shared<std::vector<double>>(std::move(values));
    int node = -1;
    if (any_grad) node = record(static_cast<std::int64_t>(data->size()), std::move(back));
    return Tensor(std::move(shape), std::move(data), node);
}

Tensor Tape::leaf(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape_size(shape) != static_cast<std::int64_t>(values.size()))
        throw std::invalid_argument("leaf: value count does not match shape " + shape_str(shape));
    return make(std::move(shape), std::move(values), {}, requires_grad);
}

Tensor Tape::zeros(Shape shape, bool requires_grad) {
    std::vector<double> v(static_cast<std::size_t>(shape_size(shape)), 0.0);
    return make(std::move(shape), std::move(v), {}, requires_grad);
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
    check_same("add", a, b);
    const auto& av = a.values();
    const auto& bv = b.values();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    if (!a.requires_grad() && !b.requires_grad()) return make(a.shape(), std::move(out), {}, false);
    const int self = static_cast<int>(nodes_.size());
    const int an = a.node(), bn = b.node();
    return make(a.shape(), std::move(out),
                [self, an, bn](Tape& t) {
                    const auto& g = t.grad_buf(self);
                    if (an >= 0) {
                        auto& ga = t.grad_buf(an);
                        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                    }
                    if (bn >= 0) {
                        auto& gb = t.grad_buf(bn);
                        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
                    }
                },
                true);
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
    check_same("sub", a, b);
    const auto& av = a.values();
    const auto& bv = b.values();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
    if (!a.requires_grad() && !b.requires_grad()) return make(a.shape(), std::move(out), {}, false);
    const int self = static_cast<int>(nodes_.size());
    const int an = a.node(), bn = b.node();
    return make(a.shape(), std::move(out),
                [self, an, bn](Tape& t) {
                    const auto& g = t.grad_buf(self);
                    if (an >= 0) {
                        auto& ga = t.grad_buf(an);
                        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                    }
                    if (bn >= 0) {
                        auto& gb = t.grad_buf(bn);
                        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
                    }
                },
                true);
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
    check_same("mul", a, b);
    const auto& av = a.values();
    const auto& bv = b.values();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
    if (!a.requires_grad() && !b.requires_grad()) return make(a.shape(), std::move(out), {}, false);
    const int self = static_cast<int>(nodes_.size());
    const int an = a.node(), bn = b.node();
    Data ad = a.data_, bd = b.data_;
    return make(a.shape(), std::move(out),
                [self, an, bn, ad, bd](Tape& t) {
                    const auto& g = t.grad_buf(self);
                    if (an >= 0) {
                        auto& ga = t.grad_buf(an);
                        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (*bd)[i];
                    }
                    if (bn >= 0) {
                        auto& gb = t.grad_buf(bn);
                        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * (*ad)[i];
                    }
                },
                true);
}

Tensor Tape::affine(const Tensor& x, double scale, double shift) {
    const auto& xv = x.values();
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * xv[i] + shift;
    if (!x.requires_grad()) return make(x.shape(), std::move(out), {}, false);
    const int self = static_cast<int>(nodes_.size());
    const int xn = x.node();
    return make(x.shape(), std::move(out),
                [self, xn, scale](Tape& t) {
                    const auto& g = t.grad_buf(self);
                    auto& gx = t.grad_buf(xn);
                    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += scale * g[i];
                },
                true);
}

Tensor Tape::add_bias(const Tensor& x, const Tensor& bias) {
    if (x.shape().size() != 2 || bias.shape().size() != 1 || x.shape()[1] != bias.shape()[0]) {
        throw std::invalid_argument("add_bias: shape mismatch " + shape_str(x.shape()) + " vs " +
                                    shape_str(bias.shape()));
    }
    const int n = x.shape()[0], m = x.shape()[1];
    const auto& xv = x.values();
    const auto& bv = bias.values();
    std::vector<double> out(xv.size());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) out[static_cast<std::size_t>(i) * m + j] = xv[static_cast<std::size_t>(i) * m + j] + bv[j];
    if (!x.requires_grad() && !bias.requires_grad()) return make(x.shape(), std::move(out), {}, false);
    const int self = static_cast<int>(nodes_.size());
    const int xn = x.node(), bn = bias.node();
    return make(x.shape(), std::move(out),
                [self, xn, bn, n, m](Tape& t) {
                    const auto& g = t.grad_buf(self);
                    if (xn >= 0) {
                        auto& gx = t.grad_buf(xn);
                        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                    }
                    if (bn >= 0) {
                        auto& gb = t.grad_buf(bn);
                        for (int i = 0; i < n; ++i)
                            for (int j = 0; j < m; ++j) gb[j] += g[static_cast<std::size_t>(i) * m + j];
                    }
                },
                true);
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0]) {
        throw std::invalid_argument("matmul: shape mismatch " + shape_str(a.shape()) + " vs " +
                                    shape_str(b.shape()));
    }
    const int n = a.shape()[0], k = a.shape()[1], m = b.shape()[1];
    std::vector<double> out(static_cast<std::size_t>(n) * m);
    kernels::matmul(a.values().data(), b.values().data(), out.data(), n, k, m);
    if (!a.requires_grad() && !b.requires_grad()) return make({n, m}, std::move(out), {}, false);
    const int self = static_cast<int>(nodes_.size());
    const int an = a.node(), bn = b.node();
    Data ad = a.data_, bd = b.data_;
    return make({n, m}, std::move(out),
                [self, an, bn, ad, bd, n, k, m](Tape& t) {
                    const auto& g = t.grad_buf(self);
                    if (an >= 0) {
                        // dA += G * B^T   (n x m) (m x k)
                        kernels::matmul(g.data(), bd->data(), t.grad_buf(an).data(), n, m, k,
                                        false, true, true);
                    }
                    if (bn >= 0) {
                        // dB += A^T * G   (k x n) (n x m)
                        kernels::matmul(ad->data(), g.data(), t.grad_buf(bn).data(), k, n, m,
                                        true, false, true);
                    }
                },
                true);
}

namespace {
template <typename Fwd>
std::vector<double> map_values(const std::vector<double>& in, Fwd f) {
    std::vector<double> out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
    return out;
}
}  // namespace

Tensor Tape::tanh(const Tensor& x) {
    auto out = map_values(x.values(), [](double v) { return std::tanh(v); });
    if (!x.requires_grad()) return make(x.shape(), std::move(out), {}, false);
    const int self = static_cast<int>(nodes_.size());
    const int xn = x.node();
    auto od = std::make_shared<std::vector<double>>(out);
    return make(x.shape(), std::move(out),
                [self, xn, od](Tape& t) {
                    const auto& g = t.grad_buf(self);
                    auto& gx = t.grad_buf(xn);
                    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - (*od)[i] * (*od)[i]);
                },
                true);
}

Tensor Tape::sigmoid(const Tensor& x) {
    auto out = map_values(x.values(), [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    if (!x.requires_grad()) return make(x.shape(), std::move(out), {}, false);
    const int self = static_cast<int>(nodes_.size());
    const int xn = x.node();
    auto od = std::make_shared<std::vector<double>>(out);
    return make(x.shape(), std::move(out),
                [self, xn, od](Tape& t) {
                    const auto& g = t.grad_buf(self);
                    auto& gx = t.grad_buf(xn);
                    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (*od)[i] * (1.0 - (*od)[i]);
                },
                true);
}

Tensor Tape::relu(const Tensor& x) {
    auto out = map_values(x.values(), [](double v) { return v > 0.0 ? v : 0.0; });
    if (!x.requires_grad()) return make(x.shape(), std::move(out), {}, false);
    const int self = static_cast<int>(nodes_.size());
    const int xn = x.node();
    Data xd = x.data_;
    return make(x.shape(), std::move(out),
                [self, xn, xd](Tape& t) {
                    const auto& g = t.grad_buf(self);
                    auto& gx = t.grad_buf(xn);
                    for (std::size_t i = 0; i < g.size(); ++i)
                        if ((*xd)[i] > 0.0) gx[i] += g[i];
                },
                true);
}

Tensor Tape::leaky_relu(const Tensor& x, double slope) {
    auto out = map_values(x.values(), [slope](double v) { return v > 0.0 ? v : slope * v; });
    if (!x.requires_grad()) return make(x.shape(), std::move(out), {}, false);
    const int self = static_cast<int>(nodes_.size());
    const int xn = x.node();
    Data xd = x.data_;
    return make(x.shape(), std::move(out),
                [self, xn, xd, slope](Tape& t) {
                    const auto& g = t.grad_buf(self);
                    auto& gx = t.grad_buf(xn);
                    for (std::size_t i = 0; i < g.size(); ++i)
                        gx[i] += g[i] * ((*xd)[i] > 0.0 ? 1.0 : slope);
                },
                true);
}

Tensor Tape::concat_cols(const Tensor& a, const Tensor& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[0] != b.shape()[0]) {
        throw std::invalid_argument("concat_cols: shape mismatch " + shape_str(a.shape()) + " vs " +
                                    shape_str(b.shape()));
    }
    const int n = a.shape()[0], p = a.shape()[1], q = b.shape()[1];
    const auto& av = a.values();
    const auto& bv = b.values();
    std::vector<double> out(static_cast<std::size_t>(n) * (p + q));
    for (int i = 0; i < n; ++i) {
        std::copy_n(av.begin() + static_cast<std::size_t>(i) * p, p,
                    out.begin() + static_cast<std::size_t>(i) * (p + q));
        std::copy_n(bv.begin() + static_cast<std::size_t>(i) * q, q,
                    out.begin() + static_cast<std::size_t>(i) * (p + q) + p);
    }
    if (!a.requires_grad() && !b.requires_grad()) return make({n, p + q}, std::move(out), {}, false);
    const int self = static_cast<int>(nodes_.size());
    const int an = a.node(), bn = b.node();
    return make({n, p + q}, std::move(out),
                [self, an, bn, n, p, q](Tape& t) {
                    const auto& g = t.grad_buf(self);
                    for (int i = 0; i < n; ++i) {
                        const double* grow = g.data() + static_cast<std::size_t>(i) * (p + q);
                        if (an >= 0) {
                            auto& ga = t.grad_buf(an);
                            for (int j = 0; j < p; ++j) ga[static_cast<std::size_t>(i) * p + j] += grow[j];
                        }
                        if (bn >= 0) {
                            auto& gb = t.grad_buf(bn);
                            for (int j = 0; j < q; ++j) gb[static_cast<std::size_t>(i) * q + j] += grow[p + j];
                        }
                    }
                },
                true);
}

Tensor Tape::slice_rows(const Tensor& x, int row_begin, int row_end) {
    if (x.shape().empty() || row_begin < 0 || row_end > x.shape()[0] || row_begin >= row_end)
        throw std::invalid_argument("slice_rows: bad range for shape " + shape_str(x.shape()));
    const std::int64_t row_size = x.size() / x.shape()[0];
    Shape out_shape = x.shape();
    out_shape[0] = row_end - row_begin;
    const auto& xv = x.values();
    std::vector<double> out(xv.begin() + row_begin * row_size, xv.begin() + row_end * row_size);
    if (!x.requires_grad()) return make(std::move(out_shape), std::move(out), {}, false);
    const int self = static_cast<int>(nodes_.size());
    const int xn = x.node();
    return make(std::move(out_shape), std::move(out),
                [self, xn, row_begin, row_size](Tape& t) {
                    const auto& g = t.grad_buf(self);
                    auto& gx = t.grad_buf(xn);
                    for (std::size_t i = 0; i < g.size(); ++i)
                        gx[static_cast<std::size_t>(row_begin) * row_size + i] += g[i];
                },
                true);
}

Tensor Tape::gather_rows(const Tensor& x, std::vector<int> idx) {
    if (x.shape().size() != 2) throw std::invalid_argument("gather_rows: need 2-D input");
    const int n = x.shape()[0], m = x.shape()[1];
    for (int i : idx)
        if (i < 0 || i >= n) throw std::invalid_argument("gather_rows: index out of range");
    const auto& xv = x.values();
    const int e = static_cast<int>(idx.size());
    std::vector<double> out(static_cast<std::size_t>(e) * m);
    for (int r = 0; r < e; ++r)
        std::copy_n(xv.begin() + static_cast<std::size_t>(idx[r]) * m, m,
                    out.begin() + static_cast<std::size_t>(r) * m);
    if (!x.requires_grad()) return make({e, m}, std::move(out), {}, false);
    const int self = static_cast<int>(nodes_.size());
    const int xn = x.node();
    auto ix = std::make_shared<std::vector<int>>(std::move(idx));
    return make({e, m}, std::move(out),
                [self, xn, ix, m](Tape& t) {
                    const auto& g = t.grad_buf(self);
                    auto& gx = t.grad_buf(xn);
                    for (std::size_t r = 0; r < ix->size(); ++r)
                        for (int j = 0; j < m; ++j)
                            gx[static_cast<std::size_t>((*ix)[r]) * m + j] += g[r * m + j];
                },
                true);
}

namespace {
void check_segments(const std::vector<int>& seg, int n_seg, std::size_t e) {
    if (seg.size() != e) throw std::invalid_argument("segment op: segment count mismatch");
    for (std::size_t i = 0; i < seg.size(); ++i) {
        if (seg[i] < 0 || seg[i] >= n_seg) throw std::invalid_argument("segment op: id out of range");
        if (i > 0 && seg[i] < seg[i - 1])
            throw std::invalid_argument("segment op: ids must be grouped ascending");
    }
}
}  // namespace

Tensor Tape::segment_softmax(const Tensor& logits, std::vector<int> seg, int n_seg) {
    const std::size_t e = static_cast<std::size_t>(logits.size());
    check_segments(seg, n_seg, e);
    const auto& lv = logits.values();
    std::vector<double> out(e);
    std::size_t i = 0;
    while (i < e) {
        std::size_t j = i;
        double mx = lv[i];
        while (j < e && seg[j] == seg[i]) mx = std::max(mx, lv[j]), ++j;
        double denom = 0.0;
        for (std::size_t r = i; r < j; ++r) denom += std::exp(lv[r] - mx);
        for (std::size_t r = i; r < j; ++r) out[r] = std::exp(lv[r] - mx) / denom;
        i = j;
    }
    if (!logits.requires_grad()) return make(logits.shape(), std::move(out), {}, false);
    const int self = static_cast<int>(nodes_.size());
    const int ln = logits.node();
    auto sg = std::make_shared<std::vector<int>>(std::move(seg));
    auto od = std::make_shared<std::vector<double>>(out);
    return make(logits.shape(), std::move(out),
                [self, ln, sg, od](Tape& t) {
                    const auto& g = t.grad_buf(self);
                    auto& gl = t.grad_buf(ln);
                    const auto& a = *od;
                    const auto& s = *sg;
                    std::size_t i = 0;
                    const std::size_t e = a.size();
                    while (i < e) {
                        std::size_t j = i;
                        double dot = 0.0;
                        while (j < e && s[j] == s[i]) dot += a[j] * g[j], ++j;
                        for (std::size_t r = i; r < j; ++r) gl[r] += a[r] * (g[r] - dot);
                        i = j;
                    }
                },
                true);
}

Tensor Tape::attention_aggregate(const Tensor& alpha, const Tensor& feats, const EdgeList& edges) {
    if (feats.shape().size() != 2) throw std::invalid_argument("attention_aggregate: feats must be 2-D");
    const std::size_t e = edges.seg.size();
    if (static_cast<std::size_t>(alpha.size()) != e || edges.nbr.size() != e)
        throw std::invalid_argument("attention_aggregate: edge count mismatch");
    const int n = feats.shape()[0], d = feats.shape()[1];
    for (std::size_t r = 0; r < e; ++r) {
        if (edges.nbr[r] < 0 || edges.nbr[r] >= n || edges.seg[r] < 0 || edges.seg[r] >= edges.n_nodes)
            throw std::invalid_argument("attention_aggregate: edge index out of range");
    }
    const auto& av = alpha.values();
    const auto& fv = feats.values();
    std::vector<double> out(static_cast<std::size_t>(edges.n_nodes) * d, 0.0);
    for (std::size_t r = 0; r < e; ++r) {
        const double w = av[r];
        const double* src = fv.data() + static_cast<std::size_t>(edges.nbr[r]) * d;
        double* dst = out.data() + static_cast<std::size_t>(edges.seg[r]) * d;
        for (int j = 0; j < d; ++j) dst[j] += w * src[j];
    }
    if (!alpha.requires_grad() && !feats.requires_grad())
        return make({edges.n_nodes, d}, std::move(out), {}, false);
    const int self = static_cast<int>(nodes_.size());
    const int an = alpha.node(), fn = feats.node();
    Data ad = alpha.data_, fd = feats.data_;
    auto sg = std::make_shared<std::vector<int>>(edges.seg);
    auto nb = std::make_shared<std::vector<int>>(edges.nbr);
    return make({edges.n_nodes, d}, std::move(out),
                [self, an, fn, ad, fd, sg, nb, d](Tape& t) {
                    const auto& g = t.grad_buf(self);
                    for (std::size_t r = 0; r < sg->size(); ++r) {
                        const double* grow = g.data() + static_cast<std::size_t>((*sg)[r]) * d;
                        const double* frow = fd->data() + static_cast<std::size_t>((*nb)[r]) * d;
                        if (an >= 0) {
                            double acc = 0.0;
                            for (int j = 0; j < d; ++j) acc += grow[j] * frow[j];
                            t.grad_buf(an)[r] += acc;
                        }
                        if (fn >= 0) {
                            auto& gf = t.grad_buf(fn);
                            const double w = (*ad)[r];
                            for (int j = 0; j < d; ++j)
                                gf[static_cast<std::size_t>((*nb)[r]) * d + j] += w * grow[j];
                        }
                    }
                },
                true);
}

Tensor Tape::conv2d(const Tensor& in, const Tensor& kernel) { return conv2d(in, kernel, Tensor()); }

Tensor Tape::conv2d(const Tensor& in, const Tensor& kernel, const Tensor& bias) {
    if (in.shape().size() != 3 || kernel.shape().size() != 4 || in.shape()[0] != kernel.shape()[1]) {
        throw std::invalid_argument("conv2d: shape mismatch " + shape_str(in.shape()) + " vs " +
                                    shape_str(kernel.shape()));
    }
    const int c_in = in.shape()[0], h = in.shape()[1], w = in.shape()[2];
    const int c_out = kernel.shape()[0], kh = kernel.shape()[2], kw = kernel.shape()[3];
    if (bias.defined() && (bias.shape().size() != 1 || bias.shape()[0] != c_out))
        throw std::invalid_argument("conv2d: bias shape mismatch " + shape_str(bias.shape()));
    std::vector<double> out(static_cast<std::size_t>(c_out) * h * w);
    kernels::conv2d_forward(in.values().data(), kernel.values().data(),
                            bias.defined() ? bias.values().data() : nullptr, out.data(), c_in,
                            c_out, h, w, kh, kw);
    bool grad = in.requires_grad() || kernel.requires_grad() || (bias.defined() && bias.requires_grad());
    if (!grad) return make({c_out, h, w}, std::move(out), {}, false);
    const int self = static_cast<int>(nodes_.size());
    const int in_n = in.node(), k_n = kernel.node(), b_n = bias.defined() ? bias.node() : -1;
    Data ind = in.data_, kd = kernel.data_;
    return make({c_out, h, w}, std::move(out),
                [self, in_n, k_n, b_n, ind, kd, c_in, c_out, h, w, kh, kw](Tape& t) {
                    const auto& g = t.grad_buf(self);
                    if (in_n >= 0)
                        kernels::conv2d_backward_input(g.data(), kd->data(), t.grad_buf(in_n).data(),
                                                       c_in, c_out, h, w, kh, kw, true);
                    if (k_n >= 0)
                        kernels::conv2d_backward_kernel(ind->data(), g.data(), t.grad_buf(k_n).data(),
                                                        c_in, c_out, h, w, kh, kw, true);
                    if (b_n >= 0)
                        kernels::conv2d_backward_bias(g.data(), t.grad_buf(b_n).data(), c_out, h, w,
                                                      true);
                },
                true);
}

Tensor Tape::sum(const Tensor& x) {
    double acc = 0.0;
    for (double v : x.values()) acc += v;
    if (!x.requires_grad()) return make({1}, {acc}, {}, false);
    const int self = static_cast<int>(nodes_.size());
    const int xn = x.node();
    return make({1}, {acc},
                [self, xn](Tape& t) {
                    const double g = t.grad_buf(self)[0];
                    auto& gx = t.grad_buf(xn);
                    for (auto& v : gx) v += g;
                },
                true);
}

Tensor Tape::scale(const Tensor& x, double factor) { return affine(x, factor, 0.0); }

Tensor Tape::masked_sse(const Tensor& pred, const Tensor& target, const Tensor& mask) {
    check_same("masked_sse", pred, target);
    check_same("masked_sse", pred, mask);
    const auto& pv = pred.values();
    const auto& tv = target.values();
    const auto& mv = mask.values();
    double acc = 0.0;
    for (std::size_t i = 0; i < pv.size(); ++i) {
        if (mv[i] != 0.0) {
            const double d = pv[i] - tv[i];
            acc += d * d;
        }
    }
    if (!pred.requires_grad()) return make({1}, {acc}, {}, false);
    const int self = static_cast<int>(nodes_.size());
    const int pn = pred.node();
    Data pd = pred.data_, td = target.data_, md = mask.data_;
    return make({1}, {acc},
                [self, pn, pd, td, md](Tape& t) {
                    const double g = t.grad_buf(self)[0];
                    auto& gp = t.grad_buf(pn);
                    for (std::size_t i = 0; i < gp.size(); ++i)
                        if ((*md)[i] != 0.0) gp[i] += g * 2.0 * ((*pd)[i] - (*td)[i]);
                },
                true);
}

Tensor Tape::masked_mse(const Tensor& pred, const Tensor& target, const Tensor& mask) {
    std::size_t count = 0;
    for (double m : mask.values())
        if (m != 0.0) ++count;
    Tensor sse = masked_sse(pred, target, mask);
    return scale(sse, 1.0 / static_cast<double>(std::max<std::size_t>(1, count)));
}

void Tape::backward(const Tensor& root) {
    if (!root.defined() || root.node() < 0)
        throw std::invalid_argument("backward: root is not recorded on this tape");
    if (root.size() != 1) throw std::invalid_argument("backward: root must be scalar");
    grads_.resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        grads_[i].assign(static_cast<std::size_t>(nodes_[i].size), 0.0);
    grads_[static_cast<std::size_t>(root.node())][0] = 1.0;
    for (int i = root.node(); i >= 0; --i)
        if (nodes_[static_cast<std::size_t>(i)].back) nodes_[static_cast<std::size_t>(i)].back(*this);
}

const std::vector<double>& Tape::grad(const Tensor& t) const {
    if (t.node() < 0 || static_cast<std::size_t>(t.node()) >= grads_.size())
        throw std::invalid_argument("grad: tensor has no gradient on this tape");
    return grads_[static_cast<std::size_t>(t.node())];
}

double grad_check_max_rel_err(const std::function<double(const std::vector<double>&)>& f,
                              const std::vector<double>& x, const std::vector<double>& analytic,
                              double eps) {
    if (x.size() != analytic.size())
        throw std::invalid_argument("grad_check: gradient size mismatch");
    std::vector<double> probe = x;
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + eps;
        const double fp = f(probe);
        probe[i] = x[i] - eps;
        const double fm = f(probe);
        probe[i] = x[i];
        const double numeric = (fp - fm) / (2.0 * eps);
        const double a = analytic[i];
        const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
        worst = std::max(worst, rel);
    }
    return worst;
}

}  // namespace airgrid
