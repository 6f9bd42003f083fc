#include "airgrid/layers.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace airgrid {

Param& ParamSet::add(const std::string& name, Shape shape) {
    if (index_.count(name)) throw std::invalid_argument("ParamSet: duplicate parameter " + name);
    index_[name] = params_.size();
    params_.push_back(Param{name, shape, std::vector<double>(static_cast<std::size_t>(shape_size(shape)), 0.0)});
    return params_.back();
}

Param& ParamSet::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("ParamSet: no parameter named " + name);
    return params_[it->second];
}

std::size_t ParamSet::index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("ParamSet: no parameter named " + name);
    return it->second;
}

const Tensor& BoundParams::operator()(const std::string& name) const {
    return vars[set->index_of(name)];
}

const Param& ParamSet::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("ParamSet: no parameter named " + name);
    return params_[it->second];
}

void ParamSet::init(Rng& rng) {
    for (auto& p : params_) {
        if (p.shape.size() < 2) {
            std::fill(p.value.begin(), p.value.end(), 0.0);
            continue;
        }
        std::int64_t fan_in = 1;
        if (p.shape.size() == 4) {
            fan_in = static_cast<std::int64_t>(p.shape[1]) * p.shape[2] * p.shape[3];
        } else {
            fan_in = p.shape[0];
        }
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (auto& v : p.value) v = rng.uniform(-bound, bound);
    }
}

std::vector<Tensor> ParamSet::bind(Tape& tape, bool with_grad) const {
    std::vector<Tensor> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(tape.leaf(p.shape, p.value, with_grad));
    return out;
}

BoundParams ParamSet::bind_named(Tape& tape, bool with_grad) const {
    return BoundParams{this, bind(tape, with_grad)};
}

void ParamSet::accumulate_grads(const Tape& tape, const std::vector<Tensor>& bound,
                                std::vector<std::vector<double>>& grads) const {
    if (bound.size() != params_.size() || grads.size() != params_.size())
        throw std::invalid_argument("accumulate_grads: size mismatch");
    for (std::size_t i = 0; i < bound.size(); ++i) {
        const auto& g = tape.grad(bound[i]);
        auto& acc = grads[i];
        for (std::size_t j = 0; j < g.size(); ++j) acc[j] += g[j];
    }
}

std::vector<std::vector<double>> ParamSet::zero_grads() const {
    std::vector<std::vector<double>> grads;
    grads.reserve(params_.size());
    for (const auto& p : params_) grads.emplace_back(p.value.size(), 0.0);
    return grads;
}

double ParamSet::max_abs_difference(const ParamSet& other) const {
    if (other.params_.size() != params_.size())
        throw std::invalid_argument("max_abs_difference: parameter count mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const auto& a = params_[i].value;
        const auto& b = other.params_[i].value;
        if (a.size() != b.size()) throw std::invalid_argument("max_abs_difference: shape mismatch");
        for (std::size_t j = 0; j < a.size(); ++j)
            worst = std::max(worst, std::abs(a[j] - b[j]));
    }
    return worst;
}

namespace {
constexpr char kCkptMagic[4] = {'A', 'G', 'C', 'K'};
constexpr std::uint32_t kCkptVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& is, T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("checkpoint: truncated file");
}
}  // namespace

void save_checkpoint(const std::string& path, const ParamSet& params) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
    os.write(kCkptMagic, 4);
    write_pod(os, kCkptVersion);
    write_pod(os, static_cast<std::uint64_t>(params.count()));
    for (std::size_t i = 0; i < params.count(); ++i) {
        const Param& p = params.param(i);
        write_pod(os, static_cast<std::uint32_t>(p.name.size()));
        os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        write_pod(os, static_cast<std::uint32_t>(p.shape.size()));
        for (int d : p.shape) write_pod(os, static_cast<std::int64_t>(d));
        os.write(reinterpret_cast<const char*>(p.value.data()),
                 static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    }
    if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

ParamSet load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kCkptMagic, 4) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    std::uint32_t version = 0;
    read_pod(is, version);
    if (version != kCkptVersion) throw std::runtime_error("checkpoint: unsupported version");
    std::uint64_t n = 0;
    read_pod(is, n);
    ParamSet out;
    for (std::uint64_t i = 0; i < n; ++i) {
        std::uint32_t name_len = 0;
        read_pod(is, name_len);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        std::uint32_t ndim = 0;
        read_pod(is, ndim);
        Shape shape(ndim);
        for (auto& d : shape) {
            std::int64_t v = 0;
            read_pod(is, v);
            d = static_cast<int>(v);
        }
        Param& p = out.add(name, shape);
        is.read(reinterpret_cast<char*>(p.value.data()),
                static_cast<std::streamsize>(p.value.size() * sizeof(double)));
        if (!is) throw std::runtime_error("checkpoint: truncated file " + path);
    }
    return out;
}

Adam::Adam(const ParamSet& params, AdamConfig cfg) : cfg_(cfg) {
    m_.reserve(params.count());
    v_.reserve(params.count());
    for (std::size_t i = 0; i < params.count(); ++i) {
        m_.emplace_back(params.param(i).value.size(), 0.0);
        v_.emplace_back(params.param(i).value.size(), 0.0);
    }
}

void Adam::step(ParamSet& params, const std::vector<std::vector<double>>& grads) {
    if (grads.size() != m_.size()) throw std::invalid_argument("Adam: gradient count mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < grads.size(); ++i) {
        auto& val = params.param(i).value;
        const auto& g = grads[i];
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < val.size(); ++j) {
            m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
            v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            val[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

Tensor rnn_step(Tape& tape, const Tensor& x, const Tensor& h, const Tensor& w_xh,
                const Tensor& w_hh, const Tensor& b_h) {
    Tensor pre = tape.add(tape.matmul(x, w_xh), tape.matmul(h, w_hh));
    return tape.tanh(tape.add_bias(pre, b_h));
}

Tensor gru_step(Tape& tape, const Tensor& x, const Tensor& h, const GruWeights& w) {
    Tensor z = tape.sigmoid(tape.add_bias(tape.add(tape.matmul(x, w.w_z), tape.matmul(h, w.u_z)), w.b_z));
    Tensor r = tape.sigmoid(tape.add_bias(tape.add(tape.matmul(x, w.w_r), tape.matmul(h, w.u_r)), w.b_r));
    Tensor rh = tape.mul(r, h);
    Tensor cand = tape.tanh(tape.add_bias(tape.add(tape.matmul(x, w.w_h), tape.matmul(rh, w.u_h)), w.b_h));
    // h' = (1 - z) .* h + z .* cand
    Tensor keep = tape.mul(tape.affine(z, -1.0, 1.0), h);
    return tape.add(keep, tape.mul(z, cand));
}

Tensor gcn_layer(Tape& tape, const Tensor& x, const Tensor& a_norm, const Tensor& w) {
    return tape.relu(tape.matmul(tape.matmul(a_norm, x), w));
}

GatResult gat_layer_detail(Tape& tape, const Tensor& x, const EdgeList& edges, const Tensor& w,
                           const Tensor& a) {
    if (a.shape().size() != 2 || a.shape()[1] != 1 || a.shape()[0] != 2 * w.shape()[1]) {
        throw std::invalid_argument("gat_layer: attention vector must be [2*d_out, 1], got " +
                                    shape_str(a.shape()));
    }
    const int d = w.shape()[1];
    Tensor hfeat = tape.matmul(x, w);  // n x d
    Tensor a_dst = tape.slice_rows(a, 0, d);
    Tensor a_src = tape.slice_rows(a, d, 2 * d);
    Tensor s_dst = tape.matmul(hfeat, a_dst);  // n x 1
    Tensor s_src = tape.matmul(hfeat, a_src);  // n x 1
    Tensor logits = tape.leaky_relu(
        tape.add(tape.gather_rows(s_dst, edges.seg), tape.gather_rows(s_src, edges.nbr)), 0.2);
    Tensor alpha = tape.segment_softmax(logits, edges.seg, edges.n_nodes);
    Tensor agg = tape.attention_aggregate(alpha, hfeat, edges);
    return GatResult{tape.relu(agg), alpha};
}

Tensor gat_layer(Tape& tape, const Tensor& x, const EdgeList& edges, const Tensor& w,
                 const Tensor& a) {
    return gat_layer_detail(tape, x, edges, w, a).output;
}

Tensor convgru_step(Tape& tape, const Tensor& x, const Tensor& h, const ConvGruWeights& w) {
    Tensor z = tape.sigmoid(tape.add(tape.conv2d(x, w.conv_z_w, w.conv_z_b), tape.conv2d(h, w.conv_hz_w)));
    Tensor r = tape.sigmoid(tape.add(tape.conv2d(x, w.conv_r_w, w.conv_r_b), tape.conv2d(h, w.conv_hr_w)));
    Tensor rh = tape.mul(r, h);
    Tensor cand = tape.tanh(tape.add(tape.conv2d(x, w.conv_h_w, w.conv_h_b), tape.conv2d(rh, w.conv_hh_w)));
    Tensor keep = tape.mul(tape.affine(z, -1.0, 1.0), h);
    return tape.add(keep, tape.mul(z, cand));
}

Tensor masked_mse(Tape& tape, const Tensor& pred, const Tensor& target, const Tensor& mask) {
    return tape.masked_mse(pred, target, mask);
}

}  // namespace airgrid
