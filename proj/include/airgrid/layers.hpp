#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "airgrid/rng.hpp"
#include "airgrid/tensor.hpp"

namespace airgrid {

struct Param {
    std::string name;
    Shape shape;
    std::vector<double> value;
};

class ParamSet;

// Tape leaves aligned with a ParamSet, addressable by parameter name.
struct BoundParams {
    const ParamSet* set = nullptr;
    std::vector<Tensor> vars;

    const Tensor& operator()(const std::string& name) const;
};

// Named parameter tensors, ordered by creation. Initialization draws in
// creation order from a seeded RNG: uniform(+-1/sqrt(fan_in)) for anything
// 2-D or higher, zeros for vectors (biases).
class ParamSet {
public:
    Param& add(const std::string& name, Shape shape);
    bool has(const std::string& name) const { return index_.count(name) > 0; }
    Param& at(const std::string& name);
    const Param& at(const std::string& name) const;
    std::size_t index_of(const std::string& name) const;
    std::size_t count() const { return params_.size(); }
    Param& param(std::size_t i) { return params_[i]; }
    const Param& param(std::size_t i) const { return params_[i]; }

    void init(Rng& rng);

    // Leaves on the tape, aligned with parameter order. requires_grad only
    // when with_grad is set, so inference records nothing.
    std::vector<Tensor> bind(Tape& tape, bool with_grad = true) const;
    BoundParams bind_named(Tape& tape, bool with_grad = true) const;

    // grads[i] += tape gradient of bound[i]
    void accumulate_grads(const Tape& tape, const std::vector<Tensor>& bound,
                          std::vector<std::vector<double>>& grads) const;
    std::vector<std::vector<double>> zero_grads() const;

    double max_abs_difference(const ParamSet& other) const;

private:
    std::vector<Param> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Versioned named-tensor container; round-trips bit-exactly.
void save_checkpoint(const std::string& path, const ParamSet& params);
ParamSet load_checkpoint(const std::string& path);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam over a ParamSet.
class Adam {
public:
    Adam(const ParamSet& params, AdamConfig cfg);
    void step(ParamSet& params, const std::vector<std::vector<double>>& grads);
    std::int64_t steps() const { return t_; }

private:
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
    std::int64_t t_ = 0;
};

// h' = tanh(x W_xh + h W_hh + b_h), rows are batch entries
Tensor rnn_step(Tape& tape, const Tensor& x, const Tensor& h, const Tensor& w_xh,
                const Tensor& w_hh, const Tensor& b_h);

struct GruWeights {
    Tensor w_z, u_z, b_z;
    Tensor w_r, u_r, b_r;
    Tensor w_h, u_h, b_h;
};

Tensor gru_step(Tape& tape, const Tensor& x, const Tensor& h, const GruWeights& w);

// X' = relu(A_norm X W); a_norm is the dense normalized adjacency
Tensor gcn_layer(Tape& tape, const Tensor& x, const Tensor& a_norm, const Tensor& w);

// Single-head graph attention. a is [2*d_out, 1]; neighborhoods include the
// node itself (edge_list_with_self). LeakyReLU slope 0.2.
Tensor gat_layer(Tape& tape, const Tensor& x, const EdgeList& edges, const Tensor& w,
                 const Tensor& a);

// Exposes the attention row for inspection/testing alongside the output.
struct GatResult {
    Tensor output;
    Tensor alpha;  // one weight per edge, grouped like edges
};
GatResult gat_layer_detail(Tape& tape, const Tensor& x, const EdgeList& edges, const Tensor& w,
                           const Tensor& a);

// Gate convolutions over 2-D fields; x-side convolutions carry the bias.
struct ConvGruWeights {
    Tensor conv_z_w, conv_z_b, conv_hz_w;
    Tensor conv_r_w, conv_r_b, conv_hr_w;
    Tensor conv_h_w, conv_h_b, conv_hh_w;
};

Tensor convgru_step(Tape& tape, const Tensor& x, const Tensor& h, const ConvGruWeights& w);

Tensor masked_mse(Tape& tape, const Tensor& pred, const Tensor& target, const Tensor& mask);

}  // namespace airgrid
