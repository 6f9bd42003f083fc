#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <vector>

#include "airgrid/rng.hpp"
#include "airgrid/tensor.hpp"

using namespace airgrid;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo = -1.5, double hi = 1.5) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

// builds a scalar graph from a flat parameter vector on a fresh tape
using GraphFn = std::function<Tensor(Tape&, const Tensor&)>;

double check_graph_gradient(const Shape& shape, const std::vector<double>& x0, const GraphFn& fn,
                            double eps = 1e-5) {
    Tape tape;
    Tensor x = tape.leaf(shape, x0, true);
    Tensor y = fn(tape, x);
    tape.backward(y);
    const std::vector<double> analytic = tape.grad(x);
    auto f = [&](const std::vector<double>& v) {
        Tape t2;
        Tensor xv = t2.leaf(shape, v, false);
        return fn(t2, xv).values()[0];
    };
    return grad_check_max_rel_err(f, x0, analytic, eps);
}

}  // namespace

TEST_CASE("matmul with the identity leaves a matrix unchanged") {
    Tape tape;
    Tensor a = tape.leaf({2, 2}, {1, 2, 3, 4});
    Tensor i = tape.leaf({2, 2}, {1, 0, 0, 1});
    Tensor b = tape.matmul(a, i);
    CHECK(b.values() == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("shape mismatches name both shapes") {
    Tape tape;
    Tensor a = tape.leaf({2, 3}, std::vector<double>(6, 0.0));
    Tensor b = tape.leaf({2, 2}, std::vector<double>(4, 0.0));
    CHECK_THROWS_WITH_AS(tape.matmul(a, b), doctest::Contains("[2,3]"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(tape.add(a, b), doctest::Contains("[2,2]"), std::invalid_argument);
}

TEST_CASE("softmax over a single neighbor gives weight one") {
    Tape tape;
    Tensor logits = tape.leaf({1, 1}, {3.7});
    Tensor alpha = tape.segment_softmax(logits, {0}, 1);
    CHECK(alpha.values()[0] == doctest::Approx(1.0));
}

TEST_CASE("segment_softmax rows sum to one and backward matches finite differences") {
    Rng rng(9);
    const std::vector<int> seg = {0, 0, 0, 1, 1, 2, 2, 2, 2};
    const int e = static_cast<int>(seg.size());
    const auto x0 = random_vec(rng, static_cast<std::size_t>(e));
    const auto w = random_vec(rng, static_cast<std::size_t>(e));

    Tape tape;
    Tensor logits = tape.leaf({e, 1}, x0, true);
    Tensor alpha = tape.segment_softmax(logits, seg, 3);
    double sums[3] = {0, 0, 0};
    for (int i = 0; i < e; ++i) sums[seg[static_cast<std::size_t>(i)]] += alpha.values()[static_cast<std::size_t>(i)];
    for (double s : sums) CHECK(s == doctest::Approx(1.0).epsilon(1e-12));

    const double rel = check_graph_gradient({e, 1}, x0, [&](Tape& t, const Tensor& x) {
        Tensor a = t.segment_softmax(x, seg, 3);
        Tensor wv = t.leaf({e, 1}, w);
        return t.sum(t.mul(a, wv));
    });
    CHECK(rel < 1e-7);
}

TEST_CASE("elementwise and activation gradients match finite differences") {
    Rng rng(10);
    const Shape shape{3, 4};
    const auto x0 = random_vec(rng, 12);
    const auto other = random_vec(rng, 12);
    const auto weight = random_vec(rng, 12);

    auto weighted_sum = [&](Tape& t, const Tensor& v) {
        return t.sum(t.mul(v, t.leaf(shape, weight)));
    };

    CHECK(check_graph_gradient(shape, x0, [&](Tape& t, const Tensor& x) {
              return weighted_sum(t, t.add(x, t.leaf(shape, other)));
          }) < 1e-8);
    CHECK(check_graph_gradient(shape, x0, [&](Tape& t, const Tensor& x) {
              return weighted_sum(t, t.sub(t.leaf(shape, other), x));
          }) < 1e-8);
    CHECK(check_graph_gradient(shape, x0, [&](Tape& t, const Tensor& x) {
              return weighted_sum(t, t.mul(x, t.leaf(shape, other)));
          }) < 1e-8);
    CHECK(check_graph_gradient(shape, x0, [&](Tape& t, const Tensor& x) {
              return weighted_sum(t, t.affine(x, -2.5, 0.75));
          }) < 1e-8);
    CHECK(check_graph_gradient(shape, x0, [&](Tape& t, const Tensor& x) {
              return weighted_sum(t, t.tanh(x));
          }) < 1e-7);
    CHECK(check_graph_gradient(shape, x0, [&](Tape& t, const Tensor& x) {
              return weighted_sum(t, t.sigmoid(x));
          }) < 1e-7);
    CHECK(check_graph_gradient(shape, x0, [&](Tape& t, const Tensor& x) {
              return weighted_sum(t, t.relu(x));
          }) < 1e-7);
    CHECK(check_graph_gradient(shape, x0, [&](Tape& t, const Tensor& x) {
              return weighted_sum(t, t.leaky_relu(x, 0.2));
          }) < 1e-7);
}

TEST_CASE("matmul, bias, concat, slice and gather gradients") {
    Rng rng(11);
    const auto a0 = random_vec(rng, 6);   // 2x3
    const auto b0 = random_vec(rng, 12);  // 3x4
    const auto w = random_vec(rng, 8);    // 2x4

    CHECK(check_graph_gradient({2, 3}, a0, [&](Tape& t, const Tensor& x) {
              Tensor b = t.leaf({3, 4}, b0);
              return t.sum(t.mul(t.matmul(x, b), t.leaf({2, 4}, w)));
          }) < 1e-8);
    CHECK(check_graph_gradient({3, 4}, b0, [&](Tape& t, const Tensor& x) {
              Tensor a = t.leaf({2, 3}, a0);
              return t.sum(t.mul(t.matmul(a, x), t.leaf({2, 4}, w)));
          }) < 1e-8);
    CHECK(check_graph_gradient({4}, {0.1, -0.2, 0.3, -0.4}, [&](Tape& t, const Tensor& bias) {
              Tensor x = t.leaf({2, 4}, w);
              return t.sum(t.mul(t.add_bias(x, bias), t.leaf({2, 4}, w)));
          }) < 1e-8);
    CHECK(check_graph_gradient({2, 3}, a0, [&](Tape& t, const Tensor& x) {
              Tensor other = t.leaf({2, 2}, {1, 2, 3, 4});
              Tensor cat = t.concat_cols(x, other);  // 2x5
              Tensor sl = t.slice_rows(cat, 1, 2);   // 1x5
              return t.sum(t.mul(sl, sl));
          }) < 1e-7);
    CHECK(check_graph_gradient({3, 2}, random_vec(rng, 6), [&](Tape& t, const Tensor& x) {
              Tensor g = t.gather_rows(x, {2, 0, 2, 1});
              return t.sum(t.mul(g, g));
          }) < 1e-7);
}

TEST_CASE("attention_aggregate gradients through weights and features") {
    Rng rng(12);
    EdgeList edges;
    edges.n_nodes = 3;
    edges.seg = {0, 0, 1, 1, 2};
    edges.nbr = {0, 1, 1, 2, 2};
    const int e = 5, d = 3;
    const auto feats0 = random_vec(rng, 9);
    const auto alpha0 = random_vec(rng, e, 0.1, 1.0);
    const auto w = random_vec(rng, 9);

    CHECK(check_graph_gradient({e, 1}, alpha0, [&](Tape& t, const Tensor& a) {
              Tensor f = t.leaf({3, d}, feats0);
              return t.sum(t.mul(t.attention_aggregate(a, f, edges), t.leaf({3, d}, w)));
          }) < 1e-7);
    CHECK(check_graph_gradient({3, d}, feats0, [&](Tape& t, const Tensor& f) {
              Tensor a = t.leaf({e, 1}, alpha0);
              return t.sum(t.mul(t.attention_aggregate(a, f, edges), t.leaf({3, d}, w)));
          }) < 1e-7);
}

TEST_CASE("conv2d gradients on a 3x3 grid") {
    Rng rng(13);
    const int c_in = 2, c_out = 2, h = 3, w = 3, kh = 3, kw = 3;
    const auto in0 = random_vec(rng, static_cast<std::size_t>(c_in) * h * w);
    const auto k0 = random_vec(rng, static_cast<std::size_t>(c_out) * c_in * kh * kw);
    const auto b0 = random_vec(rng, c_out);
    const auto wsum = random_vec(rng, static_cast<std::size_t>(c_out) * h * w);

    auto weighted = [&](Tape& t, const Tensor& out) {
        return t.sum(t.mul(out, t.leaf({c_out, h, w}, wsum)));
    };
    CHECK(check_graph_gradient({c_in, h, w}, in0, [&](Tape& t, const Tensor& x) {
              return weighted(t, t.conv2d(x, t.leaf({c_out, c_in, kh, kw}, k0), t.leaf({c_out}, b0)));
          }) < 1e-7);
    CHECK(check_graph_gradient({c_out, c_in, kh, kw}, k0, [&](Tape& t, const Tensor& k) {
              return weighted(t, t.conv2d(t.leaf({c_in, h, w}, in0), k, t.leaf({c_out}, b0)));
          }) < 1e-7);
    CHECK(check_graph_gradient({c_out}, b0, [&](Tape& t, const Tensor& b) {
              return weighted(t, t.conv2d(t.leaf({c_in, h, w}, in0), t.leaf({c_out, c_in, kh, kw}, k0), b));
          }) < 1e-7);
}

TEST_CASE("masked_mse basics") {
    Tape tape;
    Tensor pred = tape.leaf({2}, {1.0, 2.0}, true);
    Tensor target = tape.leaf({2}, {1.0, 3.0});
    Tensor mask = tape.leaf({2}, {1.0, 1.0});
    Tensor loss = tape.masked_mse(pred, target, mask);
    CHECK(loss.values()[0] == doctest::Approx(0.5));

    Tape t2;
    Tensor p2 = t2.leaf({2}, {1.0, 2.0}, true);
    Tensor l2 = t2.masked_mse(p2, t2.leaf({2}, {9.0, 3.0}), t2.leaf({2}, {0.0, 1.0}));
    CHECK(l2.values()[0] == doctest::Approx(1.0));
    t2.backward(l2);
    CHECK(t2.grad(p2)[0] == 0.0);  // exactly zero at masked-out coordinates
    CHECK(t2.grad(p2)[1] == doctest::Approx(-2.0));
}

TEST_CASE("masked_mse with an empty mask is zero with zero gradient") {
    Tape tape;
    Tensor pred = tape.leaf({3}, {1.0, 2.0, 3.0}, true);
    Tensor loss = tape.masked_mse(pred, tape.leaf({3}, {0.0, 0.0, 0.0}),
                                  tape.leaf({3}, {0.0, 0.0, 0.0}));
    CHECK(loss.values()[0] == 0.0);
    tape.backward(loss);
    for (double g : tape.grad(pred)) CHECK(g == 0.0);
}

TEST_CASE("perturbing predictions at masked-out entries changes nothing") {
    Rng rng(14);
    const auto p0 = random_vec(rng, 8);
    const auto t0 = random_vec(rng, 8);
    std::vector<double> m0 = {1, 0, 1, 0, 0, 1, 1, 0};

    auto run = [&](const std::vector<double>& pv) {
        Tape tape;
        Tensor w = tape.leaf({8}, p0, true);
        Tensor pred = tape.add(w, tape.leaf({8}, pv));
        Tensor loss = tape.masked_mse(pred, tape.leaf({8}, t0), tape.leaf({8}, m0));
        tape.backward(loss);
        return std::pair{loss.values()[0], tape.grad(w)};
    };
    std::vector<double> zero(8, 0.0), bump(8, 0.0);
    for (std::size_t i = 0; i < 8; ++i)
        if (m0[i] == 0.0) bump[i] = 1e6;  // huge perturbation where the mask is off
    const auto [l1, g1] = run(zero);
    const auto [l2, g2] = run(bump);
    CHECK(l1 == l2);
    for (std::size_t i = 0; i < 8; ++i) CHECK(g1[i] == g2[i]);
}

TEST_CASE("backward requires a recorded scalar root") {
    Tape tape;
    Tensor x = tape.leaf({2}, {1.0, 2.0});  // no grad
    Tensor y = tape.affine(x, 2.0, 0.0);
    CHECK_THROWS(tape.backward(y));
    Tensor xg = tape.leaf({2}, {1.0, 2.0}, true);
    CHECK_THROWS(tape.backward(tape.affine(xg, 1.0, 0.0)));  // not scalar
}

TEST_CASE("inference without gradients records no nodes") {
    Tape tape;
    Tensor a = tape.leaf({4, 4}, std::vector<double>(16, 1.0));
    Tensor b = tape.leaf({4, 4}, std::vector<double>(16, 2.0));
    (void)tape.sum(tape.tanh(tape.matmul(a, b)));
    CHECK(tape.node_count() == 0);
}

TEST_CASE("grad_check is exact for a linear functional") {
    Rng rng(15);
    const auto x0 = random_vec(rng, 6);
    const auto c = random_vec(rng, 6);
    auto f = [&](const std::vector<double>& v) {
        double s = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) s += c[i] * v[i];
        return s;
    };
    // the difference quotient is exact for linear f at any eps; a larger
    // step just suppresses floating-point cancellation
    CHECK(grad_check_max_rel_err(f, x0, c, 1e-3) < 1e-9);
}
