#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "airgrid/kernels.hpp"
#include "airgrid/rng.hpp"

using namespace airgrid;

namespace {
std::vector<double> random_vec(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-2.0, 2.0);
    return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a[i] == doctest::Approx(b[i]).epsilon(tol));
}
}  // namespace

TEST_CASE("matmul agrees with the serial reference in all transpose modes") {
    Rng rng(1);
    for (auto [n, k, m] : {std::tuple{3, 4, 5}, {7, 1, 9}, {16, 33, 8}, {1, 1, 1}}) {
        for (bool ta : {false, true}) {
            for (bool tb : {false, true}) {
                auto a = random_vec(rng, static_cast<std::size_t>(n) * k);
                auto b = random_vec(rng, static_cast<std::size_t>(k) * m);
                std::vector<double> c1(static_cast<std::size_t>(n) * m), c2 = c1;
                kernels::matmul(a.data(), b.data(), c1.data(), n, k, m, ta, tb);
                kernels::ref::matmul(a.data(), b.data(), c2.data(), n, k, m, ta, tb);
                check_close(c1, c2, 1e-12);
            }
        }
    }
}

TEST_CASE("matmul accumulate adds onto the output") {
    Rng rng(2);
    const int n = 4, k = 3, m = 5;
    auto a = random_vec(rng, n * k);
    auto b = random_vec(rng, k * m);
    auto base = random_vec(rng, n * m);
    auto c1 = base, c2 = base;
    kernels::matmul(a.data(), b.data(), c1.data(), n, k, m, false, false, true);
    kernels::ref::matmul(a.data(), b.data(), c2.data(), n, k, m, false, false, true);
    check_close(c1, c2, 1e-12);
}

TEST_CASE("matmul result does not depend on the thread count") {
    Rng rng(3);
    const int n = 37, k = 29, m = 41;
    auto a = random_vec(rng, static_cast<std::size_t>(n) * k);
    auto b = random_vec(rng, static_cast<std::size_t>(k) * m);
    std::vector<double> c1(static_cast<std::size_t>(n) * m), c2 = c1;
    kernels::set_num_threads(1);
    kernels::matmul(a.data(), b.data(), c1.data(), n, k, m);
    kernels::set_num_threads(2);
    kernels::matmul(a.data(), b.data(), c2.data(), n, k, m);
    kernels::set_num_threads(0);
    for (std::size_t i = 0; i < c1.size(); ++i) CHECK(c1[i] == c2[i]);  // bitwise
}

TEST_CASE("conv2d center of an all-ones window sums the window") {
    const int c_in = 1, c_out = 1, h = 5, w = 5, kh = 3, kw = 3;
    std::vector<double> in(h * w, 1.0), kern(kh * kw, 1.0), out(h * w, -1.0);
    kernels::conv2d_forward(in.data(), kern.data(), nullptr, out.data(), c_in, c_out, h, w, kh, kw);
    CHECK(out[2 * w + 2] == doctest::Approx(9.0));
    CHECK(out[0] == doctest::Approx(4.0));  // corner sees a 2x2 window
}

TEST_CASE("conv2d agrees with the serial reference") {
    Rng rng(4);
    const int c_in = 3, c_out = 4, h = 7, w = 6, kh = 3, kw = 5;
    auto in = random_vec(rng, static_cast<std::size_t>(c_in) * h * w);
    auto kern = random_vec(rng, static_cast<std::size_t>(c_out) * c_in * kh * kw);
    auto bias = random_vec(rng, c_out);
    std::vector<double> o1(static_cast<std::size_t>(c_out) * h * w), o2 = o1;
    kernels::conv2d_forward(in.data(), kern.data(), bias.data(), o1.data(), c_in, c_out, h, w, kh, kw);
    kernels::ref::conv2d_forward(in.data(), kern.data(), bias.data(), o2.data(), c_in, c_out, h, w, kh, kw);
    check_close(o1, o2, 1e-12);
}

TEST_CASE("conv2d rejects even kernels") {
    std::vector<double> in(4), kern(4), out(4);
    CHECK_THROWS(kernels::conv2d_forward(in.data(), kern.data(), nullptr, out.data(), 1, 1, 2, 2, 2, 2));
}

TEST_CASE("conv2d backward matches finite differences of the forward") {
    Rng rng(5);
    const int c_in = 2, c_out = 2, h = 4, w = 3, kh = 3, kw = 3;
    auto in = random_vec(rng, static_cast<std::size_t>(c_in) * h * w);
    auto kern = random_vec(rng, static_cast<std::size_t>(c_out) * c_in * kh * kw);
    auto gout = random_vec(rng, static_cast<std::size_t>(c_out) * h * w);

    // scalar objective sum(conv(in, kern) .* gout)
    auto objective = [&](const std::vector<double>& i, const std::vector<double>& k) {
        std::vector<double> out(static_cast<std::size_t>(c_out) * h * w);
        kernels::ref::conv2d_forward(i.data(), k.data(), nullptr, out.data(), c_in, c_out, h, w, kh, kw);
        double s = 0.0;
        for (std::size_t j = 0; j < out.size(); ++j) s += out[j] * gout[j];
        return s;
    };

    std::vector<double> gin(in.size());
    kernels::conv2d_backward_input(gout.data(), kern.data(), gin.data(), c_in, c_out, h, w, kh, kw);
    std::vector<double> gk(kern.size());
    kernels::conv2d_backward_kernel(in.data(), gout.data(), gk.data(), c_in, c_out, h, w, kh, kw);

    const double eps = 1e-6;
    for (std::size_t j = 0; j < in.size(); j += 5) {
        auto probe = in;
        probe[j] += eps;
        const double fp = objective(probe, kern);
        probe[j] -= 2 * eps;
        const double fm = objective(probe, kern);
        CHECK(gin[j] == doctest::Approx((fp - fm) / (2 * eps)).epsilon(1e-5));
    }
    for (std::size_t j = 0; j < kern.size(); j += 7) {
        auto probe = kern;
        probe[j] += eps;
        const double fp = objective(in, probe);
        probe[j] -= 2 * eps;
        const double fm = objective(in, probe);
        CHECK(gk[j] == doctest::Approx((fp - fm) / (2 * eps)).epsilon(1e-5));
    }
}
