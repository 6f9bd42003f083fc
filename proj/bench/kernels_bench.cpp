// Compares the OpenMP kernels against their serial references, and the
// parallel frameset imputation against a single-thread run.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "airgrid/impute.hpp"
#include "airgrid/kernels.hpp"
#include "airgrid/rng.hpp"
#include "airgrid/synth.hpp"

using namespace airgrid;

namespace {

double time_best_of(int reps, const std::function<void()>& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (dt < best) best = dt;
    }
    return best;
}

void report(const char* name, double serial_s, double parallel_s, double work_gflop) {
    std::printf("%-28s serial %8.3f ms (%6.2f GF/s)   omp %8.3f ms (%6.2f GF/s)   speedup %.2fx\n",
                name, serial_s * 1e3, work_gflop / serial_s, parallel_s * 1e3,
                work_gflop / parallel_s, serial_s / parallel_s);
}

}  // namespace

int main() {
    std::printf("threads: %d\n", kernels::max_threads());
    Rng rng(7);

    {
        const int n = 512, k = 512, m = 512;
        std::vector<double> a(static_cast<std::size_t>(n) * k), b(static_cast<std::size_t>(k) * m),
            c(static_cast<std::size_t>(n) * m);
        for (auto& v : a) v = rng.uniform(-1, 1);
        for (auto& v : b) v = rng.uniform(-1, 1);
        const double gf = 2.0 * n * k * m * 1e-9;
        const double ts = time_best_of(3, [&] { kernels::ref::matmul(a.data(), b.data(), c.data(), n, k, m); });
        const double tp = time_best_of(3, [&] { kernels::matmul(a.data(), b.data(), c.data(), n, k, m); });
        report("matmul 512^3", ts, tp, gf);
    }

    {
        const int c_in = 16, c_out = 16, h = 64, w = 64, kh = 3, kw = 3;
        std::vector<double> in(static_cast<std::size_t>(c_in) * h * w),
            kern(static_cast<std::size_t>(c_out) * c_in * kh * kw), bias(c_out),
            out(static_cast<std::size_t>(c_out) * h * w);
        for (auto& v : in) v = rng.uniform(-1, 1);
        for (auto& v : kern) v = rng.uniform(-1, 1);
        const double gf = 2.0 * c_out * c_in * h * w * kh * kw * 1e-9;
        const double ts = time_best_of(3, [&] {
            kernels::ref::conv2d_forward(in.data(), kern.data(), bias.data(), out.data(), c_in, c_out, h, w, kh, kw);
        });
        const double tp = time_best_of(3, [&] {
            kernels::conv2d_forward(in.data(), kern.data(), bias.data(), out.data(), c_in, c_out, h, w, kh, kw);
        });
        report("conv2d 16x16x64x64 3x3", ts, tp, gf);
    }

    {
        SynthConfig scfg;
        scfg.n_days = 12;
        scfg.seed = 3;
        SynthResult truth = generate(scfg, "/tmp/airgrid_bench_readings.csv");
        // knock out entries to give the imputer work
        STFrameSet sparse = truth.truth;
        Rng knockout(11);
        for (std::size_t e = 0; e < sparse.observed.size(); ++e) {
            if (knockout.uniform01() < 0.8) {
                sparse.observed[e] = 0;
                sparse.pm25[e] = std::nan("");
                sparse.pm10[e] = std::nan("");
            }
        }
        const int hw_threads = omp_get_max_threads();
        STFrameSet work = sparse;
        omp_set_num_threads(1);
        const double ts = time_best_of(1, [&] {
            work = sparse;
            impute_frameset(work);
        });
        omp_set_num_threads(hw_threads);
        const double tp = time_best_of(1, [&] {
            work = sparse;
            impute_frameset(work);
        });
        std::printf("%-28s serial %8.3f ms                omp %8.3f ms                speedup %.2fx\n",
                    "impute 10x10x12d", ts * 1e3, tp * 1e3, ts / tp);
    }
    return 0;
}
