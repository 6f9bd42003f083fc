#include "airgrid/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cstring>
#include <stdexcept>

namespace airgrid::kernels {

namespace {
int g_threads = 0;

inline int threads_for(long long work) {
    int t = g_threads > 0 ? g_threads : omp_get_max_threads();
    if (work < 16384) return 1;  // not worth the fork
    return t;
}
}  // namespace

void set_num_threads(int n) { g_threads = n < 0 ? 0 : n; }

int max_threads() { return g_threads > 0 ? g_threads : omp_get_max_threads(); }

// Row-parallel: thread owning row i runs the same accumulation order a
// single-threaded run would, so results do not depend on the thread count.
void matmul(const double* a, const double* b, double* c, int n, int k, int m,
            bool trans_a, bool trans_b, bool accumulate) {
    const long long work = 2LL * n * k * m;
    const int nt = threads_for(work);
    if (!accumulate) std::memset(c, 0, sizeof(double) * static_cast<size_t>(n) * m);

    if (!trans_a && !trans_b) {
#pragma omp parallel for num_threads(nt) schedule(static)
        for (int i = 0; i < n; ++i) {
            double* crow = c + static_cast<size_t>(i) * m;
            const double* arow = a + static_cast<size_t>(i) * k;
            for (int p = 0; p < k; ++p) {
                const double av = arow[p];
                const double* brow = b + static_cast<size_t>(p) * m;
                for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
            }
        }
    } else if (trans_a && !trans_b) {
        // a is k x n
#pragma omp parallel for num_threads(nt) schedule(static)
        for (int i = 0; i < n; ++i) {
            double* crow = c + static_cast<size_t>(i) * m;
            for (int p = 0; p < k; ++p) {
                const double av = a[static_cast<size_t>(p) * n + i];
                const double* brow = b + static_cast<size_t>(p) * m;
                for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
            }
        }
    } else if (!trans_a && trans_b) {
        // b is m x k
#pragma omp parallel for num_threads(nt) schedule(static)
        for (int i = 0; i < n; ++i) {
            double* crow = c + static_cast<size_t>(i) * m;
            const double* arow = a + static_cast<size_t>(i) * k;
            for (int j = 0; j < m; ++j) {
                const double* brow = b + static_cast<size_t>(j) * k;
                double acc = 0.0;
                for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
                crow[j] += acc;
            }
        }
    } else {
        // a is k x n, b is m x k
#pragma omp parallel for num_threads(nt) schedule(static)
        for (int i = 0; i < n; ++i) {
            double* crow = c + static_cast<size_t>(i) * m;
            for (int j = 0; j < m; ++j) {
                const double* brow = b + static_cast<size_t>(j) * k;
                double acc = 0.0;
                for (int p = 0; p < k; ++p) acc += a[static_cast<size_t>(p) * n + i] * brow[p];
                crow[j] += acc;
            }
        }
    }
}

namespace {
inline void check_odd(int kh, int kw) {
    if (kh % 2 == 0 || kw % 2 == 0)
        throw std::invalid_argument("conv2d: kernel sides must be odd for same padding");
}
}  // namespace

void conv2d_forward(const double* in, const double* kernel, const double* bias,
                    double* out, int c_in, int c_out, int h, int w, int kh, int kw) {
    check_odd(kh, kw);
    const int ph = kh / 2, pw = kw / 2;
    const long long work = 2LL * c_out * c_in * h * w * kh * kw;
    const int nt = threads_for(work);
#pragma omp parallel for num_threads(nt) schedule(static)
    for (int co = 0; co < c_out; ++co) {
        double* oplane = out + static_cast<size_t>(co) * h * w;
        const double b0 = bias ? bias[co] : 0.0;
        for (int i = 0; i < h * w; ++i) oplane[i] = b0;
        for (int ci = 0; ci < c_in; ++ci) {
            const double* iplane = in + static_cast<size_t>(ci) * h * w;
            const double* kplane = kernel + (static_cast<size_t>(co) * c_in + ci) * kh * kw;
            for (int dy = 0; dy < kh; ++dy) {
                for (int dx = 0; dx < kw; ++dx) {
                    const double kv = kplane[dy * kw + dx];
                    const int y0 = std::max(0, ph - dy), y1 = std::min(h, h + ph - dy);
                    const int x0 = std::max(0, pw - dx), x1 = std::min(w, w + pw - dx);
                    for (int y = y0; y < y1; ++y) {
                        const double* irow = iplane + static_cast<size_t>(y + dy - ph) * w;
                        double* orow = oplane + static_cast<size_t>(y) * w;
                        for (int x = x0; x < x1; ++x) orow[x] += kv * irow[x + dx - pw];
                    }
                }
            }
        }
    }
}

void conv2d_backward_input(const double* grad_out, const double* kernel, double* grad_in,
                           int c_in, int c_out, int h, int w, int kh, int kw, bool accumulate) {
    check_odd(kh, kw);
    const int ph = kh / 2, pw = kw / 2;
    const long long work = 2LL * c_out * c_in * h * w * kh * kw;
    const int nt = threads_for(work);
    if (!accumulate) std::memset(grad_in, 0, sizeof(double) * static_cast<size_t>(c_in) * h * w);
#pragma omp parallel for num_threads(nt) schedule(static)
    for (int ci = 0; ci < c_in; ++ci) {
        double* gplane = grad_in + static_cast<size_t>(ci) * h * w;
        for (int co = 0; co < c_out; ++co) {
            const double* oplane = grad_out + static_cast<size_t>(co) * h * w;
            const double* kplane = kernel + (static_cast<size_t>(co) * c_in + ci) * kh * kw;
            for (int dy = 0; dy < kh; ++dy) {
                for (int dx = 0; dx < kw; ++dx) {
                    const double kv = kplane[dy * kw + dx];
                    // grad_in[y] receives grad_out at y - (dy - ph)
                    const int y0 = std::max(0, dy - ph), y1 = std::min(h, h + dy - ph);
                    const int x0 = std::max(0, dx - pw), x1 = std::min(w, w + dx - pw);
                    for (int y = y0; y < y1; ++y) {
                        const double* orow = oplane + static_cast<size_t>(y - dy + ph) * w;
                        double* grow = gplane + static_cast<size_t>(y) * w;
                        for (int x = x0; x < x1; ++x) grow[x] += kv * orow[x - dx + pw];
                    }
                }
            }
        }
    }
}

void conv2d_backward_kernel(const double* in, const double* grad_out, double* grad_kernel,
                            int c_in, int c_out, int h, int w, int kh, int kw, bool accumulate) {
    check_odd(kh, kw);
    const int ph = kh / 2, pw = kw / 2;
    const long long work = 2LL * c_out * c_in * h * w * kh * kw;
    const int nt = threads_for(work);
    if (!accumulate)
        std::memset(grad_kernel, 0, sizeof(double) * static_cast<size_t>(c_out) * c_in * kh * kw);
#pragma omp parallel for num_threads(nt) schedule(static)
    for (int co = 0; co < c_out; ++co) {
        const double* oplane = grad_out + static_cast<size_t>(co) * h * w;
        for (int ci = 0; ci < c_in; ++ci) {
            const double* iplane = in + static_cast<size_t>(ci) * h * w;
            double* kplane = grad_kernel + (static_cast<size_t>(co) * c_in + ci) * kh * kw;
            for (int dy = 0; dy < kh; ++dy) {
                for (int dx = 0; dx < kw; ++dx) {
                    const int y0 = std::max(0, ph - dy), y1 = std::min(h, h + ph - dy);
                    const int x0 = std::max(0, pw - dx), x1 = std::min(w, w + pw - dx);
                    double acc = 0.0;
                    for (int y = y0; y < y1; ++y) {
                        const double* irow = iplane + static_cast<size_t>(y + dy - ph) * w;
                        const double* orow = oplane + static_cast<size_t>(y) * w;
                        for (int x = x0; x < x1; ++x) acc += orow[x] * irow[x + dx - pw];
                    }
                    kplane[dy * kw + dx] += acc;
                }
            }
        }
    }
}

void conv2d_backward_bias(const double* grad_out, double* grad_bias,
                          int c_out, int h, int w, bool accumulate) {
    const int nt = threads_for(static_cast<long long>(c_out) * h * w);
#pragma omp parallel for num_threads(nt) schedule(static)
    for (int co = 0; co < c_out; ++co) {
        const double* oplane = grad_out + static_cast<size_t>(co) * h * w;
        double acc = 0.0;
        for (int i = 0; i < h * w; ++i) acc += oplane[i];
        if (accumulate)
            grad_bias[co] += acc;
        else
            grad_bias[co] = acc;
    }
}

namespace ref {

void matmul(const double* a, const double* b, double* c, int n, int k, int m,
            bool trans_a, bool trans_b, bool accumulate) {
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p) {
                double av = trans_a ? a[static_cast<size_t>(p) * n + i] : a[static_cast<size_t>(i) * k + p];
                double bv = trans_b ? b[static_cast<size_t>(j) * k + p] : b[static_cast<size_t>(p) * m + j];
                acc += av * bv;
            }
            double& out = c[static_cast<size_t>(i) * m + j];
            out = accumulate ? out + acc : acc;
        }
    }
}

void conv2d_forward(const double* in, const double* kernel, const double* bias,
                    double* out, int c_in, int c_out, int h, int w, int kh, int kw) {
    check_odd(kh, kw);
    const int ph = kh / 2, pw = kw / 2;
    for (int co = 0; co < c_out; ++co) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double acc = bias ? bias[co] : 0.0;
                for (int ci = 0; ci < c_in; ++ci) {
                    for (int dy = 0; dy < kh; ++dy) {
                        for (int dx = 0; dx < kw; ++dx) {
                            int sy = y + dy - ph, sx = x + dx - pw;
                            if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
                            acc += kernel[((static_cast<size_t>(co) * c_in + ci) * kh + dy) * kw + dx] *
                                   in[(static_cast<size_t>(ci) * h + sy) * w + sx];
                        }
                    }
                }
                out[(static_cast<size_t>(co) * h + y) * w + x] = acc;
            }
        }
    }
}

}  // namespace ref

}  // namespace airgrid::kernels
