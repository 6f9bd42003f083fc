#pragma once

#include <cstddef>

// Hot numeric loops, parallelized with OpenMP. Every kernel decomposes work
// so that each output element is accumulated by exactly one thread in a
// fixed order, which makes results independent of the thread count. The
// kernels::ref namespace keeps plain serial implementations used as test
// oracles and as the baseline in the kernel benchmark.
namespace airgrid::kernels {

// 0 restores the OpenMP runtime default.
void set_num_threads(int n);
int max_threads();

// C[n x m] = op(A) * op(B), with op controlled by the transpose flags.
// A is n x k (or k x n when trans_a), B is k x m (or m x k when trans_b).
// When accumulate is set, the product is added onto the existing C.
void matmul(const double* a, const double* b, double* c, int n, int k, int m,
            bool trans_a = false, bool trans_b = false, bool accumulate = false);

// 2-D convolution with zero padding, output size equals input size.
// Layouts: in [c_in, h, w], kernel [c_out, c_in, kh, kw], out [c_out, h, w].
// Kernel sides must be odd. bias may be null.
void conv2d_forward(const double* in, const double* kernel, const double* bias,
                    double* out, int c_in, int c_out, int h, int w, int kh, int kw);

void conv2d_backward_input(const double* grad_out, const double* kernel, double* grad_in,
                           int c_in, int c_out, int h, int w, int kh, int kw,
                           bool accumulate = false);

void conv2d_backward_kernel(const double* in, const double* grad_out, double* grad_kernel,
                            int c_in, int c_out, int h, int w, int kh, int kw,
                            bool accumulate = false);

void conv2d_backward_bias(const double* grad_out, double* grad_bias,
                          int c_out, int h, int w, bool accumulate = false);

namespace ref {

void matmul(const double* a, const double* b, double* c, int n, int k, int m,
            bool trans_a = false, bool trans_b = false, bool accumulate = false);

void conv2d_forward(const double* in, const double* kernel, const double* bias,
                    double* out, int c_in, int c_out, int h, int w, int kh, int kw);

}  // namespace ref

}  // namespace airgrid::kernels
