// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>

// Dense matrix kernels behind the autodiff ops. Every kernel exists twice: a
// plain serial loop kept as the reference, and an OpenMP version used by the
// tape. Both accumulate each output element over the inner index in the same
// order, so their results are bit-identical regardless of thread count.
namespace skelgen::kernels {

// Problems smaller than this many multiply-adds stay on one thread.
inline constexpr std::size_t kParallelThreshold = 1 << 15;

// out[n x m] = a[n x k] * b[k x m]
void matmul_serial(std::span<const double> a, std::span<const double> b,
                   std::span<double> out, std::size_t n, std::size_t k,
                   std::size_t m);
void matmul(std::span<const double> a, std::span<const double> b,
            std::span<double> out, std::size_t n, std::size_t k, std::size_t m);

// out[n x k] += g[n x m] * b[k x m]^T   (gradient w.r.t. the left operand)
void matmul_nt_acc_serial(std::span<const double> g, std::span<const double> b,
                          std::span<double> out, std::size_t n, std::size_t k,
                          std::size_t m);
void matmul_nt_acc(std::span<const double> g, std::span<const double> b,
                   std::span<double> out, std::size_t n, std::size_t k,
                   std::size_t m);

// out[k x m] += a[n x k]^T * g[n x m]   (gradient w.r.t. the right operand)
void matmul_tn_acc_serial(std::span<const double> a, std::span<const double> g,
                          std::span<double> out, std::size_t n, std::size_t k,
                          std::size_t m);
void matmul_tn_acc(std::span<const double> a, std::span<const double> g,
                   std::span<double> out, std::size_t n, std::size_t k,
                   std::size_t m);

// Elementwise activations over contiguous buffers.
void sigmoid_serial(std::span<const double> x, std::span<double> out);
void sigmoid(std::span<const double> x, std::span<double> out);
void tanh_serial(std::span<const double> x, std::span<double> out);
void tanh(std::span<const double> x, std::span<double> out);

}  // namespace skelgen::kernels
