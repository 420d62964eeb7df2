// SPDX-License-Identifier: Apache-2.0
#include "skelgen/autodiff/kernels.hpp"

#include <cmath>

namespace skelgen::kernels {

namespace {

// Signed loop indices for OpenMP's canonical loop form.
using idx = std::ptrdiff_t;

inline bool go_parallel(std::size_t work) { return work >= kParallelThreshold; }

}  // namespace

void matmul_serial(std::span<const double> a, std::span<const double> b,
                   std::span<double> out, std::size_t n, std::size_t k,
                   std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    double* row = out.data() + i * m;
    for (std::size_t j = 0; j < m; ++j) row[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      const double* brow = b.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) row[j] += av * brow[j];
    }
  }
}

void matmul(std::span<const double> a, std::span<const double> b,
            std::span<double> out, std::size_t n, std::size_t k, std::size_t m) {
  const double* ap = a.data();
  const double* bp = b.data();
  double* op = out.data();
#pragma omp parallel for schedule(static) if (go_parallel(n * k * m))
  for (idx i = 0; i < static_cast<idx>(n); ++i) {
    double* row = op + i * m;
    for (std::size_t j = 0; j < m; ++j) row[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ap[i * k + p];
      const double* brow = bp + p * m;
      for (std::size_t j = 0; j < m; ++j) row[j] += av * brow[j];
    }
  }
}

void matmul_nt_acc_serial(std::span<const double> g, std::span<const double> b,
                          std::span<double> out, std::size_t n, std::size_t k,
                          std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += g[i * m + j] * b[p * m + j];
      out[i * k + p] += s;
    }
  }
}

void matmul_nt_acc(std::span<const double> g, std::span<const double> b,
                   std::span<double> out, std::size_t n, std::size_t k,
                   std::size_t m) {
  const double* gp = g.data();
  const double* bp = b.data();
  double* op = out.data();
#pragma omp parallel for schedule(static) if (go_parallel(n * k * m))
  for (idx i = 0; i < static_cast<idx>(n); ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += gp[i * m + j] * bp[p * m + j];
      op[i * k + p] += s;
    }
  }
}

void matmul_tn_acc_serial(std::span<const double> a, std::span<const double> g,
                          std::span<double> out, std::size_t n, std::size_t k,
                          std::size_t m) {
  for (std::size_t p = 0; p < k; ++p) {
    double* row = out.data() + p * m;
    for (std::size_t i = 0; i < n; ++i) {
      const double av = a[i * k + p];
      const double* grow = g.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) row[j] += av * grow[j];
    }
  }
}

void matmul_tn_acc(std::span<const double> a, std::span<const double> g,
                   std::span<double> out, std::size_t n, std::size_t k,
                   std::size_t m) {
  const double* ap = a.data();
  const double* gp = g.data();
  double* op = out.data();
#pragma omp parallel for schedule(static) if (go_parallel(n * k * m))
  for (idx p = 0; p < static_cast<idx>(k); ++p) {
    double* row = op + p * m;
    for (std::size_t i = 0; i < n; ++i) {
      const double av = ap[i * k + p];
      const double* grow = gp + i * m;
      for (std::size_t j = 0; j < m; ++j) row[j] += av * grow[j];
    }
  }
}

void sigmoid_serial(std::span<const double> x, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

void sigmoid(std::span<const double> x, std::span<double> out) {
  const double* xp = x.data();
  double* op = out.data();
  const auto n = static_cast<idx>(x.size());
#pragma omp parallel for schedule(static) if (go_parallel(x.size() * 16))
  for (idx i = 0; i < n; ++i) op[i] = 1.0 / (1.0 + std::exp(-xp[i]));
}

void tanh_serial(std::span<const double> x, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::tanh(x[i]);
}

void tanh(std::span<const double> x, std::span<double> out) {
  const double* xp = x.data();
  double* op = out.data();
  const auto n = static_cast<idx>(x.size());
#pragma omp parallel for schedule(static) if (go_parallel(x.size() * 16))
  for (idx i = 0; i < n; ++i) op[i] = std::tanh(xp[i]);
}

}  // namespace skelgen::kernels
