#include "semshare/kernels.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

namespace semshare::kernels {

void dense_forward(const double* x, const double* w, const double* bias, double* y, std::size_t batch,
                   std::size_t in, std::size_t out) {
  // Four rows share each load of a weight row; every y element still sums
  // k = 0..in-1 in order.
  const auto blocks = static_cast<std::int64_t>((batch + 3) / 4);
#pragma omp parallel for schedule(static) if (batch * in * out > kParallelThreshold)
  for (std::int64_t blk = 0; blk < blocks; ++blk) {
    const std::size_t b0 = static_cast<std::size_t>(blk) * 4;
    const std::size_t rows = std::min<std::size_t>(4, batch - b0);
    for (std::size_t r = 0; r < rows; ++r) {
      double* yr = y + (b0 + r) * out;
      for (std::size_t o = 0; o < out; ++o) yr[o] = bias[o];
    }
    if (rows == 4) {
      const double* x0 = x + b0 * in;
      double* y0 = y + b0 * out;
      double* y1 = y0 + out;
      double* y2 = y1 + out;
      double* y3 = y2 + out;
      for (std::size_t k = 0; k < in; ++k) {
        const double a0 = x0[k], a1 = x0[in + k], a2 = x0[2 * in + k], a3 = x0[3 * in + k];
        const double* wr = w + k * out;
#pragma omp simd
        for (std::size_t o = 0; o < out; ++o) {
          const double wv = wr[o];
          y0[o] += a0 * wv;
          y1[o] += a1 * wv;
          y2[o] += a2 * wv;
          y3[o] += a3 * wv;
        }
      }
      continue;
    }
    for (std::size_t r = 0; r < rows; ++r) {
      const double* xr = x + (b0 + r) * in;
      double* yr = y + (b0 + r) * out;
      for (std::size_t k = 0; k < in; ++k) {
        const double xk = xr[k];
        const double* wr = w + k * out;
#pragma omp simd
        for (std::size_t o = 0; o < out; ++o) yr[o] += xk * wr[o];
      }
    }
  }
}

void dense_backward_params(const double* x, const double* dy, double* dw, double* dbias, std::size_t batch,
                           std::size_t in, std::size_t out) {
#pragma omp parallel if (batch * in * out > kParallelThreshold)
  {
    // Blocks of four dW rows share each dY row load; every element still
    // sums b = 0..batch-1 in order.
    const auto blocks = static_cast<std::int64_t>((in + 3) / 4);
#pragma omp for schedule(static) nowait
    for (std::int64_t blk = 0; blk < blocks; ++blk) {
      const std::size_t k0 = static_cast<std::size_t>(blk) * 4;
      const std::size_t rows = std::min<std::size_t>(4, in - k0);
      if (rows == 4) {
        double* d0 = dw + k0 * out;
        double* d1 = d0 + out;
        double* d2 = d1 + out;
        double* d3 = d2 + out;
        for (std::size_t b = 0; b < batch; ++b) {
          const double* xr = x + b * in + k0;
          const double a0 = xr[0], a1 = xr[1], a2 = xr[2], a3 = xr[3];
          const double* dyr = dy + b * out;
#pragma omp simd
          for (std::size_t o = 0; o < out; ++o) {
            const double g = dyr[o];
            d0[o] += a0 * g;
            d1[o] += a1 * g;
            d2[o] += a2 * g;
            d3[o] += a3 * g;
          }
        }
        continue;
      }
      for (std::size_t k = k0; k < k0 + rows; ++k) {
        double* dwr = dw + k * out;
        for (std::size_t b = 0; b < batch; ++b) {
          const double xk = x[b * in + k];
          const double* dyr = dy + b * out;
#pragma omp simd
          for (std::size_t o = 0; o < out; ++o) dwr[o] += xk * dyr[o];
        }
      }
    }
#pragma omp single
    for (std::size_t b = 0; b < batch; ++b) {
      const double* dyr = dy + b * out;
      for (std::size_t o = 0; o < out; ++o) dbias[o] += dyr[o];
    }
  }
}

void dense_backward_input(const double* dy, const double* w, double* dx, std::size_t batch, std::size_t in,
                          std::size_t out) {
  if (batch < 4) {
    for (std::size_t b = 0; b < batch; ++b) {
      const double* dyr = dy + b * out;
      for (std::size_t k = 0; k < in; ++k) {
        const double* wr = w + k * out;
        double s = 0.0;
        for (std::size_t o = 0; o < out; ++o) s += dyr[o] * wr[o];
        dx[b * in + k] = s;
      }
    }
    return;
  }
  // Through W^T so the inner loop runs over k; each dx element still sums
  // o = 0..out-1 in order.
  thread_local std::vector<double> wt;
  wt.resize(in * out);
  for (std::size_t k = 0; k < in; ++k) {
    for (std::size_t o = 0; o < out; ++o) wt[o * in + k] = w[k * out + o];
  }
  const double* t = wt.data();
  const auto n = static_cast<std::int64_t>(batch);
#pragma omp parallel for schedule(static) if (batch * in * out > kParallelThreshold)
  for (std::int64_t b = 0; b < n; ++b) {
    const double* dyr = dy + b * out;
    double* dxr = dx + b * in;
    for (std::size_t k = 0; k < in; ++k) dxr[k] = 0.0;
    for (std::size_t o = 0; o < out; ++o) {
      const double g = dyr[o];
      const double* tr = t + o * in;
#pragma omp simd
      for (std::size_t k = 0; k < in; ++k) dxr[k] += g * tr[k];
    }
  }
}

void relu_forward(double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] > 0.0 ? y[i] : 0.0;
}

void relu_backward(const double* y, double* dy, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (!(y[i] > 0.0)) dy[i] = 0.0;
  }
}

}  // namespace semshare::kernels
