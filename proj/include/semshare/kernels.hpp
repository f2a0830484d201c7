#pragma once

#include <cstddef>

// Dense-layer batch kernels. Weights are stored in x out, row-major; batches
// are row-major with one sample per row.
//
// The parallel versions give every output element to exactly one thread and
// keep the summation order of the serial reference, so results do not
// depend on the thread count.
namespace semshare::kernels {

// Y[b][o] = bias[o] + sum_k X[b][k] W[k][o]
void dense_forward(const double* x, const double* w, const double* bias, double* y, std::size_t batch,
                   std::size_t in, std::size_t out);

// dW[k][o] += sum_b X[b][k] dY[b][o]; dbias[o] += sum_b dY[b][o]
void dense_backward_params(const double* x, const double* dy, double* dw, double* dbias, std::size_t batch,
                           std::size_t in, std::size_t out);

// dX[b][k] = sum_o dY[b][o] W[k][o]
void dense_backward_input(const double* dy, const double* w, double* dx, std::size_t batch, std::size_t in,
                          std::size_t out);

void relu_forward(double* y, std::size_t n);
// dy[i] = 0 where y[i] <= 0 (y is the activated output).
void relu_backward(const double* y, double* dy, std::size_t n);

namespace serial {

void dense_forward(const double* x, const double* w, const double* bias, double* y, std::size_t batch,
                   std::size_t in, std::size_t out);
void dense_backward_params(const double* x, const double* dy, double* dw, double* dbias, std::size_t batch,
                           std::size_t in, std::size_t out);
void dense_backward_input(const double* dy, const double* w, double* dx, std::size_t batch, std::size_t in,
                          std::size_t out);

}  // namespace serial

// Work (multiply-adds) below which the parallel kernels stay on one thread.
inline constexpr std::size_t kParallelThreshold = 1 << 15;

}  // namespace semshare::kernels
