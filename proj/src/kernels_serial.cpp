// Straightforward loops used as the reference for the parallel kernels.
#include "semshare/kernels.hpp"

namespace semshare::kernels::serial {

void dense_forward(const double* x, const double* w, const double* bias, double* y, std::size_t batch,
                   std::size_t in, std::size_t out) {
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < out; ++o) {
      double s = bias[o];
      for (std::size_t k = 0; k < in; ++k) s += x[b * in + k] * w[k * out + o];
      y[b * out + o] = s;
    }
  }
}

void dense_backward_params(const double* x, const double* dy, double* dw, double* dbias, std::size_t batch,
                           std::size_t in, std::size_t out) {
  for (std::size_t k = 0; k < in; ++k) {
    for (std::size_t o = 0; o < out; ++o) {
      double s = dw[k * out + o];
      for (std::size_t b = 0; b < batch; ++b) s += x[b * in + k] * dy[b * out + o];
      dw[k * out + o] = s;
    }
  }
  for (std::size_t o = 0; o < out; ++o) {
    double s = dbias[o];
    for (std::size_t b = 0; b < batch; ++b) s += dy[b * out + o];
    dbias[o] = s;
  }
}

void dense_backward_input(const double* dy, const double* w, double* dx, std::size_t batch, std::size_t in,
                          std::size_t out) {
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t k = 0; k < in; ++k) {
      double s = 0.0;
      for (std::size_t o = 0; o < out; ++o) s += dy[b * out + o] * w[k * out + o];
      dx[b * in + k] = s;
    }
  }
}

}  // namespace semshare::kernels::serial
