#pragma once

#include <span>
#include <vector>

#include "gcontrast/errors.hpp"

namespace gcontrast {
namespace nn {

// Small dense/conv kernels used by the encoder. Weight convention for affine
// maps: W has shape (in, out), y = x W + b. All loops are plain serial code;
// batch-level parallelism lives in the training engine.

void affine_forward(const double* x, int rows, int in, const double* w, const double* b, int out,
                    double* y);

// dx may be nullptr when the input needs no gradient.
void affine_backward(const double* x, int rows, int in, const double* w, int out, const double* dy,
                     double* dx, double* dw, double* db);

// 1-D convolution over time, kernel 3, stride 1, zero padding 1.
// x: (in_ch, len), w: (out_ch, in_ch, 3), y: (out_ch, len).
void conv1d3_forward(const double* x, int in_ch, int len, const double* w, const double* b,
                     int out_ch, double* y);
void conv1d3_backward(const double* x, int in_ch, int len, const double* w, int out_ch,
                      const double* dy, double* dx, double* dw, double* db);

// Normalization across channels at each time position, learned per-channel
// gain/shift. x, y: (ch, len); gamma, beta: (ch). Caches: xhat (ch, len),
// inv_std (len); both may be nullptr when no backward pass follows.
void channel_norm_forward(const double* x, int ch, int len, const double* gamma,
                          const double* beta, double* y, double* xhat, double* inv_std);
void channel_norm_backward(int ch, int len, const double* gamma, const double* xhat,
                           const double* inv_std, const double* dy, double* dx, double* dgamma,
                           double* dbeta);

// Normalization across the last dimension of a (rows, dim) block; the usual
// transformer layer norm. gamma, beta: (dim). Caches: xhat (rows, dim),
// inv_std (rows).
void layer_norm_forward(const double* x, int rows, int dim, const double* gamma,
                        const double* beta, double* y, double* xhat, double* inv_std);
void layer_norm_backward(int rows, int dim, const double* gamma, const double* xhat,
                         const double* inv_std, const double* dy, double* dx, double* dgamma,
                         double* dbeta);

void relu_forward(const double* x, int n, double* y);
void relu_backward(const double* x, int n, const double* dy, double* dx);

// Max pool with window 2, stride 2 over time; out_len = len / 2 and the
// trailing element of odd inputs is dropped. Ties pick the earlier position.
// With len < 2 the pool is skipped (identity). argmax: (ch, out_len).
int maxpool2_out_len(int len);
void maxpool2_forward(const double* x, int ch, int len, double* y, int* argmax);
void maxpool2_backward(int ch, int len, const int* argmax, const double* dy, double* dx);

// Mean over time: x (ch, len) -> y (ch).
void time_mean_forward(const double* x, int ch, int len, double* y);
void time_mean_backward(int ch, int len, const double* dy, double* dx);

// Row-wise softmax over (rows, dim); backward consumes the forward output.
void softmax_rows(const double* x, int rows, int dim, double* y);
void softmax_rows_backward(const double* y, int rows, int dim, const double* dy, double* dx);

// log(sum_i exp(x_i)) with max subtraction.
double log_sum_exp(std::span<const double> x);

}  // namespace nn
}  // namespace gcontrast
