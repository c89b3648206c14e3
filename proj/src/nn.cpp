#include "gcontrast/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace gcontrast {
namespace nn {

void affine_forward(const double* x, int rows, int in, const double* w, const double* b, int out,
                    double* y) {
    for (int r = 0; r < rows; ++r) {
        const double* xr = x + static_cast<std::size_t>(r) * in;
        double* yr = y + static_cast<std::size_t>(r) * out;
        for (int o = 0; o < out; ++o) yr[o] = b ? b[o] : 0.0;
        for (int i = 0; i < in; ++i) {
            const double xv = xr[i];
            if (xv == 0.0) continue;
            const double* wrow = w + static_cast<std::size_t>(i) * out;
            for (int o = 0; o < out; ++o) yr[o] += xv * wrow[o];
        }
    }
}

void affine_backward(const double* x, int rows, int in, const double* w, int out, const double* dy,
                     double* dx, double* dw, double* db) {
    for (int r = 0; r < rows; ++r) {
        const double* xr = x + static_cast<std::size_t>(r) * in;
        const double* dyr = dy + static_cast<std::size_t>(r) * out;
        if (db)
            for (int o = 0; o < out; ++o) db[o] += dyr[o];
        for (int i = 0; i < in; ++i) {
            const double xv = xr[i];
            double* dwrow = dw + static_cast<std::size_t>(i) * out;
            const double* wrow = w + static_cast<std::size_t>(i) * out;
            double acc = 0.0;
            for (int o = 0; o < out; ++o) {
                dwrow[o] += xv * dyr[o];
                acc += wrow[o] * dyr[o];
            }
            if (dx) dx[static_cast<std::size_t>(r) * in + i] += acc;
        }
    }
}

void conv1d3_forward(const double* x, int in_ch, int len, const double* w, const double* b,
                     int out_ch, double* y) {
    for (int o = 0; o < out_ch; ++o) {
        double* yo = y + static_cast<std::size_t>(o) * len;
        for (int t = 0; t < len; ++t) yo[t] = b[o];
        for (int c = 0; c < in_ch; ++c) {
            const double* xc = x + static_cast<std::size_t>(c) * len;
            const double* wk = w + (static_cast<std::size_t>(o) * in_ch + c) * 3;
            for (int t = 0; t < len; ++t) {
                double acc = wk[1] * xc[t];
                if (t > 0) acc += wk[0] * xc[t - 1];
                if (t + 1 < len) acc += wk[2] * xc[t + 1];
                yo[t] += acc;
            }
        }
    }
}

void conv1d3_backward(const double* x, int in_ch, int len, const double* w, int out_ch,
                      const double* dy, double* dx, double* dw, double* db) {
    for (int o = 0; o < out_ch; ++o) {
        const double* dyo = dy + static_cast<std::size_t>(o) * len;
        for (int t = 0; t < len; ++t) db[o] += dyo[t];
        for (int c = 0; c < in_ch; ++c) {
            const double* xc = x + static_cast<std::size_t>(c) * len;
            const double* wk = w + (static_cast<std::size_t>(o) * in_ch + c) * 3;
            double* dwk = dw + (static_cast<std::size_t>(o) * in_ch + c) * 3;
            double* dxc = dx ? dx + static_cast<std::size_t>(c) * len : nullptr;
            for (int t = 0; t < len; ++t) {
                const double g = dyo[t];
                dwk[1] += g * xc[t];
                if (t > 0) dwk[0] += g * xc[t - 1];
                if (t + 1 < len) dwk[2] += g * xc[t + 1];
                if (dxc) {
                    dxc[t] += g * wk[1];
                    if (t > 0) dxc[t - 1] += g * wk[0];
                    if (t + 1 < len) dxc[t + 1] += g * wk[2];
                }
            }
        }
    }
}

namespace {
constexpr double kNormEps = 1e-5;
}

void channel_norm_forward(const double* x, int ch, int len, const double* gamma,
                          const double* beta, double* y, double* xhat, double* inv_std) {
    for (int t = 0; t < len; ++t) {
        double mean = 0.0;
        for (int c = 0; c < ch; ++c) mean += x[static_cast<std::size_t>(c) * len + t];
        mean /= ch;
        double var = 0.0;
        for (int c = 0; c < ch; ++c) {
            const double d = x[static_cast<std::size_t>(c) * len + t] - mean;
            var += d * d;
        }
        var /= ch;
        const double inv = 1.0 / std::sqrt(var + kNormEps);
        if (inv_std) inv_std[t] = inv;
        for (int c = 0; c < ch; ++c) {
            const double xh = (x[static_cast<std::size_t>(c) * len + t] - mean) * inv;
            if (xhat) xhat[static_cast<std::size_t>(c) * len + t] = xh;
            y[static_cast<std::size_t>(c) * len + t] = gamma[c] * xh + beta[c];
        }
    }
}

void channel_norm_backward(int ch, int len, const double* gamma, const double* xhat,
                           const double* inv_std, const double* dy, double* dx, double* dgamma,
                           double* dbeta) {
    for (int t = 0; t < len; ++t) {
        double sum_dxhat = 0.0;
        double sum_dxhat_xhat = 0.0;
        for (int c = 0; c < ch; ++c) {
            const std::size_t at = static_cast<std::size_t>(c) * len + t;
            const double g = dy[at];
            const double xh = xhat[at];
            dgamma[c] += g * xh;
            dbeta[c] += g;
            const double dxh = g * gamma[c];
            sum_dxhat += dxh;
            sum_dxhat_xhat += dxh * xh;
        }
        const double inv = inv_std[t];
        for (int c = 0; c < ch; ++c) {
            const std::size_t at = static_cast<std::size_t>(c) * len + t;
            const double dxh = dy[at] * gamma[c];
            dx[at] += inv * (dxh - sum_dxhat / ch - xhat[at] * sum_dxhat_xhat / ch);
        }
    }
}

void layer_norm_forward(const double* x, int rows, int dim, const double* gamma,
                        const double* beta, double* y, double* xhat, double* inv_std) {
    for (int r = 0; r < rows; ++r) {
        const double* xr = x + static_cast<std::size_t>(r) * dim;
        double* yr = y + static_cast<std::size_t>(r) * dim;
        double mean = 0.0;
        for (int c = 0; c < dim; ++c) mean += xr[c];
        mean /= dim;
        double var = 0.0;
        for (int c = 0; c < dim; ++c) var += (xr[c] - mean) * (xr[c] - mean);
        var /= dim;
        const double inv = 1.0 / std::sqrt(var + kNormEps);
        if (inv_std) inv_std[r] = inv;
        for (int c = 0; c < dim; ++c) {
            const double xh = (xr[c] - mean) * inv;
            if (xhat) xhat[static_cast<std::size_t>(r) * dim + c] = xh;
            yr[c] = gamma[c] * xh + beta[c];
        }
    }
}

void layer_norm_backward(int rows, int dim, const double* gamma, const double* xhat,
                         const double* inv_std, const double* dy, double* dx, double* dgamma,
                         double* dbeta) {
    for (int r = 0; r < rows; ++r) {
        const double* dyr = dy + static_cast<std::size_t>(r) * dim;
        const double* xhr = xhat + static_cast<std::size_t>(r) * dim;
        double sum_dxhat = 0.0;
        double sum_dxhat_xhat = 0.0;
        for (int c = 0; c < dim; ++c) {
            dgamma[c] += dyr[c] * xhr[c];
            dbeta[c] += dyr[c];
            const double dxh = dyr[c] * gamma[c];
            sum_dxhat += dxh;
            sum_dxhat_xhat += dxh * xhr[c];
        }
        const double inv = inv_std[r];
        double* dxr = dx + static_cast<std::size_t>(r) * dim;
        for (int c = 0; c < dim; ++c) {
            const double dxh = dyr[c] * gamma[c];
            dxr[c] += inv * (dxh - sum_dxhat / dim - xhr[c] * sum_dxhat_xhat / dim);
        }
    }
}

void relu_forward(const double* x, int n, double* y) {
    for (int i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* x, int n, const double* dy, double* dx) {
    for (int i = 0; i < n; ++i) dx[i] += x[i] > 0.0 ? dy[i] : 0.0;
}

int maxpool2_out_len(int len) { return len < 2 ? len : len / 2; }

void maxpool2_forward(const double* x, int ch, int len, double* y, int* argmax) {
    const int out_len = maxpool2_out_len(len);
    if (len < 2) {
        for (int c = 0; c < ch; ++c)
            for (int t = 0; t < out_len; ++t) {
                y[static_cast<std::size_t>(c) * out_len + t] = x[static_cast<std::size_t>(c) * len + t];
                argmax[static_cast<std::size_t>(c) * out_len + t] = t;
            }
        return;
    }
    for (int c = 0; c < ch; ++c) {
        const double* xc = x + static_cast<std::size_t>(c) * len;
        for (int t = 0; t < out_len; ++t) {
            const int a = 2 * t;
            const int pick = xc[a] >= xc[a + 1] ? a : a + 1;
            y[static_cast<std::size_t>(c) * out_len + t] = xc[pick];
            argmax[static_cast<std::size_t>(c) * out_len + t] = pick;
        }
    }
}

void maxpool2_backward(int ch, int len, const int* argmax, const double* dy, double* dx) {
    const int out_len = maxpool2_out_len(len);
    for (int c = 0; c < ch; ++c)
        for (int t = 0; t < out_len; ++t)
            dx[static_cast<std::size_t>(c) * len + argmax[static_cast<std::size_t>(c) * out_len + t]] +=
                dy[static_cast<std::size_t>(c) * out_len + t];
}

void time_mean_forward(const double* x, int ch, int len, double* y) {
    for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        const double* xc = x + static_cast<std::size_t>(c) * len;
        for (int t = 0; t < len; ++t) acc += xc[t];
        y[c] = acc / len;
    }
}

void time_mean_backward(int ch, int len, const double* dy, double* dx) {
    for (int c = 0; c < ch; ++c) {
        const double g = dy[c] / len;
        double* dxc = dx + static_cast<std::size_t>(c) * len;
        for (int t = 0; t < len; ++t) dxc[t] += g;
    }
}

void softmax_rows(const double* x, int rows, int dim, double* y) {
    for (int r = 0; r < rows; ++r) {
        const double* xr = x + static_cast<std::size_t>(r) * dim;
        double* yr = y + static_cast<std::size_t>(r) * dim;
        double mx = xr[0];
        for (int c = 1; c < dim; ++c) mx = std::max(mx, xr[c]);
        double denom = 0.0;
        for (int c = 0; c < dim; ++c) {
            yr[c] = std::exp(xr[c] - mx);
            denom += yr[c];
        }
        for (int c = 0; c < dim; ++c) yr[c] /= denom;
    }
}

void softmax_rows_backward(const double* y, int rows, int dim, const double* dy, double* dx) {
    for (int r = 0; r < rows; ++r) {
        const double* yr = y + static_cast<std::size_t>(r) * dim;
        const double* dyr = dy + static_cast<std::size_t>(r) * dim;
        double dot = 0.0;
        for (int c = 0; c < dim; ++c) dot += yr[c] * dyr[c];
        double* dxr = dx + static_cast<std::size_t>(r) * dim;
        for (int c = 0; c < dim; ++c) dxr[c] += yr[c] * (dyr[c] - dot);
    }
}

double log_sum_exp(std::span<const double> x) {
    double mx = x[0];
    for (double v : x) mx = std::max(mx, v);
    double acc = 0.0;
    for (double v : x) acc += std::exp(v - mx);
    return mx + std::log(acc);
}

}  // namespace nn
}  // namespace gcontrast
