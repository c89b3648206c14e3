#pragma once

#include <span>
#include <vector>

#include "gcontrast/encoder.hpp"
#include "gcontrast/errors.hpp"

namespace gcontrast {

struct LossConfig {
    double tau = 0.2;
    double lambda_mwtc = 1.0;
    double lambda_nc = 1.0;
    double lambda_gc = 1.0;
    bool include_positive = false;  // off = denominators exclude the positive pair
    bool batch_mean = true;         // per-sample losses averaged over the batch, not summed

    void validate() const {
        if (tau <= 0.0) throw ConfigError("loss.tau must be > 0");
        if (lambda_mwtc < 0.0 || lambda_nc < 0.0 || lambda_gc < 0.0)
            throw ConfigError("loss weights must be >= 0");
    }
};

struct LossBreakdown {
    double mwtc = 0.0;
    double nc = 0.0;
    double gc = 0.0;
    double total = 0.0;
};

// Multi-window temporal contrasting for one sample, both directions summed.
// Predictions of one view are scored against all k window features of the
// other view for the same sensor; unscaled dot products.
double mwtc_loss(std::span<const double> pred_s, std::span<const double> pred_w,
                 std::span<const double> win_w, std::span<const double> win_s, int sensors,
                 int windows, int kbar, int dim, bool include_positive);

// Node-level contrasting for one sample, both directions summed.
double nc_loss(std::span<const double> ctx_w, std::span<const double> ctx_s, int sensors, int dim,
               double tau, bool include_positive);

// Graph-level contrasting over a batch of global features (B, D), both
// directions summed. As written, each anchor sees 2B-2 denominator terms.
double gc_loss(std::span<const double> globals_w, std::span<const double> globals_s, int batch,
               int dim, double tau, bool include_positive);

// Gradients on one view's trace outputs, shaped like the trace arrays.
struct TraceGrads {
    std::vector<double> d_window_features;
    std::vector<double> d_contexts;
    std::vector<double> d_predictions;

    void init(const ForwardTrace& trace) {
        d_window_features.assign(trace.window_features.size(), 0.0);
        d_contexts.assign(trace.contexts.size(), 0.0);
        d_predictions.assign(trace.predictions.size(), 0.0);
    }
};

LossBreakdown total_loss(std::span<const ForwardTrace> weak, std::span<const ForwardTrace> strong,
                         const EncoderConfig& enc, const LossConfig& cfg);

// Same value as total_loss, plus d(total)/d(trace outputs) for every sample.
// Grad vectors must be pre-initialized with TraceGrads::init.
LossBreakdown total_loss_with_grads(std::span<const ForwardTrace> weak,
                                    std::span<const ForwardTrace> strong, const EncoderConfig& enc,
                                    const LossConfig& cfg, std::vector<TraceGrads>& weak_grads,
                                    std::vector<TraceGrads>& strong_grads);

}  // namespace gcontrast
