#include "gcontrast/losses.hpp"

#include <cmath>

#include "gcontrast/nn.hpp"

namespace gcontrast {

namespace {

// One InfoNCE-style direction: anchor a scores candidate vectors; the
// positive is candidates[pos]. Denominator indices are every candidate except
// the anchor's own slot exclusions, already encoded by the caller through
// `denom`. Returns -(log term); accumulates gradients when grad buffers are
// given (scale multiplies the gradient of the *negated* term).
struct Candidate {
    const double* vec;
    double* grad;  // may be null
};

double nce_term(const double* anchor, double* anchor_grad, const std::vector<Candidate>& cands,
                int pos, const std::vector<int>& denom, int dim, double inv_tau, double scale) {
    const std::size_t n = cands.size();
    std::vector<double> logits(n);
    for (std::size_t v = 0; v < n; ++v) {
        double dot = 0.0;
        for (int c = 0; c < dim; ++c) dot += anchor[c] * cands[v].vec[c];
        logits[v] = dot * inv_tau;
    }
    std::vector<double> denom_logits;
    denom_logits.reserve(denom.size());
    for (int v : denom) denom_logits.push_back(logits[v]);
    const double lse = nn::log_sum_exp(denom_logits);
    const double term = logits[pos] - lse;

    if (anchor_grad) {
        // d(-term)/d logit_pos = -1 ; d(-term)/d logit_v += p_v over denom
        std::vector<double> dlogit(n, 0.0);
        dlogit[pos] -= 1.0;
        for (int v : denom) dlogit[v] += std::exp(logits[v] - lse);
        for (std::size_t v = 0; v < n; ++v) {
            const double g = dlogit[v] * scale * inv_tau;
            if (g == 0.0) continue;
            for (int c = 0; c < dim; ++c) {
                anchor_grad[c] += g * cands[v].vec[c];
                if (cands[v].grad) cands[v].grad[c] += g * anchor[c];
            }
        }
    }
    return -term;
}

// MWTC, one direction: predictions of the "from" view scored against the
// window features of the "to" view. Returns the direction loss; gradients
// scaled by `scale` when buffers are non-null.
double mwtc_direction(const double* pred_from, const double* win_to, int sensors, int windows,
                      int kbar, int dim, bool include_positive, double* d_pred_from,
                      double* d_win_to, double scale) {
    const int hz = windows - kbar;
    double acc = 0.0;
    const double norm = 1.0 / (static_cast<double>(sensors) * hz);
    std::vector<Candidate> cands(windows);
    std::vector<int> denom;
    for (int i = 0; i < sensors; ++i) {
        for (int v = 0; v < windows; ++v) {
            const std::size_t at = (static_cast<std::size_t>(i) * windows + v) * dim;
            cands[v] = {win_to + at, d_win_to ? d_win_to + at : nullptr};
        }
        for (int j = 0; j < hz; ++j) {
            const int t = kbar + j;
            denom.clear();
            for (int v = 0; v < windows; ++v)
                if (include_positive || v != t) denom.push_back(v);
            const std::size_t pat = (static_cast<std::size_t>(i) * hz + j) * dim;
            acc += norm * nce_term(pred_from + pat, d_pred_from ? d_pred_from + pat : nullptr,
                                   cands, t, denom, dim, 1.0, scale * norm);
        }
    }
    return acc;
}

double mwtc_with_grads(std::span<const double> pred_s, std::span<const double> pred_w,
                       std::span<const double> win_w, std::span<const double> win_s, int sensors,
                       int windows, int kbar, int dim, bool include_positive, double* d_pred_s,
                       double* d_pred_w, double* d_win_w, double* d_win_s, double scale) {
    if (windows < 2) throw ValidationError("no negatives for MWTC (k must be >= 2)");
    if (windows - kbar < 1) throw ValidationError("MWTC needs at least one predicted window");
    const std::size_t want_pred = static_cast<std::size_t>(sensors) * (windows - kbar) * dim;
    const std::size_t want_win = static_cast<std::size_t>(sensors) * windows * dim;
    if (pred_s.size() != want_pred || pred_w.size() != want_pred || win_w.size() != want_win ||
        win_s.size() != want_win)
        throw ShapeError("mwtc_loss: input shapes inconsistent with (N, k, kbar, d)");
    const double sw = mwtc_direction(pred_s.data(), win_w.data(), sensors, windows, kbar, dim,
                                     include_positive, d_pred_s, d_win_w, scale);
    const double ws = mwtc_direction(pred_w.data(), win_s.data(), sensors, windows, kbar, dim,
                                     include_positive, d_pred_w, d_win_s, scale);
    return sw + ws;
}

double nc_direction(const double* ctx_from, const double* ctx_to, int sensors, int dim, double tau,
                    bool include_positive, double* d_from, double* d_to, double scale) {
    const double norm = 1.0 / sensors;
    double acc = 0.0;
    std::vector<Candidate> cands(sensors);
    std::vector<int> denom;
    for (int v = 0; v < sensors; ++v) {
        const std::size_t at = static_cast<std::size_t>(v) * dim;
        cands[v] = {ctx_to + at, d_to ? d_to + at : nullptr};
    }
    for (int i = 0; i < sensors; ++i) {
        denom.clear();
        for (int v = 0; v < sensors; ++v)
            if (include_positive || v != i) denom.push_back(v);
        const std::size_t at = static_cast<std::size_t>(i) * dim;
        acc += norm * nce_term(ctx_from + at, d_from ? d_from + at : nullptr, cands, i, denom, dim,
                               1.0 / tau, scale * norm);
    }
    return acc;
}

double nc_with_grads(std::span<const double> ctx_w, std::span<const double> ctx_s, int sensors,
                     int dim, double tau, bool include_positive, double* d_ctx_w, double* d_ctx_s,
                     double scale) {
    if (sensors < 2) throw ValidationError("no negative sensors (N must be >= 2)");
    if (ctx_w.size() != static_cast<std::size_t>(sensors) * dim || ctx_w.size() != ctx_s.size())
        throw ShapeError("nc_loss: context shapes inconsistent with (N, d)");
    const double sw = nc_direction(ctx_s.data(), ctx_w.data(), sensors, dim, tau, include_positive,
                                   d_ctx_s, d_ctx_w, scale);
    const double ws = nc_direction(ctx_w.data(), ctx_s.data(), sensors, dim, tau, include_positive,
                                   d_ctx_w, d_ctx_s, scale);
    return sw + ws;
}

// GC, one direction: anchors from `from`; candidates are both views of every
// sample. Candidate index v in [0, B) is the `to` view, [B, 2B) the `from`
// view. The positive is (to, p); the anchor's own slot is never a candidate.
double gc_direction(const double* g_from, const double* g_to, int batch, int dim, double tau,
                    bool include_positive, double* d_from, double* d_to, double scale) {
    const double norm = 1.0 / batch;
    double acc = 0.0;
    std::vector<Candidate> cands(2 * batch);
    std::vector<int> denom;
    for (int v = 0; v < batch; ++v) {
        const std::size_t at = static_cast<std::size_t>(v) * dim;
        cands[v] = {g_to + at, d_to ? d_to + at : nullptr};
        cands[batch + v] = {g_from + at, d_from ? d_from + at : nullptr};
    }
    for (int p = 0; p < batch; ++p) {
        denom.clear();
        for (int v = 0; v < batch; ++v) {
            if (v != p) {
                denom.push_back(v);          // other samples, `to` view
                denom.push_back(batch + v);  // other samples, `from` view
            } else if (include_positive) {
                denom.push_back(v);
            }
        }
        const std::size_t at = static_cast<std::size_t>(p) * dim;
        acc += norm * nce_term(g_from + at, d_from ? d_from + at : nullptr, cands, p, denom, dim,
                               1.0 / tau, scale * norm);
    }
    return acc;
}

double gc_with_grads(std::span<const double> globals_w, std::span<const double> globals_s,
                     int batch, int dim, double tau, bool include_positive, double* d_w,
                     double* d_s, double scale) {
    if (batch < 2) throw ValidationError("GC needs at least 2 samples");
    if (globals_w.size() != static_cast<std::size_t>(batch) * dim ||
        globals_w.size() != globals_s.size())
        throw ShapeError("gc_loss: global feature shapes inconsistent with (B, N*d)");
    const double s_dir = gc_direction(globals_s.data(), globals_w.data(), batch, dim, tau,
                                      include_positive, d_s, d_w, scale);
    const double w_dir = gc_direction(globals_w.data(), globals_s.data(), batch, dim, tau,
                                      include_positive, d_w, d_s, scale);
    return s_dir + w_dir;
}

}  // namespace

double mwtc_loss(std::span<const double> pred_s, std::span<const double> pred_w,
                 std::span<const double> win_w, std::span<const double> win_s, int sensors,
                 int windows, int kbar, int dim, bool include_positive) {
    return mwtc_with_grads(pred_s, pred_w, win_w, win_s, sensors, windows, kbar, dim,
                           include_positive, nullptr, nullptr, nullptr, nullptr, 0.0);
}

double nc_loss(std::span<const double> ctx_w, std::span<const double> ctx_s, int sensors, int dim,
               double tau, bool include_positive) {
    return nc_with_grads(ctx_w, ctx_s, sensors, dim, tau, include_positive, nullptr, nullptr, 0.0);
}

double gc_loss(std::span<const double> globals_w, std::span<const double> globals_s, int batch,
               int dim, double tau, bool include_positive) {
    return gc_with_grads(globals_w, globals_s, batch, dim, tau, include_positive, nullptr, nullptr,
                         0.0);
}

namespace {

LossBreakdown total_loss_impl(std::span<const ForwardTrace> weak,
                              std::span<const ForwardTrace> strong, const EncoderConfig& enc,
                              const LossConfig& cfg, std::vector<TraceGrads>* wg,
                              std::vector<TraceGrads>* sg) {
    cfg.validate();
    const int B = static_cast<int>(weak.size());
    if (B < 2) throw ValidationError("GC needs at least 2 samples");
    if (strong.size() != weak.size()) throw ShapeError("total_loss: view counts differ");
    const int N = enc.sensors;
    const int k = enc.windows;
    const int d = enc.d;
    const int D = N * d;

    const double sample_scale = cfg.batch_mean ? 1.0 / B : 1.0;
    LossBreakdown out;

    for (int p = 0; p < B; ++p) {
        double* dps = sg ? (*sg)[p].d_predictions.data() : nullptr;
        double* dpw = wg ? (*wg)[p].d_predictions.data() : nullptr;
        double* dww = wg ? (*wg)[p].d_window_features.data() : nullptr;
        double* dws = sg ? (*sg)[p].d_window_features.data() : nullptr;
        out.mwtc += sample_scale *
                    mwtc_with_grads(strong[p].predictions, weak[p].predictions,
                                    weak[p].window_features, strong[p].window_features, N, k,
                                    enc.kbar, d, cfg.include_positive, dps, dpw, dww, dws,
                                    cfg.lambda_mwtc * sample_scale);
        double* dcw = wg ? (*wg)[p].d_contexts.data() : nullptr;
        double* dcs = sg ? (*sg)[p].d_contexts.data() : nullptr;
        out.nc += sample_scale * nc_with_grads(weak[p].contexts, strong[p].contexts, N, d, cfg.tau,
                                               cfg.include_positive, dcw, dcs,
                                               cfg.lambda_nc * sample_scale);
    }

    // Global features are the flat context arrays; gather batch matrices.
    std::vector<double> gw(static_cast<std::size_t>(B) * D), gs(gw.size());
    for (int p = 0; p < B; ++p) {
        std::copy(weak[p].contexts.begin(), weak[p].contexts.end(),
                  gw.begin() + static_cast<std::size_t>(p) * D);
        std::copy(strong[p].contexts.begin(), strong[p].contexts.end(),
                  gs.begin() + static_cast<std::size_t>(p) * D);
    }
    std::vector<double> dgw, dgs;
    double* dgw_p = nullptr;
    double* dgs_p = nullptr;
    if (wg) {
        dgw.assign(gw.size(), 0.0);
        dgs.assign(gs.size(), 0.0);
        dgw_p = dgw.data();
        dgs_p = dgs.data();
    }
    out.gc = gc_with_grads(gw, gs, B, D, cfg.tau, cfg.include_positive, dgw_p, dgs_p,
                           cfg.lambda_gc);
    if (wg) {
        for (int p = 0; p < B; ++p) {
            for (int c = 0; c < D; ++c) {
                (*wg)[p].d_contexts[c] += dgw[static_cast<std::size_t>(p) * D + c];
                (*sg)[p].d_contexts[c] += dgs[static_cast<std::size_t>(p) * D + c];
            }
        }
    }

    out.total = cfg.lambda_mwtc * out.mwtc + cfg.lambda_nc * out.nc + cfg.lambda_gc * out.gc;
    return out;
}

}  // namespace

LossBreakdown total_loss(std::span<const ForwardTrace> weak, std::span<const ForwardTrace> strong,
                         const EncoderConfig& enc, const LossConfig& cfg) {
    return total_loss_impl(weak, strong, enc, cfg, nullptr, nullptr);
}

LossBreakdown total_loss_with_grads(std::span<const ForwardTrace> weak,
                                    std::span<const ForwardTrace> strong, const EncoderConfig& enc,
                                    const LossConfig& cfg, std::vector<TraceGrads>& weak_grads,
                                    std::vector<TraceGrads>& strong_grads) {
    if (weak_grads.size() != weak.size() || strong_grads.size() != strong.size())
        throw ShapeError("total_loss_with_grads: grad buffers must match batch size");
    return total_loss_impl(weak, strong, enc, cfg, &weak_grads, &strong_grads);
}

}  // namespace gcontrast
