#include "gcontrast/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "gcontrast/rng.hpp"

namespace gcontrast {

namespace {

enum class InitKind { zero, one, fan_in };

struct TensorSpec {
    std::string name;
    std::vector<int> shape;
    InitKind kind;
    int fan_in = 0;
};

std::vector<TensorSpec> param_layout(const EncoderConfig& cfg) {
    const int d = cfg.d;
    std::vector<TensorSpec> layout;
    auto weight = [&](std::string name, std::vector<int> shape, int fan_in) {
        layout.push_back({std::move(name), std::move(shape), InitKind::fan_in, fan_in});
    };
    auto zero = [&](std::string name, std::vector<int> shape) {
        layout.push_back({std::move(name), std::move(shape), InitKind::zero, 0});
    };
    auto one = [&](std::string name, std::vector<int> shape) {
        layout.push_back({std::move(name), std::move(shape), InitKind::one, 0});
    };

    const int chans[3] = {cfg.cnn_c1, cfg.cnn_c2, d};
    const int in_chans[3] = {1, cfg.cnn_c1, cfg.cnn_c2};
    for (int b = 0; b < 3; ++b) {
        const std::string tag = std::to_string(b + 1);
        weight("cnn.conv" + tag + ".w", {chans[b], in_chans[b], 3}, in_chans[b] * 3);
        zero("cnn.conv" + tag + ".b", {chans[b]});
        one("cnn.norm" + tag + ".g", {chans[b]});
        zero("cnn.norm" + tag + ".b", {chans[b]});
    }
    weight("cnn.fc.w", {d, d}, d);
    zero("cnn.fc.b", {d});

    weight("gnn.wg", {d, d}, d);

    weight("summarizer.ctx", {d}, d);
    weight("summarizer.pos", {cfg.kbar, d}, d);
    for (int l = 0; l < cfg.tf_layers; ++l) {
        const std::string p = "summarizer.l" + std::to_string(l) + ".";
        one(p + "ln1.g", {d});
        zero(p + "ln1.b", {d});
        for (const char* proj : {"wq", "wk", "wv", "wo"}) weight(p + proj, {d, d}, d);
        for (const char* bias : {"bq", "bk", "bv", "bo"}) zero(p + bias, {d});
        one(p + "ln2.g", {d});
        zero(p + "ln2.b", {d});
        weight(p + "w1", {d, 4 * d}, d);
        zero(p + "b1", {4 * d});
        weight(p + "w2", {4 * d, d}, 4 * d);
        zero(p + "b2", {d});
    }
    one("summarizer.lnf.g", {d});
    zero("summarizer.lnf.b", {d});

    for (int j = 0; j < cfg.horizon(); ++j) {
        const std::string p = "heads.h" + std::to_string(j) + ".";
        weight(p + "w", {d, d}, d);
        zero(p + "b", {d});
    }
    return layout;
}

// Resolves named offsets once per forward/backward call.
struct Refs {
    const ParamSet& params;
    const double* operator()(const std::string& name) const { return params.data(name); }
    std::size_t offset(const std::string& name) const { return params.entry(name).offset; }
};

}  // namespace

void EncoderConfig::validate() const {
    if (sensors < 2) throw ConfigError("encoder: sensors must be >= 2");
    if (window_len < 2) throw ConfigError("encoder: window_len must be >= 2");
    if (windows < 2) throw ConfigError("encoder: need at least 2 windows");
    if (kbar < 1) throw ConfigError("model.kbar must be >= 1");
    if (kbar >= windows)
        throw ConfigError("model.kbar = " + std::to_string(kbar) + " with only " +
                          std::to_string(windows) + " windows: nothing to predict");
    if (d < 1 || cnn_c1 < 1 || cnn_c2 < 1) throw ConfigError("model dimensions must be positive");
    if (tf_layers < 1) throw ConfigError("model.transformer_layers must be >= 1");
    if (tf_heads < 1 || d % tf_heads != 0)
        throw ConfigError("model.d = " + std::to_string(d) + " not divisible by " +
                          std::to_string(tf_heads) + " transformer heads");
    if (gnn_layers < 0) throw ConfigError("graph.gnn_layers must be >= 0");
}

ParamSet init_params(const EncoderConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    ParamSet params;
    for (const auto& spec : param_layout(cfg)) {
        double* p = params.add(spec.name, spec.shape);
        const std::size_t n = params.entry(spec.name).size;
        switch (spec.kind) {
            case InitKind::zero:
                break;  // already zero
            case InitKind::one:
                std::fill(p, p + n, 1.0);
                break;
            case InitKind::fan_in: {
                Rng rng(derive_seed(seed, {hash_str(spec.name.c_str())}));
                const double bound = 1.0 / std::sqrt(static_cast<double>(spec.fan_in));
                for (std::size_t i = 0; i < n; ++i) p[i] = rng.uniform(-bound, bound);
                break;
            }
        }
    }
    return params;
}

namespace {

void cnn_forward(std::span<const double> view, const Refs& P, const EncoderConfig& cfg,
                 CnnCache& cache, std::vector<double>& encoded) {
    const int W = cfg.sensors * cfg.windows;
    const int f = cfg.window_len;
    const int d = cfg.d;
    const int chans[3] = {cfg.cnn_c1, cfg.cnn_c2, d};
    const int in_chans[3] = {1, cfg.cnn_c1, cfg.cnn_c2};

    cache.lens[0] = f;
    for (int b = 0; b < 3; ++b) cache.lens[b + 1] = nn::maxpool2_out_len(cache.lens[b]);

    cache.input.assign(view.begin(), view.end());
    for (int b = 0; b < 3; ++b) {
        const std::size_t conv_sz = static_cast<std::size_t>(W) * chans[b] * cache.lens[b];
        const std::size_t pool_sz = static_cast<std::size_t>(W) * chans[b] * cache.lens[b + 1];
        cache.conv[b].resize(conv_sz);
        cache.norm_xhat[b].resize(conv_sz);
        cache.norm_inv[b].resize(static_cast<std::size_t>(W) * cache.lens[b]);
        cache.norm_out[b].resize(conv_sz);
        cache.relu[b].resize(conv_sz);
        cache.pool[b].resize(pool_sz);
        cache.argmax[b].resize(pool_sz);
    }
    cache.pooled_mean.resize(static_cast<std::size_t>(W) * d);

    const char* conv_w[3] = {"cnn.conv1.w", "cnn.conv2.w", "cnn.conv3.w"};
    const char* conv_b[3] = {"cnn.conv1.b", "cnn.conv2.b", "cnn.conv3.b"};
    const char* norm_g[3] = {"cnn.norm1.g", "cnn.norm2.g", "cnn.norm3.g"};
    const char* norm_b[3] = {"cnn.norm1.b", "cnn.norm2.b", "cnn.norm3.b"};

    for (int w = 0; w < W; ++w) {
        const double* x = cache.input.data() + static_cast<std::size_t>(w) * f;
        for (int b = 0; b < 3; ++b) {
            const int len = cache.lens[b];
            const int plen = cache.lens[b + 1];
            const int ch = chans[b];
            const std::size_t at = static_cast<std::size_t>(w) * ch * len;
            const std::size_t pat = static_cast<std::size_t>(w) * ch * plen;
            nn::conv1d3_forward(x, in_chans[b], len, P(conv_w[b]), P(conv_b[b]), ch,
                                cache.conv[b].data() + at);
            nn::channel_norm_forward(cache.conv[b].data() + at, ch, len, P(norm_g[b]), P(norm_b[b]),
                                     cache.norm_out[b].data() + at, cache.norm_xhat[b].data() + at,
                                     cache.norm_inv[b].data() + static_cast<std::size_t>(w) * len);
            nn::relu_forward(cache.norm_out[b].data() + at, ch * len, cache.relu[b].data() + at);
            nn::maxpool2_forward(cache.relu[b].data() + at, ch, len, cache.pool[b].data() + pat,
                                 cache.argmax[b].data() + pat);
            x = cache.pool[b].data() + pat;
        }
        nn::time_mean_forward(x, d, cache.lens[3], cache.pooled_mean.data() + static_cast<std::size_t>(w) * d);
    }
    encoded.resize(static_cast<std::size_t>(W) * d);
    nn::affine_forward(cache.pooled_mean.data(), W, d, P("cnn.fc.w"), P("cnn.fc.b"), d,
                       encoded.data());
}

void cnn_backward(const CnnCache& cache, const Refs& P, const EncoderConfig& cfg,
                  std::span<const double> d_encoded, std::vector<double>& grads) {
    const int W = cfg.sensors * cfg.windows;
    const int d = cfg.d;
    const int chans[3] = {cfg.cnn_c1, cfg.cnn_c2, d};
    const int in_chans[3] = {1, cfg.cnn_c1, cfg.cnn_c2};
    auto G = [&](const char* name) { return grads.data() + P.offset(name); };

    std::vector<double> d_pooled_mean(static_cast<std::size_t>(W) * d, 0.0);
    nn::affine_backward(cache.pooled_mean.data(), W, d, P("cnn.fc.w"), d, d_encoded.data(),
                        d_pooled_mean.data(), G("cnn.fc.w"), G("cnn.fc.b"));

    const char* conv_w[3] = {"cnn.conv1.w", "cnn.conv2.w", "cnn.conv3.w"};
    const char* conv_b[3] = {"cnn.conv1.b", "cnn.conv2.b", "cnn.conv3.b"};
    const char* norm_g[3] = {"cnn.norm1.g", "cnn.norm2.g", "cnn.norm3.g"};
    const char* norm_b[3] = {"cnn.norm1.b", "cnn.norm2.b", "cnn.norm3.b"};

    // reusable per-window scratch, sized for the largest stage
    std::size_t max_sz = 0;
    for (int b = 0; b < 3; ++b)
        max_sz = std::max(max_sz, static_cast<std::size_t>(chans[b]) * cache.lens[b]);
    std::vector<double> d_pool_buf(max_sz), d_relu_buf(max_sz), d_norm_buf(max_sz), d_conv_buf(max_sz);

    for (int w = 0; w < W; ++w) {
        // gradient flowing into the pooled output of block b
        std::fill(d_pool_buf.begin(), d_pool_buf.end(), 0.0);
        nn::time_mean_backward(d, cache.lens[3], d_pooled_mean.data() + static_cast<std::size_t>(w) * d,
                               d_pool_buf.data());
        for (int b = 2; b >= 0; --b) {
            const int len = cache.lens[b];
            const int plen = cache.lens[b + 1];
            const int ch = chans[b];
            const std::size_t at = static_cast<std::size_t>(w) * ch * len;
            const std::size_t pat = static_cast<std::size_t>(w) * ch * plen;

            std::fill(d_relu_buf.begin(), d_relu_buf.end(), 0.0);
            nn::maxpool2_backward(ch, len, cache.argmax[b].data() + pat, d_pool_buf.data(),
                                  d_relu_buf.data());
            std::fill(d_norm_buf.begin(), d_norm_buf.end(), 0.0);
            nn::relu_backward(cache.norm_out[b].data() + at, ch * len, d_relu_buf.data(),
                              d_norm_buf.data());
            std::fill(d_conv_buf.begin(), d_conv_buf.end(), 0.0);
            nn::channel_norm_backward(ch, len, P(norm_g[b]), cache.norm_xhat[b].data() + at,
                                      cache.norm_inv[b].data() + static_cast<std::size_t>(w) * len,
                                      d_norm_buf.data(), d_conv_buf.data(), G(norm_g[b]),
                                      G(norm_b[b]));
            const double* block_in =
                b == 0 ? cache.input.data() + static_cast<std::size_t>(w) * cfg.window_len
                       : cache.pool[b - 1].data() + static_cast<std::size_t>(w) * chans[b - 1] * len;
            std::fill(d_pool_buf.begin(), d_pool_buf.end(), 0.0);
            nn::conv1d3_backward(block_in, in_chans[b], len, P(conv_w[b]), ch, d_conv_buf.data(),
                                 b == 0 ? nullptr : d_pool_buf.data(), G(conv_w[b]), G(conv_b[b]));
        }
    }
}

void gather_window(std::span<const double> features, int sensors, int windows, int d, int t,
                   double* out) {
    for (int i = 0; i < sensors; ++i)
        std::memcpy(out + static_cast<std::size_t>(i) * d,
                    features.data() + (static_cast<std::size_t>(i) * windows + t) * d,
                    sizeof(double) * d);
}

void scatter_window_add(std::span<double> features, int sensors, int windows, int d, int t,
                        const double* in) {
    for (int i = 0; i < sensors; ++i)
        for (int c = 0; c < d; ++c)
            features[(static_cast<std::size_t>(i) * windows + t) * d + c] +=
                in[static_cast<std::size_t>(i) * d + c];
}

void attention_forward(const EncoderConfig& cfg, const double* q, const double* k, const double* v,
                       double* attn, double* o) {
    const int T = cfg.tokens();
    const int d = cfg.d;
    const int H = cfg.tf_heads;
    const int dh = d / H;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<double> s(static_cast<std::size_t>(T) * T);
    for (int i = 0; i < cfg.sensors; ++i) {
        for (int h = 0; h < H; ++h) {
            const int hoff = h * dh;
            for (int u = 0; u < T; ++u) {
                const double* qu = q + (static_cast<std::size_t>(i) * T + u) * d + hoff;
                for (int vv = 0; vv < T; ++vv) {
                    const double* kv = k + (static_cast<std::size_t>(i) * T + vv) * d + hoff;
                    double dot = 0.0;
                    for (int c = 0; c < dh; ++c) dot += qu[c] * kv[c];
                    s[static_cast<std::size_t>(u) * T + vv] = dot * scale;
                }
            }
            double* p = attn + ((static_cast<std::size_t>(i) * H + h) * T) * T;
            nn::softmax_rows(s.data(), T, T, p);
            for (int u = 0; u < T; ++u) {
                double* ou = o + (static_cast<std::size_t>(i) * T + u) * d + hoff;
                std::fill(ou, ou + dh, 0.0);
                const double* pu = p + static_cast<std::size_t>(u) * T;
                for (int vv = 0; vv < T; ++vv) {
                    const double* vvv = v + (static_cast<std::size_t>(i) * T + vv) * d + hoff;
                    const double pw = pu[vv];
                    for (int c = 0; c < dh; ++c) ou[c] += pw * vvv[c];
                }
            }
        }
    }
}

void attention_backward(const EncoderConfig& cfg, const double* q, const double* k, const double* v,
                        const double* attn, const double* d_o, double* d_q, double* d_k,
                        double* d_v) {
    const int T = cfg.tokens();
    const int d = cfg.d;
    const int H = cfg.tf_heads;
    const int dh = d / H;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<double> dp(static_cast<std::size_t>(T) * T);
    std::vector<double> ds(static_cast<std::size_t>(T) * T);
    for (int i = 0; i < cfg.sensors; ++i) {
        for (int h = 0; h < H; ++h) {
            const int hoff = h * dh;
            const double* p = attn + ((static_cast<std::size_t>(i) * H + h) * T) * T;
            // dP[u,v] = <dO_u, V_v>; dV_v += sum_u P[u,v] dO_u
            for (int u = 0; u < T; ++u) {
                const double* dou = d_o + (static_cast<std::size_t>(i) * T + u) * d + hoff;
                const double* pu = p + static_cast<std::size_t>(u) * T;
                for (int vv = 0; vv < T; ++vv) {
                    const double* vvv = v + (static_cast<std::size_t>(i) * T + vv) * d + hoff;
                    double* dvv = d_v + (static_cast<std::size_t>(i) * T + vv) * d + hoff;
                    double dot = 0.0;
                    const double pw = pu[vv];
                    for (int c = 0; c < dh; ++c) {
                        dot += dou[c] * vvv[c];
                        dvv[c] += pw * dou[c];
                    }
                    dp[static_cast<std::size_t>(u) * T + vv] = dot;
                }
            }
            std::fill(ds.begin(), ds.end(), 0.0);
            nn::softmax_rows_backward(p, T, T, dp.data(), ds.data());
            for (int u = 0; u < T; ++u) {
                double* dqu = d_q + (static_cast<std::size_t>(i) * T + u) * d + hoff;
                const double* qu = q + (static_cast<std::size_t>(i) * T + u) * d + hoff;
                for (int vv = 0; vv < T; ++vv) {
                    const double dsv = ds[static_cast<std::size_t>(u) * T + vv] * scale;
                    if (dsv == 0.0) continue;
                    const double* kv = k + (static_cast<std::size_t>(i) * T + vv) * d + hoff;
                    double* dkv = d_k + (static_cast<std::size_t>(i) * T + vv) * d + hoff;
                    for (int c = 0; c < dh; ++c) {
                        dqu[c] += dsv * kv[c];
                        dkv[c] += dsv * qu[c];
                    }
                }
            }
        }
    }
}

void transformer_forward(const Refs& P, const EncoderConfig& cfg, ForwardTrace& trace) {
    const int N = cfg.sensors;
    const int T = cfg.tokens();
    const int d = cfg.d;
    const int rows = N * T;
    const std::size_t sz = static_cast<std::size_t>(rows) * d;

    trace.tf_input.assign(sz, 0.0);
    const double* ctx = P("summarizer.ctx");
    const double* pos = P("summarizer.pos");
    for (int i = 0; i < N; ++i) {
        std::memcpy(trace.tf_input.data() + (static_cast<std::size_t>(i) * T) * d, ctx,
                    sizeof(double) * d);
        for (int j = 0; j < cfg.kbar; ++j) {
            double* tok = trace.tf_input.data() + (static_cast<std::size_t>(i) * T + 1 + j) * d;
            const double* zg =
                trace.window_features.data() + (static_cast<std::size_t>(i) * cfg.windows + j) * d;
            for (int c = 0; c < d; ++c) tok[c] = zg[c] + pos[static_cast<std::size_t>(j) * d + c];
        }
    }

    std::vector<double> x = trace.tf_input;
    trace.tf.resize(cfg.tf_layers);
    std::vector<double> m(sz), x1(sz), hpre(static_cast<std::size_t>(rows) * 4 * d), fout(sz);
    for (int l = 0; l < cfg.tf_layers; ++l) {
        TransformerLayerCache& c = trace.tf[l];
        const std::string p = "summarizer.l" + std::to_string(l) + ".";
        c.ln1_xhat.resize(sz);
        c.ln1_inv.resize(rows);
        c.a.resize(sz);
        nn::layer_norm_forward(x.data(), rows, d, P(p + "ln1.g"), P(p + "ln1.b"), c.a.data(),
                               c.ln1_xhat.data(), c.ln1_inv.data());
        c.q.resize(sz);
        c.k.resize(sz);
        c.v.resize(sz);
        nn::affine_forward(c.a.data(), rows, d, P(p + "wq"), P(p + "bq"), d, c.q.data());
        nn::affine_forward(c.a.data(), rows, d, P(p + "wk"), P(p + "bk"), d, c.k.data());
        nn::affine_forward(c.a.data(), rows, d, P(p + "wv"), P(p + "bv"), d, c.v.data());
        c.attn.resize(static_cast<std::size_t>(N) * cfg.tf_heads * T * T);
        c.o.resize(sz);
        attention_forward(cfg, c.q.data(), c.k.data(), c.v.data(), c.attn.data(), c.o.data());
        nn::affine_forward(c.o.data(), rows, d, P(p + "wo"), P(p + "bo"), d, m.data());
        for (std::size_t a = 0; a < sz; ++a) x1[a] = x[a] + m[a];

        c.ln2_xhat.resize(sz);
        c.ln2_inv.resize(rows);
        c.b1.resize(sz);
        nn::layer_norm_forward(x1.data(), rows, d, P(p + "ln2.g"), P(p + "ln2.b"), c.b1.data(),
                               c.ln2_xhat.data(), c.ln2_inv.data());
        nn::affine_forward(c.b1.data(), rows, d, P(p + "w1"), P(p + "b1"), 4 * d, hpre.data());
        c.hrelu.resize(hpre.size());
        nn::relu_forward(hpre.data(), rows * 4 * d, c.hrelu.data());
        nn::affine_forward(c.hrelu.data(), rows, 4 * d, P(p + "w2"), P(p + "b2"), d, fout.data());
        for (std::size_t a = 0; a < sz; ++a) x[a] = x1[a] + fout[a];
    }

    trace.lnf_xhat.resize(sz);
    trace.lnf_inv.resize(rows);
    std::vector<double> y(sz);
    nn::layer_norm_forward(x.data(), rows, d, P("summarizer.lnf.g"), P("summarizer.lnf.b"),
                           y.data(), trace.lnf_xhat.data(), trace.lnf_inv.data());
    trace.contexts.resize(static_cast<std::size_t>(N) * d);
    for (int i = 0; i < N; ++i)
        std::memcpy(trace.contexts.data() + static_cast<std::size_t>(i) * d,
                    y.data() + (static_cast<std::size_t>(i) * T) * d, sizeof(double) * d);
}

void transformer_backward(const ForwardTrace& trace, const Refs& P, const EncoderConfig& cfg,
                          std::span<const double> d_contexts, std::vector<double>& d_window_feat,
                          std::vector<double>& grads) {
    const int N = cfg.sensors;
    const int T = cfg.tokens();
    const int d = cfg.d;
    const int rows = N * T;
    const std::size_t sz = static_cast<std::size_t>(rows) * d;
    auto G = [&](const std::string& name) { return grads.data() + P.offset(name); };

    std::vector<double> dy(sz, 0.0);
    for (int i = 0; i < N; ++i)
        std::memcpy(dy.data() + (static_cast<std::size_t>(i) * T) * d,
                    d_contexts.data() + static_cast<std::size_t>(i) * d, sizeof(double) * d);

    std::vector<double> dx(sz, 0.0);
    nn::layer_norm_backward(rows, d, P("summarizer.lnf.g"), trace.lnf_xhat.data(),
                            trace.lnf_inv.data(), dy.data(), dx.data(), G("summarizer.lnf.g"),
                            G("summarizer.lnf.b"));

    std::vector<double> dhrelu(static_cast<std::size_t>(rows) * 4 * d);
    std::vector<double> dhpre(dhrelu.size());
    std::vector<double> db1(sz), dx1(sz), dm(sz), dov(sz), dq(sz), dk(sz), dv(sz), da(sz);
    for (int l = cfg.tf_layers - 1; l >= 0; --l) {
        const TransformerLayerCache& c = trace.tf[l];
        const std::string p = "summarizer.l" + std::to_string(l) + ".";

        // x2 = x1 + ffn(ln2(x1))
        std::fill(dhrelu.begin(), dhrelu.end(), 0.0);
        nn::affine_backward(c.hrelu.data(), rows, 4 * d, P(p + "w2"), d, dx.data(), dhrelu.data(),
                            G(p + "w2"), G(p + "b2"));
        for (std::size_t a = 0; a < dhrelu.size(); ++a)
            dhpre[a] = c.hrelu[a] > 0.0 ? dhrelu[a] : 0.0;
        std::fill(db1.begin(), db1.end(), 0.0);
        nn::affine_backward(c.b1.data(), rows, d, P(p + "w1"), 4 * d, dhpre.data(), db1.data(),
                            G(p + "w1"), G(p + "b1"));
        dx1 = dx;  // residual
        nn::layer_norm_backward(rows, d, P(p + "ln2.g"), c.ln2_xhat.data(), c.ln2_inv.data(),
                                db1.data(), dx1.data(), G(p + "ln2.g"), G(p + "ln2.b"));

        // x1 = x + wo(attn(q,k,v))
        dm = dx1;
        std::fill(dov.begin(), dov.end(), 0.0);
        nn::affine_backward(c.o.data(), rows, d, P(p + "wo"), d, dm.data(), dov.data(),
                            G(p + "wo"), G(p + "bo"));
        std::fill(dq.begin(), dq.end(), 0.0);
        std::fill(dk.begin(), dk.end(), 0.0);
        std::fill(dv.begin(), dv.end(), 0.0);
        attention_backward(cfg, c.q.data(), c.k.data(), c.v.data(), c.attn.data(), dov.data(),
                           dq.data(), dk.data(), dv.data());
        std::fill(da.begin(), da.end(), 0.0);
        nn::affine_backward(c.a.data(), rows, d, P(p + "wq"), d, dq.data(), da.data(), G(p + "wq"),
                            G(p + "bq"));
        nn::affine_backward(c.a.data(), rows, d, P(p + "wk"), d, dk.data(), da.data(), G(p + "wk"),
                            G(p + "bk"));
        nn::affine_backward(c.a.data(), rows, d, P(p + "wv"), d, dv.data(), da.data(), G(p + "wv"),
                            G(p + "bv"));
        nn::layer_norm_backward(rows, d, P(p + "ln1.g"), c.ln1_xhat.data(), c.ln1_inv.data(),
                                da.data(), dx1.data(), G(p + "ln1.g"), G(p + "ln1.b"));
        dx = dx1;
    }

    double* g_ctx = G("summarizer.ctx");
    double* g_pos = G("summarizer.pos");
    for (int i = 0; i < N; ++i) {
        const double* row0 = dx.data() + (static_cast<std::size_t>(i) * T) * d;
        for (int c = 0; c < d; ++c) g_ctx[c] += row0[c];
        for (int j = 0; j < cfg.kbar; ++j) {
            const double* tok = dx.data() + (static_cast<std::size_t>(i) * T + 1 + j) * d;
            double* dwf =
                d_window_feat.data() + (static_cast<std::size_t>(i) * cfg.windows + j) * d;
            for (int c = 0; c < d; ++c) {
                dwf[c] += tok[c];
                g_pos[static_cast<std::size_t>(j) * d + c] += tok[c];
            }
        }
    }
}

}  // namespace

std::vector<double> encode_windows(std::span<const double> view, const ParamSet& params,
                                   const EncoderConfig& cfg) {
    cfg.validate();
    if (view.size() !=
        static_cast<std::size_t>(cfg.sensors) * cfg.windows * cfg.window_len)
        throw ShapeError("encode_windows: view size does not match (N, k, f)");
    Refs P{params};
    CnnCache cache;
    std::vector<double> encoded;
    cnn_forward(view, P, cfg, cache, encoded);
    return encoded;
}

ForwardTrace forward_view(std::span<const double> view, const ParamSet& params,
                          const EncoderConfig& cfg, int edge_s, std::uint64_t edge_seed) {
    cfg.validate();
    if (view.size() !=
        static_cast<std::size_t>(cfg.sensors) * cfg.windows * cfg.window_len)
        throw ShapeError("forward_view: view size does not match (N, k, f)");
    if (edge_s < 1 || edge_s > cfg.sensors)
        throw ConfigError("forward_view: edge_s out of [1, N]");

    Refs P{params};
    ForwardTrace trace;
    cnn_forward(view, P, cfg, trace.cnn, trace.encoded);

    const int N = cfg.sensors;
    const int k = cfg.windows;
    const int d = cfg.d;

    if (cfg.gnn_layers == 0) {
        trace.window_features = trace.encoded;
    } else {
        trace.window_features.assign(trace.encoded.size(), 0.0);
        trace.graphs.resize(k);
        const double* wg = P("gnn.wg");
        std::vector<double> zb(static_cast<std::size_t>(N) * d);
        for (int t = 0; t < k; ++t) {
            gather_window(trace.encoded, N, k, d, t, zb.data());
            GraphCache& gc = trace.graphs[t];
            gc.graph = build_graph(zb, N, d);
            Rng rng(derive_seed(edge_seed, {static_cast<std::uint64_t>(t)}));
            augment_edges(gc.graph, edge_s, rng);
            std::vector<double> cur = zb;
            for (int l = 0; l < cfg.gnn_layers; ++l) {
                gc.layer_in.push_back(cur);
                std::vector<double> out(cur.size());
                std::vector<double> agg, pre;
                gnn_layer_forward(gc.graph, cur, {wg, static_cast<std::size_t>(d) * d}, out, &agg,
                                  &pre);
                gc.aggregated.push_back(std::move(agg));
                gc.pre_act.push_back(std::move(pre));
                cur = std::move(out);
            }
            for (int i = 0; i < N; ++i)
                std::memcpy(trace.window_features.data() + (static_cast<std::size_t>(i) * k + t) * d,
                            cur.data() + static_cast<std::size_t>(i) * d, sizeof(double) * d);
        }
    }

    if (cfg.summarizer == SummarizerKind::transformer) {
        transformer_forward(P, cfg, trace);
    } else {
        trace.contexts.assign(static_cast<std::size_t>(N) * d, 0.0);
        for (int i = 0; i < N; ++i) {
            double* ci = trace.contexts.data() + static_cast<std::size_t>(i) * d;
            for (int t = 0; t < cfg.kbar; ++t) {
                const double* zg =
                    trace.window_features.data() + (static_cast<std::size_t>(i) * k + t) * d;
                for (int c = 0; c < d; ++c) ci[c] += zg[c];
            }
            for (int c = 0; c < d; ++c) ci[c] /= cfg.kbar;
        }
    }

    const int hz = cfg.horizon();
    trace.predictions.resize(static_cast<std::size_t>(N) * hz * d);
    if (cfg.nonlinear_heads) trace.head_pre.resize(trace.predictions.size());
    std::vector<double> tmp(static_cast<std::size_t>(N) * d);
    for (int j = 0; j < hz; ++j) {
        const std::string p = "heads.h" + std::to_string(j) + ".";
        nn::affine_forward(trace.contexts.data(), N, d, P(p + "w"), P(p + "b"), d, tmp.data());
        for (int i = 0; i < N; ++i) {
            double* dst = trace.predictions.data() + (static_cast<std::size_t>(i) * hz + j) * d;
            const double* src = tmp.data() + static_cast<std::size_t>(i) * d;
            if (cfg.nonlinear_heads) {
                double* pre = trace.head_pre.data() + (static_cast<std::size_t>(i) * hz + j) * d;
                for (int c = 0; c < d; ++c) {
                    pre[c] = src[c];
                    dst[c] = src[c] > 0.0 ? src[c] : 0.0;
                }
            } else {
                std::memcpy(dst, src, sizeof(double) * d);
            }
        }
    }
    return trace;
}

void backward_view(const ForwardTrace& trace, const ParamSet& params, const EncoderConfig& cfg,
                   std::span<const double> d_window_features, std::span<const double> d_contexts,
                   std::span<const double> d_predictions, std::vector<double>& grads) {
    const int N = cfg.sensors;
    const int k = cfg.windows;
    const int d = cfg.d;
    const int hz = cfg.horizon();
    if (grads.size() != params.size()) throw ShapeError("backward_view: grad buffer size mismatch");
    Refs P{params};
    auto G = [&](const std::string& name) { return grads.data() + P.offset(name); };

    // heads
    std::vector<double> dctx(static_cast<std::size_t>(N) * d, 0.0);
    if (!d_contexts.empty()) {
        if (d_contexts.size() != dctx.size()) throw ShapeError("backward_view: d_contexts shape");
        std::copy(d_contexts.begin(), d_contexts.end(), dctx.begin());
    }
    if (!d_predictions.empty()) {
        if (d_predictions.size() != static_cast<std::size_t>(N) * hz * d)
            throw ShapeError("backward_view: d_predictions shape");
        std::vector<double> dtmp(static_cast<std::size_t>(N) * d);
        for (int j = 0; j < hz; ++j) {
            const std::string p = "heads.h" + std::to_string(j) + ".";
            for (int i = 0; i < N; ++i) {
                const std::size_t at = (static_cast<std::size_t>(i) * hz + j) * d;
                for (int c = 0; c < d; ++c) {
                    double g = d_predictions[at + c];
                    if (cfg.nonlinear_heads && trace.head_pre[at + c] <= 0.0) g = 0.0;
                    dtmp[static_cast<std::size_t>(i) * d + c] = g;
                }
            }
            nn::affine_backward(trace.contexts.data(), N, d, P(p + "w"), d, dtmp.data(),
                                dctx.data(), G(p + "w"), G(p + "b"));
        }
    }

    // summarizer
    std::vector<double> dwf(static_cast<std::size_t>(N) * k * d, 0.0);
    if (!d_window_features.empty()) {
        if (d_window_features.size() != dwf.size())
            throw ShapeError("backward_view: d_window_features shape");
        std::copy(d_window_features.begin(), d_window_features.end(), dwf.begin());
    }
    if (cfg.summarizer == SummarizerKind::transformer) {
        transformer_backward(trace, P, cfg, dctx, dwf, grads);
    } else {
        for (int i = 0; i < N; ++i)
            for (int t = 0; t < cfg.kbar; ++t)
                for (int c = 0; c < d; ++c)
                    dwf[(static_cast<std::size_t>(i) * k + t) * d + c] +=
                        dctx[static_cast<std::size_t>(i) * d + c] / cfg.kbar;
    }

    // graph stack
    std::vector<double> d_encoded(static_cast<std::size_t>(N) * k * d, 0.0);
    if (cfg.gnn_layers == 0) {
        d_encoded = dwf;
    } else {
        const double* wg = P("gnn.wg");
        double* g_wg = G("gnn.wg");
        std::vector<double> dcur(static_cast<std::size_t>(N) * d);
        std::vector<double> dprev(dcur.size());
        std::vector<double> d_edges(static_cast<std::size_t>(N) * N);
        for (int t = 0; t < k; ++t) {
            const GraphCache& gc = trace.graphs[t];
            gather_window(dwf, N, k, d, t, dcur.data());
            std::fill(d_edges.begin(), d_edges.end(), 0.0);
            for (int l = cfg.gnn_layers - 1; l >= 0; --l) {
                std::fill(dprev.begin(), dprev.end(), 0.0);
                gnn_layer_backward(gc.graph, gc.layer_in[l],
                                   {wg, static_cast<std::size_t>(d) * d}, gc.aggregated[l],
                                   gc.pre_act[l], dcur, dprev,
                                   d_edges, {g_wg, static_cast<std::size_t>(d) * d});
                dcur = dprev;
            }
            graph_backward(gc.graph, gc.layer_in[0], d_edges, dcur);
            scatter_window_add(d_encoded, N, k, d, t, dcur.data());
        }
    }

    cnn_backward(trace.cnn, P, cfg, d_encoded, grads);
}

}  // namespace gcontrast
