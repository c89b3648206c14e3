#include "gcontrast/graph.hpp"

#include <algorithm>
#include <cmath>

namespace gcontrast {

int EdgeAugConfig::resolve_weak(int sensors) const {
    return s_weak > 0 ? s_weak : std::max(1, sensors - 1);
}

int EdgeAugConfig::resolve_strong(int sensors) const {
    return s_strong > 0 ? s_strong : std::min(2, sensors);
}

void EdgeAugConfig::validate(int sensors) const {
    const int w = resolve_weak(sensors);
    const int s = resolve_strong(sensors);
    if (w < 1 || w > sensors) throw ConfigError("graph.s_weak must be in [1, N]");
    if (s < 1 || s > sensors) throw ConfigError("graph.s_strong must be in [1, N]");
    if (s > w)
        throw ConfigError("graph.s_strong (" + std::to_string(s) +
                          ") must not exceed graph.s_weak (" + std::to_string(w) +
                          "); the strong view is the more heavily augmented one");
}

SensorGraph build_graph(std::span<const double> features, int n, int dim) {
    if (n < 2) throw ValidationError("build_graph needs at least 2 sensors");
    if (features.size() != static_cast<std::size_t>(n) * dim)
        throw ShapeError("build_graph: features size does not match n*dim");
    for (double v : features)
        if (!std::isfinite(v)) throw NumericError("build_graph: non-finite feature value");

    SensorGraph g;
    g.n = n;
    g.dim = dim;
    g.features.assign(features.begin(), features.end());
    g.edges.resize(static_cast<std::size_t>(n) * n);
    g.softmax_rows.resize(static_cast<std::size_t>(n) * n);
    g.retained.assign(static_cast<std::size_t>(n) * n, 1);

    std::vector<double> scores(n);
    for (int i = 0; i < n; ++i) {
        const double* zi = features.data() + static_cast<std::size_t>(i) * dim;
        double max_score = -1e300;
        for (int j = 0; j < n; ++j) {
            const double* zj = features.data() + static_cast<std::size_t>(j) * dim;
            double dot = 0.0;
            for (int c = 0; c < dim; ++c) dot += zi[c] * zj[c];
            scores[j] = dot;
            max_score = std::max(max_score, dot);
        }
        double denom = 0.0;
        for (int j = 0; j < n; ++j) denom += std::exp(scores[j] - max_score);
        for (int j = 0; j < n; ++j) {
            const double p = std::exp(scores[j] - max_score) / denom;
            g.softmax_rows[static_cast<std::size_t>(i) * n + j] = p;
            g.edges[static_cast<std::size_t>(i) * n + j] = p;
        }
    }
    return g;
}

std::vector<int> top_s_indices(std::span<const double> row, int s) {
    std::vector<int> idx(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) idx[j] = static_cast<int>(j);
    // stable sort keeps the lower column index first among ties
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return row[a] > row[b]; });
    idx.resize(s);
    return idx;
}

void augment_edges(SensorGraph& g, int s, Rng& rng) {
    if (s < 1 || s > g.n)
        throw ConfigError("augment_edges: s = " + std::to_string(s) + " out of [1, " +
                          std::to_string(g.n) + "]");
    if (s == g.n) return;  // nothing replaced
    std::vector<std::uint8_t> keep(g.n);
    for (int i = 0; i < g.n; ++i) {
        std::fill(keep.begin(), keep.end(), 0);
        const double* row = g.edges.data() + static_cast<std::size_t>(i) * g.n;
        for (int j : top_s_indices({row, static_cast<std::size_t>(g.n)}, s)) keep[j] = 1;
        for (int j = 0; j < g.n; ++j) {
            const std::size_t at = static_cast<std::size_t>(i) * g.n + j;
            g.retained[at] = keep[j];
            if (!keep[j]) g.edges[at] = rng.uniform();
        }
    }
}

void gnn_layer_forward(const SensorGraph& g, std::span<const double> z, std::span<const double> wg,
                       std::span<double> out, std::vector<double>* aggregated,
                       std::vector<double>* pre_activation) {
    const int n = g.n;
    const int d = g.dim;
    if (z.size() != static_cast<std::size_t>(n) * d)
        throw ShapeError("gnn_layer: feature shape mismatch");
    if (wg.size() != static_cast<std::size_t>(d) * d)
        throw ShapeError("gnn_layer: Wg must be d x d");
    if (out.size() != z.size()) throw ShapeError("gnn_layer: output shape mismatch");

    std::vector<double> agg(static_cast<std::size_t>(n) * d, 0.0);
    for (int i = 0; i < n; ++i) {
        const double* erow = g.edges.data() + static_cast<std::size_t>(i) * n;
        double* arow = agg.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < n; ++j) {
            const double e = erow[j];
            const double* zj = z.data() + static_cast<std::size_t>(j) * d;
            for (int c = 0; c < d; ++c) arow[c] += e * zj[c];
        }
    }
    std::vector<double> pre(static_cast<std::size_t>(n) * d, 0.0);
    for (int i = 0; i < n; ++i) {
        const double* arow = agg.data() + static_cast<std::size_t>(i) * d;
        double* prow = pre.data() + static_cast<std::size_t>(i) * d;
        for (int a = 0; a < d; ++a) {
            const double av = arow[a];
            const double* wrow = wg.data() + static_cast<std::size_t>(a) * d;
            for (int c = 0; c < d; ++c) prow[c] += av * wrow[c];
        }
    }
    for (std::size_t at = 0; at < pre.size(); ++at) out[at] = pre[at] > 0.0 ? pre[at] : 0.0;
    if (aggregated) *aggregated = std::move(agg);
    if (pre_activation) *pre_activation = std::move(pre);
}

void gnn_layer_backward(const SensorGraph& g, std::span<const double> z, std::span<const double> wg,
                        std::span<const double> aggregated, std::span<const double> pre_activation,
                        std::span<const double> d_out, std::span<double> d_z,
                        std::span<double> d_edges, std::span<double> d_wg) {
    const int n = g.n;
    const int d = g.dim;
    std::vector<double> d_pre(static_cast<std::size_t>(n) * d);
    for (std::size_t at = 0; at < d_pre.size(); ++at)
        d_pre[at] = pre_activation[at] > 0.0 ? d_out[at] : 0.0;

    // d_wg += aggregated^T * d_pre ; d_agg = d_pre * wg^T
    std::vector<double> d_agg(static_cast<std::size_t>(n) * d, 0.0);
    for (int i = 0; i < n; ++i) {
        const double* arow = aggregated.data() + static_cast<std::size_t>(i) * d;
        const double* dprow = d_pre.data() + static_cast<std::size_t>(i) * d;
        for (int a = 0; a < d; ++a) {
            double* dwrow = d_wg.data() + static_cast<std::size_t>(a) * d;
            const double av = arow[a];
            for (int c = 0; c < d; ++c) dwrow[c] += av * dprow[c];
        }
        double* darow = d_agg.data() + static_cast<std::size_t>(i) * d;
        for (int a = 0; a < d; ++a) {
            const double* wrow = wg.data() + static_cast<std::size_t>(a) * d;
            double acc = 0.0;
            for (int c = 0; c < d; ++c) acc += dprow[c] * wrow[c];
            darow[a] = acc;
        }
    }

    // agg[i] = sum_j E[i,j] z[j] : d_edges[i,j] += <d_agg[i], z[j]>, d_z[j] += E[i,j] d_agg[i]
    for (int i = 0; i < n; ++i) {
        const double* darow = d_agg.data() + static_cast<std::size_t>(i) * d;
        const double* erow = g.edges.data() + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double* zj = z.data() + static_cast<std::size_t>(j) * d;
            double* dzj = d_z.data() + static_cast<std::size_t>(j) * d;
            double dot = 0.0;
            const double e = erow[j];
            for (int c = 0; c < d; ++c) {
                dot += darow[c] * zj[c];
                dzj[c] += e * darow[c];
            }
            d_edges[static_cast<std::size_t>(i) * n + j] += dot;
        }
    }
}

void graph_backward(const SensorGraph& g, std::span<const double> build_features,
                    std::span<const double> d_edges, std::span<double> d_build_features) {
    const int n = g.n;
    const int d = g.dim;
    std::vector<double> d_scores(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        const double* p = g.softmax_rows.data() + static_cast<std::size_t>(i) * n;
        const double* de = d_edges.data() + static_cast<std::size_t>(i) * n;
        const std::uint8_t* keep = g.retained.data() + static_cast<std::size_t>(i) * n;
        double weighted = 0.0;
        for (int j = 0; j < n; ++j)
            if (keep[j]) weighted += de[j] * p[j];
        for (int v = 0; v < n; ++v) {
            const double gv = keep[v] ? de[v] : 0.0;
            d_scores[static_cast<std::size_t>(i) * n + v] = p[v] * (gv - weighted);
        }
    }
    // scores[i,j] = <z_i, z_j>
    for (int i = 0; i < n; ++i) {
        const double* zi = build_features.data() + static_cast<std::size_t>(i) * d;
        double* dzi = d_build_features.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < n; ++j) {
            const double ds = d_scores[static_cast<std::size_t>(i) * n + j];
            if (ds == 0.0) continue;
            const double* zj = build_features.data() + static_cast<std::size_t>(j) * d;
            double* dzj = d_build_features.data() + static_cast<std::size_t>(j) * d;
            for (int c = 0; c < d; ++c) {
                dzi[c] += ds * zj[c];
                dzj[c] += ds * zi[c];
            }
        }
    }
}

}  // namespace gcontrast
