#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gcontrast/graph.hpp"
#include "gcontrast/nn.hpp"
#include "gcontrast/params.hpp"

namespace gcontrast {

enum class SummarizerKind { transformer, mean };

// Shape and architecture of the learnable path. windows/kbar are resolved
// against the dataset before construction.
struct EncoderConfig {
    int sensors = 0;
    int window_len = 0;
    int windows = 0;  // k
    int kbar = 0;     // summarized prefix length
    int d = 32;
    int cnn_c1 = 16;
    int cnn_c2 = 32;
    int tf_layers = 2;
    int tf_heads = 4;
    int gnn_layers = 1;
    bool nonlinear_heads = false;
    SummarizerKind summarizer = SummarizerKind::transformer;

    int tokens() const { return kbar + 1; }  // learned context token + kbar windows
    int horizon() const { return windows - kbar; }
    void validate() const;
};

// Deterministic initialization: weights uniform in +-1/sqrt(fan_in), biases
// and norm shifts zero, norm gains one. Streams are keyed by tensor name.
ParamSet init_params(const EncoderConfig& cfg, std::uint64_t seed);

// Activation caches for one view's forward pass.
struct CnnCache {
    int lens[4] = {0, 0, 0, 0};            // window length after input and each pooled block
    std::vector<double> input;             // (W, f), W = N*k
    std::vector<double> conv[3];           // conv output per block
    std::vector<double> norm_xhat[3];      // channel-norm caches
    std::vector<double> norm_inv[3];
    std::vector<double> norm_out[3];       // relu input
    std::vector<double> relu[3];
    std::vector<int> argmax[3];
    std::vector<double> pool[3];
    std::vector<double> pooled_mean;       // (W, d), fc input
};

struct GraphCache {
    SensorGraph graph;
    std::vector<std::vector<double>> layer_in;   // per gnn layer, (N, d)
    std::vector<std::vector<double>> aggregated;
    std::vector<std::vector<double>> pre_act;
};

struct TransformerLayerCache {
    std::vector<double> ln1_xhat, ln1_inv;
    std::vector<double> a, q, k, v;     // (N*T, d)
    std::vector<double> attn;           // (N, H, T, T) softmax rows
    std::vector<double> o;              // (N*T, d) concatenated heads
    std::vector<double> ln2_xhat, ln2_inv;
    std::vector<double> b1;             // (N*T, d) ln2 output
    std::vector<double> hrelu;          // (N*T, 4d)
};

struct ForwardTrace {
    std::vector<double> window_features;  // (N, k, d) post-GNN z_{t,i}
    std::vector<double> contexts;         // (N, d) c_i; its flat layout is g
    std::vector<double> predictions;      // (N, k - kbar, d)

    std::span<const double> global() const { return contexts; }

    CnnCache cnn;
    std::vector<double> encoded;  // (N, k, d) CNN output, graph input
    std::vector<GraphCache> graphs;
    std::vector<double> tf_input;  // (N*T, d)
    std::vector<TransformerLayerCache> tf;
    std::vector<double> lnf_xhat, lnf_inv;
    std::vector<double> head_pre;  // pre-relu predictions when heads are nonlinear
};

// CNN alone: one shared per-window encoder, (N, k, f) -> (N, k, d).
std::vector<double> encode_windows(std::span<const double> view, const ParamSet& params,
                                   const EncoderConfig& cfg);

// Full path: CNN -> per-window graph (built, edge-augmented with top-s, GNN)
// -> per-sensor summarizer over windows 1..kbar -> prediction heads.
// edge_seed keys the per-window replacement draws; edge_s == sensors disables
// edge augmentation.
ForwardTrace forward_view(std::span<const double> view, const ParamSet& params,
                          const EncoderConfig& cfg, int edge_s, std::uint64_t edge_seed);

// Accumulates parameter gradients (into `grads`, aligned with params.flat())
// given gradients on the three trace outputs. Any of the d_* spans may be
// empty to mean zero.
void backward_view(const ForwardTrace& trace, const ParamSet& params, const EncoderConfig& cfg,
                   std::span<const double> d_window_features, std::span<const double> d_contexts,
                   std::span<const double> d_predictions, std::vector<double>& grads);

}  // namespace gcontrast
