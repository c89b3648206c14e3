#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gcontrast/errors.hpp"
#include "gcontrast/rng.hpp"

namespace gcontrast {

// Per-window sensor graph: node features (N, d) and a row-stochastic edge
// matrix from the softmax of pairwise feature dot products. softmax_rows
// keeps the unaugmented softmax so gradients can flow through retained edges
// after augmentation.
struct SensorGraph {
    int n = 0;
    int dim = 0;
    std::vector<double> features;      // (N, d), not owned by the graph semantics, copied in
    std::vector<double> edges;         // (N, N) after any augmentation
    std::vector<double> softmax_rows;  // (N, N) softmax of raw scores, pre-augmentation
    std::vector<std::uint8_t> retained;  // (N, N) 1 where the edge kept its softmax value
};

struct EdgeAugConfig {
    int s_weak = 0;    // 0 = auto (N - 1)
    int s_strong = 0;  // 0 = auto (min(2, N))

    int resolve_weak(int sensors) const;
    int resolve_strong(int sensors) const;
    void validate(int sensors) const;
};

SensorGraph build_graph(std::span<const double> features, int n, int dim);

// Keeps the s largest entries of each row (ties broken toward the lower
// column index) and replaces the rest with uniform draws in [0,1). Replaced
// entries are constants for differentiation. Draws happen in row-major order
// over replaced positions only.
void augment_edges(SensorGraph& g, int s, Rng& rng);

// Top-s column indices of one row under the value-desc / index-asc order.
std::vector<int> top_s_indices(std::span<const double> row, int s);

// out = relu(E * Z * Wg). `aggregated` and `pre_activation` are caches for
// the backward pass; pass nullptr to skip them.
void gnn_layer_forward(const SensorGraph& g, std::span<const double> z, std::span<const double> wg,
                       std::span<double> out, std::vector<double>* aggregated,
                       std::vector<double>* pre_activation);

// Backward through one gnn_layer application. d_edges accumulates the raw
// gradient on E (all positions); masking and the softmax backward happen in
// graph_backward once per window.
void gnn_layer_backward(const SensorGraph& g, std::span<const double> z, std::span<const double> wg,
                        std::span<const double> aggregated, std::span<const double> pre_activation,
                        std::span<const double> d_out, std::span<double> d_z,
                        std::span<double> d_edges, std::span<double> d_wg);

// Routes the edge-matrix gradient through the retained mask, the row softmax,
// and the dot-product scores into the node features the graph was built from.
void graph_backward(const SensorGraph& g, std::span<const double> build_features,
                    std::span<const double> d_edges, std::span<double> d_build_features);

}  // namespace gcontrast
