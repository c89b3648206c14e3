#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "gcontrast/augment.hpp"
#include "gcontrast/encoder.hpp"
#include "gcontrast/errors.hpp"
#include "gcontrast/graph.hpp"
#include "gcontrast/losses.hpp"

namespace gcontrast {

// Flat dotted-key/value store. Files are lines of `key = value`, with '#'
// comments. Canonical text (sorted keys) backs the config hash and the echo
// embedded in checkpoints and reports.
class ConfigMap {
public:
    static ConfigMap parse_text(const std::string& text);
    static ConfigMap parse_file(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value) { kv_[key] = value; }
    bool has(const std::string& key) const { return kv_.count(key) > 0; }
    const std::map<std::string, std::string>& items() const { return kv_; }

    std::string get_str(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    std::string canonical_text() const;

private:
    std::map<std::string, std::string> kv_;
};

struct ModelConfig {
    int d = 32;
    int cnn_c1 = 16;
    int cnn_c2 = 32;
    int transformer_layers = 2;
    int transformer_heads = 4;
    int kbar = 0;  // 0 = half the windows
    bool nonlinear_heads = false;
    std::string summarizer = "transformer";  // or "mean" (debug)
};

// Every knob of a run. The spec'd config keys map 1:1 onto fields; to_map /
// from_map round-trip exactly.
struct TrainConfig {
    std::uint64_t seed = 0;
    AugmentationConfig aug;  // aug.seed is filled from `seed` at use time
    EdgeAugConfig edges;
    int gnn_layers = 1;
    ModelConfig model;
    LossConfig loss;

    int batch_size = 128;
    double learning_rate = 3e-4;
    int epochs_pretrain = 40;
    int epochs_probe = 40;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 0.0;
    std::string lr_schedule = "none";  // or "cosine"

    static TrainConfig from_map(const ConfigMap& map);  // rejects unknown keys
    ConfigMap to_map() const;
    std::string canonical_text() const { return to_map().canonical_text(); }
    std::string config_hash() const;
    void validate() const;
};

// Shapes the encoder against a dataset; resolves auto kbar and validates.
EncoderConfig resolve_encoder(const TrainConfig& cfg, int sensors, int length);

std::string format_double(double v);  // round-trip-stable decimal form

}  // namespace gcontrast
