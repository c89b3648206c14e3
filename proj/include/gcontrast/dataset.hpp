#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gcontrast/errors.hpp"

namespace gcontrast {

// One multivariate time-series recording: `sensors` x `length` float32 values
// in sensor-major, time-minor order. label == -1 means unlabeled.
struct MTSSample {
    int sensors = 0;
    int length = 0;
    std::vector<float> values;
    int label = -1;

    float at(int sensor, int t) const { return values[static_cast<std::size_t>(sensor) * length + t]; }
};

struct MTSDataset {
    std::vector<MTSSample> samples;
    int num_classes = 0;  // 0 = unlabeled
    std::string split_tag = "train";

    int size() const { return static_cast<int>(samples.size()); }
    int sensors() const { return samples.empty() ? 0 : samples.front().sensors; }
    int length() const { return samples.empty() ? 0 : samples.front().length; }

    // Enforces shared shapes, finite values, labels within range.
    void validate() const;

    bool operator==(const MTSDataset& other) const;
};

struct SyntheticSpec {
    int n = 0;
    int sensors = 0;
    int length = 0;
    int num_classes = 2;
    double noise_std = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

// Per-sample latent draws: a phase per sensor sinusoid and a phase per
// correlation group. Pure inputs to synthesize_sample.
struct SampleLatents {
    std::vector<double> sensor_phase;
    std::vector<double> group_phase;
};

SampleLatents draw_latents(const SyntheticSpec& spec, int sample_index);

// Noiseless class template evaluated at a latent draw. Classes differ both in
// each sensor's sinusoid frequency and in which sensors share a group signal.
MTSSample synthesize_sample(const SyntheticSpec& spec, int label, const SampleLatents& latents);

MTSDataset generate_synthetic(const SyntheticSpec& spec);

// On-disk layout (little-endian): "GCCD", u32 version=1, u32 n, u32 N, u32 L,
// u32 c, n*N*L float32 values (sample-major, sensor-major, time-minor), then
// n int32 labels iff c > 0.
void save_dataset(const MTSDataset& ds, const std::filesystem::path& path);
MTSDataset load_dataset(const std::filesystem::path& path);

enum class BatchMode {
    pretrain,  // drops the short final batch, requires batch_size >= 2
    evaluate,  // keeps every index
};

// Deterministic index batches; `shuffle` permutes with the given seed.
std::vector<std::vector<int>> make_batches(int n, int batch_size, std::uint64_t seed, bool shuffle,
                                           BatchMode mode);

}  // namespace gcontrast
