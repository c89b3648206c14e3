#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gcontrast/dataset.hpp"
#include "gcontrast/errors.hpp"
#include "gcontrast/rng.hpp"

namespace gcontrast {

struct AugmentationConfig {
    double noise_std_ratio = 0.1;  // noise std as a fraction of the target band's coefficient std
    int window_len = 16;
    int max_segments_weak = 3;
    int max_segments_strong = 8;
    bool normalize = true;  // per-sensor zero mean / unit variance before augmenting
    std::uint64_t seed = 0;

    void validate(int series_length) const;
};

enum class View : int { weak = 0, strong = 1 };

// Weak and strong augmented windowed views of one sample, each (N, k, f).
struct ViewPair {
    int sensors = 0;
    int windows = 0;  // k = floor(L / f)
    int window_len = 0;
    std::vector<double> weak;
    std::vector<double> strong;

    std::span<const double> view(View v) const {
        return v == View::weak ? std::span<const double>(weak) : std::span<const double>(strong);
    }
};

// Weak view: Gaussian noise on the detail band; strong view: on the
// approximation band. Noise std = ratio * std of the perturbed band. A zero
// noise std returns the input untouched.
std::vector<double> frequency_augment(std::span<const double> x, View view, double noise_std_ratio,
                                      Rng& rng);

// k = floor(L/f) contiguous windows per sensor; the trailing L - k*f samples
// are dropped. Returns an (N, k, f) array.
std::vector<double> segment_windows(std::span<const double> x, int sensors, int length,
                                    int window_len, int* windows_out);

// Draws a segment count m in {1..max_segments}, splits at m-1 distinct cut
// points in {1..f-1}, and concatenates the pieces in a uniformly drawn order.
// Draw protocol (mirrored by tests): one uniform_int for m; uniform_int(1,f-1)
// with rejection of duplicates per cut; Fisher-Yates over piece order.
void permute_window(std::span<double> window, int max_segments, Rng& rng);

// Full per-sample pipeline: (optional normalize) -> frequency_augment ->
// segment_windows -> permute_window per (view, sensor, window). Streams are
// derived from (cfg.seed, salt, sample_index, view, sensor[, window]), so the
// result is a pure function of those values.
ViewPair make_views(const MTSSample& sample, const AugmentationConfig& cfg,
                    std::uint64_t sample_index, std::uint64_t salt = 0);

// Per-sensor standardization used ahead of augmentation and at evaluation.
std::vector<double> normalize_per_sensor(const MTSSample& sample);

}  // namespace gcontrast
