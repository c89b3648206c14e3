#include "gcontrast/augment.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "gcontrast/dwt.hpp"

namespace gcontrast {

namespace {

constexpr std::uint64_t kTagFrequency = 0xF1;
constexpr std::uint64_t kTagPermute = 0xE2;

double band_std(std::span<const double> coeffs) {
    double mean = 0.0;
    for (double c : coeffs) mean += c;
    mean /= static_cast<double>(coeffs.size());
    double var = 0.0;
    for (double c : coeffs) var += (c - mean) * (c - mean);
    return std::sqrt(var / static_cast<double>(coeffs.size()));
}

}  // namespace

void AugmentationConfig::validate(int series_length) const {
    if (noise_std_ratio < 0.0 || !std::isfinite(noise_std_ratio))
        throw ConfigError("aug.noise_std_ratio must be finite and >= 0");
    if (window_len < 2) throw ConfigError("aug.window_len must be >= 2");
    if (window_len > series_length)
        throw ConfigError("aug.window_len " + std::to_string(window_len) +
                          " exceeds series length " + std::to_string(series_length));
    if (max_segments_weak < 1 || max_segments_weak > window_len)
        throw ConfigError("aug.max_segments_weak must be in [1, window_len]");
    if (max_segments_strong < 1 || max_segments_strong > window_len)
        throw ConfigError("aug.max_segments_strong must be in [1, window_len]");
}

std::vector<double> frequency_augment(std::span<const double> x, View view, double noise_std_ratio,
                                      Rng& rng) {
    auto coeffs = dwt_haar(x);
    std::vector<double>& band = (view == View::weak) ? coeffs.detail : coeffs.approx;
    const double noise_std = noise_std_ratio * band_std(band);
    if (noise_std == 0.0) return {x.begin(), x.end()};
    for (double& c : band) c += noise_std * rng.gaussian();
    return idwt_haar<double>(coeffs.approx, coeffs.detail, x.size());
}

std::vector<double> segment_windows(std::span<const double> x, int sensors, int length,
                                    int window_len, int* windows_out) {
    if (window_len < 2) throw ConfigError("window length must be >= 2");
    const int k = length / window_len;
    if (k == 0)
        throw ValidationError("window longer than series (" + std::to_string(window_len) + " > " +
                              std::to_string(length) + ")");
    if (x.size() != static_cast<std::size_t>(sensors) * length)
        throw ShapeError("segment_windows: input size does not match sensors*length");
    std::vector<double> out(static_cast<std::size_t>(sensors) * k * window_len);
    for (int i = 0; i < sensors; ++i)
        for (int t = 0; t < k; ++t)
            std::memcpy(out.data() + (static_cast<std::size_t>(i) * k + t) * window_len,
                        x.data() + static_cast<std::size_t>(i) * length + t * window_len,
                        sizeof(double) * window_len);
    if (windows_out) *windows_out = k;
    return out;
}

void permute_window(std::span<double> window, int max_segments, Rng& rng) {
    const int f = static_cast<int>(window.size());
    if (max_segments < 1 || max_segments > f)
        throw ValidationError("max_segments must be in [1, window length]");
    const int m = static_cast<int>(rng.uniform_int(1, max_segments));
    if (m == 1) return;

    // m-1 distinct cut points in {1..f-1}, kept sorted.
    std::vector<int> cuts;
    cuts.reserve(m - 1);
    while (static_cast<int>(cuts.size()) < m - 1) {
        const int c = static_cast<int>(rng.uniform_int(1, f - 1));
        if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());

    std::vector<int> order(m);
    for (int i = 0; i < m; ++i) order[i] = i;
    for (int i = m - 1; i > 0; --i)
        std::swap(order[i], order[rng.uniform_int(0, i)]);

    std::vector<int> starts(m + 1);
    starts[0] = 0;
    for (int i = 0; i < m - 1; ++i) starts[i + 1] = cuts[i];
    starts[m] = f;

    std::vector<double> scratch(f);
    int pos = 0;
    for (int piece : order) {
        const int len = starts[piece + 1] - starts[piece];
        std::memcpy(scratch.data() + pos, window.data() + starts[piece], sizeof(double) * len);
        pos += len;
    }
    std::memcpy(window.data(), scratch.data(), sizeof(double) * f);
}

std::vector<double> normalize_per_sensor(const MTSSample& sample) {
    std::vector<double> out(sample.values.size());
    for (int i = 0; i < sample.sensors; ++i) {
        const std::size_t base = static_cast<std::size_t>(i) * sample.length;
        double mean = 0.0;
        for (int t = 0; t < sample.length; ++t) mean += sample.values[base + t];
        mean /= sample.length;
        double var = 0.0;
        for (int t = 0; t < sample.length; ++t) {
            const double d = sample.values[base + t] - mean;
            var += d * d;
        }
        const double std = std::sqrt(var / sample.length);
        const double inv = std > 1e-12 ? 1.0 / std : 0.0;
        for (int t = 0; t < sample.length; ++t)
            out[base + t] = (sample.values[base + t] - mean) * inv;
    }
    return out;
}

ViewPair make_views(const MTSSample& sample, const AugmentationConfig& cfg,
                    std::uint64_t sample_index, std::uint64_t salt) {
    cfg.validate(sample.length);
    const int N = sample.sensors;
    const int L = sample.length;
    const int f = cfg.window_len;

    std::vector<double> base;
    if (cfg.normalize) {
        base = normalize_per_sensor(sample);
    } else {
        base.assign(sample.values.begin(), sample.values.end());
    }

    ViewPair pair;
    pair.sensors = N;
    pair.window_len = f;

    for (View view : {View::weak, View::strong}) {
        const std::uint64_t vtag = static_cast<std::uint64_t>(view);
        std::vector<double> augmented(static_cast<std::size_t>(N) * L);
        for (int i = 0; i < N; ++i) {
            Rng freq_rng(derive_seed(cfg.seed, {salt, sample_index, vtag,
                                                static_cast<std::uint64_t>(i), kTagFrequency}));
            std::span<const double> sensor(base.data() + static_cast<std::size_t>(i) * L,
                                           static_cast<std::size_t>(L));
            auto aug = frequency_augment(sensor, view, cfg.noise_std_ratio, freq_rng);
            std::copy(aug.begin(), aug.end(), augmented.begin() + static_cast<std::size_t>(i) * L);
        }

        int k = 0;
        auto windows = segment_windows(augmented, N, L, f, &k);
        pair.windows = k;

        const int max_segments =
            (view == View::weak) ? cfg.max_segments_weak : cfg.max_segments_strong;
        for (int i = 0; i < N; ++i) {
            for (int t = 0; t < k; ++t) {
                Rng perm_rng(derive_seed(
                    cfg.seed, {salt, sample_index, vtag, static_cast<std::uint64_t>(i),
                               static_cast<std::uint64_t>(t), kTagPermute}));
                permute_window({windows.data() + (static_cast<std::size_t>(i) * k + t) * f,
                                static_cast<std::size_t>(f)},
                               max_segments, perm_rng);
            }
        }
        if (view == View::weak)
            pair.weak = std::move(windows);
        else
            pair.strong = std::move(windows);
    }
    return pair;
}

}  // namespace gcontrast
