#include "gcontrast/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <numbers>

#include "gcontrast/rng.hpp"

namespace gcontrast {

namespace {

constexpr char kMagic[4] = {'G', 'C', 'C', 'D'};
constexpr std::uint32_t kVersion = 1;

// Stream tags for the synthetic generator.
constexpr std::uint64_t kTagLatent = 0x11;
constexpr std::uint64_t kTagNoise = 0x22;

// Correlation groups per class; sensors in a group share one latent signal.
constexpr int kGroups = 2;

int group_of_sensor(int sensor, int label, int sensors) {
    // Rotating the partition boundary by the label makes the grouping
    // pattern class-specific.
    const int rotated = (sensor + label) % sensors;
    return (rotated < (sensors + 1) / 2) ? 0 : 1;
}

double sensor_cycles(int sensor, int label) {
    // Class-specific frequency content for every sensor.
    return 4.0 + 2.0 * label + sensor;
}

double group_cycles(int group) { return 2.0 + group; }

}  // namespace

void MTSDataset::validate() const {
    for (std::size_t j = 0; j < samples.size(); ++j) {
        const MTSSample& s = samples[j];
        if (s.sensors < 2) throw ValidationError("MTSSample.sensors must be >= 2");
        if (s.length < 1) throw ValidationError("MTSSample.length must be >= 1");
        if (s.sensors != sensors() || s.length != length())
            throw ValidationError("MTSDataset: sample " + std::to_string(j) +
                                  " shape differs from the first sample");
        if (s.values.size() != static_cast<std::size_t>(s.sensors) * s.length)
            throw ValidationError("MTSSample.values size does not match sensors*length");
        for (float v : s.values)
            if (!std::isfinite(v)) throw ValidationError("MTSSample.values must be finite");
        if (s.label >= 0 && s.label >= num_classes)
            throw ValidationError("MTSSample.label " + std::to_string(s.label) +
                                  " out of range for num_classes " + std::to_string(num_classes));
    }
}

bool MTSDataset::operator==(const MTSDataset& other) const {
    if (num_classes != other.num_classes || samples.size() != other.samples.size()) return false;
    for (std::size_t j = 0; j < samples.size(); ++j) {
        const MTSSample& a = samples[j];
        const MTSSample& b = other.samples[j];
        if (a.sensors != b.sensors || a.length != b.length || a.label != b.label ||
            a.values != b.values)
            return false;
    }
    return true;
}

void SyntheticSpec::validate() const {
    if (n < 1) throw ValidationError("SyntheticSpec.n must be >= 1");
    if (sensors < 2) throw ValidationError("SyntheticSpec.sensors must be >= 2");
    if (length < 1) throw ValidationError("SyntheticSpec.length must be >= 1");
    if (num_classes < 2) throw ValidationError("SyntheticSpec.num_classes must be >= 2");
    if (noise_std < 0.0 || !std::isfinite(noise_std))
        throw ValidationError("SyntheticSpec.noise_std must be finite and >= 0");
}

SampleLatents draw_latents(const SyntheticSpec& spec, int sample_index) {
    Rng rng(derive_seed(spec.seed, {kTagLatent, static_cast<std::uint64_t>(sample_index)}));
    SampleLatents lat;
    lat.sensor_phase.resize(spec.sensors);
    lat.group_phase.resize(kGroups);
    for (auto& p : lat.sensor_phase) p = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (auto& p : lat.group_phase) p = rng.uniform(0.0, 2.0 * std::numbers::pi);
    return lat;
}

MTSSample synthesize_sample(const SyntheticSpec& spec, int label, const SampleLatents& latents) {
    spec.validate();
    if (label < 0 || label >= spec.num_classes)
        throw ValidationError("synthesize_sample: label out of range");
    MTSSample s;
    s.sensors = spec.sensors;
    s.length = spec.length;
    s.label = label;
    s.values.resize(static_cast<std::size_t>(spec.sensors) * spec.length);
    const double L = static_cast<double>(spec.length);
    for (int i = 0; i < spec.sensors; ++i) {
        const int g = group_of_sensor(i, label, spec.sensors);
        const double fc = sensor_cycles(i, label);
        const double gc = group_cycles(g);
        for (int t = 0; t < spec.length; ++t) {
            const double pos = (t + 0.5) / L;
            const double v = std::sin(2.0 * std::numbers::pi * fc * pos + latents.sensor_phase[i]) +
                             std::sin(2.0 * std::numbers::pi * gc * pos + latents.group_phase[g]);
            s.values[static_cast<std::size_t>(i) * spec.length + t] = static_cast<float>(v);
        }
    }
    return s;
}

MTSDataset generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    MTSDataset ds;
    ds.num_classes = spec.num_classes;
    ds.samples.reserve(spec.n);
    for (int j = 0; j < spec.n; ++j) {
        const int label = j % spec.num_classes;
        MTSSample s = synthesize_sample(spec, label, draw_latents(spec, j));
        if (spec.noise_std > 0.0) {
            Rng noise(derive_seed(spec.seed, {kTagNoise, static_cast<std::uint64_t>(j)}));
            for (auto& v : s.values)
                v = static_cast<float>(v + spec.noise_std * noise.gaussian());
        }
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void write_bytes(std::FILE* f, const void* p, std::size_t n) {
    if (std::fwrite(p, 1, n, f) != n) throw ValidationError("dataset write failed");
}

void read_bytes(std::FILE* f, void* p, std::size_t n, std::size_t& offset, const char* what) {
    if (std::fread(p, 1, n, f) != n)
        throw FormatError(std::string("truncated dataset file while reading ") + what, offset);
    offset += n;
}

std::uint32_t read_u32(std::FILE* f, std::size_t& offset, const char* what) {
    std::uint32_t v = 0;
    read_bytes(f, &v, sizeof v, offset, what);
    return v;
}

}  // namespace

void save_dataset(const MTSDataset& ds, const std::filesystem::path& path) {
    ds.validate();
    FilePtr f(std::fopen(path.string().c_str(), "wb"));
    if (!f) throw ValidationError("cannot open " + path.string() + " for writing");
    const std::uint32_t n = static_cast<std::uint32_t>(ds.samples.size());
    const std::uint32_t N = static_cast<std::uint32_t>(ds.sensors());
    const std::uint32_t L = static_cast<std::uint32_t>(ds.length());
    const std::uint32_t c = static_cast<std::uint32_t>(ds.num_classes);
    write_bytes(f.get(), kMagic, 4);
    write_bytes(f.get(), &kVersion, 4);
    write_bytes(f.get(), &n, 4);
    write_bytes(f.get(), &N, 4);
    write_bytes(f.get(), &L, 4);
    write_bytes(f.get(), &c, 4);
    for (const auto& s : ds.samples)
        write_bytes(f.get(), s.values.data(), s.values.size() * sizeof(float));
    if (c > 0) {
        for (const auto& s : ds.samples) {
            const std::int32_t label = s.label;
            write_bytes(f.get(), &label, sizeof label);
        }
    }
}

MTSDataset load_dataset(const std::filesystem::path& path) {
    FilePtr f(std::fopen(path.string().c_str(), "rb"));
    if (!f) throw ValidationError("cannot open " + path.string() + " for reading");
    std::size_t offset = 0;
    char magic[4];
    read_bytes(f.get(), magic, 4, offset, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad magic, expected \"GCCD\"", 0);
    const std::uint32_t version = read_u32(f.get(), offset, "version");
    if (version != kVersion)
        throw FormatError("unsupported dataset version " + std::to_string(version), 4);
    const std::uint32_t n = read_u32(f.get(), offset, "sample count");
    const std::uint32_t N = read_u32(f.get(), offset, "sensor count");
    const std::uint32_t L = read_u32(f.get(), offset, "series length");
    const std::uint32_t c = read_u32(f.get(), offset, "class count");

    MTSDataset ds;
    ds.num_classes = static_cast<int>(c);
    ds.samples.resize(n);
    for (auto& s : ds.samples) {
        s.sensors = static_cast<int>(N);
        s.length = static_cast<int>(L);
        s.values.resize(static_cast<std::size_t>(N) * L);
        read_bytes(f.get(), s.values.data(), s.values.size() * sizeof(float), offset, "values");
    }
    if (c > 0) {
        for (auto& s : ds.samples) {
            std::int32_t label = 0;
            read_bytes(f.get(), &label, sizeof label, offset, "labels");
            s.label = label;
        }
    }
    ds.validate();
    return ds;
}

std::vector<std::vector<int>> make_batches(int n, int batch_size, std::uint64_t seed, bool shuffle,
                                           BatchMode mode) {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (mode == BatchMode::pretrain && batch_size < 2)
        throw ConfigError("pretraining needs batch_size >= 2 (graph-level contrasting)");
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    if (shuffle) {
        Rng rng(derive_seed(seed, {0xBA7C4ULL}));
        for (int i = n - 1; i > 0; --i)
            std::swap(idx[i], idx[rng.uniform_int(0, i)]);
    }
    std::vector<std::vector<int>> batches;
    for (int start = 0; start < n; start += batch_size) {
        const int end = std::min(n, start + batch_size);
        if (mode == BatchMode::pretrain && end - start < batch_size) break;
        batches.emplace_back(idx.begin() + start, idx.begin() + end);
    }
    if (mode == BatchMode::pretrain && batches.empty())
        throw ConfigError("no full batch of size " + std::to_string(batch_size) + " in " +
                          std::to_string(n) + " samples");
    return batches;
}

}  // namespace gcontrast
