#pragma once

#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gcontrast/errors.hpp"

namespace gcontrast {

// Named parameter tensors stored in one flat double buffer. The flat layout
// gives the optimizer, the gradient buffers, and the finite-difference checker
// a common index space; names give checkpoints and group reports structure.
// The group of a tensor is its name up to the first '.'.
class ParamSet {
public:
    struct Entry {
        std::string name;
        std::vector<int> shape;
        std::size_t offset = 0;
        std::size_t size = 0;
    };

    double* add(const std::string& name, std::vector<int> shape) {
        std::size_t sz = 1;
        for (int d : shape) sz *= static_cast<std::size_t>(d);
        Entry e{name, std::move(shape), flat_.size(), sz};
        entries_.push_back(e);
        flat_.resize(flat_.size() + sz, 0.0);
        return flat_.data() + e.offset;
    }

    const Entry& entry(const std::string& name) const {
        for (const auto& e : entries_)
            if (e.name == name) return e;
        throw ValidationError("ParamSet: no tensor named '" + name + "'");
    }

    double* data(const std::string& name) { return flat_.data() + entry(name).offset; }
    const double* data(const std::string& name) const { return flat_.data() + entry(name).offset; }
    std::span<double> view(const std::string& name) {
        const Entry& e = entry(name);
        return {flat_.data() + e.offset, e.size};
    }
    std::span<const double> view(const std::string& name) const {
        const Entry& e = entry(name);
        return {flat_.data() + e.offset, e.size};
    }

    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t size() const { return flat_.size(); }
    std::vector<double>& flat() { return flat_; }
    const std::vector<double>& flat() const { return flat_; }

    static std::string group_of(const std::string& name) {
        auto pos = name.find('.');
        return pos == std::string::npos ? name : name.substr(0, pos);
    }

    // Group name for a flat index.
    std::string group_at(std::size_t flat_index) const {
        for (const auto& e : entries_) {
            if (flat_index >= e.offset && flat_index < e.offset + e.size)
                return group_of(e.name);
        }
        throw ValidationError("ParamSet: flat index out of range");
    }

    bool operator==(const ParamSet& other) const {
        if (entries_.size() != other.entries_.size() || flat_ != other.flat_) return false;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (entries_[i].name != other.entries_[i].name ||
                entries_[i].shape != other.entries_[i].shape)
                return false;
        }
        return true;
    }

private:
    std::vector<Entry> entries_;
    std::vector<double> flat_;
};

}  // namespace gcontrast
