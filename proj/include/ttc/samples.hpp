#pragma once

#include <cmath>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "common.hpp"
#include "tt.hpp"

namespace ttc {

/**
 * Index set with one value per index (the image of a sampling operator).
 * Indices are stored flat, d per sample, and are unique and within dims.
 */
class SparseSamples {
public:
    SparseSamples() = default;

    SparseSamples(Dims dims, std::vector<Index> flat_indices, std::vector<double> values)
        : dims_(std::move(dims)), indices_(std::move(flat_indices)), values_(std::move(values)) {
        detail::check_dims(dims_, "SparseSamples");
        const std::size_t d = dims_.size();
        if (indices_.size() % d != 0) throw DimensionError("SparseSamples: index list length is not a multiple of d");
        if (indices_.size() / d != values_.size())
            throw DimensionError("SparseSamples: " + std::to_string(indices_.size() / d) + " indices but " +
                                 std::to_string(values_.size()) + " values");
        std::unordered_set<std::string> seen;
        seen.reserve(values_.size());
        for (std::size_t s = 0; s < values_.size(); ++s) {
            auto idx = index(s);
            detail::check_index(dims_, idx, "SparseSamples");
            std::string key(reinterpret_cast<const char*>(idx.data()), idx.size_bytes());
            if (!seen.insert(std::move(key)).second)
                throw DimensionError("SparseSamples: duplicate index at sample " + std::to_string(s));
        }
    }

    /** Samples of `x` at the given indices. */
    static SparseSamples of(const TTTensor& x, std::vector<Index> flat_indices) {
        auto values = entries(x, std::span<const Index>(flat_indices));
        return SparseSamples(x.dims(), std::move(flat_indices), std::move(values));
    }

    const Dims& dims() const noexcept { return dims_; }
    Index order() const noexcept { return static_cast<Index>(dims_.size()); }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    std::span<const Index> index(std::size_t s) const {
        return std::span<const Index>(indices_).subspan(s * dims_.size(), dims_.size());
    }
    std::span<const Index> flat_indices() const noexcept { return indices_; }
    const std::vector<double>& values() const noexcept { return values_; }

    /** Same index set, new values. */
    SparseSamples with_values(std::vector<double> values) const {
        if (values.size() != values_.size()) throw DimensionError("SparseSamples: value count mismatch");
        SparseSamples out;
        out.dims_ = dims_;
        out.indices_ = indices_;
        out.values_ = std::move(values);
        return out;
    }

    double norm() const {
        double s = 0.0;
        for (double v : values_) s += v * v;
        return std::sqrt(s);
    }

private:
    Dims dims_;
    std::vector<Index> indices_;
    std::vector<double> values_;
};

} // namespace ttc
