#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "common.hpp"

namespace ttc {

/**
 * Full tensor with row-major (last index fastest) storage.
 *
 * Exists for desk-scale oracles and tests; construction refuses anything
 * larger than `cap` entries so it cannot be used at production sizes by
 * accident.
 */
class DenseTensor {
public:
    static constexpr Index default_cap = 10'000'000;

    DenseTensor() = default;

    explicit DenseTensor(Dims dims, Index cap = default_cap) : dims_(std::move(dims)) {
        if (dims_.empty()) throw DimensionError("DenseTensor: order must be >= 1");
        Index total = 1;
        for (std::size_t k = 0; k < dims_.size(); ++k) {
            if (dims_[k] < 1)
                throw DimensionError("DenseTensor: mode " + std::to_string(k) + " has size < 1");
            if (total > cap / dims_[k])
                throw DimensionError("DenseTensor: " + detail::join(dims_) + " exceeds the dense cap of " +
                                     std::to_string(cap) + " entries");
            total *= dims_[k];
        }
        values_.assign(static_cast<std::size_t>(total), 0.0);
    }

    DenseTensor(Dims dims, std::vector<double> values, Index cap = default_cap) : DenseTensor(std::move(dims), cap) {
        if (values.size() != values_.size()) throw DimensionError("DenseTensor: value count does not match dims");
        values_ = std::move(values);
    }

    const Dims& dims() const noexcept { return dims_; }
    Index order() const noexcept { return static_cast<Index>(dims_.size()); }
    Index size() const noexcept { return static_cast<Index>(values_.size()); }
    std::vector<double>& values() noexcept { return values_; }
    const std::vector<double>& values() const noexcept { return values_; }

    Index linear(const MultiIndex& idx) const {
        if (idx.size() != dims_.size()) throw DimensionError("DenseTensor: index has wrong order");
        Index lin = 0;
        for (std::size_t k = 0; k < dims_.size(); ++k) {
            if (idx[k] < 0 || idx[k] >= dims_[k])
                throw DimensionError("DenseTensor: index out of range in mode " + std::to_string(k));
            lin = lin * dims_[k] + idx[k];
        }
        return lin;
    }

    MultiIndex unravel(Index lin) const {
        MultiIndex idx(dims_.size());
        for (std::size_t k = dims_.size(); k-- > 0;) {
            idx[k] = lin % dims_[k];
            lin /= dims_[k];
        }
        return idx;
    }

    double& operator()(const MultiIndex& idx) { return values_[static_cast<std::size_t>(linear(idx))]; }
    double operator()(const MultiIndex& idx) const { return values_[static_cast<std::size_t>(linear(idx))]; }

    double norm() const {
        double s = 0.0;
        for (double v : values_) s += v * v;
        return std::sqrt(s);
    }

    /** Matrix with rows indexed by modes 0..k and columns by modes k+1..d-1. */
    RowMatrix sequential_unfolding(Index k) const {
        Index rows = 1;
        for (Index j = 0; j <= k; ++j) rows *= dims_[static_cast<std::size_t>(j)];
        return Eigen::Map<const RowMatrix>(values_.data(), rows, size() / rows);
    }

    /** Mode-k flattening: N_k rows, one column per mode-k fiber. */
    Matrix mode_flattening(Index k) const {
        const auto [before, n, after] = split(k);
        Matrix out(n, before * after);
        for (Index a = 0; a < before; ++a)
            for (Index i = 0; i < n; ++i)
                for (Index b = 0; b < after; ++b)
                    out(i, a * after + b) = values_[static_cast<std::size_t>((a * n + i) * after + b)];
        return out;
    }

    /** k-mode product: contracts mode k with the columns of `m`; mode k becomes m.rows() long. */
    DenseTensor mode_product(Index k, const Matrix& m) const {
        const auto [before, n, after] = split(k);
        if (m.cols() != n) throw DimensionError("mode_product: matrix columns do not match mode size");
        Dims out_dims = dims_;
        out_dims[static_cast<std::size_t>(k)] = m.rows();
        DenseTensor out(out_dims);
        for (Index a = 0; a < before; ++a)
            for (Index i = 0; i < m.rows(); ++i)
                for (Index b = 0; b < after; ++b) {
                    double s = 0.0;
                    for (Index j = 0; j < n; ++j)
                        s += m(i, j) * values_[static_cast<std::size_t>((a * n + j) * after + b)];
                    out.values_[static_cast<std::size_t>((a * m.rows() + i) * after + b)] = s;
                }
        return out;
    }

private:
    struct Split {
        Index before, n, after;
    };

    Split split(Index k) const {
        if (k < 0 || k >= order()) throw DimensionError("DenseTensor: mode out of range");
        Index before = 1, after = 1;
        for (Index j = 0; j < k; ++j) before *= dims_[static_cast<std::size_t>(j)];
        for (Index j = k + 1; j < order(); ++j) after *= dims_[static_cast<std::size_t>(j)];
        return {before, dims_[static_cast<std::size_t>(k)], after};
    }

    Dims dims_;
    std::vector<double> values_;
};

inline double inner(const DenseTensor& a, const DenseTensor& b) {
    if (a.dims() != b.dims()) throw DimensionError("inner: dims mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) s += a.values()[i] * b.values()[i];
    return s;
}

inline DenseTensor axpy(double alpha, const DenseTensor& x, const DenseTensor& y) {
    if (x.dims() != y.dims()) throw DimensionError("axpy: dims mismatch");
    DenseTensor out = y;
    for (std::size_t i = 0; i < out.values().size(); ++i) out.values()[i] += alpha * x.values()[i];
    return out;
}

} // namespace ttc
