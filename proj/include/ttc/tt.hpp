#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "common.hpp"
#include "dense.hpp"
#include "random.hpp"

namespace ttc {

/**
 * One TT core of shape left x mode x right, stored in the canonical axis
 * order (left-rank, mode, right-rank) with the right-rank index fastest.
 *
 * Left unfolding:  (left*mode) x right, rows indexed by (a, i).
 * Right unfolding: left x (mode*right), columns indexed by (i, b).
 * Both are zero-copy row-major views of the same buffer.
 */
class Core {
public:
    using ConstMap = Eigen::Map<const RowMatrix>;
    using ConstSlice = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;

    Core() = default;

    Core(Index left, Index mode, Index right)
        : left_(left), mode_(mode), right_(right), data_(RowMatrix::Zero(left * mode, right)) {}

    template <typename Derived>
    static Core from_left_unfolding(Index left, Index mode, Index right, const Eigen::MatrixBase<Derived>& m) {
        Core c(left, mode, right);
        c.data_ = m;
        return c;
    }

    template <typename Derived>
    static Core from_right_unfolding(Index left, Index mode, Index right, const Eigen::MatrixBase<Derived>& m) {
        Core c(left, mode, right);
        Eigen::Map<RowMatrix>(c.data_.data(), left, mode * right) = m;
        return c;
    }

    Index left() const noexcept { return left_; }
    Index mode() const noexcept { return mode_; }
    Index right() const noexcept { return right_; }
    Index size() const noexcept { return left_ * mode_ * right_; }

    const RowMatrix& left_unfolding() const noexcept { return data_; }
    ConstMap right_unfolding() const { return ConstMap(data_.data(), left_, mode_ * right_); }

    /** G[:, i, :] as a left x right matrix. */
    ConstSlice slice(Index i) const {
        return ConstSlice(data_.data() + i * right_, left_, right_, Eigen::OuterStride<>(mode_ * right_));
    }

    double operator()(Index a, Index i, Index b) const { return data_(a * mode_ + i, b); }
    double& operator()(Index a, Index i, Index b) { return data_(a * mode_ + i, b); }

    using Slice = Eigen::Map<RowMatrix, 0, Eigen::OuterStride<>>;
    Slice slice(Index i) {
        return Slice(data_.data() + i * right_, left_, right_, Eigen::OuterStride<>(mode_ * right_));
    }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

    RowMatrix& storage() noexcept { return data_; }

private:
    Index left_{0}, mode_{0}, right_{0};
    RowMatrix data_;
};

enum class OrthState : std::uint8_t { none = 0, left = 1, right = 2 };

/**
 * Tensor in TT format. Immutable after construction: every operation below
 * returns a new value.
 *
 * orth_state == left:  left unfoldings of cores 0..d-2 have orthonormal columns.
 * orth_state == right: right unfoldings of cores 1..d-1 have orthonormal rows.
 */
class TTTensor {
public:
    TTTensor() = default;

    explicit TTTensor(std::vector<Core> cores, OrthState state = OrthState::none)
        : cores_(std::move(cores)), state_(state) {
        if (cores_.empty()) throw DimensionError("TTTensor: at least one core required");
        if (cores_.front().left() != 1) throw DimensionError("TTTensor: first core must have left rank 1");
        if (cores_.back().right() != 1) throw DimensionError("TTTensor: last core must have right rank 1");
        for (std::size_t k = 0; k < cores_.size(); ++k) {
            if (cores_[k].mode() < 1) throw DimensionError("TTTensor: core " + std::to_string(k) + " has empty mode");
            if (cores_[k].left() < 1 || cores_[k].right() < 1)
                throw DimensionError("TTTensor: core " + std::to_string(k) + " has a zero rank");
            if (k + 1 < cores_.size() && cores_[k].right() != cores_[k + 1].left())
                throw DimensionError("TTTensor: rank mismatch between cores " + std::to_string(k) + " and " +
                                     std::to_string(k + 1));
        }
    }

    Index order() const noexcept { return static_cast<Index>(cores_.size()); }
    const std::vector<Core>& cores() const noexcept { return cores_; }
    const Core& core(Index k) const { return cores_[static_cast<std::size_t>(k)]; }
    OrthState orth_state() const noexcept { return state_; }

    Dims dims() const {
        Dims n;
        n.reserve(cores_.size());
        for (const auto& c : cores_) n.push_back(c.mode());
        return n;
    }

    /** (1, r_1, ..., r_{d-1}, 1) */
    Ranks ranks() const {
        Ranks r;
        r.reserve(cores_.size() + 1);
        r.push_back(1);
        for (const auto& c : cores_) r.push_back(c.right());
        return r;
    }

    Index max_rank() const {
        Index m = 1;
        for (const auto& c : cores_) m = std::max(m, c.right());
        return m;
    }

private:
    std::vector<Core> cores_;
    OrthState state_{OrthState::none};
};

namespace detail {

inline void check_ranks(Index d, const Ranks& ranks, const char* where) {
    if (static_cast<Index>(ranks.size()) != d + 1)
        throw DimensionError(std::string(where) + ": rank vector has length " + std::to_string(ranks.size()) +
                             ", expected " + std::to_string(d + 1));
    if (ranks.front() != 1) throw DimensionError(std::string(where) + ": rank index 0 must be 1");
    if (ranks.back() != 1) throw DimensionError(std::string(where) + ": rank index " + std::to_string(d) + " must be 1");
    for (std::size_t k = 1; k + 1 < ranks.size(); ++k)
        if (ranks[k] < 1) throw DimensionError(std::string(where) + ": rank index " + std::to_string(k) + " is < 1");
}

inline void check_dims(const Dims& dims, const char* where) {
    if (dims.empty()) throw DimensionError(std::string(where) + ": order must be >= 1");
    for (std::size_t k = 0; k < dims.size(); ++k)
        if (dims[k] < 1) throw DimensionError(std::string(where) + ": mode " + std::to_string(k) + " has size < 1");
}

inline void check_index(const Dims& dims, std::span<const Index> idx, const char* where) {
    for (std::size_t k = 0; k < dims.size(); ++k)
        if (idx[k] < 0 || idx[k] >= dims[k])
            throw DimensionError(std::string(where) + ": index " + std::to_string(idx[k]) + " out of range in mode " +
                                 std::to_string(k));
}

struct Truncated {
    Matrix u;   // rows x rank, orthonormal columns
    Matrix svt; // rank x cols
    double discarded_sq{0.0};
};

/**
 * Rank-`target` truncated SVD with the sign convention that the
 * largest-magnitude entry of every kept left singular vector is positive
 * (first occurrence wins ties).
 */
inline Truncated truncated_svd(const Matrix& a, Index target) {
    const Index full = std::min(a.rows(), a.cols());
    const Index rank = std::min(target, full);
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();

    Truncated t;
    t.u = svd.matrixU().leftCols(rank);
    t.svt = s.head(rank).asDiagonal() * svd.matrixV().leftCols(rank).transpose();
    t.discarded_sq = s.tail(full - rank).squaredNorm();
    for (Index j = 0; j < rank; ++j) {
        Index imax = 0;
        t.u.col(j).cwiseAbs().maxCoeff(&imax);
        if (t.u(imax, j) < 0.0) {
            t.u.col(j) *= -1.0;
            t.svt.row(j) *= -1.0;
        }
    }
    return t;
}

struct ThinQR {
    Matrix q; // rows x m, orthonormal columns
    Matrix r; // m x cols, upper triangular with non-negative diagonal
};

inline ThinQR thin_qr(const Matrix& a) {
    const Index m = std::min(a.rows(), a.cols());
    Eigen::HouseholderQR<Matrix> qr(a);
    ThinQR out;
    out.q = qr.householderQ() * Matrix::Identity(a.rows(), m);
    out.r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    for (Index j = 0; j < m; ++j) {
        if (out.r(j, j) < 0.0) {
            out.q.col(j) *= -1.0;
            out.r.row(j) *= -1.0;
        }
    }
    return out;
}

} // namespace detail

/** Cores with i.i.d. standard normal entries drawn core by core in canonical order. */
inline TTTensor tt_random(const Dims& dims, const Ranks& ranks, std::uint64_t seed) {
    detail::check_dims(dims, "tt_random");
    detail::check_ranks(static_cast<Index>(dims.size()), ranks, "tt_random");
    Rng rng(seed);
    std::vector<Core> cores;
    cores.reserve(dims.size());
    for (std::size_t k = 0; k < dims.size(); ++k) {
        Core c(ranks[k], dims[k], ranks[k + 1]);
        double* p = c.data();
        for (Index j = 0; j < c.size(); ++j) p[j] = rng.normal();
        cores.push_back(std::move(c));
    }
    return TTTensor(std::move(cores));
}

/** Full reconstruction; subject to the dense cap. */
inline DenseTensor to_dense(const TTTensor& x, Index cap = DenseTensor::default_cap) {
    DenseTensor out(x.dims(), cap);
    RowMatrix acc = x.core(0).left_unfolding();
    for (Index k = 1; k < x.order(); ++k) {
        const Core& c = x.core(k);
        RowMatrix next = acc * c.right_unfolding();
        acc = Eigen::Map<const RowMatrix>(next.data(), next.rows() * c.mode(), c.right());
    }
    std::copy(acc.data(), acc.data() + acc.size(), out.values().begin());
    return out;
}

inline TTTensor orthogonalize(const TTTensor& x, OrthState direction) {
    std::vector<Core> cores = x.cores();
    const auto d = static_cast<Index>(cores.size());
    if (direction == OrthState::left) {
        for (Index k = 0; k + 1 < d; ++k) {
            auto& c = cores[static_cast<std::size_t>(k)];
            auto& n = cores[static_cast<std::size_t>(k + 1)];
            auto qr = detail::thin_qr(c.left_unfolding());
            const Index m = qr.q.cols();
            Matrix next = qr.r * n.right_unfolding();
            c = Core::from_left_unfolding(c.left(), c.mode(), m, qr.q);
            n = Core::from_right_unfolding(m, n.mode(), n.right(), next);
        }
    } else if (direction == OrthState::right) {
        for (Index k = d - 1; k > 0; --k) {
            auto& c = cores[static_cast<std::size_t>(k)];
            auto& p = cores[static_cast<std::size_t>(k - 1)];
            auto qr = detail::thin_qr(c.right_unfolding().transpose());
            const Index m = qr.q.cols();
            Matrix prev = p.left_unfolding() * qr.r.transpose();
            c = Core::from_right_unfolding(m, c.mode(), c.right(), qr.q.transpose());
            p = Core::from_left_unfolding(p.left(), p.mode(), m, prev);
        }
    } else {
        return x;
    }
    return TTTensor(std::move(cores), direction);
}

/**
 * Sequential truncated SVDs of a dense tensor. Optionally reports the
 * truncation error sqrt(sum of squared discarded singular values), which
 * equals the Frobenius error of the result.
 */
inline TTTensor tt_svd(const DenseTensor& a, const Ranks& target, double* truncation_error = nullptr) {
    const Index d = a.order();
    detail::check_ranks(d, target, "tt_svd");
    std::vector<Core> cores;
    cores.reserve(static_cast<std::size_t>(d));
    RowMatrix rest = Eigen::Map<const RowMatrix>(a.values().data(), 1, a.size());
    Index prev = 1;
    double discarded = 0.0;
    for (Index k = 0; k + 1 < d; ++k) {
        const Index n = a.dims()[static_cast<std::size_t>(k)];
        const Index rows = prev * n;
        Matrix unfolding = Eigen::Map<const RowMatrix>(rest.data(), rows, rest.size() / rows);
        auto t = detail::truncated_svd(unfolding, target[static_cast<std::size_t>(k + 1)]);
        discarded += t.discarded_sq;
        const Index rank = t.u.cols();
        cores.push_back(Core::from_left_unfolding(prev, n, rank, t.u));
        rest = t.svt;
        prev = rank;
    }
    const Index n = a.dims().back();
    cores.push_back(Core::from_left_unfolding(prev, n, 1, Eigen::Map<const RowMatrix>(rest.data(), prev * n, 1)));
    if (truncation_error) *truncation_error = std::sqrt(discarded);
    return TTTensor(std::move(cores), d > 1 ? OrthState::left : OrthState::none);
}

/** TT-rounding: right-orthogonalize, then a left-to-right truncated SVD sweep. */
inline TTTensor tt_round(const TTTensor& x, const Ranks& target, double* truncation_error = nullptr) {
    const Index d = x.order();
    detail::check_ranks(d, target, "tt_round");
    std::vector<Core> cores = orthogonalize(x, OrthState::right).cores();
    double discarded = 0.0;
    for (Index k = 0; k + 1 < d; ++k) {
        auto& c = cores[static_cast<std::size_t>(k)];
        auto& n = cores[static_cast<std::size_t>(k + 1)];
        auto t = detail::truncated_svd(c.left_unfolding(), target[static_cast<std::size_t>(k + 1)]);
        discarded += t.discarded_sq;
        const Index rank = t.u.cols();
        Matrix next = t.svt * n.right_unfolding();
        c = Core::from_left_unfolding(c.left(), c.mode(), rank, t.u);
        n = Core::from_right_unfolding(rank, n.mode(), n.right(), next);
    }
    if (truncation_error) *truncation_error = std::sqrt(discarded);
    return TTTensor(std::move(cores), d > 1 ? OrthState::left : OrthState::none);
}

/** Single entry: G_1[:, i_1, :] ... G_d[:, i_d, :]. */
inline double entry(const TTTensor& x, std::span<const Index> idx) {
    if (static_cast<Index>(idx.size()) != x.order()) throw DimensionError("entry: index has wrong order");
    detail::check_index(x.dims(), idx, "entry");
    RowVector v = x.core(0).slice(idx[0]);
    RowVector tmp;
    for (Index k = 1; k < x.order(); ++k) {
        tmp.noalias() = v * x.core(k).slice(idx[static_cast<std::size_t>(k)]);
        v.swap(tmp);
    }
    return v(0);
}

inline double entry(const TTTensor& x, const MultiIndex& idx) { return entry(x, std::span<const Index>(idx)); }

/**
 * Batched entries. `flat` holds the indices back to back, d per sample.
 * O(d r^2) work and O(r) scratch per sample.
 */
inline std::vector<double> entries(const TTTensor& x, std::span<const Index> flat) {
    const auto d = static_cast<std::size_t>(x.order());
    if (flat.size() % d != 0) throw DimensionError("entries: flat index list length is not a multiple of d");
    const std::size_t count = flat.size() / d;
    const Dims dims = x.dims();
    std::vector<double> out(count);
    RowVector v, tmp;
    for (std::size_t s = 0; s < count; ++s) {
        auto idx = flat.subspan(s * d, d);
        detail::check_index(dims, idx, "entries");
        v = x.core(0).slice(idx[0]);
        for (std::size_t k = 1; k < d; ++k) {
            tmp.noalias() = v * x.cores()[k].slice(idx[k]);
            v.swap(tmp);
        }
        out[s] = v(0);
    }
    return out;
}

inline std::vector<double> entries(const TTTensor& x, const std::vector<MultiIndex>& list) {
    std::vector<Index> flat;
    flat.reserve(list.size() * static_cast<std::size_t>(x.order()));
    for (const auto& idx : list) {
        if (static_cast<Index>(idx.size()) != x.order()) throw DimensionError("entries: index has wrong order");
        flat.insert(flat.end(), idx.begin(), idx.end());
    }
    return entries(x, std::span<const Index>(flat));
}

/** Frobenius inner product by left-to-right contraction, O(d N r^3). */
inline double inner(const TTTensor& x, const TTTensor& y) {
    if (x.dims() != y.dims()) throw DimensionError("inner: dims mismatch " + detail::join(x.dims()) + " vs " +
                                                   detail::join(y.dims()));
    RowMatrix w = RowMatrix::Ones(1, 1);
    for (Index k = 0; k < x.order(); ++k) {
        const Core& a = x.core(k);
        const Core& b = y.core(k);
        RowMatrix t = w * b.right_unfolding();
        w = a.left_unfolding().transpose() * Eigen::Map<const RowMatrix>(t.data(), a.left() * a.mode(), b.right());
    }
    return w(0, 0);
}

/** Frobenius norm via left-orthogonalization; stable even for nearly cancelling sums. */
inline double norm(const TTTensor& x) {
    const TTTensor o = x.orth_state() == OrthState::left ? x : orthogonalize(x, OrthState::left);
    return o.cores().back().left_unfolding().norm();
}

inline TTTensor scale(const TTTensor& x, double c) {
    std::vector<Core> cores = x.cores();
    if (x.orth_state() == OrthState::right)
        cores.front().storage() *= c;
    else
        cores.back().storage() *= c;
    return TTTensor(std::move(cores), x.orth_state());
}

/** Sum by core concatenation; internal ranks add. */
inline TTTensor tt_add(const TTTensor& x, const TTTensor& y) {
    if (x.dims() != y.dims()) throw DimensionError("tt_add: dims mismatch " + detail::join(x.dims()) + " vs " +
                                                    detail::join(y.dims()));
    const Index d = x.order();
    if (d == 1) {
        Core c = x.core(0);
        c.storage() += y.core(0).left_unfolding();
        return TTTensor({std::move(c)});
    }
    std::vector<Core> cores;
    cores.reserve(static_cast<std::size_t>(d));
    for (Index k = 0; k < d; ++k) {
        const Core& a = x.core(k);
        const Core& b = y.core(k);
        const bool first = k == 0, last = k == d - 1;
        const Index left = first ? 1 : a.left() + b.left();
        const Index right = last ? 1 : a.right() + b.right();
        Core c(left, a.mode(), right);
        for (Index i = 0; i < a.mode(); ++i) {
            for (Index p = 0; p < a.left(); ++p)
                for (Index q = 0; q < a.right(); ++q) c(p, i, q) = a(p, i, q);
            const Index lo = first ? 0 : a.left();
            const Index ro = last ? 0 : a.right();
            for (Index p = 0; p < b.left(); ++p)
                for (Index q = 0; q < b.right(); ++q) c(lo + p, i, ro + q) = b(p, i, q);
        }
        cores.push_back(std::move(c));
    }
    return TTTensor(std::move(cores));
}

} // namespace ttc
