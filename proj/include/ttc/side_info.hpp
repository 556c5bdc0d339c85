#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "common.hpp"
#include "manifold.hpp"
#include "random.hpp"
#include "samples.hpp"
#include "tt.hpp"

namespace ttc {

/** The base point of a side-information projection does not conform to the subspaces. */
class ConformanceError : public Error {
public:
    using Error::Error;
};

/**
 * Per-mode subspace information: Q_k is N_k x M_k with orthonormal columns
 * and the mode-k fibers of the sought tensor lie in col(Q_k). A trivial
 * mode carries no information (Q_k = I, M_k = N_k) and stores no matrix.
 */
class SideInfo {
public:
    /** Tolerance on ||Q^T Q - I||_max accepted at construction. */
    static constexpr double orthonormality_tol = 1e-10;

    SideInfo() = default;

    SideInfo(Dims large, std::vector<Matrix> bases, std::vector<bool> trivial)
        : large_(std::move(large)), bases_(std::move(bases)), trivial_(std::move(trivial)), id_(next_id()) {
        detail::check_dims(large_, "SideInfo");
        if (bases_.size() != large_.size() || trivial_.size() != large_.size())
            throw DimensionError("SideInfo: need one basis and one trivial flag per mode");
        small_.resize(large_.size());
        for (std::size_t k = 0; k < large_.size(); ++k) {
            if (trivial_[k]) {
                small_[k] = large_[k];
                bases_[k].resize(0, 0);
                continue;
            }
            const Matrix& q = bases_[k];
            if (q.rows() != large_[k] || q.cols() < 1 || q.cols() > q.rows())
                throw DimensionError("SideInfo: basis " + std::to_string(k) + " must be N_k x M_k with 1 <= M_k <= N_k");
            const double err = (q.transpose() * q - Matrix::Identity(q.cols(), q.cols())).cwiseAbs().maxCoeff();
            if (!(err <= orthonormality_tol))
                throw DimensionError("SideInfo: basis " + std::to_string(k) + " is not orthonormal (error " +
                                     std::to_string(err) + ")");
            small_[k] = q.cols();
        }
    }

    /** Side information with non-trivial bases for every mode. */
    explicit SideInfo(std::vector<Matrix> bases) : SideInfo(large_of(bases), bases, std::vector<bool>(bases.size(), false)) {}

    /** No information on any mode. */
    static SideInfo identity(const Dims& dims) {
        return SideInfo(dims, std::vector<Matrix>(dims.size()), std::vector<bool>(dims.size(), true));
    }

    Index order() const noexcept { return static_cast<Index>(large_.size()); }
    /** N_1..N_d */
    const Dims& large_dims() const noexcept { return large_; }
    /** M_1..M_d */
    const Dims& small_dims() const noexcept { return small_; }
    bool trivial(Index k) const { return trivial_[static_cast<std::size_t>(k)]; }
    bool all_trivial() const {
        for (bool t : trivial_)
            if (!t) return false;
        return true;
    }
    /** Q_k; for a trivial mode the identity is materialized on demand. */
    Matrix basis(Index k) const {
        const auto kk = static_cast<std::size_t>(k);
        return trivial_[kk] ? Matrix::Identity(large_[kk], large_[kk]) : bases_[kk];
    }
    const Matrix& stored_basis(Index k) const { return bases_[static_cast<std::size_t>(k)]; }

    /** Identity shared by copies; used as a memo key. */
    std::uint64_t id() const noexcept { return id_; }

private:
    static Dims large_of(const std::vector<Matrix>& bases) {
        Dims d;
        for (const auto& q : bases) d.push_back(q.rows());
        return d;
    }

    static std::uint64_t next_id() {
        static std::atomic<std::uint64_t> counter{0};
        return ++counter;
    }

    Dims large_, small_;
    std::vector<Matrix> bases_;
    std::vector<bool> trivial_;
    std::uint64_t id_{0};
};

/** N x M orthonormal basis from a seeded Gaussian matrix (entries drawn row by row), thin QR with R_jj >= 0. */
inline Matrix orthonormal_basis(Index n, Index m, std::uint64_t seed) {
    if (m < 1 || m > n) throw DimensionError("orthonormal_basis: need 1 <= M <= N, got N=" + std::to_string(n) +
                                             " M=" + std::to_string(m));
    Rng rng(seed);
    Matrix g(n, m);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < m; ++j) g(i, j) = rng.normal();
    return detail::thin_qr(g).q;
}

namespace detail {

/** H[a, i, b] = sum_j m(i, j) G[a, j, b] */
inline Core mode_multiply(const Core& g, const Matrix& m) {
    if (m.cols() != g.mode()) throw DimensionError("mode_multiply: matrix does not match mode size");
    Core h(g.left(), m.rows(), g.right());
    for (Index a = 0; a < g.left(); ++a)
        h.storage().middleRows(a * m.rows(), m.rows()).noalias() = m * g.left_unfolding().middleRows(a * g.mode(), g.mode());
    return h;
}

/** Middle-mode Q Q^T without forming the N x N projector. */
inline Core mode_project(const Core& g, const Matrix& q) { return mode_multiply(mode_multiply(g, q.transpose()), q); }

inline TTTensor map_cores(const TTTensor& x, const SideInfo& s, bool transpose) {
    std::vector<Core> cores;
    for (Index k = 0; k < x.order(); ++k) {
        if (s.trivial(k))
            cores.push_back(x.core(k));
        else if (transpose)
            cores.push_back(mode_multiply(x.core(k), s.stored_basis(k).transpose()));
        else
            cores.push_back(mode_multiply(x.core(k), s.stored_basis(k)));
    }
    return TTTensor(std::move(cores));
}

} // namespace detail

/** Y x_1 Q_1 ... x_d Q_d, core by core. Ranks unchanged. */
inline TTTensor apply_Q(const SideInfo& s, const TTTensor& y) {
    if (y.dims() != s.small_dims())
        throw DimensionError("apply_Q: tensor dims " + detail::join(y.dims()) + " vs subspace dims " +
                             detail::join(s.small_dims()));
    return detail::map_cores(y, s, false);
}

/** X x_1 Q_1^T ... x_d Q_d^T, core by core. Ranks unchanged. */
inline TTTensor apply_QT(const SideInfo& s, const TTTensor& x) {
    if (x.dims() != s.large_dims())
        throw DimensionError("apply_QT: tensor dims " + detail::join(x.dims()) + " vs side-info dims " +
                             detail::join(s.large_dims()));
    return detail::map_cores(x, s, true);
}

/** Q Q^T X: orthogonal projection of every mode onto its subspace. */
inline TTTensor project_side(const SideInfo& s, const TTTensor& x) { return apply_Q(s, apply_QT(s, x)); }

/**
 * Upper bound on ||Q Q^T X - X|| / ||X||, computed stably in TT form:
 * sum over k of ||(I - Q_k Q_k^T) C_k|| where C_k is the centre core of the
 * mixed-canonical form at k. Returns 0 for the zero tensor.
 */
inline double side_residual(const SideInfo& s, const TTTensor& x) {
    if (x.dims() != s.large_dims()) throw DimensionError("side_residual: dims mismatch");
    std::vector<Core> cores = (x.orth_state() == OrthState::left ? x : orthogonalize(x, OrthState::left)).cores();
    const double total = cores.back().left_unfolding().norm();
    if (total == 0.0) return 0.0;
    double sum = 0.0;
    for (Index k = x.order() - 1; k >= 0; --k) {
        auto& c = cores[static_cast<std::size_t>(k)];
        if (!s.trivial(k)) sum += (c.left_unfolding() - detail::mode_project(c, s.stored_basis(k)).left_unfolding()).norm();
        if (k > 0) {
            auto& p = cores[static_cast<std::size_t>(k - 1)];
            auto qr = detail::thin_qr(c.right_unfolding().transpose());
            Matrix prev = p.left_unfolding() * qr.r.transpose();
            c = Core::from_right_unfolding(qr.q.cols(), c.mode(), c.right(), qr.q.transpose());
            p = Core::from_left_unfolding(p.left(), p.mode(), qr.q.cols(), prev);
        }
    }
    return sum / total;
}

/** Relative tolerance for a base point to count as conforming. */
inline constexpr double conformance_tol = 1e-10;

/**
 * Tangent projection onto the side-information-constrained manifold:
 * Q Q^T applied to the unconstrained tangent projection. At a conforming
 * point U_k and V_k are invariant under middle-mode Q_k Q_k^T, so applying
 * it to each dG_k yields the ambient Q Q^T image and keeps the gauge.
 *
 * Throws ConformanceError when the base point does not conform to `s`
 * (checked once per point and side-info pair).
 */
inline TangentVector project_tangent_si(const SideInfo& s, const ManifoldPoint& p, const SparseSamples& z) {
    if (p.dims() != s.large_dims()) throw DimensionError("project_tangent_si: dims mismatch");
    const double residual = p.memo(s.id(), [&] { return side_residual(s, p.left()); });
    if (residual > conformance_tol)
        throw ConformanceError("project_tangent_si: base point does not conform to the side information (relative "
                               "residual " + std::to_string(residual) + ")");
    TangentVector v = project_tangent(p, z);
    if (s.all_trivial()) return v;
    std::vector<Core> deltas = v.deltas();
    for (Index k = 0; k < p.order(); ++k)
        if (!s.trivial(k))
            deltas[static_cast<std::size_t>(k)] = detail::mode_project(deltas[static_cast<std::size_t>(k)], s.stored_basis(k));
    return TangentVector(p, std::move(deltas));
}

} // namespace ttc
