#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "common.hpp"
#include "samples.hpp"
#include "tt.hpp"

namespace ttc {

/**
 * A point on the manifold of fixed-TT-rank tensors, with both
 * orthogonalizations cached:
 *   left():  U_1..U_d, left unfoldings of U_1..U_{d-1} orthonormal
 *   right(): V_1..V_d, right unfoldings of V_2..V_d orthonormal
 * Both chains represent the same tensor as base().
 *
 * Cheap to copy; copies share the cached data.
 */
class ManifoldPoint {
public:
    ManifoldPoint() = default;

    explicit ManifoldPoint(TTTensor x) {
        auto data = std::make_shared<Data>();
        // right sweep first so that every rank is attainable from both sides
        data->left = orthogonalize(orthogonalize(x, OrthState::right), OrthState::left);
        data->right = orthogonalize(data->left, OrthState::right);
        data->base = std::move(x);
        data_ = std::move(data);
    }

    const TTTensor& base() const { return data_->base; }
    const TTTensor& left() const { return data_->left; }
    const TTTensor& right() const { return data_->right; }

    Index order() const { return data_->left.order(); }
    Dims dims() const { return data_->left.dims(); }
    Ranks ranks() const { return data_->left.ranks(); }

    bool same_as(const ManifoldPoint& other) const noexcept { return data_ == other.data_; }
    bool valid() const noexcept { return static_cast<bool>(data_); }

    /** Per-point memo for scalar diagnostics keyed by a caller-chosen id. */
    double memo(std::uint64_t key, const std::function<double()>& compute) const {
        {
            std::lock_guard lock(data_->memo_mutex);
            for (const auto& [k, v] : data_->memo)
                if (k == key) return v;
        }
        const double value = compute();
        std::lock_guard lock(data_->memo_mutex);
        data_->memo.emplace_back(key, value);
        return value;
    }

private:
    struct Data {
        TTTensor base, left, right;
        std::mutex memo_mutex;
        std::vector<std::pair<std::uint64_t, double>> memo;
    };
    std::shared_ptr<Data> data_;
};

inline ManifoldPoint make_point(const TTTensor& x) { return ManifoldPoint(x); }

/**
 * Gauged tangent vector at a point: per-core variations dG_k with
 * U_k^T dG_k = 0 (left unfoldings) for k < d. Its ambient tensor is
 *   sum_k [U_1 .. U_{k-1}, dG_k, V_{k+1} .. V_d].
 */
class TangentVector {
public:
    TangentVector() = default;

    TangentVector(ManifoldPoint point, std::vector<Core> deltas) : point_(std::move(point)), deltas_(std::move(deltas)) {
        const auto& u = point_.left();
        if (static_cast<Index>(deltas_.size()) != u.order())
            throw DimensionError("TangentVector: need one delta per core");
        for (Index k = 0; k < u.order(); ++k) {
            const Core& c = deltas_[static_cast<std::size_t>(k)];
            const Core& g = u.core(k);
            if (c.left() != g.left() || c.mode() != g.mode() || c.right() != g.right())
                throw DimensionError("TangentVector: delta " + std::to_string(k) + " does not match core shape");
        }
    }

    static TangentVector zero(const ManifoldPoint& p) {
        std::vector<Core> deltas;
        for (const auto& c : p.left().cores()) deltas.emplace_back(c.left(), c.mode(), c.right());
        return TangentVector(p, std::move(deltas));
    }

    const ManifoldPoint& point() const noexcept { return point_; }
    const std::vector<Core>& deltas() const noexcept { return deltas_; }
    const Core& delta(Index k) const { return deltas_[static_cast<std::size_t>(k)]; }

    TangentVector& operator+=(const TangentVector& w) { return axpy(1.0, w); }

    TangentVector& axpy(double a, const TangentVector& w) {
        require_same_point(w);
        for (std::size_t k = 0; k < deltas_.size(); ++k) deltas_[k].storage() += a * w.deltas_[k].left_unfolding();
        return *this;
    }

    TangentVector& operator*=(double a) {
        for (auto& c : deltas_) c.storage() *= a;
        return *this;
    }

    void require_same_point(const TangentVector& w) const {
        if (!point_.same_as(w.point_)) throw DimensionError("tangent vectors live at different points");
    }

private:
    ManifoldPoint point_;
    std::vector<Core> deltas_;
};

inline TangentVector operator+(TangentVector v, const TangentVector& w) { return v += w; }
inline TangentVector operator-(TangentVector v, const TangentVector& w) { return v.axpy(-1.0, w); }
inline TangentVector operator*(double a, TangentVector v) { return v *= a; }
inline TangentVector operator-(TangentVector v) { return v *= -1.0; }

/** Ambient inner product of two tangent vectors at the same point: sum of core-wise inner products. */
inline double inner(const TangentVector& v, const TangentVector& w) {
    v.require_same_point(w);
    double s = 0.0;
    for (Index k = 0; k < static_cast<Index>(v.deltas().size()); ++k)
        s += v.delta(k).left_unfolding().cwiseProduct(w.delta(k).left_unfolding()).sum();
    return s;
}

inline double norm(const TangentVector& v) { return std::sqrt(std::max(0.0, inner(v, v))); }

/** Largest Frobenius norm of U_k^T dG_k over k < d. */
inline double gauge_residual(const TangentVector& v) {
    double worst = 0.0;
    const auto& u = v.point().left();
    for (Index k = 0; k + 1 < u.order(); ++k)
        worst = std::max(worst, (u.core(k).left_unfolding().transpose() * v.delta(k).left_unfolding()).norm());
    return worst;
}

namespace detail {

/** dG_k <- (I - U_k U_k^T) dG_k on left unfoldings, k < d. */
inline void apply_gauge(const ManifoldPoint& p, std::vector<Core>& deltas) {
    const auto& u = p.left();
    for (Index k = 0; k + 1 < u.order(); ++k) {
        const RowMatrix& uk = u.core(k).left_unfolding();
        RowMatrix& dk = deltas[static_cast<std::size_t>(k)].storage();
        Matrix coeff = uk.transpose() * dk;
        dk.noalias() -= uk * coeff;
    }
}

/** right[k] = V_{k+1}[i_{k+1}] ... V_d[i_d] as a column vector of length r_k. */
inline void right_vectors(const TTTensor& v, std::span<const Index> idx, std::vector<Vector>& right) {
    const auto d = static_cast<std::size_t>(v.order());
    right.resize(d);
    right[d - 1] = Vector::Ones(1);
    for (std::size_t k = d - 1; k > 0; --k) right[k - 1].noalias() = v.cores()[k].slice(idx[k]) * right[k];
}

} // namespace detail

/**
 * Orthogonal projection of the sparse tensor `z` onto the tangent space at `p`.
 *
 * Two passes per sample (right interface vectors, then left interface
 * vectors accumulated on the fly), each adding a rank-one r_{k-1} x r_k
 * block into dG_k[:, i_k, :]; afterwards every dG_k with k < d is
 * gauge-projected. O(d |Z| r^2 + d N r^3), no dense allocation.
 */
inline TangentVector project_tangent(const ManifoldPoint& p, const SparseSamples& z) {
    if (z.dims() != p.dims())
        throw DimensionError("project_tangent: sample dims " + detail::join(z.dims()) + " vs point dims " +
                             detail::join(p.dims()));
    const auto& u = p.left();
    const auto& v = p.right();
    const auto d = static_cast<std::size_t>(u.order());
    std::vector<Core> deltas;
    for (const auto& c : u.cores()) deltas.emplace_back(c.left(), c.mode(), c.right());

    std::vector<Vector> right;
    RowVector left, tmp;
    for (std::size_t s = 0; s < z.size(); ++s) {
        auto idx = z.index(s);
        const double value = z.values()[s];
        detail::right_vectors(v, idx, right);
        left = RowVector::Constant(1, value);
        for (std::size_t k = 0; k < d; ++k) {
            deltas[k].slice(idx[k]).noalias() += left.transpose() * right[k].transpose();
            if (k + 1 < d) {
                tmp.noalias() = left * u.cores()[k].slice(idx[k]);
                left.swap(tmp);
            }
        }
    }
    detail::apply_gauge(p, deltas);
    return TangentVector(p, std::move(deltas));
}

/**
 * Orthogonal projection of a tensor given in TT format onto the tangent
 * space at `p`, by interface contractions (never dense).
 */
inline TangentVector project_tangent(const ManifoldPoint& p, const TTTensor& z) {
    if (z.dims() != p.dims()) throw DimensionError("project_tangent: dims mismatch");
    const auto& u = p.left();
    const auto& v = p.right();
    const Index d = u.order();

    // right_env[k] = Z_{>=k} V_{>=k}^T, shape s_{k-1} x r_{k-1}; right_env[d] = 1
    std::vector<Matrix> right_env(static_cast<std::size_t>(d + 1));
    right_env[static_cast<std::size_t>(d)] = Matrix::Ones(1, 1);
    for (Index k = d - 1; k > 0; --k) {
        const Core& zc = z.core(k);
        const Core& vc = v.core(k);
        RowMatrix w = zc.left_unfolding() * right_env[static_cast<std::size_t>(k + 1)];
        right_env[static_cast<std::size_t>(k)] =
            Eigen::Map<const RowMatrix>(w.data(), zc.left(), zc.mode() * vc.right()) * vc.right_unfolding().transpose();
    }

    std::vector<Core> deltas;
    Matrix left_env = Matrix::Ones(1, 1); // X_{<k}^T Z_{<k}, r_{k-1} x s_{k-1}
    for (Index k = 0; k < d; ++k) {
        const Core& zc = z.core(k);
        const Core& uc = u.core(k);
        RowMatrix t = left_env * zc.right_unfolding();
        auto tl = Eigen::Map<const RowMatrix>(t.data(), uc.left() * uc.mode(), zc.right());
        deltas.push_back(
            Core::from_left_unfolding(uc.left(), uc.mode(), uc.right(), tl * right_env[static_cast<std::size_t>(k + 1)]));
        if (k + 1 < d) left_env = uc.left_unfolding().transpose() * tl;
    }
    detail::apply_gauge(p, deltas);
    return TangentVector(p, std::move(deltas));
}

/**
 * Rank-2r TT form of a tangent vector:
 *   first core [dG_1 | U_1], middle [[V_k, 0], [dG_k, U_k]], last [V_d ; dG_d].
 */
inline TTTensor tangent_to_tt(const TangentVector& t) {
    const auto& u = t.point().left();
    const auto& v = t.point().right();
    const Index d = u.order();
    if (d == 1) return TTTensor({t.delta(0)});
    std::vector<Core> cores;
    for (Index k = 0; k < d; ++k) {
        const Core& dk = t.delta(k);
        const Core& uk = u.core(k);
        const Core& vk = v.core(k);
        const bool first = k == 0, last = k == d - 1;
        const Index r0 = dk.left(), r1 = dk.right();
        Core c(first ? 1 : 2 * r0, dk.mode(), last ? 1 : 2 * r1);
        for (Index i = 0; i < dk.mode(); ++i) {
            if (first) {
                for (Index b = 0; b < r1; ++b) {
                    c(0, i, b) = dk(0, i, b);
                    c(0, i, r1 + b) = uk(0, i, b);
                }
            } else if (last) {
                for (Index a = 0; a < r0; ++a) {
                    c(a, i, 0) = vk(a, i, 0);
                    c(r0 + a, i, 0) = dk(a, i, 0);
                }
            } else {
                for (Index a = 0; a < r0; ++a)
                    for (Index b = 0; b < r1; ++b) {
                        c(a, i, b) = vk(a, i, b);
                        c(r0 + a, i, b) = dk(a, i, b);
                        c(r0 + a, i, r1 + b) = uk(a, i, b);
                    }
            }
        }
        cores.push_back(std::move(c));
    }
    return TTTensor(std::move(cores));
}

/** Entries of the ambient tensor of `t` at the flat index list, O(d r^2) per sample. */
inline std::vector<double> sample_tangent(const TangentVector& t, std::span<const Index> flat) {
    const auto& u = t.point().left();
    const auto& v = t.point().right();
    const auto d = static_cast<std::size_t>(u.order());
    if (flat.size() % d != 0) throw DimensionError("sample_tangent: flat index list length is not a multiple of d");
    const Dims dims = u.dims();
    std::vector<double> out(flat.size() / d);
    std::vector<Vector> right;
    RowVector left, tmp;
    for (std::size_t s = 0; s < out.size(); ++s) {
        auto idx = flat.subspan(s * d, d);
        detail::check_index(dims, idx, "sample_tangent");
        detail::right_vectors(v, idx, right);
        left = RowVector::Ones(1);
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            acc += (left * t.deltas()[k].slice(idx[k]) * right[k])(0);
            if (k + 1 < d) {
                tmp.noalias() = left * u.cores()[k].slice(idx[k]);
                left.swap(tmp);
            }
        }
        out[s] = acc;
    }
    return out;
}

inline std::vector<double> sample_tangent(const TangentVector& t, const SparseSamples& at) {
    return sample_tangent(t, at.flat_indices());
}

/**
 * TT-SVD retraction: round X + step * v to `ranks`. X + step * v is formed
 * directly in the structured rank-2r layout
 *   [step dG_1 | U_1], [[V_k, 0], [step dG_k, U_k]], [V_d ; U_d + step dG_d].
 */
inline TTTensor retract(const ManifoldPoint& p, const TangentVector& t, double step, const Ranks& ranks) {
    if (!t.point().same_as(p)) throw DimensionError("retract: tangent vector belongs to a different point");
    const auto& u = p.left();
    const Index d = u.order();
    if (d == 1) {
        Core c = u.core(0);
        c.storage() += step * t.delta(0).left_unfolding();
        return TTTensor({std::move(c)});
    }
    TangentVector scaled = step * t;
    std::vector<Core> cores = tangent_to_tt(scaled).cores();
    Core& last = cores.back();
    const Core& ud = u.core(d - 1);
    const Index r0 = ud.left();
    for (Index i = 0; i < ud.mode(); ++i)
        for (Index a = 0; a < r0; ++a) last(r0 + a, i, 0) += ud(a, i, 0);
    return tt_round(TTTensor(std::move(cores)), ranks);
}

/** Vector transport by orthogonal projection onto the tangent space at `to`. */
inline TangentVector transport(const ManifoldPoint& to, const TangentVector& t) {
    if (to.dims() != t.point().dims()) throw DimensionError("transport: dims mismatch");
    return project_tangent(to, tangent_to_tt(t));
}

} // namespace ttc
