#pragma once

// Dense desk-scale references for the side-information problem posed in the
// small space, g(Y) = 1/2 ||P_Omega Q Y - P_Omega A||^2. These materialize
// full tensors (subject to the dense cap) and exist only for validation.

#include "dense.hpp"
#include "samples.hpp"
#include "side_info.hpp"
#include "tt.hpp"

namespace ttc {

/** Dense Q Y = Y x_1 Q_1 ... x_d Q_d for a dense small-space tensor. */
inline DenseTensor dense_apply_Q(const SideInfo& s, const DenseTensor& y) {
    if (y.dims() != s.small_dims()) throw DimensionError("dense_apply_Q: dims mismatch");
    DenseTensor out = y;
    for (Index k = 0; k < s.order(); ++k)
        if (!s.trivial(k)) out = out.mode_product(k, s.stored_basis(k));
    return out;
}

/** Dense Q^T X. */
inline DenseTensor dense_apply_QT(const SideInfo& s, const DenseTensor& x) {
    if (x.dims() != s.large_dims()) throw DimensionError("dense_apply_QT: dims mismatch");
    DenseTensor out = x;
    for (Index k = 0; k < s.order(); ++k)
        if (!s.trivial(k)) out = out.mode_product(k, s.stored_basis(k).transpose());
    return out;
}

/** g(Y) for a dense small-space Y. */
inline double small_space_objective(const SideInfo& s, const DenseTensor& y, const SparseSamples& train) {
    const DenseTensor x = dense_apply_Q(s, y);
    double f = 0.0;
    for (std::size_t i = 0; i < train.size(); ++i) {
        auto idx = train.index(i);
        const double r = x(MultiIndex(idx.begin(), idx.end())) - train.values()[i];
        f += r * r;
    }
    return 0.5 * f;
}

/** Euclidean gradient of g: (P_Omega Q Y - P_Omega A) x_1 Q_1^T ... x_d Q_d^T, dense. */
inline DenseTensor small_space_gradient_oracle(const SideInfo& s, const DenseTensor& y, const SparseSamples& train) {
    if (train.dims() != s.large_dims()) throw DimensionError("small_space_gradient_oracle: sample dims mismatch");
    const DenseTensor x = dense_apply_Q(s, y);
    DenseTensor r(s.large_dims());
    for (std::size_t i = 0; i < train.size(); ++i) {
        const MultiIndex idx(train.index(i).begin(), train.index(i).end());
        r(idx) = x(idx) - train.values()[i];
    }
    return dense_apply_QT(s, r);
}

inline DenseTensor small_space_gradient_oracle(const SideInfo& s, const TTTensor& y, const SparseSamples& train) {
    return small_space_gradient_oracle(s, to_dense(y), train);
}

} // namespace ttc
