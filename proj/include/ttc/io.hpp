#pragma once

// Binary containers. All integers are unsigned 64-bit little-endian, all
// reals IEEE-754 binary64 little-endian, regardless of host byte order.
//
// TT file
//   magic   "TTCTTv1\0"                     8 bytes
//   d                                        u64
//   orth_state (0 none, 1 left, 2 right)     u64
//   dims[d]                                  u64 x d
//   ranks[d+1]                               u64 x (d+1)
//   cores k = 0..d-1, each r_{k-1}*N_k*r_k   f64, index (a, i, b) with b fastest
//
// Side-information file
//   magic   "TTCSIv1\0"
//   d                                        u64
//   mask_words = ceil(d / 64)                u64
//   trivial mask, bit k%64 of word k/64      u64 x mask_words
//   N[d], M[d]                               u64 x d, u64 x d
//   Q_k for every non-trivial k, row-major   f64 x N_k*M_k
//
// Samples file
//   magic   "TTCSMv1\0"
//   d, count                                 u64, u64
//   dims[d]                                  u64 x d
//   count records of (index[d], value)       u64 x d, f64

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "common.hpp"
#include "samples.hpp"
#include "side_info.hpp"
#include "tt.hpp"

namespace ttc::io {

using Magic = std::array<char, 8>;
inline constexpr Magic tt_magic{'T', 'T', 'C', 'T', 'T', 'v', '1', '\0'};
inline constexpr Magic side_magic{'T', 'T', 'C', 'S', 'I', 'v', '1', '\0'};
inline constexpr Magic samples_magic{'T', 'T', 'C', 'S', 'M', 'v', '1', '\0'};

namespace detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 8);
}

inline void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

inline std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw FormatError("io: unexpected end of input");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

inline void put_magic(std::ostream& out, const Magic& m) { out.write(m.data(), 8); }

inline void expect_magic(std::istream& in, const Magic& m, const char* what) {
    Magic got{};
    if (!in.read(got.data(), 8) || got != m) throw FormatError(std::string("io: not a ") + what + " file");
}

/** Guard against absurd headers before allocating. */
inline Index checked(std::uint64_t v, std::uint64_t limit, const char* what) {
    if (v > limit) throw FormatError(std::string("io: implausible ") + what);
    return static_cast<Index>(v);
}

constexpr std::uint64_t max_order = 4096;
constexpr std::uint64_t max_extent = std::uint64_t{1} << 40;

} // namespace detail

inline void write_tt(std::ostream& out, const TTTensor& x) {
    detail::put_magic(out, tt_magic);
    detail::put_u64(out, static_cast<std::uint64_t>(x.order()));
    detail::put_u64(out, static_cast<std::uint64_t>(x.orth_state()));
    for (Index n : x.dims()) detail::put_u64(out, static_cast<std::uint64_t>(n));
    for (Index r : x.ranks()) detail::put_u64(out, static_cast<std::uint64_t>(r));
    for (const auto& c : x.cores())
        for (Index j = 0; j < c.size(); ++j) detail::put_f64(out, c.data()[j]);
}

inline TTTensor read_tt(std::istream& in) {
    detail::expect_magic(in, tt_magic, "TT");
    const Index d = detail::checked(detail::get_u64(in), detail::max_order, "order");
    const std::uint64_t state = detail::get_u64(in);
    if (state > 2) throw FormatError("io: bad orth_state");
    Dims dims(static_cast<std::size_t>(d));
    Ranks ranks(static_cast<std::size_t>(d + 1));
    for (auto& n : dims) n = detail::checked(detail::get_u64(in), detail::max_extent, "mode size");
    for (auto& r : ranks) r = detail::checked(detail::get_u64(in), detail::max_extent, "rank");
    std::vector<Core> cores;
    for (std::size_t k = 0; k < dims.size(); ++k) {
        if (ranks[k] < 1 || ranks[k + 1] < 1 || dims[k] < 1) throw FormatError("io: zero extent in TT header");
        Core c(ranks[k], dims[k], ranks[k + 1]);
        for (Index j = 0; j < c.size(); ++j) c.data()[j] = detail::get_f64(in);
        cores.push_back(std::move(c));
    }
    try {
        return TTTensor(std::move(cores), static_cast<OrthState>(state));
    } catch (const DimensionError& e) {
        throw FormatError(std::string("io: ") + e.what());
    }
}

inline void write_side_info(std::ostream& out, const SideInfo& s) {
    const auto d = static_cast<std::uint64_t>(s.order());
    const std::uint64_t words = (d + 63) / 64;
    detail::put_magic(out, side_magic);
    detail::put_u64(out, d);
    detail::put_u64(out, words);
    std::vector<std::uint64_t> mask(words, 0);
    for (std::uint64_t k = 0; k < d; ++k)
        if (s.trivial(static_cast<Index>(k))) mask[k / 64] |= std::uint64_t{1} << (k % 64);
    for (auto w : mask) detail::put_u64(out, w);
    for (Index n : s.large_dims()) detail::put_u64(out, static_cast<std::uint64_t>(n));
    for (Index m : s.small_dims()) detail::put_u64(out, static_cast<std::uint64_t>(m));
    for (Index k = 0; k < s.order(); ++k) {
        if (s.trivial(k)) continue;
        const Matrix& q = s.stored_basis(k);
        for (Index i = 0; i < q.rows(); ++i)
            for (Index j = 0; j < q.cols(); ++j) detail::put_f64(out, q(i, j));
    }
}

inline SideInfo read_side_info(std::istream& in) {
    detail::expect_magic(in, side_magic, "side-information");
    const auto d = static_cast<std::size_t>(detail::checked(detail::get_u64(in), detail::max_order, "order"));
    const std::uint64_t words = detail::get_u64(in);
    if (words != (d + 63) / 64) throw FormatError("io: bad trivial-mask length");
    std::vector<std::uint64_t> mask(words);
    for (auto& w : mask) w = detail::get_u64(in);
    Dims n(d), m(d);
    for (auto& v : n) v = detail::checked(detail::get_u64(in), detail::max_extent, "mode size");
    for (auto& v : m) v = detail::checked(detail::get_u64(in), detail::max_extent, "subspace size");
    std::vector<Matrix> bases(d);
    std::vector<bool> trivial(d);
    for (std::size_t k = 0; k < d; ++k) {
        trivial[k] = (mask[k / 64] >> (k % 64)) & 1U;
        if (trivial[k]) {
            if (m[k] != n[k]) throw FormatError("io: trivial mode with M != N");
            continue;
        }
        if (m[k] < 1 || m[k] > n[k]) throw FormatError("io: subspace size out of range");
        bases[k].resize(n[k], m[k]);
        for (Index i = 0; i < n[k]; ++i)
            for (Index j = 0; j < m[k]; ++j) bases[k](i, j) = detail::get_f64(in);
    }
    try {
        return SideInfo(n, std::move(bases), std::move(trivial));
    } catch (const DimensionError& e) {
        throw FormatError(std::string("io: ") + e.what());
    }
}

inline void write_samples(std::ostream& out, const SparseSamples& z) {
    detail::put_magic(out, samples_magic);
    detail::put_u64(out, static_cast<std::uint64_t>(z.order()));
    detail::put_u64(out, z.size());
    for (Index n : z.dims()) detail::put_u64(out, static_cast<std::uint64_t>(n));
    for (std::size_t s = 0; s < z.size(); ++s) {
        for (Index i : z.index(s)) detail::put_u64(out, static_cast<std::uint64_t>(i));
        detail::put_f64(out, z.values()[s]);
    }
}

inline SparseSamples read_samples(std::istream& in) {
    detail::expect_magic(in, samples_magic, "samples");
    const auto d = static_cast<std::size_t>(detail::checked(detail::get_u64(in), detail::max_order, "order"));
    const auto count = static_cast<std::size_t>(detail::checked(detail::get_u64(in), detail::max_extent, "count"));
    Dims dims(d);
    for (auto& v : dims) v = detail::checked(detail::get_u64(in), detail::max_extent, "mode size");
    std::vector<Index> flat;
    std::vector<double> values;
    for (std::size_t s = 0; s < count; ++s) {
        for (std::size_t k = 0; k < d; ++k) flat.push_back(detail::checked(detail::get_u64(in), detail::max_extent, "index"));
        values.push_back(detail::get_f64(in));
    }
    try {
        return SparseSamples(std::move(dims), std::move(flat), std::move(values));
    } catch (const DimensionError& e) {
        throw FormatError(std::string("io: ") + e.what());
    }
}

template <typename T, typename Writer>
void save(const std::string& path, const T& value, Writer writer) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io: cannot open " + path + " for writing");
    writer(out, value);
    if (!out) throw Error("io: write to " + path + " failed");
}

template <typename Reader>
auto load(const std::string& path, Reader reader) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io: cannot open " + path);
    return reader(in);
}

inline void save_tt(const std::string& path, const TTTensor& x) { save(path, x, write_tt); }
inline TTTensor load_tt(const std::string& path) { return load(path, read_tt); }
inline void save_side_info(const std::string& path, const SideInfo& s) { save(path, s, write_side_info); }
inline SideInfo load_side_info(const std::string& path) { return load(path, read_side_info); }
inline void save_samples(const std::string& path, const SparseSamples& z) { save(path, z, write_samples); }
inline SparseSamples load_samples(const std::string& path) { return load(path, read_samples); }

} // namespace ttc::io
