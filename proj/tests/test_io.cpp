#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include <ttc/io.hpp>

#include "dense_oracle.hpp"

using namespace ttc;

namespace {

std::string bytes_of_tt(const TTTensor& x) {
    std::ostringstream out(std::ios::binary);
    io::write_tt(out, x);
    return out.str();
}

TTTensor tt_from_bytes(const std::string& s) {
    std::istringstream in(s, std::ios::binary);
    return io::read_tt(in);
}

} // namespace

TEST(TTFile, RoundTripIsBitExact) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        const std::size_t d = 1 + rng.below(4);
        Dims dims(d);
        for (auto& n : dims) n = 1 + static_cast<Index>(rng.below(5));
        Ranks ranks(d + 1, 1);
        for (std::size_t k = 1; k < d; ++k) ranks[k] = 1 + static_cast<Index>(rng.below(3));
        TTTensor x = orthogonalize(tt_random(dims, ranks, seed), seed % 2 ? OrthState::left : OrthState::right);
        TTTensor y = tt_from_bytes(bytes_of_tt(x));
        EXPECT_EQ(y.dims(), x.dims());
        EXPECT_EQ(y.ranks(), x.ranks());
        EXPECT_EQ(y.orth_state(), x.orth_state());
        for (Index k = 0; k < x.order(); ++k)
            EXPECT_TRUE(std::equal(x.core(k).data(), x.core(k).data() + x.core(k).size(), y.core(k).data())) << "core " << k;
        EXPECT_EQ(bytes_of_tt(y), bytes_of_tt(x));
    }
}

TEST(TTFile, LayoutIsLittleEndian) {
    TTTensor x = tt_random({2}, {1, 1}, 1);
    const std::string s = bytes_of_tt(x);
    ASSERT_EQ(s.size(), 8u + 8 + 8 + 8 + 16 + 16);
    EXPECT_EQ(s.substr(0, 7), "TTCTTv1");
    EXPECT_EQ(static_cast<unsigned char>(s[8]), 1);  // d
    EXPECT_EQ(static_cast<unsigned char>(s[24]), 2); // N_1
}

TEST(TTFile, RejectsBadMagic) {
    std::string s = bytes_of_tt(tt_random({3, 3}, {1, 2, 1}, 2));
    s[0] = 'X';
    EXPECT_THROW(tt_from_bytes(s), FormatError);
}

TEST(TTFile, RejectsTruncation) {
    const std::string s = bytes_of_tt(tt_random({3, 3}, {1, 2, 1}, 3));
    for (std::size_t cut : {0ul, 5ul, 12ul, 40ul, s.size() - 1}) EXPECT_THROW(tt_from_bytes(s.substr(0, cut)), FormatError) << cut;
}

TEST(TTFile, RejectsInconsistentHeader) {
    std::string s = bytes_of_tt(tt_random({3, 3}, {1, 2, 1}, 4));
    s[8 + 8 + 8 + 16] = 3; // ranks[0] = 3
    EXPECT_THROW(tt_from_bytes(s), FormatError);
    std::string t = bytes_of_tt(tt_random({3, 3}, {1, 2, 1}, 4));
    t[15] = 0x7F; // absurd order
    EXPECT_THROW(tt_from_bytes(t), FormatError);
}

TEST(SideInfoFile, RoundTrip) {
    Dims n{6, 5, 7, 4};
    std::vector<Matrix> bases(4);
    bases[0] = orthonormal_basis(6, 3, 1);
    bases[2] = orthonormal_basis(7, 7, 2);
    SideInfo s(n, bases, {false, true, false, true});
    std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
    io::write_side_info(buf, s);
    SideInfo r = io::read_side_info(buf);
    EXPECT_EQ(r.large_dims(), s.large_dims());
    EXPECT_EQ(r.small_dims(), s.small_dims());
    for (Index k = 0; k < 4; ++k) {
        EXPECT_EQ(r.trivial(k), s.trivial(k));
        if (!s.trivial(k)) {
            EXPECT_EQ(r.stored_basis(k), s.stored_basis(k));
        }
    }
}

TEST(SideInfoFile, RejectsNonOrthonormalBasis) {
    SideInfo s(std::vector<Matrix>{orthonormal_basis(5, 2, 3)});
    std::ostringstream out(std::ios::binary);
    io::write_side_info(out, s);
    std::string bytes = out.str();
    bytes[bytes.size() - 2] ^= 0x10; // perturb the last coefficient
    std::istringstream in(bytes, std::ios::binary);
    EXPECT_THROW(io::read_side_info(in), FormatError);
}

TEST(SamplesFile, RoundTrip) {
    auto z = oracle::random_samples({4, 6, 5}, 37, 9);
    std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
    io::write_samples(buf, z);
    SparseSamples r = io::read_samples(buf);
    EXPECT_EQ(r.dims(), z.dims());
    EXPECT_TRUE(std::ranges::equal(r.flat_indices(), z.flat_indices()));
    EXPECT_EQ(r.values(), z.values());
}

TEST(SamplesFile, RejectsDuplicateAndOutOfRange) {
    SparseSamples z({3, 3}, {0, 1, 2, 2}, {1.0, 2.0});
    std::ostringstream out(std::ios::binary);
    io::write_samples(out, z);
    std::string bytes = out.str();
    const std::size_t first = 8 + 16 + 16;
    std::string dup = bytes;
    std::copy_n(bytes.begin() + first, 16, dup.begin() + first + 24); // second index := first index
    std::istringstream a(dup, std::ios::binary);
    EXPECT_THROW(io::read_samples(a), FormatError);
    std::string far = bytes;
    far[first] = 9;
    std::istringstream b(far, std::ios::binary);
    EXPECT_THROW(io::read_samples(b), FormatError);
}

TEST(Files, SaveAndLoad) {
    const auto dir = std::filesystem::temp_directory_path() / "ttc_io_test";
    std::filesystem::create_directories(dir);
    TTTensor x = tt_random({4, 3, 5}, {1, 2, 2, 1}, 11);
    io::save_tt((dir / "x.tt").string(), x);
    EXPECT_EQ(bytes_of_tt(io::load_tt((dir / "x.tt").string())), bytes_of_tt(x));
    EXPECT_THROW(io::load_tt((dir / "missing.tt").string()), Error);
    std::filesystem::remove_all(dir);
}
