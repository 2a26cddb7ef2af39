// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mdreduce/errors.hpp"
#include "mdreduce/half.hpp"
#include "mdreduce/mma.hpp"
#include "mdreduce/rng.hpp"

using namespace mdreduce;

namespace {

std::vector<Half> iota256() {
    std::vector<Half> v;
    v.reserve(256);
    for (int i = 0; i < 256; ++i) {
        v.push_back(f32_to_half(static_cast<float>(i)));
    }
    return v;
}

std::vector<Half> filled(float value) {
    return std::vector<Half>(256, f32_to_half(value));
}

Accum16 zero_accum(AccumMode mode) { return Accum16::zero(mode); }

// Double-precision matmul oracle over the widened operands. Alongside each
// entry it reports the accumulation mass (sum of absolute terms), the scale
// at which binary32 rounding error actually accrues when terms cancel.
struct OracleEntry {
    double value = 0.0;
    double mass = 0.0;
};

std::array<OracleEntry, 256> matmul_oracle(const Mat16& a, const Mat16& b,
                                           const Accum16& c) {
    std::array<OracleEntry, 256> out{};
    for (int i = 0; i < 16; ++i) {
        for (int j = 0; j < 16; ++j) {
            double acc = 0.0;
            double mass = 0.0;
            for (int k = 0; k < 16; ++k) {
                const double term = static_cast<double>(half_to_f32(a.at(i, k))) *
                                    static_cast<double>(half_to_f32(b.at(k, j)));
                acc += term;
                mass += std::abs(term);
            }
            out[static_cast<std::size_t>(i * 16 + j)] = {
                acc + c.at(i, j), mass + std::abs(c.at(i, j))};
        }
    }
    return out;
}

float ulp_of(float v) {
    const float a = std::abs(v);
    return std::nextafterf(a, std::numeric_limits<float>::infinity()) - a;
}

} // namespace

TEST_CASE("load_matrix layouts and size checking") {
    const auto src = iota256();
    const Mat16 row = load_matrix(src, Layout::RowMajor);
    CHECK(half_to_f32(row.at(1, 0)) == 16.0f);
    CHECK(half_to_f32(row.at(0, 1)) == 1.0f);

    const Mat16 col = load_matrix(src, Layout::ColMajor);
    CHECK(half_to_f32(col.at(1, 0)) == 1.0f);
    CHECK(half_to_f32(col.at(0, 1)) == 16.0f);

    std::vector<Half> short_src(255, f32_to_half(0.0f));
    CHECK_THROWS_AS(load_matrix(short_src, Layout::RowMajor), SizeError);
    std::vector<Half> long_src(257, f32_to_half(0.0f));
    CHECK_THROWS_AS(load_matrix(long_src, Layout::RowMajor), SizeError);
}

TEST_CASE("store_matrix inverts load_matrix") {
    const auto src = iota256();
    for (const Layout layout : {Layout::RowMajor, Layout::ColMajor}) {
        const Mat16 m = load_matrix(src, layout);
        Accum16 acc(AccumMode::Single);
        for (int i = 0; i < 16; ++i) {
            for (int j = 0; j < 16; ++j) {
                acc.set(i, j, half_to_f32(m.at(i, j)));
            }
        }
        const auto back = store_matrix(acc, layout);
        for (int i = 0; i < 256; ++i) {
            REQUIRE(back[static_cast<std::size_t>(i)] == static_cast<float>(i));
        }
    }

    // Cross-layout store is the transpose permutation.
    const Mat16 m = load_matrix(src, Layout::ColMajor);
    Accum16 acc(AccumMode::Single);
    for (int i = 0; i < 16; ++i) {
        for (int j = 0; j < 16; ++j) {
            acc.set(i, j, half_to_f32(m.at(i, j)));
        }
    }
    const auto out = store_matrix(acc, Layout::RowMajor);
    for (int i = 0; i < 16; ++i) {
        for (int j = 0; j < 16; ++j) {
            REQUIRE(out[static_cast<std::size_t>(i * 16 + j)] ==
                    static_cast<float>(j * 16 + i));
        }
    }

    for (const float v : store_matrix(Accum16::zero(AccumMode::Half), Layout::RowMajor)) {
        REQUIRE(v == 0.0f);
    }
}

TEST_CASE("mma identity and ones") {
    std::vector<Half> ident(256, f32_to_half(0.0f));
    for (int i = 0; i < 16; ++i) {
        ident[static_cast<std::size_t>(i * 16 + i)] = f32_to_half(1.0f);
    }
    const Mat16 a = load_matrix(ident, Layout::RowMajor);

    RngStream rng = derive_rng(3001, "mma-ident");
    std::vector<Half> bsrc;
    bsrc.reserve(256);
    for (int i = 0; i < 256; ++i) {
        bsrc.push_back(f32_to_half(static_cast<float>(rng.uniform(-4.0, 4.0))));
    }
    const Mat16 b = load_matrix(bsrc, Layout::RowMajor);

    for (const AccumMode mode : {AccumMode::Single, AccumMode::Half}) {
        const Accum16 out = mma(a, b, zero_accum(mode));
        for (int i = 0; i < 16; ++i) {
            for (int j = 0; j < 16; ++j) {
                REQUIRE(out.at(i, j) == half_to_f32(b.at(i, j)));
            }
        }
    }

    const Mat16 ones = load_matrix(filled(1.0f), Layout::RowMajor);
    const Accum16 out = mma(ones, ones, zero_accum(AccumMode::Half));
    for (int i = 0; i < 16; ++i) {
        for (int j = 0; j < 16; ++j) {
            REQUIRE(out.at(i, j) == 16.0f);
        }
    }
}

TEST_CASE("mma diag(2) squared plus ones") {
    std::vector<Half> dsrc(256, f32_to_half(0.0f));
    for (int i = 0; i < 16; ++i) {
        dsrc[static_cast<std::size_t>(i * 16 + i)] = f32_to_half(2.0f);
    }
    const Mat16 d = load_matrix(dsrc, Layout::RowMajor);
    Accum16 c(AccumMode::Single);
    for (int i = 0; i < 16; ++i) {
        for (int j = 0; j < 16; ++j) {
            c.set(i, j, 1.0f);
        }
    }
    const Accum16 out = mma(d, d, c);
    for (int i = 0; i < 16; ++i) {
        for (int j = 0; j < 16; ++j) {
            REQUIRE(out.at(i, j) == (i == j ? 5.0f : 1.0f));
        }
    }
    CHECK(out.mode() == AccumMode::Single);
}

TEST_CASE("single mode tracks the double oracle within 16 ulp") {
    RngStream rng = derive_rng(3002, "mma-oracle");
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Half> asrc, bsrc;
        asrc.reserve(256);
        bsrc.reserve(256);
        for (int i = 0; i < 256; ++i) {
            asrc.push_back(f32_to_half(static_cast<float>(rng.uniform(-1.0, 1.0))));
            bsrc.push_back(f32_to_half(static_cast<float>(rng.uniform(-1.0, 1.0))));
        }
        const Mat16 a = load_matrix(asrc, Layout::RowMajor);
        const Mat16 b = load_matrix(bsrc, Layout::RowMajor);
        Accum16 c(AccumMode::Single);
        for (int i = 0; i < 16; ++i) {
            for (int j = 0; j < 16; ++j) {
                c.set(i, j, static_cast<float>(rng.uniform(-1.0, 1.0)));
            }
        }
        const Accum16 out = mma(a, b, c);
        const auto oracle = matmul_oracle(a, b, c);
        for (int i = 0; i < 16; ++i) {
            for (int j = 0; j < 16; ++j) {
                const auto& [want, mass] = oracle[static_cast<std::size_t>(i * 16 + j)];
                const double err = std::abs(out.at(i, j) - want);
                REQUIRE(err <= 16.0 * ulp_of(static_cast<float>(mass)));
            }
        }
    }
}

TEST_CASE("half mode is one final rounding of the binary32 result") {
    RngStream rng = derive_rng(3003, "mma-halfmode");
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Half> asrc, bsrc;
        for (int i = 0; i < 256; ++i) {
            asrc.push_back(f32_to_half(static_cast<float>(rng.uniform(-1.0, 1.0))));
            bsrc.push_back(f32_to_half(static_cast<float>(rng.uniform(-1.0, 1.0))));
        }
        const Mat16 a = load_matrix(asrc, Layout::RowMajor);
        const Mat16 b = load_matrix(bsrc, Layout::RowMajor);
        Accum16 ch(AccumMode::Half);
        Accum16 cs(AccumMode::Single);
        for (int i = 0; i < 16; ++i) {
            for (int j = 0; j < 16; ++j) {
                const float v =
                    half_to_f32(f32_to_half(static_cast<float>(rng.uniform(-1.0, 1.0))));
                ch.set(i, j, v);
                cs.set(i, j, v);
            }
        }
        const Accum16 out_h = mma(a, b, ch);
        const Accum16 out_s = mma(a, b, cs);
        for (int i = 0; i < 16; ++i) {
            for (int j = 0; j < 16; ++j) {
                const float want = half_to_f32(f32_to_half(out_s.at(i, j)));
                REQUIRE(out_h.at(i, j) == want);
            }
        }
        CHECK(out_h.mode() == AccumMode::Half);
    }
}

TEST_CASE("integer dot products within 2048 are exact in half mode") {
    RngStream rng = derive_rng(3004, "mma-int");
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Half> asrc, bsrc;
        for (int i = 0; i < 256; ++i) {
            // Entries in {-8, ..., 8}: |dot| <= 16 * 64 = 1024 < 2048.
            asrc.push_back(
                f32_to_half(static_cast<float>(rng.next_index(17)) - 8.0f));
            bsrc.push_back(
                f32_to_half(static_cast<float>(rng.next_index(17)) - 8.0f));
        }
        const Mat16 a = load_matrix(asrc, Layout::RowMajor);
        const Mat16 b = load_matrix(bsrc, Layout::RowMajor);
        const Accum16 out = mma(a, b, zero_accum(AccumMode::Half));
        const auto oracle = matmul_oracle(a, b, zero_accum(AccumMode::Half));
        for (int i = 0; i < 16; ++i) {
            for (int j = 0; j < 16; ++j) {
                REQUIRE(out.at(i, j) == oracle[static_cast<std::size_t>(i * 16 + j)].value);
            }
        }
    }
}
