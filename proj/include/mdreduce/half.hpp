// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace mdreduce {

// IEEE-754 binary16 value held as its raw bit pattern: 1 sign, 5 exponent,
// 10 mantissa bits. All arithmetic goes through explicit conversions; there
// is deliberately no implicit float interop.
class Half {
public:
    constexpr Half() : bits_(0) {}

    static constexpr Half from_bits(std::uint16_t b) {
        Half h;
        h.bits_ = b;
        return h;
    }

    constexpr std::uint16_t bits() const { return bits_; }

    friend constexpr bool operator==(Half a, Half b) { return a.bits_ == b.bits_; }
    friend constexpr bool operator!=(Half a, Half b) { return a.bits_ != b.bits_; }

private:
    std::uint16_t bits_;
};

// Round-to-nearest-even conversion. Subnormals are preserved, values beyond
// +-65504 overflow to +-infinity, NaNs collapse to the canonical quiet NaN
// 0x7E00. Never saturates.
Half f32_to_half(float v);

// Exact widening; every binary16 value is representable in binary32.
float half_to_f32(Half h);

// Widen both operands, add in binary32, round once back to binary16.
Half half_add(Half a, Half b);

inline constexpr std::uint16_t kHalfPosInf = 0x7C00;
inline constexpr std::uint16_t kHalfNegInf = 0xFC00;
inline constexpr std::uint16_t kHalfQuietNan = 0x7E00;

inline bool half_is_finite(Half h) { return (h.bits() & 0x7C00) != 0x7C00; }
inline bool half_is_nan(Half h) {
    return (h.bits() & 0x7C00) == 0x7C00 && (h.bits() & 0x03FF) != 0;
}

} // namespace mdreduce
