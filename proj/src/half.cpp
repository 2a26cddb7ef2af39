// SPDX-License-Identifier: Apache-2.0
#include "mdreduce/half.hpp"

#include <bit>

namespace mdreduce {

Half f32_to_half(float v) {
    const std::uint32_t x = std::bit_cast<std::uint32_t>(v);
    const std::uint32_t sign = (x >> 16) & 0x8000u;
    const std::uint32_t mag = x & 0x7FFFFFFFu;

    if (mag > 0x7F800000u) {
        return Half::from_bits(kHalfQuietNan);
    }
    // >= 65520 rounds past the largest finite half (65504).
    if (mag > 0x477FEFFFu) {
        return Half::from_bits(static_cast<std::uint16_t>(sign | 0x7C00u));
    }
    // <= 2^-25: below half the smallest subnormal, ties to even -> zero.
    if (mag < 0x33000001u) {
        return Half::from_bits(static_cast<std::uint16_t>(sign));
    }

    const std::uint32_t exponent = mag >> 23;
    std::uint32_t mantissa = mag & 0x7FFFFFu;
    std::uint32_t shift;
    std::uint32_t hexp;
    if (exponent >= 0x71u) {
        // Normal half range: rebias 127 -> 15, drop 13 mantissa bits.
        shift = 13;
        hexp = exponent - 0x70u;
    } else {
        // Subnormal half: restore the hidden bit and shift it below bit 10.
        shift = 0x7Eu - exponent;
        hexp = 0;
        mantissa |= 0x800000u;
    }

    const std::uint32_t lsb = 1u << shift;
    const std::uint32_t remainder = mantissa & (lsb - 1);
    const std::uint32_t halfway = lsb >> 1;
    mantissa >>= shift;

    // Round to nearest; on exact ties round toward the even mantissa.
    if (remainder > halfway || (remainder == halfway && (mantissa & 1u))) {
        ++mantissa;
        if (mantissa & 0x400u) {
            mantissa = 0;
            ++hexp; // carry into the exponent; 31 yields infinity naturally
        }
    }
    return Half::from_bits(static_cast<std::uint16_t>(sign | (hexp << 10) | mantissa));
}

float half_to_f32(Half h) {
    const std::uint32_t bits = h.bits();
    const std::uint32_t sign = (bits & 0x8000u) << 16;
    const std::uint32_t exponent = (bits >> 10) & 0x1Fu;
    const std::uint32_t mantissa = bits & 0x3FFu;

    if (exponent == 0x1Fu) {
        if (mantissa != 0) {
            return std::bit_cast<float>(0x7FC00000u); // quiet NaN
        }
        return std::bit_cast<float>(sign | 0x7F800000u);
    }
    if (exponent == 0) {
        // Signed zero or subnormal: mantissa * 2^-24, exact in binary32.
        const float v = static_cast<float>(mantissa) * 0x1p-24f;
        return std::bit_cast<float>(sign | std::bit_cast<std::uint32_t>(v));
    }
    return std::bit_cast<float>(sign | ((exponent + 112u) << 23) | (mantissa << 13));
}

Half half_add(Half a, Half b) {
    return f32_to_half(half_to_f32(a) + half_to_f32(b));
}

} // namespace mdreduce
