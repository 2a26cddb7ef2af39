// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "mdreduce/half.hpp"

namespace mdreduce {

enum class Layout { RowMajor, ColMajor };
enum class AccumMode { Half, Single };

// 16x16 binary16 operand tile. Elements are stored logically (row-major
// internally); the layout tag records how the source buffer was laid out.
class Mat16 {
public:
    static constexpr int kDim = 16;
    static constexpr std::size_t kElems = 256;

    Mat16() : layout_(Layout::RowMajor) { elems_.fill(Half()); }

    Half at(int row, int col) const { return elems_[idx(row, col)]; }
    void set(int row, int col, Half v) { elems_[idx(row, col)] = v; }
    Layout layout() const { return layout_; }
    void set_layout(Layout l) { layout_ = l; }

private:
    static std::size_t idx(int row, int col) {
        return static_cast<std::size_t>(row) * kDim + static_cast<std::size_t>(col);
    }
    std::array<Half, kElems> elems_;
    Layout layout_;
};

// 16x16 accumulator tile. Values live in binary32; in Half mode every
// element is always exactly representable in binary16 (mma rounds before
// storing, and zero() starts exact).
class Accum16 {
public:
    explicit Accum16(AccumMode mode) : mode_(mode) { vals_.fill(0.0f); }

    static Accum16 zero(AccumMode mode) { return Accum16(mode); }

    AccumMode mode() const { return mode_; }
    float at(int row, int col) const { return vals_[idx(row, col)]; }
    void set(int row, int col, float v) { vals_[idx(row, col)] = v; }

private:
    static std::size_t idx(int row, int col) {
        return static_cast<std::size_t>(row) * Mat16::kDim + static_cast<std::size_t>(col);
    }
    std::array<float, Mat16::kElems> vals_;
    AccumMode mode_;
};

// Fragment-style load of 256 scalars. Throws SizeError unless src holds
// exactly 256 elements. RowMajor: src[i*16 + j] is element (i, j);
// ColMajor: src[j*16 + i].
Mat16 load_matrix(std::span<const Half> src, Layout layout);

// Inverse of load_matrix for an accumulator tile: 256 scalars in the
// requested layout.
std::vector<float> store_matrix(const Accum16& acc, Layout layout);

// d[i,j] = sum_k widen(a[i,k]) * widen(b[k,j]) + c[i,j]. Products are exact
// in binary32 (11-bit x 11-bit significands); the sum is accumulated in
// binary32 in ascending k, c is added in binary32, and in Half mode the
// result is rounded to binary16 exactly once at the end. The output mode
// equals c's mode. No warp/register mapping is modeled.
Accum16 mma(const Mat16& a, const Mat16& b, const Accum16& c);

} // namespace mdreduce
