// SPDX-License-Identifier: Apache-2.0
#include "mdreduce/mma.hpp"

#include <string>

#include "mdreduce/errors.hpp"

namespace mdreduce {

Mat16 load_matrix(std::span<const Half> src, Layout layout) {
    if (src.size() != Mat16::kElems) {
        throw SizeError("load_matrix expects 256 elements, got " +
                        std::to_string(src.size()));
    }
    Mat16 m;
    m.set_layout(layout);
    for (int i = 0; i < Mat16::kDim; ++i) {
        for (int j = 0; j < Mat16::kDim; ++j) {
            const std::size_t flat = layout == Layout::RowMajor
                                         ? static_cast<std::size_t>(i) * 16 + j
                                         : static_cast<std::size_t>(j) * 16 + i;
            m.set(i, j, src[flat]);
        }
    }
    return m;
}

std::vector<float> store_matrix(const Accum16& acc, Layout layout) {
    std::vector<float> out(Mat16::kElems);
    for (int i = 0; i < Mat16::kDim; ++i) {
        for (int j = 0; j < Mat16::kDim; ++j) {
            const std::size_t flat = layout == Layout::RowMajor
                                         ? static_cast<std::size_t>(i) * 16 + j
                                         : static_cast<std::size_t>(j) * 16 + i;
            out[flat] = acc.at(i, j);
        }
    }
    return out;
}

Accum16 mma(const Mat16& a, const Mat16& b, const Accum16& c) {
    // Widen once up front; the k-loop then runs in pure binary32.
    float aw[16][16];
    float bw[16][16];
    for (int i = 0; i < 16; ++i) {
        for (int j = 0; j < 16; ++j) {
            aw[i][j] = half_to_f32(a.at(i, j));
            bw[i][j] = half_to_f32(b.at(i, j));
        }
    }

    Accum16 out(c.mode());
    for (int i = 0; i < 16; ++i) {
        for (int j = 0; j < 16; ++j) {
            float acc = 0.0f;
            for (int k = 0; k < 16; ++k) {
                acc += aw[i][k] * bw[k][j];
            }
            const float r = acc + c.at(i, j);
            out.set(i, j, c.mode() == AccumMode::Half ? half_to_f32(f32_to_half(r)) : r);
        }
    }
    return out;
}

} // namespace mdreduce
