// SPDX-License-Identifier: Apache-2.0
#include "mdreduce/reduce.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "mdreduce/errors.hpp"

namespace mdreduce {

Mat16 make_p() {
    Mat16 p;
    const Half one = f32_to_half(1.0f);
    for (int i = 0; i < 16; ++i) {
        for (int j = 0; j < 16; ++j) {
            p.set(i, j, one);
        }
    }
    return p;
}

Mat16 make_q() {
    Mat16 q;
    const Half one = f32_to_half(1.0f);
    for (int i = 0; i < 16; ++i) {
        for (int j = 0; j < 16; ++j) {
            if ((i & 3) == (j & 3)) {
                q.set(i, j, one);
            }
        }
    }
    return q;
}

Mat16 pack_vectors(std::span<const Vec4> vs) {
    if (vs.empty() || vs.size() > 64) {
        throw SizeError("pack_vectors expects 1 to 64 vectors, got " +
                        std::to_string(vs.size()));
    }
    // Flat column-major staging: vector j lands at offsets 4j..4j+3, which
    // puts it in column j/4, rows 4*(j%4)..+3.
    std::array<Half, Mat16::kElems> flat{};
    for (std::size_t j = 0; j < vs.size(); ++j) {
        flat[4 * j + 0] = f32_to_half(vs[j].x);
        flat[4 * j + 1] = f32_to_half(vs[j].y);
        flat[4 * j + 2] = f32_to_half(vs[j].z);
        flat[4 * j + 3] = f32_to_half(vs[j].e);
    }
    return load_matrix(flat, Layout::ColMajor);
}

namespace {

// Re-wrap the accumulator as an operand tile. In Half mode every element is
// already binary16-exact so this is a lossless repack; in Single mode this
// is the one rounding of V before the Q multiplication.
Mat16 accum_to_operand(const Accum16& v) {
    Mat16 m;
    for (int i = 0; i < 16; ++i) {
        for (int j = 0; j < 16; ++j) {
            m.set(i, j, f32_to_half(v.at(i, j)));
        }
    }
    return m;
}

const Mat16& cached_p() {
    static const Mat16 p = make_p();
    return p;
}

const Mat16& cached_q() {
    static const Mat16 q = make_q();
    return q;
}

} // namespace

std::pair<Vec4, SyncStats> reduce4(std::span<const Vec4> vs, AccumMode mode) {
    if (vs.empty()) {
        throw SizeError("reduce4 requires at least one vector");
    }
    const std::size_t chunks = (vs.size() + 63) / 64;

    SyncStats st;
    st.block_syncs = 2; // one after staging, one after the last mma
    st.shared_mem_bytes = chunks * 64 * 4 * sizeof(std::uint16_t);
    st.precision_conversions = 4 * vs.size();

    Accum16 v = Accum16::zero(mode);
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t lo = c * 64;
        const std::size_t n = std::min<std::size_t>(64, vs.size() - lo);
        const Mat16 a = pack_vectors(vs.subspan(lo, n));
        v = mma(a, cached_p(), v);
        ++st.mma_ops;
    }

    if (mode == AccumMode::Single) {
        st.precision_conversions += Mat16::kElems; // V rounded to half once
    }
    const Mat16 vop = accum_to_operand(v);
    const Accum16 w = mma(cached_q(), vop, Accum16::zero(mode));
    ++st.mma_ops;
    if (mode == AccumMode::Half) {
        st.precision_conversions += 4; // widening the four result slots
    }

    return {Vec4{w.at(0, 0), w.at(1, 0), w.at(2, 0), w.at(3, 0)}, st};
}

std::pair<float, SyncStats> baseline_warp_reduce(std::span<const float> lanes) {
    if (lanes.size() != 32) {
        throw SizeError("baseline_warp_reduce expects exactly 32 lanes, got " +
                        std::to_string(lanes.size()));
    }
    float v[32];
    for (int i = 0; i < 32; ++i) {
        v[i] = lanes[i];
    }
    SyncStats st;
    for (int offset = 16; offset >= 1; offset >>= 1) {
        float next[32];
        for (int i = 0; i < 32; ++i) {
            next[i] = i + offset < 32 ? v[i] + v[i + offset] : v[i];
        }
        for (int i = 0; i < 32; ++i) {
            v[i] = next[i];
        }
        st.warp_shuffles += 32; // all lanes shuffle in lockstep
    }
    return {v[0], st};
}

std::pair<float, SyncStats> baseline_block_reduce(std::span<const float> values,
                                                  int threads_per_block) {
    if (threads_per_block < 32 || threads_per_block > 1024 ||
        threads_per_block % 32 != 0) {
        throw UnsupportedBlockSizeError(
            "baseline_block_reduce supports multiples of 32 in [32, 1024], got " +
            std::to_string(threads_per_block));
    }
    if (values.size() != static_cast<std::size_t>(threads_per_block)) {
        throw SizeError("baseline_block_reduce got " + std::to_string(values.size()) +
                        " values for " + std::to_string(threads_per_block) + " threads");
    }

    SyncStats st;
    st.block_syncs = 3;   // after zeroing, after the atomics, after broadcast
    st.memory_fences = 2; // accumulator visibility around the atomic phase
    st.shared_mem_bytes = sizeof(float);

    float acc = 0.0f;
    const int warps = threads_per_block / 32;
    for (int w = 0; w < warps; ++w) {
        auto [total, wst] = baseline_warp_reduce(values.subspan(32 * w, 32));
        st += wst;
        acc += total; // ascending warp order keeps the atomics deterministic
        ++st.atomic_adds;
    }
    return {acc, st};
}

std::pair<std::array<float, 7>, SyncStats> reduce7(std::span<const Partial7> records,
                                                   ReduceMethod method,
                                                   AccumMode accum_mode) {
    std::array<float, 7> out{};
    SyncStats st;

    if (method == ReduceMethod::Baseline) {
        const int n = static_cast<int>(records.size());
        std::vector<float> dim(records.size());
        const auto reduce_dim = [&](auto proj) {
            for (std::size_t i = 0; i < records.size(); ++i) {
                dim[i] = proj(records[i]);
            }
            auto [total, bst] = baseline_block_reduce(dim, n);
            st += bst;
            return total;
        };
        out[0] = reduce_dim([](const Partial7& p) { return p.e; });
        out[1] = reduce_dim([](const Partial7& p) { return p.gx; });
        out[2] = reduce_dim([](const Partial7& p) { return p.gy; });
        out[3] = reduce_dim([](const Partial7& p) { return p.gz; });
        out[4] = reduce_dim([](const Partial7& p) { return p.tx; });
        out[5] = reduce_dim([](const Partial7& p) { return p.ty; });
        out[6] = reduce_dim([](const Partial7& p) { return p.tz; });
        return {out, st};
    }

    if (records.size() < 64) {
        throw UnsupportedBlockSizeError(
            "tcu reduce7 needs at least 64 records (a full 16x16 tile), got " +
            std::to_string(records.size()));
    }
    std::vector<Vec4> grad(records.size());
    std::vector<Vec4> torque(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        grad[i] = Vec4{records[i].gx, records[i].gy, records[i].gz, records[i].e};
        torque[i] = Vec4{records[i].tx, records[i].ty, records[i].tz, 0.0f};
    }
    auto [g, gst] = reduce4(grad, accum_mode);
    auto [t, tst] = reduce4(torque, accum_mode);
    st += gst;
    st += tst;
    out = {g.e, g.x, g.y, g.z, t.x, t.y, t.z};
    return {out, st};
}

} // namespace mdreduce
