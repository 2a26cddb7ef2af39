// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>

#include "mdreduce/mma.hpp"

namespace mdreduce {

enum class ReduceMethod { Baseline, Tcu };

struct Vec4 {
    float x = 0.0f;
    float y = 0.0f;
    float z = 0.0f;
    float e = 0.0f;
};

// Per-thread partial record for the seven docking reductions, in reduction
// order (E, gx, gy, gz, tx, ty, tz).
struct Partial7 {
    float e = 0.0f;
    float gx = 0.0f, gy = 0.0f, gz = 0.0f;
    float tx = 0.0f, ty = 0.0f, tz = 0.0f;
};

// Synchronization and operation counters for one emulated block. Counters
// are additive across composed operations; shared_mem_bytes aggregates
// per-operation footprints (an upper bound when buffers could be reused).
struct SyncStats {
    std::uint64_t block_syncs = 0;
    std::uint64_t warp_shuffles = 0;
    std::uint64_t atomic_adds = 0;
    std::uint64_t memory_fences = 0;
    std::uint64_t mma_ops = 0;
    std::uint64_t shared_mem_bytes = 0;
    std::uint64_t precision_conversions = 0;

    SyncStats& operator+=(const SyncStats& o) {
        block_syncs += o.block_syncs;
        warp_shuffles += o.warp_shuffles;
        atomic_adds += o.atomic_adds;
        memory_fences += o.memory_fences;
        mma_ops += o.mma_ops;
        shared_mem_bytes += o.shared_mem_bytes;
        precision_conversions += o.precision_conversions;
        return *this;
    }
    friend SyncStats operator+(SyncStats a, const SyncStats& b) { return a += b; }
    friend bool operator==(const SyncStats&, const SyncStats&) = default;
};

// All-ones 16x16 operand: right-multiplying A by it row-sums A into every
// column of the accumulator.
Mat16 make_p();

// Block pattern of 4x4 identities: element (i, j) = 1 iff i == j (mod 4).
// Left-multiplying V by it folds the four per-position partial sums so that
// rows 0..3 of the product carry the full component sums.
Mat16 make_q();

// Packs up to 64 four-component vectors into a 16x16 half tile. Vector j
// occupies column j/4, rows 4*(j%4) .. 4*(j%4)+3 in order (x, y, z, e);
// this is exactly a flat column-major copy of the vectors, mirroring the
// contiguous staging buffer a thread block would write. Unused slots are
// zero. Throws SizeError for more than 64 vectors.
Mat16 pack_vectors(std::span<const Vec4> vs);

// Sums up to 1024 (or more) vectors componentwise on the emulated tensor
// core: per 64-vector chunk V += A_chunk * P, then W = Q * V, result =
// column 0 rows 0..3 of W widened to binary32. Input is zero-padded to a
// multiple of 64. In Half accum mode V is rounded to binary16 by every mma;
// in Single mode V stays binary32 and is rounded to half once before the Q
// multiplication. Uses two block syncs and chunks+1 mma ops, no atomics and
// no fences. Throws SizeError on empty input.
std::pair<Vec4, SyncStats> reduce4(std::span<const Vec4> vs, AccumMode mode);

// Five-round shuffle-down tree over exactly 32 lanes (offsets 16, 8, 4, 2,
// 1; lane i adds lane i+offset while in range). Returns lane 0's total. All
// 32 lanes execute each round in lockstep: 160 shuffles. Throws SizeError
// unless given exactly 32 values.
std::pair<float, SyncStats> baseline_warp_reduce(std::span<const float> lanes);

// Shuffle/atomic block reduction: per-warp shuffle trees, then one atomic
// add per warp (ascending warp order) into a zero-initialized accumulator
// that every thread reads back. Three block syncs and two fences per call.
// threads must be a multiple of 32 in [32, 1024] and equal values.size().
std::pair<float, SyncStats> baseline_block_reduce(std::span<const float> values,
                                                  int threads_per_block);

// Reduces seven components per record. Baseline: seven sequential
// baseline_block_reduce calls (21 block syncs). Tcu: two reduce4 calls,
// grouped (gx, gy, gz, E) and (tx, ty, tz, 0), giving 4 block syncs and no
// atomics. Output order matches Partial7: (E, gx, gy, gz, tx, ty, tz).
// Baseline requires a multiple of 32 records in [32, 1024]; tcu requires at
// least 64 records (UnsupportedBlockSizeError otherwise).
std::pair<std::array<float, 7>, SyncStats> reduce7(std::span<const Partial7> records,
                                                   ReduceMethod method,
                                                   AccumMode accum_mode);

} // namespace mdreduce
