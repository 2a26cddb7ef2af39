// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "mdreduce/reduce.hpp"

namespace mdreduce {

// Shape and method of one emulated thread block. Construction validates the
// range: both methods need a multiple of 32; baseline supports [32, 1024],
// tcu [64, 1024] (one full tile up to the CUDA block limit).
struct BlockConfig {
    BlockConfig(int threads, ReduceMethod m, AccumMode a);

    int threads_per_block;
    ReduceMethod method;
    AccumMode accum_mode;
};

// Abstract cost units per counted event. Defaults order the events by how
// expensive they are on real hardware; they are not calibrated to any
// particular device.
struct CostWeights {
    double block_sync = 10.0;
    double atomic = 4.0;
    double shuffle = 1.0;
    double fence = 4.0;
    double mma = 8.0;
};

// One four-component record per simulated thread, reduced with the
// configured method: tcu runs a single reduce4; baseline runs four
// sequential block reductions, one per component. values.size() must equal
// threads_per_block.
std::pair<Vec4, SyncStats> simulate_block(const BlockConfig& cfg,
                                          std::span<const Vec4> values);

// Seven components per thread via reduce7.
std::pair<std::array<float, 7>, SyncStats> simulate_block(const BlockConfig& cfg,
                                                          std::span<const Partial7> values);

double estimate_cost(const SyncStats& stats, const CostWeights& weights);

struct SweepRow {
    int threads_per_block = 0;
    SyncStats baseline;
    SyncStats tcu;
    double cost_baseline = 0.0;
    double cost_tcu = 0.0;
    double cost_ratio = 0.0; // baseline / tcu
    bool degenerate = false; // tcu cost was zero; ratio reported as 1.0
};

// Per block size, the counter profile of one baseline_block_reduce call
// against one tcu reduce4 over the same thread count, with costs under the
// given weights. Sizes must be valid for both methods.
std::vector<SweepRow> scaling_sweep(std::span<const int> sizes,
                                    const CostWeights& weights,
                                    AccumMode accum_mode = AccumMode::Half);

inline constexpr std::array<int, 5> kDefaultSweepSizes = {64, 128, 256, 512, 1024};

} // namespace mdreduce
