// SPDX-License-Identifier: Apache-2.0
#include "mdreduce/simblock.hpp"

#include <string>

#include "mdreduce/errors.hpp"

namespace mdreduce {

BlockConfig::BlockConfig(int threads, ReduceMethod m, AccumMode a)
    : threads_per_block(threads), method(m), accum_mode(a) {
    const int lo = m == ReduceMethod::Tcu ? 64 : 32;
    if (threads < lo || threads > 1024 || threads % 32 != 0) {
        throw UnsupportedBlockSizeError(
            std::string(m == ReduceMethod::Tcu ? "tcu" : "baseline") +
            " blocks support multiples of 32 in [" + std::to_string(lo) +
            ", 1024], got " + std::to_string(threads));
    }
}

std::pair<Vec4, SyncStats> simulate_block(const BlockConfig& cfg,
                                          std::span<const Vec4> values) {
    if (values.size() != static_cast<std::size_t>(cfg.threads_per_block)) {
        throw SizeError("simulate_block got " + std::to_string(values.size()) +
                        " records for " + std::to_string(cfg.threads_per_block) +
                        " threads");
    }
    if (cfg.method == ReduceMethod::Tcu) {
        return reduce4(values, cfg.accum_mode);
    }

    SyncStats st;
    std::vector<float> dim(values.size());
    const auto reduce_dim = [&](auto proj) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            dim[i] = proj(values[i]);
        }
        auto [total, bst] = baseline_block_reduce(dim, cfg.threads_per_block);
        st += bst;
        return total;
    };
    Vec4 out;
    out.x = reduce_dim([](const Vec4& v) { return v.x; });
    out.y = reduce_dim([](const Vec4& v) { return v.y; });
    out.z = reduce_dim([](const Vec4& v) { return v.z; });
    out.e = reduce_dim([](const Vec4& v) { return v.e; });
    return {out, st};
}

std::pair<std::array<float, 7>, SyncStats> simulate_block(const BlockConfig& cfg,
                                                          std::span<const Partial7> values) {
    if (values.size() != static_cast<std::size_t>(cfg.threads_per_block)) {
        throw SizeError("simulate_block got " + std::to_string(values.size()) +
                        " records for " + std::to_string(cfg.threads_per_block) +
                        " threads");
    }
    return reduce7(values, cfg.method, cfg.accum_mode);
}

double estimate_cost(const SyncStats& stats, const CostWeights& weights) {
    return static_cast<double>(stats.block_syncs) * weights.block_sync +
           static_cast<double>(stats.atomic_adds) * weights.atomic +
           static_cast<double>(stats.warp_shuffles) * weights.shuffle +
           static_cast<double>(stats.memory_fences) * weights.fence +
           static_cast<double>(stats.mma_ops) * weights.mma;
}

std::vector<SweepRow> scaling_sweep(std::span<const int> sizes,
                                    const CostWeights& weights,
                                    AccumMode accum_mode) {
    std::vector<SweepRow> rows;
    rows.reserve(sizes.size());
    for (int n : sizes) {
        // Validate against both methods up front.
        BlockConfig(n, ReduceMethod::Tcu, accum_mode);
        BlockConfig(n, ReduceMethod::Baseline, accum_mode);

        SweepRow row;
        row.threads_per_block = n;

        const std::vector<float> zeros(static_cast<std::size_t>(n), 0.0f);
        row.baseline = baseline_block_reduce(zeros, n).second;

        const std::vector<Vec4> zvecs(static_cast<std::size_t>(n));
        row.tcu = reduce4(zvecs, accum_mode).second;

        row.cost_baseline = estimate_cost(row.baseline, weights);
        row.cost_tcu = estimate_cost(row.tcu, weights);
        if (row.cost_tcu == 0.0) {
            row.cost_ratio = 1.0;
            row.degenerate = true;
        } else {
            row.cost_ratio = row.cost_baseline / row.cost_tcu;
        }
        rows.push_back(row);
    }
    return rows;
}

} // namespace mdreduce
