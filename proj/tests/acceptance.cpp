// SPDX-License-Identifier: Apache-2.0
//
// Release-gate checks. Each numbered check prints exactly one PASS/FAIL
// line; the exit status is the number of failures. Run through ctest or
// directly; no arguments.

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mdreduce/docking.hpp"
#include "mdreduce/half.hpp"
#include "mdreduce/instance_io.hpp"
#include "mdreduce/mma.hpp"
#include "mdreduce/reduce.hpp"
#include "mdreduce/rng.hpp"
#include "mdreduce/simblock.hpp"

using namespace mdreduce;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
};

LigandInstance load_bundled(const std::string& name) {
    const std::string path = std::string(MDREDUCE_DATA_DIR "/") + name;
    std::ifstream in(path);
    if (!in.good()) {
        std::fprintf(stderr, "cannot open %s\n", path.c_str());
        std::exit(99);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    LigandInstance inst = parse_instance(buf.str());
    inst.name = name;
    return inst;
}

std::string fmt(const char* f, ...) {
    char buf[256];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

float ulp_of(float v) {
    const float a = std::fabs(v);
    return std::nextafterf(a, std::numeric_limits<float>::infinity()) - a;
}

// Monotone rank of a binary16 pattern: sign-magnitude to a signed index,
// with both zeros at 0.
int half_rank(std::uint16_t bits) {
    const int mag = bits & 0x7FFF;
    return (bits & 0x8000) ? -mag : mag;
}

// 1. Sums of 0/1 components stay inside the integer range binary16
//    represents exactly, so the emulated tensor-core path must match a
//    double oracle bit for bit in both accumulator modes.
Outcome check_integer_exactness() {
    RngStream rng = derive_rng(20001, "acceptance/integers");
    const int trials = 1000;
    const std::size_t n = 1024;
    double max_err = 0.0;
    std::vector<Vec4> vs(n);
    for (int t = 0; t < trials; ++t) {
        double sx = 0.0, sy = 0.0, sz = 0.0, se = 0.0;
        for (Vec4& v : vs) {
            v.x = static_cast<float>(rng.next_index(2));
            v.y = static_cast<float>(rng.next_index(2));
            v.z = static_cast<float>(rng.next_index(2));
            v.e = static_cast<float>(rng.next_index(2));
            sx += v.x;
            sy += v.y;
            sz += v.z;
            se += v.e;
        }
        for (const AccumMode mode : {AccumMode::Half, AccumMode::Single}) {
            const auto [sum, stats] = reduce4(vs, mode);
            (void)stats;
            const double errs[] = {std::fabs(sum.x - sx), std::fabs(sum.y - sy),
                                   std::fabs(sum.z - sz), std::fabs(sum.e - se)};
            for (const double e : errs) {
                max_err = std::max(max_err, e);
            }
        }
    }
    return {max_err == 0.0,
            fmt("%d trials x %zu vectors, both accum modes, max err %g", trials, n,
                max_err)};
}

// 2. Synchronization bookkeeping: seven sequential shuffle/atomic block
//    reductions cost 21 block syncs; the two fused tensor-core reductions
//    cost 4 and touch no atomics or fences.
Outcome check_sync_counts() {
    std::vector<Partial7> records(1024, Partial7{1, 1, 1, 1, 1, 1, 1});
    const auto [bsum, bstats] = reduce7(records, ReduceMethod::Baseline, AccumMode::Single);
    const auto [tsum, tstats] = reduce7(records, ReduceMethod::Tcu, AccumMode::Half);
    (void)bsum;
    (void)tsum;
    const bool ok = bstats.block_syncs == 21 && tstats.block_syncs == 4 &&
                    tstats.atomic_adds == 0 && tstats.memory_fences == 0;
    return {ok, fmt("baseline syncs %" PRIu64 ", tcu syncs %" PRIu64
                    ", tcu atomics %" PRIu64 ", tcu fences %" PRIu64,
                    bstats.block_syncs, tstats.block_syncs, tstats.atomic_adds,
                    tstats.memory_fences)};
}

// 3. Paired-seed energy agreement on every bundled instance: half-precision
//    tensor-core runs against the shuffle/atomic baseline, 100 run pairs,
//    relative difference of mean best energies under 0.2%.
Outcome check_paired_agreement() {
    const double threshold = 0.002;
    const LgaSettings settings;
    std::string detail;
    bool ok = true;
    for (const char* name : {"s1.mdri", "s2.mdri", "s3.mdri"}) {
        const LigandInstance inst = load_bundled(name);
        const ValidationReport vr =
            validate_pair(inst, ReduceMethod::Baseline, ReduceMethod::Tcu,
                          AccumMode::Half, 100, 12345, settings);
        ok = ok && vr.relative_error < threshold;
        if (!detail.empty()) {
            detail += ", ";
        }
        detail += fmt("%s %.2e", name, vr.relative_error);
    }
    return {ok, detail + fmt(" (threshold %g)", threshold)};
}

// 4. Analytic gradient of the double-precision reference scorer against
//    central finite differences on random instances and poses.
Outcome check_gradient() {
    RngStream rng = derive_rng(7007, "acceptance/gradients");
    const double h = 1e-4;
    const double tol = 1e-4;
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const int nrot = rep % 9;
        LigandInstance inst;
        inst.n_rot = nrot;
        const int natoms = 4 + static_cast<int>(rng.next_index(8));
        const int nsites = 2 + static_cast<int>(rng.next_index(4));
        for (int i = 0; i < natoms; ++i) {
            Atom a;
            a.pos = {rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5),
                     rng.uniform(-1.5, 1.5)};
            a.weight = rng.uniform(0.5, 1.5);
            a.torsion = nrot > 0 && i % 2 == 0
                            ? static_cast<int>(rng.next_index(
                                  static_cast<std::size_t>(nrot)))
                            : -1;
            inst.atoms.push_back(a);
        }
        for (int i = 0; i < nsites; ++i) {
            Site s;
            s.pos = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                     rng.uniform(-2.0, 2.0)};
            s.depth = rng.uniform(0.8, 1.6);
            s.preferred_distance = rng.uniform(1.0, 2.0);
            inst.sites.push_back(s);
        }

        Genotype g;
        g.x = rng.uniform(-1.0, 1.0);
        g.y = rng.uniform(-1.0, 1.0);
        g.z = rng.uniform(-1.0, 1.0);
        g.phi = rng.uniform(-3.1, 3.1);
        g.theta = rng.uniform(-3.1, 3.1);
        g.alpha = rng.uniform(-3.1, 3.1);
        for (int k = 0; k < nrot; ++k) {
            g.torsions.push_back(rng.uniform(-3.1, 3.1));
        }

        const RefScore ref = score_reference(inst, g);
        for (int d = 0; d < g.dim(); ++d) {
            Genotype lo = g;
            Genotype hi = g;
            lo.set(d, g.get(d) - h);
            hi.set(d, g.get(d) + h);
            const double fd = (score_reference(inst, hi).energy -
                               score_reference(inst, lo).energy) /
                              (2.0 * h);
            const double rel = std::fabs(ref.gradient[static_cast<std::size_t>(d)] - fd) /
                               std::max(std::fabs(fd), 1.0);
            worst = std::max(worst, rel);
        }
    }
    return {worst < tol, fmt("100 instance/pose pairs, worst component error %.3e "
                             "(tolerance %g)",
                             worst, tol)};
}

// 5. The matrix unit against a double oracle on random half tiles: single
//    accumulation within 16 ulp at the scale of the accumulated magnitude,
//    half accumulation within one half-ulp of the rounded oracle.
Outcome check_mma_fidelity() {
    RngStream rng = derive_rng(300, "acceptance/mma");
    double worst_single_ulps = 0.0;
    int worst_half_rank = 0;
    for (int t = 0; t < 1000; ++t) {
        Mat16 a;
        Mat16 b;
        Accum16 c_single(AccumMode::Single);
        Accum16 c_half(AccumMode::Half);
        for (int i = 0; i < 16; ++i) {
            for (int j = 0; j < 16; ++j) {
                a.set(i, j, f32_to_half(static_cast<float>(rng.uniform(-1.0, 1.0))));
                b.set(i, j, f32_to_half(static_cast<float>(rng.uniform(-1.0, 1.0))));
                const float cs = static_cast<float>(rng.uniform(-1.0, 1.0));
                c_single.set(i, j, cs);
                c_half.set(i, j, half_to_f32(f32_to_half(cs)));
            }
        }
        const Accum16 d_single = mma(a, b, c_single);
        const Accum16 d_half = mma(a, b, c_half);
        for (int i = 0; i < 16; ++i) {
            for (int j = 0; j < 16; ++j) {
                double prod_sum = 0.0;
                double prod_mass = 0.0;
                for (int k = 0; k < 16; ++k) {
                    const double p = static_cast<double>(half_to_f32(a.at(i, k))) *
                                     static_cast<double>(half_to_f32(b.at(k, j)));
                    prod_sum += p;
                    prod_mass += std::fabs(p);
                }
                const double oracle_s = prod_sum + c_single.at(i, j);
                const double oracle_h = prod_sum + c_half.at(i, j);
                const double mass = prod_mass + std::fabs(c_single.at(i, j));

                const double err_s = std::fabs(d_single.at(i, j) - oracle_s);
                worst_single_ulps =
                    std::max(worst_single_ulps,
                             err_s / ulp_of(static_cast<float>(mass)));

                const Half got = f32_to_half(d_half.at(i, j));
                const Half want = f32_to_half(static_cast<float>(oracle_h));
                const int dist = std::abs(half_rank(got.bits()) - half_rank(want.bits()));
                worst_half_rank = std::max(worst_half_rank, dist);
            }
        }
    }
    return {worst_single_ulps <= 16.0 && worst_half_rank <= 1,
            fmt("1000 tiles: single worst %.2f ulp (limit 16), half worst %d "
                "half-ulp (limit 1)",
                worst_single_ulps, worst_half_rank)};
}

// 6. Under default cost weights the baseline/tcu cost ratio grows strictly
//    with the block size from 64 through 512.
Outcome check_cost_ordering() {
    const std::vector<int> sizes = {64, 128, 256, 512};
    const auto rows = scaling_sweep(sizes, CostWeights{}, AccumMode::Half);
    bool ok = rows.size() == sizes.size();
    std::string detail = "ratios";
    double prev = 0.0;
    for (const SweepRow& r : rows) {
        ok = ok && r.cost_ratio > prev && !r.degenerate;
        prev = r.cost_ratio;
        detail += fmt(" %d:%.3f", r.threads_per_block, r.cost_ratio);
    }
    return {ok, detail};
}

// 7. Bit-identical docking runs for identical seeds, on top of the pinned
//    random stream (same first value on every platform).
Outcome check_determinism() {
    RngStream pin = derive_rng(42, "golden");
    if (pin.next_u64() != UINT64_C(0x1521a18246366d92)) {
        return {false, "pinned random stream diverged"};
    }

    const LigandInstance inst = load_bundled("s2.mdri");
    const LgaSettings settings;
    const DockResult a = lga_run(inst, ReduceMethod::Tcu, AccumMode::Half, settings,
                                 20260816);
    const DockResult b = lga_run(inst, ReduceMethod::Tcu, AccumMode::Half, settings,
                                 20260816);

    std::uint64_t bits_a = 0;
    std::uint64_t bits_b = 0;
    std::memcpy(&bits_a, &a.best_energy, sizeof bits_a);
    std::memcpy(&bits_b, &b.best_energy, sizeof bits_b);
    const bool ok = a == b && bits_a == bits_b;
    return {ok, fmt("repeated run: energy %.9g, %" PRId64 " evaluations, %zu "
                    "search records, identical %s",
                    a.best_energy, a.evaluations, a.runs.size(), ok ? "yes" : "NO")};
}

// 8. Half conversions: every finite binary16 pattern survives the
//    widen/narrow round trip, and narrowing is monotone on sorted floats.
Outcome check_half_numerics() {
    int finite = 0;
    int bad_roundtrip = 0;
    for (std::uint32_t bits = 0; bits <= 0xFFFF; ++bits) {
        const std::uint16_t b = static_cast<std::uint16_t>(bits);
        if ((b & 0x7C00) == 0x7C00) {
            continue; // infinities and NaNs
        }
        ++finite;
        const Half h = Half::from_bits(b);
        if (f32_to_half(half_to_f32(h)).bits() != b) {
            ++bad_roundtrip;
        }
    }

    RngStream rng = derive_rng(808, "acceptance/monotone");
    std::vector<float> xs(1000000);
    for (float& x : xs) {
        x = static_cast<float>(rng.uniform(-70000.0, 70000.0));
    }
    std::sort(xs.begin(), xs.end());
    int order_breaks = 0;
    float prev = half_to_f32(f32_to_half(xs.front()));
    for (std::size_t i = 1; i < xs.size(); ++i) {
        const float cur = half_to_f32(f32_to_half(xs[i]));
        if (cur < prev) {
            ++order_breaks;
        }
        prev = cur;
    }

    return {finite == 63488 && bad_roundtrip == 0 && order_breaks == 0,
            fmt("%d finite patterns, %d round-trip failures, %d ordering breaks "
                "over 1e6 floats",
                finite, bad_roundtrip, order_breaks)};
}

} // namespace

int main() {
    struct Check {
        const char* name;
        Outcome (*run)();
    };
    const Check checks[] = {
        {"integer sums are exact", check_integer_exactness},
        {"synchronization counts", check_sync_counts},
        {"paired-run energy agreement", check_paired_agreement},
        {"analytic gradient vs finite differences", check_gradient},
        {"matrix unit vs double oracle", check_mma_fidelity},
        {"cost ratio grows with block size", check_cost_ordering},
        {"seeded runs are bit-identical", check_determinism},
        {"half round-trip and monotonicity", check_half_numerics},
    };

    int failures = 0;
    const int total = static_cast<int>(sizeof checks / sizeof checks[0]);
    for (int i = 0; i < total; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        const Outcome out = checks[i].run();
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        std::printf("%s  %d/%d %s: %s [%.1fs]\n", out.ok ? "PASS" : "FAIL", i + 1,
                    total, checks[i].name, out.detail.c_str(), secs);
        std::fflush(stdout);
        if (!out.ok) {
            ++failures;
        }
    }
    std::printf("%d/%d acceptance checks passed\n", total - failures, total);
    return failures;
}
