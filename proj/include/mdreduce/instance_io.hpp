// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mdreduce {

struct Atom {
    std::array<double, 3> pos{};
    double weight = 1.0;
    int torsion = -1; // -1: rigid (no torsion group)
};

struct Site {
    std::array<double, 3> pos{};
    double depth = 1.0;
    double preferred_distance = 1.0;
};

struct LigandInstance {
    std::vector<Atom> atoms;
    std::vector<Site> sites;
    int n_rot = 0;
    std::string name; // not serialized; set by callers (e.g. file stem)
};

// Parses the MDRI 1 text format:
//
//   MDRI 1
//   # comment
//   nrot <k>
//   atom <x> <y> <z> <weight> <torsion_index|->
//   site <x> <y> <z> <depth> <d0>
//
// The magic line must come first; nrot, atom and site lines may follow in
// any order; '#' starts a comment and blank lines are skipped. Validation
// (exactly one nrot, torsion indices < nrot, at least one atom and one
// site, finite positive weights/depths/distances) reports ParseError with
// the offending line number.
LigandInstance parse_instance(std::string_view text);

// Canonical text form (magic, nrot, atoms, sites); round-trips exactly
// through parse_instance.
std::string serialize_instance(const LigandInstance& instance);

// One docking-run record in the results CSV.
struct ResultRow {
    std::uint64_t seed = 0;
    std::string method;     // "baseline" | "tcu"
    std::string accum_mode; // "half" | "single"
    std::string instance;
    double best_energy = 0.0;
    std::int64_t evaluations = 0;
    bool converged = false;
    std::uint64_t block_syncs = 0;
    std::uint64_t atomic_adds = 0;
    std::uint64_t mma_ops = 0;

    friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

// RFC-4180-style CSV with a fixed header row. Numeric fields use
// round-trippable precision; strings are quoted only when needed.
std::string write_results(std::span<const ResultRow> rows);

// Inverse of write_results; throws ParseError (with line number) on
// malformed input.
std::vector<ResultRow> parse_results(std::string_view csv);

} // namespace mdreduce
