// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mdreduce/instance_io.hpp"
#include "mdreduce/reduce.hpp"
#include "mdreduce/rng.hpp"

namespace mdreduce {

// Pose: rigid translation (x, y, z), z-y-z Euler rotation (phi, theta,
// alpha), and one torsion angle per rotatable group. Angles are kept
// normalized to [-pi, pi).
struct Genotype {
    double x = 0.0, y = 0.0, z = 0.0;
    double phi = 0.0, theta = 0.0, alpha = 0.0;
    std::vector<double> torsions;

    int dim() const { return 6 + static_cast<int>(torsions.size()); }
    double get(int i) const;
    void set(int i, double v);
    void normalize_angles();

    friend bool operator==(const Genotype&, const Genotype&) = default;
};

// Deterministic unit axis of torsion group k (golden-angle sequence, fixed
// convention shared by pose construction and gradient projection). Torsion
// k rotates only its atom group about this axis through the ligand-local
// origin, before the Euler rotation is applied.
std::array<double, 3> torsion_axis(int k);

// Energy/gradient of one pose with the reduction running through the
// chosen method, all in binary32 like the device code it models. Per-atom
// partials (E, gradient, torque about the translation point) are
// accumulated round-robin onto `partition` simulated threads and combined
// with one reduce7 call; rotational and torsional gradient entries are then
// projections of the reduced torque onto the respective world axes. For
// torsions this projection uses the total torque (the per-group term is not
// separately reduced), a bias shared identically by both methods.
struct ScoreResult {
    float energy = 0.0f;
    std::vector<float> gradient; // x, y, z, phi, theta, alpha, torsions...
    std::array<float, 3> torque{};
    SyncStats reduce_stats;
};

ScoreResult score(const LigandInstance& instance, const Genotype& g,
                  ReduceMethod method, AccumMode accum_mode, int partition);

// Non-reduced double-precision reference: exact analytic gradient,
// including exact per-group torsion torques. This is the oracle the
// finite-difference tests target.
struct RefScore {
    double energy = 0.0;
    std::vector<double> gradient;
    std::array<double, 3> torque{};
};

RefScore score_reference(const LigandInstance& instance, const Genotype& g);

// ADADELTA accumulator state (Zeiler form), one slot per genotype
// dimension.
struct AdadeltaState {
    std::vector<double> avg_sq_grad;
    std::vector<double> avg_sq_update;
    double rho = 0.95;
    double epsilon = 1e-6;

    static AdadeltaState fresh(int dim, double rho = 0.95, double epsilon = 1e-6);
};

// One ADADELTA update:
//   avg_sq_grad   <- rho * avg_sq_grad + (1 - rho) * grad^2
//   delta          = -sqrt(avg_sq_update + eps) / sqrt(avg_sq_grad + eps) * grad
//   avg_sq_update <- rho * avg_sq_update + (1 - rho) * delta^2
// and the genotype moves by delta with angles renormalized. Throws
// NumericDomainError on a non-finite gradient component.
std::pair<AdadeltaState, Genotype> adadelta_step(const AdadeltaState& state,
                                                 const Genotype& g,
                                                 const std::vector<double>& grad);

struct LocalSearchResult {
    Genotype genotype;
    double energy = 0.0;
    int iterations = 0;
    bool converged = false;
    SyncStats stats; // accumulated over all score calls (iterations + 1)

    friend bool operator==(const LocalSearchResult&, const LocalSearchResult&) = default;
};

// ADADELTA descent from `start`. Stops once the running-best energy has
// improved by less than convergence_tol over a 16-iteration window, or at
// max_iters (converged = false). The descent itself is deterministic; the
// rng_seed parameter is part of the interface but feeds no draws. Score
// evaluations performed = iterations + 1.
LocalSearchResult local_search(const LigandInstance& instance, const Genotype& start,
                               int max_iters, double convergence_tol,
                               ReduceMethod method, AccumMode accum_mode, int partition,
                               std::uint64_t rng_seed);

struct LgaSettings {
    int population_size = 36;
    int generations = 20;
    std::int64_t max_evaluations = 100000;
    double ls_fraction = 0.25;   // share of offspring refined per generation
    int ls_max_iters = 150;
    double ls_convergence_tol = 1e-4;
    double mutation_sigma = 0.3;
    int partition = 64; // simulated threads per scoring block
};

struct LsRunRecord {
    double best_energy = 0.0;
    int iterations = 0;
    bool converged = false;

    friend bool operator==(const LsRunRecord&, const LsRunRecord&) = default;
};

struct DockResult {
    double best_energy = 0.0;
    Genotype best_genotype;
    std::int64_t evaluations = 0;
    bool converged = false; // final polishing search converged
    std::vector<LsRunRecord> runs;
    SyncStats total_stats;

    friend bool operator==(const DockResult&, const DockResult&) = default;
};

// Lamarckian GA: seeded random population, binary tournament selection,
// per-dimension arithmetic crossover, Gaussian mutation, elitism of one,
// local search on the top ls_fraction of each offspring batch with the
// refined genotype written back, and a final polishing search from the
// incumbent best (so best_energy always equals the minimum over recorded
// run bests). All randomness comes from derive_rng(seed, "lga"); the draw
// count per generation is method-independent, so paired seeds consume
// identical random sequences under either reduction method.
DockResult lga_run(const LigandInstance& instance, ReduceMethod method,
                   AccumMode accum_mode, const LgaSettings& settings,
                   std::uint64_t seed);

struct MethodSummary {
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
    double mean = 0.0;
    double nonconvergent_fraction = 0.0;
};

struct ValidationReport {
    MethodSummary ref;  // first method (reference)
    MethodSummary test; // second method
    double abs_diff_means = 0.0; // |mean(test) - mean(ref)|
    double relative_error = 0.0; // abs_diff_means / |mean(ref)|
    int n_runs = 0;
};

// Paired-seed comparison: n_runs docking runs per method where run i uses
// seed base_seed + i under both methods, then summary statistics of the
// best-energy distributions. accum_mode applies to the tcu side; baseline
// reductions are binary32 by construction.
ValidationReport validate_pair(const LigandInstance& instance,
                               ReduceMethod ref_method, ReduceMethod test_method,
                               AccumMode accum_mode, int n_runs,
                               std::uint64_t base_seed, const LgaSettings& settings);

} // namespace mdreduce
