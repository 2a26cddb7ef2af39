// SPDX-License-Identifier: Apache-2.0
#include "mdreduce/docking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "mdreduce/errors.hpp"
#include "mdreduce/simblock.hpp"

namespace mdreduce {

namespace {

using Vec3 = std::array<double, 3>;

Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

using Mat3 = std::array<Vec3, 3>; // rows

Vec3 mat_vec(const Mat3& m, const Vec3& v) {
    return {dot(m[0], v), dot(m[1], v), dot(m[2], v)};
}

Mat3 matmul(const Mat3& a, const Mat3& b) {
    Mat3 r{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    return r;
}

Mat3 rot_z(double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {Vec3{c, -s, 0.0}, Vec3{s, c, 0.0}, Vec3{0.0, 0.0, 1.0}};
}

Mat3 rot_y(double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {Vec3{c, 0.0, s}, Vec3{0.0, 1.0, 0.0}, Vec3{-s, 0.0, c}};
}

// Rodrigues rotation of v about unit axis by angle.
Vec3 rotate_axis(const Vec3& axis, double angle, const Vec3& v) {
    const double c = std::cos(angle), s = std::sin(angle);
    return c * v + s * cross(axis, v) + ((1.0 - c) * dot(axis, v)) * axis;
}

double wrap_angle(double a) {
    return a - 2.0 * std::numbers::pi * std::floor((a + std::numbers::pi) / (2.0 * std::numbers::pi));
}

struct AtomPartial {
    double energy = 0.0;
    Vec3 grad{};   // dE/dr for this atom
    Vec3 torque{}; // (r - t) x grad
};

struct PoseFrame {
    Mat3 rotation;                 // z-y-z Euler matrix
    Vec3 axis_phi, axis_theta, axis_alpha; // instantaneous Euler axes (world)
    std::vector<Vec3> torsion_axes_world;
};

PoseFrame build_frame(const LigandInstance& instance, const Genotype& g) {
    PoseFrame f;
    const Mat3 rz_phi = rot_z(g.phi);
    const Mat3 ry_theta = rot_y(g.theta);
    f.rotation = matmul(matmul(rz_phi, ry_theta), rot_z(g.alpha));
    f.axis_phi = {0.0, 0.0, 1.0};
    f.axis_theta = mat_vec(rz_phi, Vec3{0.0, 1.0, 0.0});
    f.axis_alpha = mat_vec(matmul(rz_phi, ry_theta), Vec3{0.0, 0.0, 1.0});
    f.torsion_axes_world.resize(static_cast<std::size_t>(instance.n_rot));
    for (int k = 0; k < instance.n_rot; ++k) {
        f.torsion_axes_world[k] = mat_vec(f.rotation, torsion_axis(k));
    }
    return f;
}

// Per-atom energy/gradient/torque partials plus the shared pose frame. Both
// scoring paths start here so they differ only downstream of the partials.
std::vector<AtomPartial> evaluate_atoms(const LigandInstance& instance, const Genotype& g,
                                        const PoseFrame& frame) {
    const Vec3 t{g.x, g.y, g.z};
    std::vector<AtomPartial> out(instance.atoms.size());
    for (std::size_t i = 0; i < instance.atoms.size(); ++i) {
        const Atom& atom = instance.atoms[i];
        Vec3 local = atom.pos;
        if (atom.torsion >= 0) {
            local = rotate_axis(torsion_axis(atom.torsion),
                                g.torsions[static_cast<std::size_t>(atom.torsion)], local);
        }
        const Vec3 world = t + mat_vec(frame.rotation, local);

        AtomPartial p;
        for (const Site& s : instance.sites) {
            // Soft-core well: rho^2 = (d0^2 + c^2) / (d^2 + c^2) with
            // c = 0.75 d0, so the minimum sits exactly at d = d0 and the
            // energy stays bounded as d -> 0.
            const Vec3 delta = world - s.pos;
            const double c2 = 0.5625 * s.preferred_distance * s.preferred_distance;
            const double u = dot(delta, delta) + c2;
            const double rho2 = (s.preferred_distance * s.preferred_distance + c2) / u;
            const double rho6 = rho2 * rho2 * rho2;
            const double rho12 = rho6 * rho6;
            const double we = atom.weight * s.depth;
            p.energy += we * (rho12 - 2.0 * rho6);
            const double scale = -12.0 * we * (rho12 - rho6) / u;
            p.grad = p.grad + scale * delta;
        }
        p.torque = cross(world - t, p.grad);
        out[i] = p;
    }
    return out;
}

float dot3f(const std::array<float, 3>& a, const std::array<float, 3>& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

std::array<float, 3> to_f32(const Vec3& v) {
    return {static_cast<float>(v[0]), static_cast<float>(v[1]), static_cast<float>(v[2])};
}

void check_genotype(const LigandInstance& instance, const Genotype& g, const char* where) {
    if (static_cast<int>(g.torsions.size()) != instance.n_rot) {
        throw SizeError(std::string(where) + ": genotype has " +
                        std::to_string(g.torsions.size()) + " torsions, instance needs " +
                        std::to_string(instance.n_rot));
    }
}

} // namespace

double Genotype::get(int i) const {
    switch (i) {
        case 0: return x;
        case 1: return y;
        case 2: return z;
        case 3: return phi;
        case 4: return theta;
        case 5: return alpha;
        default: return torsions[static_cast<std::size_t>(i - 6)];
    }
}

void Genotype::set(int i, double v) {
    switch (i) {
        case 0: x = v; return;
        case 1: y = v; return;
        case 2: z = v; return;
        case 3: phi = v; return;
        case 4: theta = v; return;
        case 5: alpha = v; return;
        default: torsions[static_cast<std::size_t>(i - 6)] = v; return;
    }
}

void Genotype::normalize_angles() {
    phi = wrap_angle(phi);
    theta = wrap_angle(theta);
    alpha = wrap_angle(alpha);
    for (double& t : torsions) {
        t = wrap_angle(t);
    }
}

std::array<double, 3> torsion_axis(int k) {
    // Golden-angle azimuth with a slow polar wobble; never degenerate.
    constexpr double kGolden = 2.399963229728653;
    const double az = kGolden * k + 0.3;
    const double zc = 0.5 + 0.35 * std::sin(0.9 * k + 0.4);
    const Vec3 v{0.8 * std::cos(az), 0.8 * std::sin(az), zc};
    const double n = std::sqrt(dot(v, v));
    return {v[0] / n, v[1] / n, v[2] / n};
}

ScoreResult score(const LigandInstance& instance, const Genotype& g,
                  ReduceMethod method, AccumMode accum_mode, int partition) {
    check_genotype(instance, g, "score");
    const BlockConfig cfg(partition, method, accum_mode); // validates partition

    const PoseFrame frame = build_frame(instance, g);
    const std::vector<AtomPartial> partials = evaluate_atoms(instance, g, frame);

    // Round-robin the per-atom partials onto the simulated threads and
    // accumulate per thread in binary32, as the device code would in
    // registers.
    std::vector<Partial7> threads(static_cast<std::size_t>(partition));
    for (std::size_t i = 0; i < partials.size(); ++i) {
        Partial7& slot = threads[i % threads.size()];
        const AtomPartial& p = partials[i];
        slot.e += static_cast<float>(p.energy);
        slot.gx += static_cast<float>(p.grad[0]);
        slot.gy += static_cast<float>(p.grad[1]);
        slot.gz += static_cast<float>(p.grad[2]);
        slot.tx += static_cast<float>(p.torque[0]);
        slot.ty += static_cast<float>(p.torque[1]);
        slot.tz += static_cast<float>(p.torque[2]);
    }

    auto [sums, stats] = reduce7(threads, method, accum_mode);

    ScoreResult r;
    r.energy = sums[0];
    r.torque = {sums[4], sums[5], sums[6]};
    r.reduce_stats = stats;
    r.gradient.resize(static_cast<std::size_t>(6 + instance.n_rot));
    r.gradient[0] = sums[1];
    r.gradient[1] = sums[2];
    r.gradient[2] = sums[3];
    r.gradient[3] = dot3f(to_f32(frame.axis_phi), r.torque);
    r.gradient[4] = dot3f(to_f32(frame.axis_theta), r.torque);
    r.gradient[5] = dot3f(to_f32(frame.axis_alpha), r.torque);
    for (int k = 0; k < instance.n_rot; ++k) {
        r.gradient[static_cast<std::size_t>(6 + k)] =
            dot3f(to_f32(frame.torsion_axes_world[static_cast<std::size_t>(k)]), r.torque);
    }
    return r;
}

RefScore score_reference(const LigandInstance& instance, const Genotype& g) {
    check_genotype(instance, g, "score_reference");
    const PoseFrame frame = build_frame(instance, g);
    const std::vector<AtomPartial> partials = evaluate_atoms(instance, g, frame);

    RefScore r;
    r.gradient.assign(static_cast<std::size_t>(6 + instance.n_rot), 0.0);
    Vec3 gsum{};
    Vec3 tsum{};
    std::vector<Vec3> group_torque(static_cast<std::size_t>(instance.n_rot), Vec3{});
    for (std::size_t i = 0; i < partials.size(); ++i) {
        r.energy += partials[i].energy;
        gsum = gsum + partials[i].grad;
        tsum = tsum + partials[i].torque;
        const int k = instance.atoms[i].torsion;
        if (k >= 0) {
            group_torque[static_cast<std::size_t>(k)] =
                group_torque[static_cast<std::size_t>(k)] + partials[i].torque;
        }
    }
    r.torque = tsum;
    r.gradient[0] = gsum[0];
    r.gradient[1] = gsum[1];
    r.gradient[2] = gsum[2];
    r.gradient[3] = dot(frame.axis_phi, tsum);
    r.gradient[4] = dot(frame.axis_theta, tsum);
    r.gradient[5] = dot(frame.axis_alpha, tsum);
    // Exact per-group torsion torque; the reduced paths approximate this
    // with the total torque.
    for (int k = 0; k < instance.n_rot; ++k) {
        r.gradient[static_cast<std::size_t>(6 + k)] =
            dot(frame.torsion_axes_world[static_cast<std::size_t>(k)],
                group_torque[static_cast<std::size_t>(k)]);
    }
    return r;
}

AdadeltaState AdadeltaState::fresh(int dim, double rho, double epsilon) {
    AdadeltaState s;
    s.avg_sq_grad.assign(static_cast<std::size_t>(dim), 0.0);
    s.avg_sq_update.assign(static_cast<std::size_t>(dim), 0.0);
    s.rho = rho;
    s.epsilon = epsilon;
    return s;
}

std::pair<AdadeltaState, Genotype> adadelta_step(const AdadeltaState& state,
                                                 const Genotype& g,
                                                 const std::vector<double>& grad) {
    const std::size_t dim = static_cast<std::size_t>(g.dim());
    if (grad.size() != dim || state.avg_sq_grad.size() != dim ||
        state.avg_sq_update.size() != dim) {
        throw SizeError("adadelta_step: state/gradient dimensions do not match genotype");
    }
    for (double gi : grad) {
        if (!std::isfinite(gi)) {
            throw NumericDomainError("adadelta_step: non-finite gradient component");
        }
    }

    AdadeltaState next = state;
    Genotype out = g;
    for (std::size_t i = 0; i < dim; ++i) {
        next.avg_sq_grad[i] = state.rho * state.avg_sq_grad[i] +
                              (1.0 - state.rho) * grad[i] * grad[i];
        const double delta = -std::sqrt(state.avg_sq_update[i] + state.epsilon) /
                             std::sqrt(next.avg_sq_grad[i] + state.epsilon) * grad[i];
        next.avg_sq_update[i] = state.rho * state.avg_sq_update[i] +
                                (1.0 - state.rho) * delta * delta;
        out.set(static_cast<int>(i), out.get(static_cast<int>(i)) + delta);
    }
    out.normalize_angles();
    return {next, out};
}

LocalSearchResult local_search(const LigandInstance& instance, const Genotype& start,
                               int max_iters, double convergence_tol,
                               ReduceMethod method, AccumMode accum_mode, int partition,
                               std::uint64_t /*rng_seed*/) {
    constexpr int kWindow = 16;

    Genotype g = start;
    g.normalize_angles();
    AdadeltaState state = AdadeltaState::fresh(g.dim());

    ScoreResult sr = score(instance, g, method, accum_mode, partition);
    LocalSearchResult res;
    res.genotype = g;
    res.energy = sr.energy;
    res.stats = sr.reduce_stats;

    std::vector<double> best_history;
    best_history.reserve(static_cast<std::size_t>(max_iters) + 1);
    best_history.push_back(res.energy);

    for (int iter = 1; iter <= max_iters; ++iter) {
        std::vector<double> grad(sr.gradient.begin(), sr.gradient.end());
        auto [next_state, next_g] = adadelta_step(state, g, grad);
        state = std::move(next_state);
        g = next_g;
        sr = score(instance, g, method, accum_mode, partition);
        res.stats += sr.reduce_stats;
        if (sr.energy < res.energy) {
            res.energy = sr.energy;
            res.genotype = g;
        }
        best_history.push_back(res.energy);
        res.iterations = iter;
        if (iter >= kWindow &&
            best_history[static_cast<std::size_t>(iter - kWindow)] - res.energy <
                convergence_tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

namespace {

struct ScoredGenotype {
    Genotype g;
    double energy = 0.0;
};

Genotype random_genotype(const LigandInstance& instance, RngStream& rng) {
    // Sample translations inside the receptor footprint plus a margin.
    Vec3 lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
            std::numeric_limits<double>::max()};
    Vec3 hi{std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest(),
            std::numeric_limits<double>::lowest()};
    double max_d0 = 0.0;
    for (const Site& s : instance.sites) {
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], s.pos[a]);
            hi[a] = std::max(hi[a], s.pos[a]);
        }
        max_d0 = std::max(max_d0, s.preferred_distance);
    }
    const double margin = max_d0 + 1.0;

    Genotype g;
    g.x = rng.uniform(lo[0] - margin, hi[0] + margin);
    g.y = rng.uniform(lo[1] - margin, hi[1] + margin);
    g.z = rng.uniform(lo[2] - margin, hi[2] + margin);
    g.phi = rng.uniform(-std::numbers::pi, std::numbers::pi);
    g.theta = rng.uniform(-std::numbers::pi, std::numbers::pi);
    g.alpha = rng.uniform(-std::numbers::pi, std::numbers::pi);
    g.torsions.resize(static_cast<std::size_t>(instance.n_rot));
    for (double& t : g.torsions) {
        t = rng.uniform(-std::numbers::pi, std::numbers::pi);
    }
    return g;
}

} // namespace

DockResult lga_run(const LigandInstance& instance, ReduceMethod method,
                   AccumMode accum_mode, const LgaSettings& settings,
                   std::uint64_t seed) {
    if (settings.population_size < 2) {
        throw SizeError("lga_run needs a population of at least 2");
    }
    const int dim = 6 + instance.n_rot;
    RngStream rng = derive_rng(seed, "lga");

    DockResult dock;
    const auto do_score = [&](const Genotype& g) {
        ScoreResult sr = score(instance, g, method, accum_mode, settings.partition);
        ++dock.evaluations;
        dock.total_stats += sr.reduce_stats;
        return sr;
    };
    const auto track_best = [&](const Genotype& g, double e) {
        if (e < dock.best_energy) {
            dock.best_energy = e;
            dock.best_genotype = g;
        }
    };

    // Initial population.
    std::vector<ScoredGenotype> pop(static_cast<std::size_t>(settings.population_size));
    dock.best_energy = std::numeric_limits<double>::max();
    for (auto& ind : pop) {
        ind.g = random_genotype(instance, rng);
        ind.energy = do_score(ind.g).energy;
        track_best(ind.g, ind.energy);
    }

    const int offspring_count = settings.population_size - 1;
    const int ls_count = std::clamp(
        static_cast<int>(std::ceil(settings.ls_fraction * offspring_count)), 0, offspring_count);

    for (int gen = 0; gen < settings.generations; ++gen) {
        // Stop while the next generation could still overrun the budget.
        const std::int64_t worst_case =
            dock.evaluations + offspring_count +
            static_cast<std::int64_t>(ls_count) * (settings.ls_max_iters + 1);
        if (worst_case > settings.max_evaluations) {
            break;
        }

        const auto tournament = [&]() -> const ScoredGenotype& {
            const auto i = rng.next_index(pop.size());
            const auto j = rng.next_index(pop.size());
            return pop[i].energy <= pop[j].energy ? pop[i] : pop[j];
        };

        // Elitism of one: the incumbent best passes through unchanged.
        std::size_t elite = 0;
        for (std::size_t i = 1; i < pop.size(); ++i) {
            if (pop[i].energy < pop[elite].energy) {
                elite = i;
            }
        }

        std::vector<ScoredGenotype> next;
        next.reserve(pop.size());
        next.push_back(pop[elite]);
        for (int i = 0; i < offspring_count; ++i) {
            const ScoredGenotype& a = tournament();
            const ScoredGenotype& b = tournament();
            Genotype child;
            child.torsions.resize(static_cast<std::size_t>(instance.n_rot));
            for (int d = 0; d < dim; ++d) {
                const double lambda = rng.next_double();
                child.set(d, lambda * a.g.get(d) + (1.0 - lambda) * b.g.get(d));
            }
            for (int d = 0; d < dim; ++d) {
                child.set(d, child.get(d) + settings.mutation_sigma * rng.normal());
            }
            child.normalize_angles();
            ScoredGenotype sc;
            sc.g = child;
            sc.energy = do_score(child).energy;
            track_best(child, sc.energy);
            next.push_back(std::move(sc));
        }

        // Lamarckian step: refine the best offspring and write the result
        // back into the population.
        std::vector<std::size_t> order(next.size() - 1);
        std::iota(order.begin(), order.end(), 1);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (next[a].energy != next[b].energy) {
                return next[a].energy < next[b].energy;
            }
            return a < b;
        });
        for (int r = 0; r < ls_count; ++r) {
            ScoredGenotype& target = next[order[static_cast<std::size_t>(r)]];
            LocalSearchResult ls =
                local_search(instance, target.g, settings.ls_max_iters,
                             settings.ls_convergence_tol, method, accum_mode,
                             settings.partition, seed);
            dock.evaluations += ls.iterations + 1;
            dock.total_stats += ls.stats;
            target.g = ls.genotype;
            target.energy = ls.energy;
            track_best(ls.genotype, ls.energy);
            dock.runs.push_back(LsRunRecord{ls.energy, ls.iterations, ls.converged});
        }

        pop = std::move(next);
    }

    // Final polish from the incumbent best; keeps best_energy equal to the
    // minimum over recorded run bests.
    const std::int64_t remaining = settings.max_evaluations - dock.evaluations;
    if (remaining > 1) {
        const int iters = static_cast<int>(
            std::min<std::int64_t>(settings.ls_max_iters, remaining - 1));
        LocalSearchResult polish =
            local_search(instance, dock.best_genotype, iters, settings.ls_convergence_tol,
                         method, accum_mode, settings.partition, seed);
        dock.evaluations += polish.iterations + 1;
        dock.total_stats += polish.stats;
        track_best(polish.genotype, polish.energy);
        dock.runs.push_back(LsRunRecord{polish.energy, polish.iterations, polish.converged});
        dock.converged = polish.converged;
    }
    return dock;
}

namespace {

MethodSummary summarize(std::vector<double> bests, int nonconvergent, int n) {
    std::sort(bests.begin(), bests.end());
    const auto quantile = [&](double p) {
        if (bests.size() == 1) {
            return bests[0];
        }
        const double h = p * static_cast<double>(bests.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(h);
        const std::size_t hi = std::min(lo + 1, bests.size() - 1);
        const double frac = h - static_cast<double>(lo);
        return bests[lo] + frac * (bests[hi] - bests[lo]);
    };
    MethodSummary s;
    s.min = bests.front();
    s.q1 = quantile(0.25);
    s.median = quantile(0.5);
    s.q3 = quantile(0.75);
    s.max = bests.back();
    s.mean = std::accumulate(bests.begin(), bests.end(), 0.0) / static_cast<double>(bests.size());
    s.nonconvergent_fraction = static_cast<double>(nonconvergent) / static_cast<double>(n);
    return s;
}

} // namespace

ValidationReport validate_pair(const LigandInstance& instance,
                               ReduceMethod ref_method, ReduceMethod test_method,
                               AccumMode accum_mode, int n_runs,
                               std::uint64_t base_seed, const LgaSettings& settings) {
    if (n_runs < 1) {
        throw SizeError("validate_pair needs at least one run");
    }
    std::vector<double> ref_bests, test_bests;
    ref_bests.reserve(static_cast<std::size_t>(n_runs));
    test_bests.reserve(static_cast<std::size_t>(n_runs));
    int ref_nonconv = 0, test_nonconv = 0;

    for (int i = 0; i < n_runs; ++i) {
        // Paired seeds: run i sees the same random sequence under both
        // methods. Baseline reductions are binary32 regardless of
        // accum_mode, which only shapes the tcu side.
        const std::uint64_t run_seed = base_seed + static_cast<std::uint64_t>(i);
        const DockResult a = lga_run(instance, ref_method, accum_mode, settings, run_seed);
        const DockResult b = lga_run(instance, test_method, accum_mode, settings, run_seed);
        ref_bests.push_back(a.best_energy);
        test_bests.push_back(b.best_energy);
        ref_nonconv += a.converged ? 0 : 1;
        test_nonconv += b.converged ? 0 : 1;
    }

    ValidationReport rep;
    rep.n_runs = n_runs;
    rep.ref = summarize(ref_bests, ref_nonconv, n_runs);
    rep.test = summarize(test_bests, test_nonconv, n_runs);
    rep.abs_diff_means = std::abs(rep.test.mean - rep.ref.mean);
    rep.relative_error = rep.ref.mean == 0.0
                             ? std::numeric_limits<double>::infinity()
                             : rep.abs_diff_means / std::abs(rep.ref.mean);
    return rep;
}

} // namespace mdreduce
