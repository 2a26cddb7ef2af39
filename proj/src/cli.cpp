// SPDX-License-Identifier: Apache-2.0
#include "mdreduce/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "mdreduce/docking.hpp"
#include "mdreduce/errors.hpp"
#include "mdreduce/instance_io.hpp"
#include "mdreduce/rng.hpp"
#include "mdreduce/simblock.hpp"
#include "mdreduce/version.hpp"

namespace mdreduce {

namespace {

constexpr std::uint64_t kDefaultSeed = 12345;

struct CommonOpts {
    std::uint64_t seed = kDefaultSeed;
    std::string format = "csv"; // csv | markdown
    std::string output;         // empty: stdout
};

void add_common(CLI::App* cmd, CommonOpts& c) {
    cmd->add_option("--seed", c.seed, "Root seed for all derived random streams")
        ->envname("MDREDUCE_SEED");
    cmd->add_option("--format", c.format, "Report format")
        ->check(CLI::IsMember({"csv", "markdown"}))
        ->capture_default_str();
    cmd->add_option("--output", c.output, "Write the report to this file instead of stdout");
}

ReduceMethod parse_method(const std::string& m) {
    return m == "tcu" ? ReduceMethod::Tcu : ReduceMethod::Baseline;
}

AccumMode parse_accum(const std::string& a) {
    return a == "single" ? AccumMode::Single : AccumMode::Half;
}

std::string fmt_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

// Minimal table writer shared by every report: '#'-prefixed metadata lines,
// then either a CSV block or a markdown pipe table.
struct Report {
    std::vector<std::string> meta; // key: value lines
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> trailer; // free-form summary lines

    void render(std::ostream& os, const std::string& format) const {
        for (const auto& m : meta) {
            os << "# " << m << '\n';
        }
        if (!columns.empty()) {
            if (format == "markdown") {
                os << '\n';
                os << '|';
                for (const auto& c : columns) {
                    os << ' ' << c << " |";
                }
                os << "\n|";
                for (std::size_t i = 0; i < columns.size(); ++i) {
                    os << " --- |";
                }
                os << '\n';
                for (const auto& row : rows) {
                    os << '|';
                    for (const auto& cell : row) {
                        os << ' ' << cell << " |";
                    }
                    os << '\n';
                }
            } else {
                for (std::size_t i = 0; i < columns.size(); ++i) {
                    os << columns[i] << (i + 1 < columns.size() ? "," : "");
                }
                os << '\n';
                for (const auto& row : rows) {
                    for (std::size_t i = 0; i < row.size(); ++i) {
                        os << row[i] << (i + 1 < row.size() ? "," : "");
                    }
                    os << '\n';
                }
            }
        }
        if (!trailer.empty()) {
            os << '\n';
            for (const auto& t : trailer) {
                os << t << '\n';
            }
        }
    }
};

void emit(const Report& rep, const CommonOpts& c, std::ostream& out) {
    if (c.output.empty()) {
        rep.render(out, c.format);
        return;
    }
    std::ofstream f(c.output);
    if (!f) {
        throw ParseError(0, "cannot open output file '" + c.output + "'");
    }
    rep.render(f, c.format);
    if (!f.good()) {
        throw ParseError(0, "error writing output file '" + c.output + "'");
    }
}

std::vector<std::string> standard_meta(const std::string& command, std::uint64_t seed,
                                       const std::string& config) {
    return {
        "mdreduce " + std::string(kVersion),
        "command: " + command,
        "seed: " + std::to_string(seed),
        "config: " + config,
    };
}

LigandInstance load_instance(const std::string& path) {
    std::ifstream f(path);
    if (!f) {
        throw ParseError(0, "cannot open instance file '" + path + "'");
    }
    std::ostringstream buf;
    buf << f.rdbuf();
    LigandInstance inst = parse_instance(buf.str());
    // Name the instance by file stem for reports.
    std::string stem = path;
    if (const auto slash = stem.find_last_of("/\\"); slash != std::string::npos) {
        stem = stem.substr(slash + 1);
    }
    if (const auto dot = stem.find_last_of('.'); dot != std::string::npos && dot > 0) {
        stem = stem.substr(0, dot);
    }
    inst.name = stem;
    return inst;
}

void add_lga_flags(CLI::App* cmd, LgaSettings& s) {
    cmd->add_option("--pop", s.population_size, "Population size")->capture_default_str();
    cmd->add_option("--generations", s.generations, "GA generations")->capture_default_str();
    cmd->add_option("--max-evals", s.max_evaluations, "Evaluation budget")
        ->capture_default_str();
    cmd->add_option("--ls-fraction", s.ls_fraction,
                    "Fraction of offspring refined by local search")
        ->capture_default_str();
    cmd->add_option("--ls-iters", s.ls_max_iters, "Local-search iteration cap")
        ->capture_default_str();
    cmd->add_option("--ls-tol", s.ls_convergence_tol,
                    "Local-search convergence tolerance over a 16-iteration window")
        ->capture_default_str();
    cmd->add_option("--sigma", s.mutation_sigma, "Gaussian mutation sigma")
        ->capture_default_str();
    cmd->add_option("--partition", s.partition, "Simulated threads per scoring block")
        ->capture_default_str();
}

std::string lga_config_string(const LgaSettings& s) {
    std::ostringstream os;
    os << "pop=" << s.population_size << " generations=" << s.generations
       << " max_evals=" << s.max_evaluations << " ls_fraction=" << s.ls_fraction
       << " ls_iters=" << s.ls_max_iters << " ls_tol=" << s.ls_convergence_tol
       << " sigma=" << s.mutation_sigma << " partition=" << s.partition;
    return os.str();
}

std::vector<std::string> stats_cells(const SyncStats& st) {
    return {std::to_string(st.block_syncs),   std::to_string(st.warp_shuffles),
            std::to_string(st.atomic_adds),   std::to_string(st.memory_fences),
            std::to_string(st.mma_ops),       std::to_string(st.shared_mem_bytes),
            std::to_string(st.precision_conversions)};
}

const std::vector<std::string> kStatsColumns = {
    "block_syncs", "warp_shuffles",    "atomic_adds",          "memory_fences",
    "mma_ops",     "shared_mem_bytes", "precision_conversions"};

// --- reduce-bench -----------------------------------------------------

int cmd_reduce_bench(const CommonOpts& c, const std::vector<int>& sizes,
                     const std::vector<std::string>& methods, AccumMode accum,
                     int trials, std::ostream& out, std::ostream& err) {
    // Validate the full request before doing any work.
    for (const std::string& ms : methods) {
        const ReduceMethod method = parse_method(ms);
        for (int n : sizes) {
            try {
                BlockConfig(n, method, accum);
            } catch (const UnsupportedBlockSizeError& e) {
                err << "mdreduce: " << e.what() << '\n';
                return 2;
            }
        }
    }

    Report rep;
    std::ostringstream cfg;
    cfg << "sizes=";
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        cfg << (i ? "," : "") << sizes[i];
    }
    cfg << " methods=";
    for (std::size_t i = 0; i < methods.size(); ++i) {
        cfg << (i ? "," : "") << methods[i];
    }
    cfg << " accum=" << (accum == AccumMode::Half ? "half" : "single")
        << " trials=" << trials;
    rep.meta = standard_meta("reduce-bench", c.seed, cfg.str());
    rep.meta.push_back("timings are emulated (host wall clock of the software model)");

    rep.columns = {"size", "method", "accum_mode", "trials", "mean_us_emulated"};
    rep.columns.insert(rep.columns.end(), kStatsColumns.begin(), kStatsColumns.end());
    rep.columns.push_back("cost");

    const CostWeights weights;
    for (int n : sizes) {
        for (const std::string& ms : methods) {
            const ReduceMethod method = parse_method(ms);
            RngStream rng = derive_rng(c.seed, "bench/" + std::to_string(n) + "/" + ms);
            std::vector<Partial7> records(static_cast<std::size_t>(n));
            SyncStats stats;
            double total_us = 0.0;
            for (int t = 0; t < trials; ++t) {
                for (Partial7& p : records) {
                    p.e = static_cast<float>(rng.uniform(-1.0, 1.0));
                    p.gx = static_cast<float>(rng.uniform(-1.0, 1.0));
                    p.gy = static_cast<float>(rng.uniform(-1.0, 1.0));
                    p.gz = static_cast<float>(rng.uniform(-1.0, 1.0));
                    p.tx = static_cast<float>(rng.uniform(-1.0, 1.0));
                    p.ty = static_cast<float>(rng.uniform(-1.0, 1.0));
                    p.tz = static_cast<float>(rng.uniform(-1.0, 1.0));
                }
                const auto t0 = std::chrono::steady_clock::now();
                auto [sums, st] = reduce7(records, method, accum);
                const auto t1 = std::chrono::steady_clock::now();
                (void)sums;
                stats = st;
                total_us += std::chrono::duration<double, std::micro>(t1 - t0).count();
            }
            std::vector<std::string> row = {
                std::to_string(n), ms, accum == AccumMode::Half ? "half" : "single",
                std::to_string(trials), fmt_double(total_us / trials)};
            const auto sc = stats_cells(stats);
            row.insert(row.end(), sc.begin(), sc.end());
            row.push_back(fmt_double(estimate_cost(stats, weights)));
            rep.rows.push_back(std::move(row));
        }
    }
    emit(rep, c, out);
    return 0;
}

// --- validate ----------------------------------------------------------

int cmd_validate(const CommonOpts& c, const std::string& instance_path, int runs,
                 double threshold, const std::string& method_ref,
                 const std::string& method_test, AccumMode accum,
                 const LgaSettings& settings, std::ostream& out) {
    const LigandInstance inst = load_instance(instance_path);
    const ValidationReport vr =
        validate_pair(inst, parse_method(method_ref), parse_method(method_test), accum,
                      runs, c.seed, settings);

    Report rep;
    std::ostringstream cfg;
    cfg << "instance=" << inst.name << " runs=" << runs << " threshold=" << threshold
        << " ref=" << method_ref << " test=" << method_test
        << " accum=" << (accum == AccumMode::Half ? "half" : "single") << ' '
        << lga_config_string(settings);
    rep.meta = standard_meta("validate", c.seed, cfg.str());

    rep.columns = {"method", "min", "q1", "median", "q3", "max", "mean", "nonconvergent"};
    const auto summary_row = [](const std::string& name, const MethodSummary& s) {
        return std::vector<std::string>{name,
                                        fmt_double(s.min),
                                        fmt_double(s.q1),
                                        fmt_double(s.median),
                                        fmt_double(s.q3),
                                        fmt_double(s.max),
                                        fmt_double(s.mean),
                                        fmt_double(s.nonconvergent_fraction)};
    };
    rep.rows.push_back(summary_row(method_ref, vr.ref));
    rep.rows.push_back(summary_row(method_test, vr.test));

    const bool ok = vr.relative_error < threshold;
    rep.trailer.push_back("abs_diff_means: " + fmt_double(vr.abs_diff_means));
    rep.trailer.push_back("relative_error: " + fmt_double(vr.relative_error));
    rep.trailer.push_back("threshold: " + fmt_double(threshold));
    rep.trailer.push_back(std::string("verdict: ") + (ok ? "PASS" : "FAIL"));
    emit(rep, c, out);
    return ok ? 0 : 1;
}

// --- dock --------------------------------------------------------------

int cmd_dock(const CommonOpts& c, const std::string& instance_path,
             const std::string& method, AccumMode accum, const LgaSettings& settings,
             std::ostream& out) {
    const LigandInstance inst = load_instance(instance_path);

    const auto t0 = std::chrono::steady_clock::now();
    const DockResult dr = lga_run(inst, parse_method(method), accum, settings, c.seed);
    const auto t1 = std::chrono::steady_clock::now();
    const double wall_s = std::chrono::duration<double>(t1 - t0).count();

    ResultRow row;
    row.seed = c.seed;
    row.method = method;
    row.accum_mode = accum == AccumMode::Half ? "half" : "single";
    row.instance = inst.name;
    row.best_energy = dr.best_energy;
    row.evaluations = dr.evaluations;
    row.converged = dr.converged;
    row.block_syncs = dr.total_stats.block_syncs;
    row.atomic_adds = dr.total_stats.atomic_adds;
    row.mma_ops = dr.total_stats.mma_ops;

    Report rep;
    rep.meta = standard_meta("dock", c.seed,
                             "instance=" + inst.name + " method=" + method + " accum=" +
                                 row.accum_mode + ' ' + lga_config_string(settings));
    rep.trailer.push_back("best_energy: " + fmt_double(dr.best_energy));
    rep.trailer.push_back("evaluations: " + std::to_string(dr.evaluations));
    rep.trailer.push_back(std::string("converged: ") + (dr.converged ? "true" : "false"));
    rep.trailer.push_back("ls_runs: " + std::to_string(dr.runs.size()));
    rep.trailer.push_back("wall_s_emulated: " + fmt_double(wall_s));
    rep.trailer.push_back("block_syncs: " + std::to_string(dr.total_stats.block_syncs));
    rep.trailer.push_back("warp_shuffles: " + std::to_string(dr.total_stats.warp_shuffles));
    rep.trailer.push_back("atomic_adds: " + std::to_string(dr.total_stats.atomic_adds));
    rep.trailer.push_back("memory_fences: " + std::to_string(dr.total_stats.memory_fences));
    rep.trailer.push_back("mma_ops: " + std::to_string(dr.total_stats.mma_ops));
    rep.trailer.push_back("results_csv:");
    {
        std::istringstream csv(write_results(std::span<const ResultRow>(&row, 1)));
        std::string line;
        while (std::getline(csv, line)) {
            rep.trailer.push_back(line);
        }
    }
    emit(rep, c, out);
    return 0;
}

// --- sweep -------------------------------------------------------------

int parse_weights(const std::string& spec, CostWeights& w, std::ostream& err) {
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            err << "mdreduce: bad weight '" << item << "', expected name=value\n";
            return 2;
        }
        const std::string name = item.substr(0, eq);
        double value = 0.0;
        try {
            value = std::stod(item.substr(eq + 1));
        } catch (const std::exception&) {
            err << "mdreduce: bad weight value in '" << item << "'\n";
            return 2;
        }
        if (name == "block_sync") {
            w.block_sync = value;
        } else if (name == "atomic") {
            w.atomic = value;
        } else if (name == "shuffle") {
            w.shuffle = value;
        } else if (name == "fence") {
            w.fence = value;
        } else if (name == "mma") {
            w.mma = value;
        } else {
            err << "mdreduce: unknown weight '" << name
                << "' (expected block_sync, atomic, shuffle, fence, mma)\n";
            return 2;
        }
    }
    return 0;
}

int cmd_sweep(const CommonOpts& c, const std::vector<int>& sizes,
              const std::string& weight_spec, AccumMode accum, std::ostream& out,
              std::ostream& err) {
    CostWeights weights;
    if (!weight_spec.empty()) {
        if (const int rc = parse_weights(weight_spec, weights, err)) {
            return rc;
        }
    }
    std::vector<SweepRow> rows;
    try {
        rows = scaling_sweep(sizes, weights, accum);
    } catch (const UnsupportedBlockSizeError& e) {
        err << "mdreduce: " << e.what() << '\n';
        return 2;
    }

    Report rep;
    std::ostringstream cfg;
    cfg << "sizes=";
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        cfg << (i ? "," : "") << sizes[i];
    }
    cfg << " weights: block_sync=" << weights.block_sync << " atomic=" << weights.atomic
        << " shuffle=" << weights.shuffle << " fence=" << weights.fence
        << " mma=" << weights.mma;
    rep.meta = standard_meta("sweep", c.seed, cfg.str());

    rep.columns = {"size"};
    for (const char* prefix : {"baseline_", "tcu_"}) {
        for (const auto& col : kStatsColumns) {
            rep.columns.push_back(prefix + col);
        }
    }
    rep.columns.insert(rep.columns.end(),
                       {"cost_baseline", "cost_tcu", "cost_ratio", "degenerate"});
    for (const SweepRow& r : rows) {
        std::vector<std::string> row = {std::to_string(r.threads_per_block)};
        const auto bc = stats_cells(r.baseline);
        const auto tc = stats_cells(r.tcu);
        row.insert(row.end(), bc.begin(), bc.end());
        row.insert(row.end(), tc.begin(), tc.end());
        row.push_back(fmt_double(r.cost_baseline));
        row.push_back(fmt_double(r.cost_tcu));
        row.push_back(fmt_double(r.cost_ratio));
        row.push_back(r.degenerate ? "true" : "false");
        rep.rows.push_back(std::move(row));
    }
    emit(rep, c, out);
    return 0;
}

} // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Emulated tensor-core reduction workbench"};
    app.name("mdreduce");
    app.require_subcommand(1);

    // reduce-bench
    CommonOpts bench_c;
    std::vector<int> bench_sizes(kDefaultSweepSizes.begin(), kDefaultSweepSizes.end());
    std::vector<std::string> bench_methods = {"baseline", "tcu"};
    std::string bench_accum = "half";
    int bench_trials = 10;
    auto* bench = app.add_subcommand("reduce-bench",
                                     "Time and profile the block reduction methods");
    add_common(bench, bench_c);
    bench->add_option("--sizes", bench_sizes, "Thread-block sizes")
        ->delimiter(',')
        ->capture_default_str();
    bench->add_option("--methods", bench_methods, "Reduction methods to run")
        ->delimiter(',')
        ->check(CLI::IsMember({"baseline", "tcu"}))
        ->capture_default_str();
    bench->add_option("--accum", bench_accum, "Tensor-core accumulator precision")
        ->check(CLI::IsMember({"half", "single"}))
        ->capture_default_str();
    bench->add_option("--trials", bench_trials, "Trials per configuration")
        ->capture_default_str();

    // validate
    CommonOpts val_c;
    std::string val_instance;
    int val_runs = 100;
    double val_threshold = 0.002;
    std::string val_ref = "baseline";
    std::string val_test = "tcu";
    std::string val_accum = "half";
    LgaSettings val_settings;
    auto* val = app.add_subcommand(
        "validate", "Paired-seed docking comparison between reduction methods");
    add_common(val, val_c);
    val->add_option("--instance", val_instance, "Instance file (MDRI)")->required();
    val->add_option("--runs", val_runs, "Paired runs per method")->capture_default_str();
    val->add_option("--threshold", val_threshold,
                    "Maximum relative difference of mean best energies")
        ->capture_default_str();
    val->add_option("--method-ref", val_ref, "Reference method")
        ->check(CLI::IsMember({"baseline", "tcu"}))
        ->capture_default_str();
    val->add_option("--method-test", val_test, "Method under test")
        ->check(CLI::IsMember({"baseline", "tcu"}))
        ->capture_default_str();
    val->add_option("--accum", val_accum, "Tensor-core accumulator precision")
        ->check(CLI::IsMember({"half", "single"}))
        ->capture_default_str();
    add_lga_flags(val, val_settings);

    // dock
    CommonOpts dock_c;
    std::string dock_instance;
    std::string dock_method = "tcu";
    std::string dock_accum = "half";
    LgaSettings dock_settings;
    auto* dock = app.add_subcommand("dock", "Run one Lamarckian GA docking search");
    add_common(dock, dock_c);
    dock->add_option("--instance", dock_instance, "Instance file (MDRI)")->required();
    dock->add_option("--method", dock_method, "Reduction method")
        ->check(CLI::IsMember({"baseline", "tcu"}))
        ->capture_default_str();
    dock->add_option("--accum", dock_accum, "Tensor-core accumulator precision")
        ->check(CLI::IsMember({"half", "single"}))
        ->capture_default_str();
    add_lga_flags(dock, dock_settings);

    // sweep
    CommonOpts sweep_c;
    std::vector<int> sweep_sizes(kDefaultSweepSizes.begin(), kDefaultSweepSizes.end());
    std::string sweep_weights;
    std::string sweep_accum = "half";
    auto* sweep = app.add_subcommand("sweep", "Cost-model scaling table across block sizes");
    add_common(sweep, sweep_c);
    sweep->add_option("--sizes", sweep_sizes, "Thread-block sizes")
        ->delimiter(',')
        ->capture_default_str();
    sweep->add_option("--weights", sweep_weights,
                      "Cost weights, e.g. block_sync=10,atomic=4,shuffle=1,fence=4,mma=8");
    sweep->add_option("--accum", sweep_accum, "Tensor-core accumulator precision")
        ->check(CLI::IsMember({"half", "single"}))
        ->capture_default_str();

    try {
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "mdreduce: " << e.what() << '\n';
        return 2;
    }

    try {
        if (bench->parsed()) {
            return cmd_reduce_bench(bench_c, bench_sizes, bench_methods,
                                    parse_accum(bench_accum), bench_trials, out, err);
        }
        if (val->parsed()) {
            return cmd_validate(val_c, val_instance, val_runs, val_threshold, val_ref,
                                val_test, parse_accum(val_accum), val_settings, out);
        }
        if (dock->parsed()) {
            return cmd_dock(dock_c, dock_instance, dock_method, parse_accum(dock_accum),
                            dock_settings, out);
        }
        if (sweep->parsed()) {
            return cmd_sweep(sweep_c, sweep_sizes, sweep_weights, parse_accum(sweep_accum),
                             out, err);
        }
    } catch (const ParseError& e) {
        err << "mdreduce: " << e.what() << '\n';
        return 3;
    } catch (const UnsupportedBlockSizeError& e) {
        err << "mdreduce: " << e.what() << '\n';
        return 2;
    } catch (const SizeError& e) {
        err << "mdreduce: " << e.what() << '\n';
        return 2;
    } catch (const NumericDomainError& e) {
        err << "mdreduce: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

} // namespace mdreduce
