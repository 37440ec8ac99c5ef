#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cransched/config.hpp"
#include "cransched/exact.hpp"
#include "cransched/harness.hpp"

namespace fs = std::filesystem;
using namespace cransched;

namespace {

// CRANSCHED_OUTDIR sets the default output directory; --outdir wins.
std::string default_outdir() {
    const char* env = std::getenv("CRANSCHED_OUTDIR");
    return (env != nullptr && *env != '\0') ? env : ".";
}

struct CommonOpts {
    std::string config_path;
    std::string outdir = default_outdir();
    std::optional<std::uint64_t> seed;
    int jobs = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_jobs) {
    cmd->add_option("config", opts.config_path, "JSON experiment configuration")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--outdir", opts.outdir,
                    "Output directory (default: $CRANSCHED_OUTDIR or the working directory)");
    cmd->add_option("--seed", opts.seed, "Override the master seed from the configuration");
    if (with_jobs)
        cmd->add_option("--jobs", opts.jobs, "Concurrent runs")->check(CLI::PositiveNumber);
}

ExperimentConfig load(const CommonOpts& opts) {
    ExperimentConfig config = load_config(opts.config_path);
    if (opts.seed)
        config.seed = *opts.seed;
    return config;
}

fs::path prepare_outdir(const CommonOpts& opts) {
    fs::path dir(opts.outdir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out.flush())
        throw std::runtime_error("write failed for " + path.string());
}

std::string capture_metrics_csv(const std::vector<RunResult>& results) {
    std::ostringstream os;
    write_metrics_csv(os, results);
    return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void print_result_line(const RunResult& r) {
    std::printf("%-10s gamma=%-6g lambda=%-6g rep=%d  queue=%.4f  drop=%.6f  objective=%.4f\n",
                r.policy.c_str(), r.gamma, r.lambda, r.replicate, r.metrics.avg_queue_len,
                r.metrics.avg_drop_rate, r.metrics.objective);
}

int cmd_run(const CommonOpts& opts) {
    const auto start = std::chrono::steady_clock::now();
    ExperimentConfig config = load(opts);
    const fs::path dir = prepare_outdir(opts);

    RunResult result = run_experiment(config);
    write_file(dir / "metrics.csv", capture_metrics_csv({result}));
    write_file(dir / "run_summary.json", run_summary_json(config, result));
    if (!config.trace.empty()) {
        std::ostringstream os;
        write_trace_csv(os, config, result);
        write_file(dir / "trace.csv", os.str());
    }

    print_result_line(result);
    std::printf("%llu slots in %.2fs -> %s\n",
                static_cast<unsigned long long>(result.totals.slots), seconds_since(start),
                dir.string().c_str());
    return 0;
}

int cmd_sweep(const CommonOpts& opts) {
    const auto start = std::chrono::steady_clock::now();
    ExperimentConfig config = load(opts);
    const fs::path dir = prepare_outdir(opts);

    std::vector<RunResult> results = run_sweep(config, opts.jobs);
    write_file(dir / "sweep.csv", capture_metrics_csv(results));
    write_file(dir / "sweep_summary.json", sweep_summary_json(config, results));

    for (const auto& r : results)
        print_result_line(r);
    std::printf("%zu runs in %.2fs -> %s\n", results.size(), seconds_since(start),
                dir.string().c_str());
    return 0;
}

int cmd_compare(const CommonOpts& opts) {
    const auto start = std::chrono::steady_clock::now();
    ExperimentConfig config = load(opts);
    const fs::path dir = prepare_outdir(opts);

    std::vector<RunResult> results = run_compare(config, opts.jobs);
    write_file(dir / "compare.csv", capture_metrics_csv(results));
    write_file(dir / "compare_summary.json", sweep_summary_json(config, results));

    for (const auto& r : results)
        print_result_line(r);
    std::printf("%zu runs in %.2fs -> %s\n", results.size(), seconds_since(start),
                dir.string().c_str());
    return 0;
}

int cmd_solve(const CommonOpts& opts, bool policy_csv) {
    const auto start = std::chrono::steady_clock::now();
    ExperimentConfig config = load(opts);
    const fs::path dir = prepare_outdir(opts);

    const SystemModel model = config.build_model();
    const ExactSolution solution = relative_value_iteration(model, config.solver.options());

    SolveReport report;
    report.gain = solution.gain;
    report.residual = solution.residual;
    report.iterations = solution.iterations;
    report.state_count = solution.indexer.size();
    report.reachable_count = solution.reachable_count;
    write_file(dir / "solve_summary.json", solve_summary_json(config, report));
    if (policy_csv) {
        std::ostringstream os;
        write_policy_csv(os, model, solution);
        write_file(dir / "policy.csv", os.str());
    }

    std::printf("gain=%.12g residual=%.3g iterations=%d states=%zu reachable=%zu\n", report.gain,
                report.residual, report.iterations, report.state_count, report.reachable_count);
    std::printf("solved in %.2fs -> %s\n", seconds_since(start), dir.string().c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Queueing simulator and optimizer for two-hop packet scheduling "
                 "with per-slot serving-node selection"};
    app.require_subcommand(1);

    CommonOpts run_opts, sweep_opts, compare_opts, solve_opts;
    bool policy_csv = false;

    CLI::App* run = app.add_subcommand("run", "Simulate one policy and write metrics");
    add_common(run, run_opts, false);

    CLI::App* sweep = app.add_subcommand("sweep", "Run the configured parameter grid");
    add_common(sweep, sweep_opts, true);

    CLI::App* solve = app.add_subcommand("solve", "Solve the average-cost model exactly");
    add_common(solve, solve_opts, false);
    solve->add_flag("--policy-csv", policy_csv, "Also write the solved policy table");

    CLI::App* compare =
        app.add_subcommand("compare", "Run all configured policies on shared arrivals");
    add_common(compare, compare_opts, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(run_opts);
        if (sweep->parsed())
            return cmd_sweep(sweep_opts);
        if (solve->parsed())
            return cmd_solve(solve_opts, policy_csv);
        return cmd_compare(compare_opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
