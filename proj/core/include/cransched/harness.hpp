#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cransched/exact.hpp"
#include "cransched/learning.hpp"
#include "cransched/model.hpp"
#include "cransched/policies.hpp"
#include "cransched/rng.hpp"

namespace cransched {

struct TrafficSpec {
    enum class Kind { poisson, deterministic };
    Kind kind = Kind::poisson;
    double lambda = 0.0; // poisson mean
    int value = 0;       // deterministic per-slot arrivals

    TrafficModel build() const;
};

/// Table entry watched during a run (per-slot value series).
struct TrackedEntry {
    enum class Table { cu, rrh };
    Table table = Table::rrh;
    int rrh = 0;
    int fronthaul = 0;
    int access = 0;
    int queue = 0;

    std::string label() const;
};

struct SweepSpec {
    std::vector<double> gamma;  // empty: keep the config value
    std::vector<double> lambda; // empty: keep the config value
    int replicates = 1;
};

struct CompareSpec {
    std::vector<std::string> policies{"proposed", "max_rate", "max_queue", "random"};
    int replicates = 1;
};

struct SolverSpec {
    double tolerance = 1e-9;
    int max_iterations = 100000;
    std::size_t state_budget = 500000;
    HandoverModel handover = HandoverModel::worst_case;
    int threads = 1;

    ExactOptions options() const;
};

enum class InitialLinks { stationary, zero };

struct ExperimentConfig {
    SystemParams params;
    std::vector<LinkChain> links; // 2J, interleaved fronthaul/access
    TrafficSpec traffic;
    std::string policy = "proposed";
    LearnerConfig learner;
    std::uint64_t horizon = 1000000;
    std::optional<std::uint64_t> warmup; // default: horizon / 10
    std::uint64_t seed = 1;
    InitialLinks initial_links = InitialLinks::stationary;
    std::vector<TrackedEntry> trace;
    std::uint64_t trace_every = 1;
    std::optional<SweepSpec> sweep;
    CompareSpec compare;
    SolverSpec solver;

    std::uint64_t effective_warmup() const { return warmup ? *warmup : horizon / 10; }
    SystemModel build_model() const;
    void validate() const;
};

/// Averages over the measured window (warmup, horizon].
struct Metrics {
    double avg_queue_len = 0.0;
    double avg_drop_rate = 0.0;
    double objective = 0.0; // avg_queue_len + drop_weight * avg_drop_rate
    std::uint64_t handover_count = 0;
    std::uint64_t delivered_total = 0;
    std::uint64_t slot_count = 0;
};

/// Whole-run integer accounting, warmup included.
struct RunTotals {
    std::uint64_t arrivals = 0;
    std::uint64_t delivered = 0;
    std::uint64_t drops = 0;
    std::uint64_t handovers = 0;
    int initial_queue = 0;
    int final_queue = 0;
    std::uint64_t queue_slot_sum = 0; // total queue sampled at each slot start
    double sojourn_slots = 0.0;       // summed over delivered packets
    std::uint64_t sojourn_count = 0;
    std::uint64_t slots = 0;
};

struct RunResult {
    std::string policy;
    double gamma = 0.0;
    double lambda = 0.0;
    std::uint64_t seed = 0; // master seed
    int replicate = 0;
    Metrics metrics;
    RunTotals totals;
    std::optional<double> little_law_error;
    std::vector<std::vector<double>> traces; // per tracked entry
};

/**
 * Drives one experiment slot by slot. Per slot: policy decision, handover
 * cost, feasibility clamp, delivery, arrival draw, queue step, link
 * advance, policy hooks. Arrival and link randomness comes from env_rng
 * (consumed identically regardless of the policy, so compared policies can
 * share one environment stream); decision randomness from policy_rng.
 */
class SlotRunner {
public:
    SlotRunner(const SystemModel& model, Policy& policy, Rng& env_rng, Rng& policy_rng,
               InitialLinks initial_links);

    SlotObservation run_slot();

    const GlobalState& state() const { return state_; }
    std::optional<int> prev_rrh() const { return prev_; }
    std::uint64_t slot() const { return slot_; }
    const RunTotals& totals() const { return totals_; }
    /// Finalizes final_queue; call after the last slot.
    RunTotals finish() const;

private:
    const SystemModel* model_;
    Policy* policy_;
    Rng* env_rng_;
    Rng* policy_rng_;
    GlobalState state_;
    std::optional<int> prev_;
    std::uint64_t slot_ = 0;
    RunTotals totals_;
    // FIFO arrival stamps mirroring the queues, for sojourn measurement.
    std::deque<std::uint64_t> cu_stamps_;
    std::vector<std::deque<std::uint64_t>> rrh_stamps_;
};

/// Builds a policy by name; `solution` backs the "exact" policy (solved on
/// demand when absent).
std::unique_ptr<Policy> make_policy(const std::string& name, const SystemModel& model,
                                    const ExperimentConfig& config,
                                    std::shared_ptr<const ExactSolution> solution = nullptr);

/// One full run of config.policy with seeds derived for `replicate`.
RunResult run_experiment(const ExperimentConfig& config, int replicate = 0,
                         std::shared_ptr<const ExactSolution> solution = nullptr);

/// Grid over sweep.gamma x sweep.lambda x replicates, `jobs` runs at a
/// time; results ordered by (gamma, lambda, replicate) regardless of
/// completion order.
std::vector<RunResult> run_sweep(const ExperimentConfig& config, int jobs = 1);

/// Same environment stream per replicate across all compared policies.
std::vector<RunResult> run_compare(const ExperimentConfig& config, int jobs = 1);

/// Queue-length / throughput / sojourn consistency diagnostic. Returns the
/// relative error, 0 for an arrival-free run, nullopt when the run is not
/// stable enough to compare (drops above 0.1% of arrivals or nothing
/// delivered).
std::optional<double> little_law_check(const RunTotals& totals);

// ---- output writers (all deterministic: no timestamps, %.17g floats) ----

void write_metrics_csv(std::ostream& os, const std::vector<RunResult>& results);
void write_trace_csv(std::ostream& os, const ExperimentConfig& config, const RunResult& result);
std::string run_summary_json(const ExperimentConfig& config, const RunResult& result);
std::string sweep_summary_json(const ExperimentConfig& config,
                               const std::vector<RunResult>& results);

struct SolveReport {
    double gain = 0.0;
    double residual = 0.0;
    int iterations = 0;
    std::size_t state_count = 0;
    std::size_t reachable_count = 0;
};

std::string solve_summary_json(const ExperimentConfig& config, const SolveReport& report);
void write_policy_csv(std::ostream& os, const SystemModel& model, const ExactSolution& solution);

} // namespace cransched
