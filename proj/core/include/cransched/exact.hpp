#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "cransched/model.hpp"

namespace cransched {

/**
 * How the solver accounts for the association-change time rho, which
 * depends on the previous slot's RRH while the plain network state does
 * not carry it.
 *
 *  - worst_case: price every slot as if the association changed. Keeps the
 *    plain state space; the resulting policy is feasible (and conservative)
 *    under the true dynamics.
 *  - tracked: augment the state with the previous association (one extra
 *    digit, values 0..J with J meaning "none yet") and use the exact rho.
 *    Multiplies the state count by J+1.
 */
enum class HandoverModel { worst_case, tracked };

/**
 * Bijection between global states and dense indices.
 *
 * Layout (innermost digit last): [prev | q_cu, q_rrh_0..q_rrh_{J-1} | links],
 * with the link digits interleaved (fronthaul_0, access_0, fronthaul_1, ...).
 * The prev digit exists only under HandoverModel::tracked. Keeping the link
 * digits innermost makes all link successors of a queue configuration a
 * contiguous block, which the solver's sweep exploits.
 */
class StateIndexer {
public:
    StateIndexer(const SystemModel& model, HandoverModel handover = HandoverModel::worst_case);

    /// Total dense indices, including the augmentation digit if tracked.
    std::size_t size() const { return size_; }
    /// State count without augmentation: (1+q_max)^{1+J} * prod_j |F_j||A_j|.
    std::size_t base_size() const { return queue_parts_ * link_parts_; }
    std::size_t link_parts() const { return link_parts_; }
    std::size_t queue_parts() const { return queue_parts_; }
    bool tracked() const { return tracked_; }
    int rrh_count() const { return rrh_count_; }

    std::size_t encode(const GlobalState& state,
                       std::optional<int> prev_rrh = std::nullopt) const;
    GlobalState decode(std::size_t index) const;
    /// Previous association encoded in `index`; nullopt when untracked or
    /// when the digit is the "none yet" value.
    std::optional<int> decode_prev(std::size_t index) const;

private:
    friend class ExactSolver;
    int rrh_count_;
    int q_max_;
    bool tracked_;
    std::vector<int> link_sizes_; // 2J entries, interleaved
    std::size_t queue_parts_;
    std::size_t link_parts_;
    std::size_t size_;
};

struct ExactOptions {
    double tolerance = 1e-9;          // span-seminorm stopping threshold
    int max_iterations = 100000;
    std::size_t state_budget = 500000;
    HandoverModel handover = HandoverModel::worst_case;
    int threads = 1;
    /// Value-pinning reference; defaults to the all-zero state (queues 0,
    /// links 0, association "none"). Must be reachable.
    std::optional<GlobalState> reference_state;
    std::optional<int> reference_prev;
};

struct ExactSolution {
    double gain = 0.0;
    /// Relative values, dense by StateIndexer; NaN where unreachable.
    std::vector<double> values;
    /// Greedy decision per state; {-1,-1} where unreachable.
    std::vector<Decision> policy;
    std::vector<std::uint8_t> reachable;
    std::size_t reachable_count = 0;
    double residual = 0.0;
    int iterations = 0;
    StateIndexer indexer;
    ExactOptions options;
};

/**
 * Successor distribution of one (state, decision) pair: arrivals folded by
 * the resulting CU queue value, crossed with the joint link transitions, so
 * every listed successor is distinct. Probabilities sum to 1 up to rounding.
 * Throws std::invalid_argument if the decision is infeasible under the rho
 * implied by `ctx`.
 */
std::vector<std::pair<GlobalState, double>>
transition_distribution(const SystemModel& model, const GlobalState& state,
                        const Decision& decision, const HandoverState& ctx);

/**
 * Average-cost optimality by relative value iteration over the states
 * reachable from the zero-queue initial set (all link combinations; under
 * tracked handover also association "none"). Successor values come from the
 * previous sweep (double-buffered), so multi-threaded sweeps are
 * bit-identical to sequential ones.
 *
 * Throws std::invalid_argument if the state count exceeds
 * options.state_budget (the message carries both numbers) and
 * std::runtime_error if the span residual fails to reach options.tolerance
 * within options.max_iterations (the message carries the last residual).
 */
ExactSolution relative_value_iteration(const SystemModel& model, const ExactOptions& options = {});

/**
 * Greedy one-step-lookahead policy for the given relative values. States
 * whose lookahead touches a NaN value (unreachable under the solve) get
 * Decision{-1,-1}. Ties break to the lowest RRH index, then the largest l1.
 */
std::vector<Decision> extract_policy(const SystemModel& model, const std::vector<double>& values,
                                     const ExactOptions& options = {});

/**
 * Average cost of a fixed policy: restricts to the states reachable from
 * the reference state under that policy and solves the linear evaluation
 * system (Gaussian elimination, dense). Assumes the restricted chain is
 * unichain; throws std::runtime_error if the system is singular or the
 * restricted set exceeds 4000 states.
 */
double evaluate_policy_gain(const SystemModel& model, const std::vector<Decision>& policy,
                            const ExactOptions& options = {});

} // namespace cransched
