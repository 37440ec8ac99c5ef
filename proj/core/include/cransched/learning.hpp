#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cransched/model.hpp"
#include "cransched/policies.hpp"
#include "cransched/rng.hpp"

namespace cransched {

/// Network state right after a decision's deterministic effects: the CU
/// queue less the scheduled packets, the served RRH's queue after loading
/// and delivery, link states untouched.
struct PostDecisionState {
    int q_cu_post = 0;
    std::vector<LocalState> locals; // q_rrh holds the post-decision queue
};

PostDecisionState post_decision(const GlobalState& state, const Decision& decision,
                                int delivered);

/**
 * The additive value model: one table over the post-decision CU queue plus
 * one per RRH over (fronthaul state, access state, post-decision queue).
 * Entry count is (1+q_max) * (1 + sum_j |F_j|*|A_j|), far below the joint
 * state space.
 */
class ValueTables {
public:
    explicit ValueTables(const SystemModel& model);

    double cu(int q) const { return v_cu_[checked_cu(q)]; }
    double& cu(int q) { return v_cu_[checked_cu(q)]; }
    double rrh(int j, int f, int a, int q) const {
        return rrh_[checked_rrh(j)].v[rrh_offset(j, f, a, q)];
    }
    double& rrh(int j, int f, int a, int q) {
        return rrh_[checked_rrh(j)].v[rrh_offset(j, f, a, q)];
    }

    int q_max() const { return q_max_; }
    int rrh_count() const { return static_cast<int>(rrh_.size()); }
    int fronthaul_states(int j) const { return rrh_[checked_rrh(j)].f_states; }
    int access_states(int j) const { return rrh_[checked_rrh(j)].a_states; }
    std::size_t entry_count() const;

    const std::vector<double>& cu_table() const { return v_cu_; }
    std::vector<double>& cu_table() { return v_cu_; }
    const std::vector<double>& rrh_table(int j) const { return rrh_[checked_rrh(j)].v; }
    std::vector<double>& rrh_table(int j) { return rrh_[checked_rrh(j)].v; }

private:
    std::size_t checked_cu(int q) const;
    std::size_t checked_rrh(int j) const;
    std::size_t rrh_offset(int j, int f, int a, int q) const;

    struct RrhTable {
        int f_states = 0;
        int a_states = 0;
        std::vector<double> v;
    };
    int q_max_ = 0;
    std::vector<double> v_cu_;
    std::vector<RrhTable> rrh_;
};

/// Reference coordinates whose table values pin the relative level.
struct RefLocal {
    int fronthaul = 0;
    int access = 0;
    int q = 0;
};

struct LearnerConfig {
    double alpha0 = 0.6;
    int ref_cu = 0;
    /// One entry per RRH; empty means all (0, 0, 0).
    std::vector<RefLocal> ref_rrh;
    /// Probability of replacing the greedy decision with a uniform draw
    /// from the feasible set. 0 is the plain greedy scheme.
    double exploration_eps = 0.0;

    void validate(const SystemModel& model) const;
};

/// alpha0 / (ln t + 1) for t >= 1.
double learning_rate(double t, double alpha0);

/// Sum of the decomposed tables at a post-decision state.
double decomposed_value(const ValueTables& tables, const PostDecisionState& post);

/**
 * Score of serving `rrh` with `l1` packets from `state`: the change the
 * decision's deterministic effects make to the decomposed value,
 *   V_c(Q_c - l1) - V_c(Q_c) + V_j(R_j, post queue) - V_j(R_j, Q_j),
 * with the post queue including the slot's delivery under the candidate.
 * Lower is better. Throws std::invalid_argument when l1 is infeasible.
 */
double score_candidate(const ValueTables& tables, const SystemModel& model,
                       const GlobalState& state, int rrh, int l1,
                       std::optional<int> prev_rrh);

/**
 * Two-step greedy decision: per RRH the best feasible l1, then the best
 * RRH, both by score_candidate; ties break to the lowest RRH index, then
 * the largest l1. With probability config.exploration_eps the decision is
 * drawn uniformly from the full feasible set instead (the rng is only
 * consumed when exploration_eps > 0).
 */
Decision select_action(const ValueTables& tables, const SystemModel& model,
                       const GlobalState& state, std::optional<int> prev_rrh,
                       const LearnerConfig& config, Rng& rng);

/**
 * One completed transition, ready for the table update. The *_next_post
 * fields come from the NEXT slot's decision, so a record can only be
 * applied after that decision is made.
 */
struct TransitionRecord {
    int rrh = 0;            // RRH served in the recorded slot
    int cu_entry_q = 0;     // post-decision CU queue of the recorded slot
    int rrh_entry_f = 0;    // served RRH's link pair during the slot
    int rrh_entry_a = 0;
    int rrh_entry_q = 0;    // served RRH's post-decision queue
    int drops = 0;          // packets dropped in the recorded slot
    int cu_next_q = 0;      // CU queue at the start of the next slot
    int cu_next_post_q = 0; // CU queue after the next slot's decision
    int rrh_next_q = 0;     // served RRH's queue at the start of the next slot
    int rrh_next_f = 0;     // served RRH's link pair in the next slot
    int rrh_next_a = 0;
    int rrh_next_post_q = 0; // served RRH's queue after the next slot's effects
    double alpha = 0.0;
};

/**
 * Applies one stochastic-approximation step: the recorded CU entry and the
 * recorded RRH entry each move toward their one-slot target (realized cost
 * plus the current estimate at the next slot's post-decision coordinates,
 * less the reference entry). Both targets are read before either entry is
 * written. No other entry changes.
 */
void apply_update(ValueTables& tables, const TransitionRecord& record,
                  const LearnerConfig& config, const SystemParams& params);

/// Kahan-compensated partial sums of a step-size schedule and its square.
struct SchedulePartialSums {
    double sum = 0.0;
    double sum_sq = 0.0;
};

template <typename Fn>
SchedulePartialSums accumulate_schedule(Fn&& alpha_at, std::uint64_t first,
                                        std::uint64_t last) {
    SchedulePartialSums out;
    double cs = 0.0, cq = 0.0;
    for (std::uint64_t t = first; t <= last; ++t) {
        const double a = alpha_at(t);
        double y = a - cs;
        double u = out.sum + y;
        cs = (u - out.sum) - y;
        out.sum = u;
        const double a2 = a * a;
        y = a2 - cq;
        u = out.sum_sq + y;
        cq = (u - out.sum_sq) - y;
        out.sum_sq = u;
    }
    return out;
}

/**
 * The online scheme as a simulation policy: greedy decisions from the
 * current tables, with each slot's table update deferred until the next
 * slot's decision is known (the update targets need the next post-decision
 * queues).
 */
class LearnerPolicy final : public Policy {
public:
    LearnerPolicy(const SystemModel& model, LearnerConfig config);

    Decision decide(const GlobalState& state, std::optional<int> prev_rrh, Rng& rng) override;
    void post_decision(const GlobalState& state, const Decision& decision,
                       int delivered) override;
    void end_slot(const SlotObservation& obs) override;
    std::string name() const override { return "proposed"; }
    const ValueTables* value_tables() const override { return &tables_; }

    ValueTables& tables() { return tables_; }
    const LearnerConfig& config() const { return config_; }

    /// What the most recent post_decision call changed, for probes/tests.
    struct LastUpdate {
        bool applied = false;
        int cu_q = 0;
        double cu_delta = 0.0;
        int rrh = 0;
        int rrh_f = 0;
        int rrh_a = 0;
        int rrh_q = 0;
        double rrh_delta = 0.0;
    };
    const LastUpdate& last_update() const { return last_; }

private:
    const SystemModel* model_;
    LearnerConfig config_;
    ValueTables tables_;
    TransitionRecord pending_{};
    bool pending_active_ = false;
    PostDecisionState post_{};
    bool have_post_ = false;
    LastUpdate last_{};
};

} // namespace cransched
