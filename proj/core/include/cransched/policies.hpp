#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "cransched/exact.hpp"
#include "cransched/model.hpp"
#include "cransched/rng.hpp"

namespace cransched {

class ValueTables; // learning tables, exposed for tracing

/// Everything a policy may observe at the end of a slot.
struct SlotObservation {
    std::uint64_t slot = 0;   // 1-based slot index
    GlobalState state;        // pre-decision state of this slot
    std::optional<int> prev_rrh; // association entering the slot
    Decision decision;        // decision actually applied (after clamping)
    int delivered = 0;
    int arrivals = 0;
    int drops = 0;
    GlobalState next;         // next slot's pre-decision state, links advanced
    double handover_time = 0.0;
};

/**
 * Per-slot decision procedure. The runner drives each slot in this order:
 * decide -> post_decision (after the decision is clamped and the delivery
 * computed) -> end_slot (with the realized transition). Stateless policies
 * only implement decide; the learner uses the two hooks to sequence its
 * table updates one slot behind the decisions.
 */
class Policy {
public:
    virtual ~Policy() = default;

    virtual Decision decide(const GlobalState& state, std::optional<int> prev_rrh,
                            Rng& rng) = 0;
    virtual void post_decision(const GlobalState& state, const Decision& decision,
                               int delivered) {
        (void)state;
        (void)decision;
        (void)delivered;
    }
    virtual void end_slot(const SlotObservation& obs) { (void)obs; }

    virtual std::string name() const = 0;

    /// Learning policies expose their tables for tracing; others return null.
    virtual const ValueTables* value_tables() const { return nullptr; }
};

/// Serves the RRH with the largest rate sum r1 + r2 (ties to the lowest
/// index) and schedules the full admissible amount.
class MaxRatePolicy final : public Policy {
public:
    explicit MaxRatePolicy(const SystemModel& model) : model_(&model) {}
    Decision decide(const GlobalState& state, std::optional<int> prev_rrh, Rng& rng) override;
    std::string name() const override { return "max_rate"; }

private:
    const SystemModel* model_;
};

/// Serves the RRH with the longest local queue (ties to the lowest index)
/// and schedules the full admissible amount.
class MaxQueuePolicy final : public Policy {
public:
    explicit MaxQueuePolicy(const SystemModel& model) : model_(&model) {}
    Decision decide(const GlobalState& state, std::optional<int> prev_rrh, Rng& rng) override;
    std::string name() const override { return "max_queue"; }

private:
    const SystemModel* model_;
};

/// Uniform RRH choice, then uniform l1 in [0, bound].
class RandomPolicy final : public Policy {
public:
    explicit RandomPolicy(const SystemModel& model) : model_(&model) {}
    Decision decide(const GlobalState& state, std::optional<int> prev_rrh, Rng& rng) override;
    std::string name() const override { return "random"; }

private:
    const SystemModel* model_;
};

/// Table lookup into a solved instance. Decisions solved under the
/// worst-case handover convention are feasible under the true dynamics
/// because the true rho is never larger.
class ExactPolicy final : public Policy {
public:
    ExactPolicy(const SystemModel& model, std::shared_ptr<const ExactSolution> solution);
    Decision decide(const GlobalState& state, std::optional<int> prev_rrh, Rng& rng) override;
    std::string name() const override { return "exact"; }
    const ExactSolution& solution() const { return *solution_; }

private:
    const SystemModel* model_;
    std::shared_ptr<const ExactSolution> solution_;
};

/// Bare decision rules behind the policy classes, for direct testing.
Decision baseline_max_rate(const SystemModel& model, const GlobalState& state,
                           std::optional<int> prev_rrh);
Decision baseline_max_queue(const SystemModel& model, const GlobalState& state,
                            std::optional<int> prev_rrh);
Decision baseline_random(const SystemModel& model, const GlobalState& state,
                         std::optional<int> prev_rrh, Rng& rng);

} // namespace cransched
