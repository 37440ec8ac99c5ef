#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "cransched/channel.hpp"
#include "cransched/rng.hpp"

namespace cransched {

/// Sentinel for an unbounded handover time (signalling over a zero-rate hop).
inline constexpr double kInfiniteTime = std::numeric_limits<double>::infinity();

/// Epsilon added before flooring sub-slot packet counts, so results do not
/// flip across platforms when a product like 0.5 * 6 lands on an integer.
inline constexpr double kFloorEps = 1e-9;

struct SystemParams {
    int rrh_count = 1;        // J
    int q_max = 10;           // buffer bound, packets
    double slot = 1.0;        // slot duration, time units
    double signalling = 0.5;  // handover signalling amount, packets
    double drop_weight = 0.0; // objective weight on the drop rate
    double packet_size = 1.0; // bits; rates are pre-normalized, kept for documentation

    void validate() const;
};

struct LocalState {
    LinkPairState link;
    int q_rrh = 0;
    bool operator==(const LocalState&) const = default;
};

/// Global network state: CU queue plus one (link pair, queue) per RRH.
struct GlobalState {
    int q_cu = 0;
    std::vector<LocalState> locals;

    int total_queue() const {
        int sum = q_cu;
        for (const auto& l : locals)
            sum += l.q_rrh;
        return sum;
    }
    bool operator==(const GlobalState&) const = default;
};

/// One slot's control decision: serving RRH index and packets to push to it.
struct Decision {
    int rrh = 0;
    int l1 = 0;
    bool operator==(const Decision&) const = default;
};

/// Association context for the handover cost: the previous slot's RRH, or
/// none before the first association. `zero_cost` waives the cost entirely
/// (the optional "free first association" convention).
struct HandoverState {
    std::optional<int> prev_rrh;
    bool zero_cost = false;
};

/**
 * i.i.d. per-slot packet arrivals with an exactly-normalized truncated pmf.
 *
 * The Poisson pmf is truncated at the smallest point whose CDF reaches
 * 1 - 1e-12 and the tail is folded into the last atom, so expectations over
 * the pmf are finite sums and the mass adds up to one exactly. The
 * deterministic kind is a single-atom pmf, useful as a degenerate case in
 * diagnostics.
 */
class TrafficModel {
public:
    static TrafficModel poisson(double lambda);
    static TrafficModel deterministic(int value);

    double lambda() const { return lambda_; }
    int a_max() const { return static_cast<int>(pmf_.size()) - 1; }
    const std::vector<double>& pmf() const { return pmf_; }

    /// Inverse-CDF draw from the truncated pmf; always <= a_max.
    int sample(Rng& rng) const;

private:
    TrafficModel(double lambda, std::vector<double> pmf)
        : lambda_(lambda), pmf_(std::move(pmf)) {}
    double lambda_ = 0.0;
    std::vector<double> pmf_;
};

/**
 * Handover signalling time: 0 when the association is unchanged, otherwise
 * zeta * (1/r1 + 1/r2). A zero rate on either hop makes the change
 * impossible within any slot, returned as kInfiniteTime.
 */
double handover_cost(std::optional<int> prev_rrh, int rrh, double fronthaul_rate,
                     double access_rate, const SystemParams& params);

/// handover_cost with the zero-cost override applied.
double slot_handover_cost(const HandoverState& ctx, int rrh, double fronthaul_rate,
                          double access_rate, const SystemParams& params);

/**
 * Largest admissible L1: min of the CU backlog, the space left in the RRH
 * buffer, and the packets the fronthaul can carry in the remaining slot
 * time. An infinite rho empties the time budget, never the other terms.
 */
int l1_upper_bound(int q_cu, int q_rrh, double rho, double fronthaul_rate,
                   const SystemParams& params);

/**
 * Packets the serving RRH delivers in the third sub-slot: limited by its
 * backlog plus the fresh L1, and by the access rate over the time left after
 * signalling and the fronthaul transfer. With l1 = 0 the fronthaul time is 0
 * by convention, even at rate 0.
 */
int delivered_packets(int q_rrh, int l1, double rho, double fronthaul_rate,
                      double access_rate, const SystemParams& params);

/// CU queue update: next length clamped at q_max, overflow counted as drops.
/// Pure integer form, valid for any nonnegative inputs.
struct CuQueueStep {
    int q_next = 0;
    int drops = 0;
};
CuQueueStep cu_queue_update(int q_cu, int arrivals, int l1, int q_max);

/**
 * Applies one slot's queue evolution. Link states in the result are
 * unchanged; advancing them is the caller's job via sample_next. Throws
 * std::invalid_argument if the decision is not feasible for the state.
 */
std::pair<GlobalState, int> step_queues(const GlobalState& state, const Decision& decision,
                                        int arrivals, int delivered,
                                        const SystemParams& params);

/// Per-slot cost: total queue length plus drop_weight times the expected
/// drops under the arrival pmf.
double expected_slot_cost(const GlobalState& state, const Decision& decision,
                          const TrafficModel& traffic, const SystemParams& params);

int sample_arrivals(const TrafficModel& traffic, Rng& rng);

/// Outcome of one slot before the link advance.
struct SlotOutcome {
    GlobalState next;
    int delivered = 0;
    int drops = 0;
    double handover_time = 0.0;
};

} // namespace cransched
