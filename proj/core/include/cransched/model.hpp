#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "cransched/channel.hpp"
#include "cransched/dynamics.hpp"

namespace cransched {

/**
 * Full problem instance: parameters, the 2J link chains (fronthaul and
 * access per RRH, interleaved as fronthaul_0, access_0, fronthaul_1, ...)
 * and the arrival process. Immutable after construction.
 */
class SystemModel {
public:
    SystemModel(SystemParams params, std::vector<LinkChain> links, TrafficModel traffic)
        : params_(std::move(params)), links_(std::move(links)), traffic_(std::move(traffic)) {
        params_.validate();
        if (static_cast<int>(links_.size()) != 2 * params_.rrh_count)
            throw std::invalid_argument("need exactly two link chains per RRH");
    }

    const SystemParams& params() const { return params_; }
    const TrafficModel& traffic() const { return traffic_; }
    const std::vector<LinkChain>& links() const { return links_; }
    int rrh_count() const { return params_.rrh_count; }

    const LinkChain& fronthaul(int rrh) const { return links_[2 * static_cast<std::size_t>(rrh)]; }
    const LinkChain& access(int rrh) const { return links_[2 * static_cast<std::size_t>(rrh) + 1]; }

    double fronthaul_rate(int rrh, const LinkPairState& s) const {
        return fronthaul(rrh).space().rate(s.fronthaul);
    }
    double access_rate(int rrh, const LinkPairState& s) const {
        return access(rrh).space().rate(s.access);
    }

    /// Handover time for serving `rrh` with its current link pair.
    double rho(const GlobalState& state, const HandoverState& ctx, int rrh) const {
        return slot_handover_cost(ctx, rrh, fronthaul_rate(rrh, state.locals[rrh].link),
                                  access_rate(rrh, state.locals[rrh].link), params_);
    }

    /// Worst-case handover time for `rrh`: assumes the association changed.
    double rho_worst_case(const GlobalState& state, int rrh) const {
        return handover_cost(std::nullopt, rrh, fronthaul_rate(rrh, state.locals[rrh].link),
                             access_rate(rrh, state.locals[rrh].link), params_);
    }

    int l1_bound(const GlobalState& state, int rrh, double rho_value) const {
        return l1_upper_bound(state.q_cu, state.locals[rrh].q_rrh, rho_value,
                              fronthaul_rate(rrh, state.locals[rrh].link), params_);
    }

    int delivered(const GlobalState& state, int rrh, int l1, double rho_value) const {
        return delivered_packets(state.locals[rrh].q_rrh, l1, rho_value,
                                 fronthaul_rate(rrh, state.locals[rrh].link),
                                 access_rate(rrh, state.locals[rrh].link), params_);
    }

    /// State with zero queues and link pairs drawn from the stationary
    /// distributions, the standard warm start.
    GlobalState initial_state(Rng& rng) const;

    /// State with zero queues and all links in state 0 (deterministic).
    GlobalState zero_state() const;

    /// Advances every link chain one slot in place.
    void advance_links(GlobalState& state, Rng& rng) const;

private:
    SystemParams params_;
    std::vector<LinkChain> links_;
    TrafficModel traffic_;
};

/// J RRHs sharing one chain profile on all 2J links.
SystemModel make_uniform_model(SystemParams params, const LinkChain& profile,
                               TrafficModel traffic);

} // namespace cransched
