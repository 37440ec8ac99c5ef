#include "cransched/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cransched {

namespace {

int stable_floor(double x) {
    return static_cast<int>(std::floor(x + kFloorEps));
}

constexpr double kPmfTailMass = 1e-12;

} // namespace

void SystemParams::validate() const {
    if (rrh_count < 1)
        throw std::invalid_argument("rrh_count must be at least 1");
    if (q_max < 1)
        throw std::invalid_argument("q_max must be at least 1");
    if (slot <= 0.0)
        throw std::invalid_argument("slot duration must be positive");
    if (signalling < 0.0)
        throw std::invalid_argument("signalling amount must be nonnegative");
    if (drop_weight < 0.0)
        throw std::invalid_argument("drop_weight must be nonnegative");
    if (packet_size <= 0.0)
        throw std::invalid_argument("packet_size must be positive");
}

TrafficModel TrafficModel::poisson(double lambda) {
    if (lambda < 0.0)
        throw std::invalid_argument("lambda must be nonnegative");
    std::vector<double> pmf;
    if (lambda == 0.0) {
        pmf = {1.0};
        return TrafficModel(lambda, std::move(pmf));
    }
    // p(0) = exp(-lambda), p(k) = p(k-1) * lambda / k. Extend until the CDF
    // reaches 1 - kPmfTailMass, then fold the tail into the last atom.
    double p = std::exp(-lambda);
    double cdf = p;
    pmf.push_back(p);
    while (cdf < 1.0 - kPmfTailMass) {
        const int k = static_cast<int>(pmf.size());
        p *= lambda / k;
        cdf += p;
        pmf.push_back(p);
        if (k > 100000)
            throw std::invalid_argument("lambda too large for pmf truncation");
    }
    pmf.back() += 1.0 - cdf;
    return TrafficModel(lambda, std::move(pmf));
}

TrafficModel TrafficModel::deterministic(int value) {
    if (value < 0)
        throw std::invalid_argument("deterministic arrival must be nonnegative");
    std::vector<double> pmf(static_cast<std::size_t>(value) + 1, 0.0);
    pmf.back() = 1.0;
    return TrafficModel(static_cast<double>(value), std::move(pmf));
}

int TrafficModel::sample(Rng& rng) const {
    const double u = rng.uniform01();
    double cdf = 0.0;
    for (std::size_t k = 0; k < pmf_.size(); ++k) {
        cdf += pmf_[k];
        if (u < cdf)
            return static_cast<int>(k);
    }
    return static_cast<int>(pmf_.size()) - 1;
}

double handover_cost(std::optional<int> prev_rrh, int rrh, double fronthaul_rate,
                     double access_rate, const SystemParams& params) {
    if (prev_rrh.has_value() && *prev_rrh == rrh)
        return 0.0;
    if (params.signalling <= 0.0)
        return 0.0; // nothing to exchange, so a dead hop costs no time either
    if (fronthaul_rate <= 0.0 || access_rate <= 0.0)
        return kInfiniteTime;
    return params.signalling * (1.0 / fronthaul_rate + 1.0 / access_rate);
}

double slot_handover_cost(const HandoverState& ctx, int rrh, double fronthaul_rate,
                          double access_rate, const SystemParams& params) {
    if (ctx.zero_cost)
        return 0.0;
    return handover_cost(ctx.prev_rrh, rrh, fronthaul_rate, access_rate, params);
}

int l1_upper_bound(int q_cu, int q_rrh, double rho, double fronthaul_rate,
                   const SystemParams& params) {
    const double remaining = params.slot - rho;
    int by_time = 0;
    if (remaining > 0.0 && fronthaul_rate > 0.0)
        by_time = stable_floor(remaining * fronthaul_rate);
    const int by_space = params.q_max - q_rrh;
    return std::max(0, std::min({q_cu, by_space, by_time}));
}

int delivered_packets(int q_rrh, int l1, double rho, double fronthaul_rate,
                      double access_rate, const SystemParams& params) {
    double transfer_time = 0.0;
    if (l1 > 0) {
        if (fronthaul_rate <= 0.0)
            return 0; // infeasible push; callers guard via l1_upper_bound
        transfer_time = static_cast<double>(l1) / fronthaul_rate;
    }
    const double remaining = params.slot - rho - transfer_time;
    int by_time = 0;
    if (remaining > 0.0 && access_rate > 0.0)
        by_time = stable_floor(remaining * access_rate);
    return std::max(0, std::min(q_rrh + l1, by_time));
}

CuQueueStep cu_queue_update(int q_cu, int arrivals, int l1, int q_max) {
    const int backlog = q_cu + arrivals - l1;
    CuQueueStep step;
    step.q_next = std::clamp(backlog, 0, q_max);
    step.drops = std::max(0, backlog - q_max);
    return step;
}

std::pair<GlobalState, int> step_queues(const GlobalState& state, const Decision& decision,
                                        int arrivals, int delivered,
                                        const SystemParams& params) {
    const int j = decision.rrh;
    if (j < 0 || j >= static_cast<int>(state.locals.size()))
        throw std::invalid_argument("decision names RRH " + std::to_string(j) +
                                    " outside the network");
    if (decision.l1 < 0 || decision.l1 > state.q_cu)
        throw std::invalid_argument("l1 outside [0, q_cu]");
    if (state.locals[j].q_rrh + decision.l1 > params.q_max)
        throw std::invalid_argument("l1 would overflow the RRH buffer");
    if (arrivals < 0)
        throw std::invalid_argument("arrivals must be nonnegative");
    if (delivered < 0 || delivered > state.locals[j].q_rrh + decision.l1)
        throw std::invalid_argument("delivered outside [0, q_rrh + l1]");

    GlobalState next = state;
    const CuQueueStep cu = cu_queue_update(state.q_cu, arrivals, decision.l1, params.q_max);
    next.q_cu = cu.q_next;
    next.locals[j].q_rrh = state.locals[j].q_rrh + decision.l1 - delivered;
    return {std::move(next), cu.drops};
}

double expected_slot_cost(const GlobalState& state, const Decision& decision,
                          const TrafficModel& traffic, const SystemParams& params) {
    double expected_drops = 0.0;
    const auto& pmf = traffic.pmf();
    for (std::size_t a = 0; a < pmf.size(); ++a) {
        const int over = state.q_cu + static_cast<int>(a) - decision.l1 - params.q_max;
        if (over > 0)
            expected_drops += pmf[a] * over;
    }
    return static_cast<double>(state.total_queue()) + params.drop_weight * expected_drops;
}

int sample_arrivals(const TrafficModel& traffic, Rng& rng) {
    return traffic.sample(rng);
}

} // namespace cransched
