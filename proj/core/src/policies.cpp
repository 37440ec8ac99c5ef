#include "cransched/policies.hpp"

#include <stdexcept>

namespace cransched {

namespace {

double actual_rho(const SystemModel& model, const GlobalState& state,
                  std::optional<int> prev_rrh, int rrh) {
    return model.rho(state, HandoverState{prev_rrh, false}, rrh);
}

} // namespace

Decision baseline_max_rate(const SystemModel& model, const GlobalState& state,
                           std::optional<int> prev_rrh) {
    int best = 0;
    double best_sum = -1.0;
    for (int j = 0; j < model.rrh_count(); ++j) {
        const double sum = model.fronthaul_rate(j, state.locals[j].link) +
                           model.access_rate(j, state.locals[j].link);
        if (sum > best_sum) {
            best_sum = sum;
            best = j;
        }
    }
    const double rho = actual_rho(model, state, prev_rrh, best);
    return Decision{best, model.l1_bound(state, best, rho)};
}

Decision baseline_max_queue(const SystemModel& model, const GlobalState& state,
                            std::optional<int> prev_rrh) {
    int best = 0;
    int best_q = -1;
    for (int j = 0; j < model.rrh_count(); ++j) {
        if (state.locals[j].q_rrh > best_q) {
            best_q = state.locals[j].q_rrh;
            best = j;
        }
    }
    const double rho = actual_rho(model, state, prev_rrh, best);
    return Decision{best, model.l1_bound(state, best, rho)};
}

Decision baseline_random(const SystemModel& model, const GlobalState& state,
                         std::optional<int> prev_rrh, Rng& rng) {
    const int j = rng.uniform_int(model.rrh_count());
    const double rho = actual_rho(model, state, prev_rrh, j);
    const int bound = model.l1_bound(state, j, rho);
    return Decision{j, rng.uniform_int(bound + 1)};
}

Decision MaxRatePolicy::decide(const GlobalState& state, std::optional<int> prev_rrh, Rng& rng) {
    (void)rng;
    return baseline_max_rate(*model_, state, prev_rrh);
}

Decision MaxQueuePolicy::decide(const GlobalState& state, std::optional<int> prev_rrh,
                                Rng& rng) {
    (void)rng;
    return baseline_max_queue(*model_, state, prev_rrh);
}

Decision RandomPolicy::decide(const GlobalState& state, std::optional<int> prev_rrh, Rng& rng) {
    return baseline_random(*model_, state, prev_rrh, rng);
}

ExactPolicy::ExactPolicy(const SystemModel& model,
                         std::shared_ptr<const ExactSolution> solution)
    : model_(&model), solution_(std::move(solution)) {
    if (!solution_)
        throw std::invalid_argument("exact policy needs a solution");
    if (solution_->policy.size() != solution_->indexer.size())
        throw std::invalid_argument("solution policy table has the wrong size");
}

Decision ExactPolicy::decide(const GlobalState& state, std::optional<int> prev_rrh, Rng& rng) {
    (void)rng;
    const std::size_t index = solution_->indexer.encode(state, prev_rrh);
    const Decision d = solution_->policy[index];
    if (d.rrh < 0)
        throw std::runtime_error("simulation reached a state the solver never solved");
    return d;
}

} // namespace cransched
