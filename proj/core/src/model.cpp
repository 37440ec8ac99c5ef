#include "cransched/model.hpp"

namespace cransched {

namespace {

int sample_stationary(const LinkChain& chain, Rng& rng) {
    const std::vector<double> pi = chain.stationary();
    const double u = rng.uniform01();
    double cdf = 0.0;
    for (std::size_t s = 0; s < pi.size(); ++s) {
        cdf += pi[s];
        if (u < cdf)
            return static_cast<int>(s);
    }
    return static_cast<int>(pi.size()) - 1;
}

} // namespace

GlobalState SystemModel::initial_state(Rng& rng) const {
    GlobalState state;
    state.q_cu = 0;
    state.locals.resize(static_cast<std::size_t>(params_.rrh_count));
    for (int j = 0; j < params_.rrh_count; ++j) {
        state.locals[j].q_rrh = 0;
        state.locals[j].link.fronthaul = sample_stationary(fronthaul(j), rng);
        state.locals[j].link.access = sample_stationary(access(j), rng);
    }
    return state;
}

GlobalState SystemModel::zero_state() const {
    GlobalState state;
    state.q_cu = 0;
    state.locals.resize(static_cast<std::size_t>(params_.rrh_count));
    return state;
}

void SystemModel::advance_links(GlobalState& state, Rng& rng) const {
    for (int j = 0; j < params_.rrh_count; ++j) {
        state.locals[j].link.fronthaul =
            sample_next(fronthaul(j), state.locals[j].link.fronthaul, rng);
        state.locals[j].link.access = sample_next(access(j), state.locals[j].link.access, rng);
    }
}

SystemModel make_uniform_model(SystemParams params, const LinkChain& profile,
                               TrafficModel traffic) {
    std::vector<LinkChain> links(static_cast<std::size_t>(2 * params.rrh_count), profile);
    return SystemModel(std::move(params), std::move(links), std::move(traffic));
}

} // namespace cransched
