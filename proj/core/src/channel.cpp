#include "cransched/channel.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace cransched {

namespace {
constexpr double kRowSumTol = 1e-12;
}

LinkStateSpace::LinkStateSpace(std::vector<std::string> names, std::vector<double> rates)
    : names_(std::move(names)), rates_(std::move(rates)) {
    if (rates_.empty())
        throw std::invalid_argument("LinkStateSpace: needs at least one state");
    if (names_.size() != rates_.size())
        throw std::invalid_argument("LinkStateSpace: names/rates size mismatch");
    std::unordered_set<std::string> seen;
    for (const auto& n : names_)
        if (!seen.insert(n).second)
            throw std::invalid_argument("LinkStateSpace: duplicate state name '" + n + "'");
    for (double r : rates_)
        if (!(std::isfinite(r) && r >= 0.0))
            throw std::invalid_argument("LinkStateSpace: rates must be finite and >= 0");
}

LinkChain::LinkChain(LinkStateSpace space, const std::vector<std::vector<double>>& transition)
    : space_(std::move(space)) {
    const auto n = static_cast<std::size_t>(space_.size());
    if (transition.size() != n)
        throw std::invalid_argument("LinkChain: transition matrix must be |states| x |states|");
    flat_.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        if (transition[i].size() != n)
            throw std::invalid_argument("LinkChain: transition matrix must be square");
        double row_sum = 0.0;
        for (double p : transition[i]) {
            if (!(p >= 0.0 && p <= 1.0))
                throw std::invalid_argument("LinkChain: transition entries must be in [0,1]");
            row_sum += p;
            flat_.push_back(p);
        }
        if (std::abs(row_sum - 1.0) > kRowSumTol)
            throw std::invalid_argument("LinkChain: transition row " + std::to_string(i) +
                                        " sums to " + std::to_string(row_sum));
    }
}

std::vector<double> LinkChain::stationary() const {
    const int n = size();
    std::vector<double> pi(static_cast<std::size_t>(n), 1.0 / n);
    std::vector<double> next(static_cast<std::size_t>(n), 0.0);
    for (int iter = 0; iter < 1000000; ++iter) {
        // one step of pi <- pi * (P + I) / 2
        for (int j = 0; j < n; ++j) {
            double acc = 0.5 * pi[static_cast<std::size_t>(j)];
            for (int i = 0; i < n; ++i)
                acc += 0.5 * pi[static_cast<std::size_t>(i)] * transition(i, j);
            next[static_cast<std::size_t>(j)] = acc;
        }
        double delta = 0.0;
        for (int j = 0; j < n; ++j)
            delta += std::abs(next[static_cast<std::size_t>(j)] - pi[static_cast<std::size_t>(j)]);
        pi.swap(next);
        if (delta < 1e-14)
            break;
    }
    // renormalize away accumulated rounding
    double total = 0.0;
    for (double p : pi)
        total += p;
    for (double& p : pi)
        p /= total;
    return pi;
}

int sample_next(const LinkChain& chain, int current, Rng& rng) {
    const int n = chain.size();
    if (current < 0 || current >= n)
        throw std::invalid_argument("sample_next: state index out of bounds");
    const double u = rng.uniform01();
    double cdf = 0.0;
    for (int s = 0; s < n; ++s) {
        cdf += chain.transition(current, s);
        if (u < cdf)
            return s;
    }
    return n - 1; // u landed in the rounding slack of the last entry
}

double joint_transition_prob(const std::vector<LinkChain>& chains,
                             std::span<const LinkPairState> from,
                             std::span<const LinkPairState> to) {
    if (chains.size() != 2 * from.size() || from.size() != to.size())
        throw std::invalid_argument("joint_transition_prob: chains/states dimension mismatch");
    double p = 1.0;
    for (std::size_t j = 0; j < from.size(); ++j) {
        const LinkChain& fh = chains[2 * j];
        const LinkChain& ac = chains[2 * j + 1];
        p *= fh.transition(from[j].fronthaul, to[j].fronthaul);
        p *= ac.transition(from[j].access, to[j].access);
    }
    return p;
}

LinkChain default_profile_chain() {
    LinkStateSpace space({"Outage", "NLOS", "LOS"}, {0.0, 3.0, 8.0});
    // Birth-death form keeps the stationary law at (1/4, 1/2, 1/4).
    const std::vector<std::vector<double>> sticky = {
        {0.6, 0.4, 0.0},
        {0.2, 0.6, 0.2},
        {0.0, 0.4, 0.6},
    };
    return LinkChain(std::move(space), sticky);
}

} // namespace cransched
