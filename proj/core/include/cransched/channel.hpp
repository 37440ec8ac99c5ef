#pragma once

#include <compare>
#include <span>
#include <string>
#include <vector>

#include "cransched/rng.hpp"

namespace cransched {

/**
 * Named link states with one nonnegative service rate per state.
 *
 * Rates are stored already normalized by the packet size, i.e. in packets
 * per unit time. The default profile names its states Outage / NLOS / LOS.
 */
class LinkStateSpace {
public:
    LinkStateSpace(std::vector<std::string> names, std::vector<double> rates);

    int size() const { return static_cast<int>(rates_.size()); }
    const std::string& name(int s) const { return names_[static_cast<std::size_t>(s)]; }
    double rate(int s) const { return rates_[static_cast<std::size_t>(s)]; }
    const std::vector<std::string>& names() const { return names_; }
    const std::vector<double>& rates() const { return rates_; }

private:
    std::vector<std::string> names_;
    std::vector<double> rates_;
};

/**
 * Finite-state Markov chain over a LinkStateSpace.
 *
 * The transition matrix is validated at construction: every row must sum to
 * one within 1e-12 and every entry must lie in [0, 1]. Immutable afterwards,
 * so instances can be shared read-only across parallel runs.
 */
class LinkChain {
public:
    LinkChain(LinkStateSpace space, const std::vector<std::vector<double>>& transition);

    int size() const { return space_.size(); }
    const LinkStateSpace& space() const { return space_; }
    double rate(int s) const { return space_.rate(s); }

    double transition(int from, int to) const {
        return flat_[static_cast<std::size_t>(from) * static_cast<std::size_t>(size()) +
                     static_cast<std::size_t>(to)];
    }

    /// Stationary distribution, computed by power iteration on the lazy
    /// chain (P + I)/2 so periodic matrices converge too.
    std::vector<double> stationary() const;

private:
    LinkStateSpace space_;
    std::vector<double> flat_; // row-major
};

/// Joint state of one RRH's two hops: (fronthaul, access) state indices.
struct LinkPairState {
    int fronthaul = 0;
    int access = 0;
    auto operator<=>(const LinkPairState&) const = default;
};

/// Draws the next state from row `current` of the chain's matrix.
int sample_next(const LinkChain& chain, int current, Rng& rng);

/**
 * Probability of a joint one-slot transition across all 2J links.
 *
 * `chains` is interleaved per RRH: fronthaul_0, access_0, fronthaul_1, ...
 * The result is the product of the per-link factors, since all links evolve
 * independently.
 */
double joint_transition_prob(const std::vector<LinkChain>& chains,
                             std::span<const LinkPairState> from,
                             std::span<const LinkPairState> to);

/**
 * The documented default link profile: three states (Outage, NLOS, LOS)
 * with rates 0, 3 and 8 packets per unit time, self-transition probability
 * 0.6 and the remaining mass split evenly toward adjacent states. These
 * numbers are configuration defaults, not measured channel parameters.
 */
LinkChain default_profile_chain();

} // namespace cransched
