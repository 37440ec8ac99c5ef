#pragma once

#include <cstdint>
#include <vector>

#include "cransched/exact.hpp"
#include "cransched/learning.hpp"
#include "cransched/model.hpp"

// Independent reference implementations for cross-checking the library.
// Everything here is written straight off the formula definitions, sharing
// no code with core/ beyond the public types, so an agreement test compares
// two genuinely separate derivations.

namespace oracle {

// Stationary distribution by direct linear solve of pi P = pi, sum pi = 1
// (Gaussian elimination, partial pivoting). No power iteration involved.
std::vector<double> stationary_direct(const cransched::LinkChain& chain);

// Literal transcriptions of the slot formulas. The shared conventions are
// part of the contract and are repeated here on purpose: 1/0 = +inf for the
// signalling term, a zero-packet transfer takes zero fronthaul time even at
// rate 0, and sub-slot packet counts are floored after adding 1e-9.
double handover_time(bool changed, double zeta, double r1, double r2);
int l1_cap(int q_cu, int q_rrh, double rho, double r1, int q_max, double slot);
int delivered(int q_rrh, int l1, double rho, double r1, double r2, double slot);

struct CuStep {
    int q_next;
    int drops;
};
CuStep cu_step(int q_cu, int arrivals, int l1, int q_max);

// L2-optimal additive fit to the exact post-decision value on the full
// post-state grid (grand mean plus main effects; exact because the grid is
// a product and the weights are uniform). The post-decision value is
//   F(post) = gamma * E_A[drops] + E[V(next) | post]
// with V from `sol` and the expectation over arrivals and the joint link
// transition. Post states whose successors include a state the solver never
// reached are skipped. The result is packed into ValueTables so it can fuel
// select_action directly.
cransched::ValueTables additive_projection(const cransched::SystemModel& model,
                                           const cransched::ExactSolution& sol);

// Standard deviation of each disjoint window of `window` consecutive
// samples; a trailing partial window is dropped.
std::vector<double> window_sds(const std::vector<double>& series, std::size_t window);

double mean(const std::vector<double>& v);
double sample_sd(const std::vector<double>& v);
double standard_error(const std::vector<double>& v);

} // namespace oracle
