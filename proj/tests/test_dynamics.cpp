#include <doctest.h>

#include <cmath>
#include <optional>
#include <stdexcept>

#include "cransched/dynamics.hpp"
#include "support/oracles.hpp"

using namespace cransched;

namespace {

SystemParams params_q(int q_max, double slot = 1.0, double zeta = 0.5, double gamma = 0.0) {
    SystemParams p;
    p.rrh_count = 1;
    p.q_max = q_max;
    p.slot = slot;
    p.signalling = zeta;
    p.drop_weight = gamma;
    return p;
}

GlobalState one_rrh_state(int q_cu, int q_rrh, int f = 0, int a = 0) {
    GlobalState s;
    s.q_cu = q_cu;
    s.locals.push_back(LocalState{LinkPairState{f, a}, q_rrh});
    return s;
}

} // namespace

TEST_SUITE("dynamics") {

TEST_CASE("handover cost: staying is free") {
    const auto p = params_q(10);
    CHECK(handover_cost(1, 1, 2.0, 4.0, p) == 0.0);
    CHECK(handover_cost(0, 0, 0.0, 0.0, p) == 0.0); // even on dead links
}

TEST_CASE("handover cost: switching pays the signalling time on both hops") {
    const auto p = params_q(10, 1.0, 0.5);
    CHECK(handover_cost(0, 1, 2.0, 4.0, p) == doctest::Approx(0.375).epsilon(1e-15));
    // The first association (no previous RRH) pays as well.
    CHECK(handover_cost(std::nullopt, 1, 2.0, 4.0, p) == doctest::Approx(0.375));
}

TEST_CASE("handover cost: switching onto a dead hop is unbounded") {
    const auto p = params_q(10);
    CHECK(handover_cost(0, 1, 0.0, 4.0, p) == kInfiniteTime);
    CHECK(handover_cost(0, 1, 4.0, 0.0, p) == kInfiniteTime);
    CHECK(std::isinf(handover_cost(std::nullopt, 0, 0.0, 0.0, p)));
}

TEST_CASE("handover cost: zero signalling makes every switch free") {
    const auto p = params_q(10, 1.0, 0.0);
    CHECK(handover_cost(0, 1, 2.0, 4.0, p) == 0.0);
    CHECK(handover_cost(0, 1, 0.0, 0.0, p) == 0.0);
}

TEST_CASE("slot handover cost honors the zero-cost override") {
    const auto p = params_q(10);
    HandoverState fresh{std::nullopt, false};
    HandoverState waived{std::nullopt, true};
    CHECK(slot_handover_cost(fresh, 0, 2.0, 4.0, p) == doctest::Approx(0.375));
    CHECK(slot_handover_cost(waived, 0, 2.0, 4.0, p) == 0.0);
    HandoverState same{0, false};
    CHECK(slot_handover_cost(same, 0, 2.0, 4.0, p) == 0.0);
}

TEST_CASE("transfer bound: the three-way minimum") {
    // min{ CU backlog 5, buffer room 10-8=2, time floor((1-0.375)*8)=5 } = 2
    const auto p = params_q(10);
    CHECK(l1_upper_bound(5, 8, 0.375, 8.0, p) == 2);
}

TEST_CASE("transfer bound: empty CU queue and exhausted slot both give zero") {
    const auto p = params_q(10);
    CHECK(l1_upper_bound(0, 3, 0.0, 8.0, p) == 0);
    CHECK(l1_upper_bound(5, 3, kInfiniteTime, 8.0, p) == 0);
    CHECK(l1_upper_bound(5, 3, 2.0, 8.0, p) == 0); // rho beyond the slot
    CHECK(l1_upper_bound(5, 3, 0.0, 0.0, p) == 0); // dead fronthaul
    CHECK(l1_upper_bound(5, 10, 0.0, 8.0, p) == 0); // full RRH buffer
}

TEST_CASE("transfer bound: monotone in handover time and fronthaul rate") {
    const auto p = params_q(10);
    int prev = l1_upper_bound(9, 0, 0.0, 6.0, p);
    for (double rho : {0.1, 0.25, 0.5, 0.75, 0.9, 1.0}) {
        const int b = l1_upper_bound(9, 0, rho, 6.0, p);
        CHECK(b <= prev);
        prev = b;
    }
    prev = l1_upper_bound(9, 0, 0.25, 0.0, p);
    for (double rate : {1.0, 2.0, 4.0, 8.0, 16.0}) {
        const int b = l1_upper_bound(9, 0, 0.25, rate, p);
        CHECK(b >= prev);
        prev = b;
    }
}

TEST_CASE("transfer bound never overflows the RRH buffer") {
    const auto p = params_q(6);
    for (int q_cu = 0; q_cu <= 6; ++q_cu)
        for (int q_rrh = 0; q_rrh <= 6; ++q_rrh)
            for (double rho : {0.0, 0.3, 0.9})
                for (double rate : {0.0, 3.0, 11.0}) {
                    const int b = l1_upper_bound(q_cu, q_rrh, rho, rate, p);
                    CHECK(b >= 0);
                    CHECK(b <= q_cu);
                    CHECK(q_rrh + b <= p.q_max);
                }
}

TEST_CASE("floor of the time budget is stable when the product lands on an integer") {
    // (1 - 0.5) * 6 = 3.0 exactly: must count 3 packets, not 2, regardless
    // of rounding in the multiply.
    const auto p = params_q(10);
    CHECK(l1_upper_bound(9, 0, 0.5, 6.0, p) == 3);
    // 0.1 * 3 = 0.30000000000000004 in binary; the epsilon must not lift
    // it to 1 packet beyond the true floor... it stays 0.
    CHECK(l1_upper_bound(9, 0, 1.0 - 0.1, 3.0, p) == 0);
}

TEST_CASE("delivery: fronthaul time is deducted before the access hop drains") {
    // transfer = 2/4 = 0.5, remaining 0.5, floor(0.5*6)=3; min{2+2, 3} = 3
    const auto p = params_q(10);
    CHECK(delivered_packets(2, 2, 0.0, 4.0, 6.0, p) == 3);
}

TEST_CASE("delivery: degenerate cases give zero") {
    const auto p = params_q(10);
    CHECK(delivered_packets(0, 0, 0.0, 4.0, 6.0, p) == 0);  // nothing queued
    CHECK(delivered_packets(3, 1, 0.0, 4.0, 0.0, p) == 0);  // dead access hop
    CHECK(delivered_packets(3, 0, kInfiniteTime, 4.0, 6.0, p) == 0); // no time left
    CHECK(delivered_packets(3, 2, 0.0, 0.0, 6.0, p) == 0);  // packets on a dead fronthaul
}

TEST_CASE("delivery: a zero-packet transfer costs no fronthaul time even at rate zero") {
    const auto p = params_q(10);
    CHECK(delivered_packets(3, 0, 0.0, 0.0, 5.0, p) == 3);
}

TEST_CASE("delivery never exceeds what is available") {
    const auto p = params_q(8);
    for (int q_rrh = 0; q_rrh <= 8; ++q_rrh)
        for (int l1 = 0; l1 + q_rrh <= 8; ++l1)
            for (double rho : {0.0, 0.4})
                for (double r2 : {0.0, 2.0, 50.0}) {
                    const int d = delivered_packets(q_rrh, l1, rho, 10.0, r2, p);
                    CHECK(d >= 0);
                    CHECK(d <= q_rrh + l1);
                }
}

TEST_CASE("CU queue update: overflow drops the excess") {
    const auto step = cu_queue_update(9, 4, 2, 10);
    CHECK(step.q_next == 10);
    CHECK(step.drops == 1);
}

TEST_CASE("CU queue update matches the formula oracle exhaustively") {
    const int q_max = 4;
    for (int q_cu = 0; q_cu <= 2 * q_max; ++q_cu)
        for (int arrivals = 0; arrivals <= 2 * q_max; ++arrivals)
            for (int l1 = 0; l1 <= 2 * q_max; ++l1) {
                const auto got = cu_queue_update(q_cu, arrivals, l1, q_max);
                const auto want = oracle::cu_step(q_cu, arrivals, l1, q_max);
                CHECK(got.q_next == want.q_next);
                CHECK(got.drops == want.drops);
                // Accounting identity whenever the transfer is covered by
                // the backlog: what comes in either stays or drops.
                if (l1 <= q_cu)
                    CHECK(got.q_next + got.drops == q_cu + arrivals - l1);
            }
}

TEST_CASE("queue step: the worked overflow example") {
    const auto p = params_q(10);
    auto s = one_rrh_state(9, 0);
    auto [next, drops] = step_queues(s, Decision{0, 2}, 4, 0, p);
    CHECK(next.q_cu == 10);
    CHECK(drops == 1);
    CHECK(next.locals[0].q_rrh == 2);
}

TEST_CASE("queue step: identity when nothing moves") {
    const auto p = params_q(10);
    auto s = one_rrh_state(3, 2, 1, 0);
    auto [next, drops] = step_queues(s, Decision{0, 0}, 0, 0, p);
    CHECK(next == s);
    CHECK(drops == 0);
}

TEST_CASE("queue step: served RRH balances transfers against deliveries") {
    const auto p = params_q(10);
    auto s = one_rrh_state(5, 2);
    auto [next, drops] = step_queues(s, Decision{0, 2}, 0, 3, p);
    CHECK(next.locals[0].q_rrh == 1);
    CHECK(next.q_cu == 3);
    CHECK(drops == 0);
}

TEST_CASE("queue step: only the served RRH's queue moves, links never do") {
    SystemParams p = params_q(6);
    p.rrh_count = 3;
    GlobalState s;
    s.q_cu = 4;
    s.locals = {LocalState{{1, 0}, 2}, LocalState{{0, 1}, 3}, LocalState{{1, 1}, 1}};
    auto [next, drops] = step_queues(s, Decision{1, 2}, 1, 4, p);
    CHECK(next.locals[0] == s.locals[0]);
    CHECK(next.locals[2] == s.locals[2]);
    CHECK(next.locals[1].link == s.locals[1].link);
    CHECK(next.locals[1].q_rrh == 3 + 2 - 4);
    CHECK(drops == 0);
}

TEST_CASE("queue step: bounds hold along random feasible trajectories") {
    const auto p = params_q(5);
    Rng rng(11);
    auto s = one_rrh_state(0, 0);
    for (int t = 0; t < 20000; ++t) {
        const int bound = l1_upper_bound(s.q_cu, s.locals[0].q_rrh, 0.1, 3.0, p);
        const int l1 = bound > 0 ? rng.uniform_int(bound + 1) : 0;
        const int d = delivered_packets(s.locals[0].q_rrh, l1, 0.1, 3.0, 2.0, p);
        const int a = rng.uniform_int(4);
        auto [next, drops] = step_queues(s, Decision{0, l1}, a, d, p);
        CHECK(next.q_cu >= 0);
        CHECK(next.q_cu <= p.q_max);
        CHECK(next.locals[0].q_rrh >= 0);
        CHECK(next.locals[0].q_rrh <= p.q_max);
        CHECK(drops >= 0);
        // Conservation at the served RRH.
        CHECK(next.locals[0].q_rrh - s.locals[0].q_rrh == l1 - d);
        s = next;
    }
}

TEST_CASE("queue step rejects malformed transitions") {
    const auto p = params_q(10);
    auto s = one_rrh_state(3, 9);
    CHECK_THROWS_AS(step_queues(s, Decision{2, 0}, 0, 0, p), std::invalid_argument);
    CHECK_THROWS_AS(step_queues(s, Decision{0, 4}, 0, 0, p), std::invalid_argument);
    CHECK_THROWS_AS(step_queues(s, Decision{0, 2}, 0, 0, p), std::invalid_argument);
    CHECK_THROWS_AS(step_queues(s, Decision{0, 0}, -1, 0, p), std::invalid_argument);
    CHECK_THROWS_AS(step_queues(s, Decision{0, 1}, 0, 12, p), std::invalid_argument);
}

TEST_CASE("expected slot cost: zero weight leaves the plain queue sum") {
    auto p = params_q(10, 1.0, 0.5, 0.0);
    p.rrh_count = 2;
    GlobalState s;
    s.q_cu = 4;
    s.locals = {LocalState{{0, 0}, 3}, LocalState{{0, 0}, 2}};
    const auto traffic = TrafficModel::poisson(2.0);
    CHECK(expected_slot_cost(s, Decision{0, 1}, traffic, p) == 9.0);
}

TEST_CASE("expected slot cost: deterministic arrivals collapse the expectation") {
    const auto p = params_q(10, 1.0, 0.5, 7.0);
    auto s = one_rrh_state(8, 1);
    const auto traffic = TrafficModel::deterministic(6);
    // queue sum 9, overflow max{0, 8+6-2-10} = 2, cost 9 + 7*2
    CHECK(expected_slot_cost(s, Decision{0, 2}, traffic, p) ==
          doctest::Approx(9.0 + 7.0 * 2.0).epsilon(1e-12));
}

TEST_CASE("expected slot cost: full buffer turns every arrival into a drop") {
    const auto p = params_q(10, 1.0, 0.5, 30.0);
    auto s = one_rrh_state(10, 0);
    const auto traffic = TrafficModel::poisson(4.0);
    // E[max{0, A}] = lambda for nonnegative arrivals.
    CHECK(expected_slot_cost(s, Decision{0, 0}, traffic, p) ==
          doctest::Approx(10.0 + 30.0 * 4.0).epsilon(1e-8));
}

TEST_CASE("poisson pmf is normalized with a tiny truncated tail") {
    for (double lambda : {0.0, 0.5, 1.25, 4.0, 9.0}) {
        const auto traffic = TrafficModel::poisson(lambda);
        const auto& pmf = traffic.pmf();
        REQUIRE(!pmf.empty());
        double total = 0.0;
        for (double x : pmf)
            total += x;
        CHECK(std::abs(total - 1.0) <= 1e-12);

        // Mass truly beyond the truncation point is below 1e-12.
        if (lambda > 0.0) {
            double cdf = 0.0;
            double term = std::exp(-lambda);
            for (int k = 0; k <= traffic.a_max(); ++k) {
                cdf += term;
                term *= lambda / (k + 1);
            }
            CHECK(1.0 - cdf < 1e-12);
        } else {
            CHECK(traffic.a_max() == 0);
        }
    }
}

TEST_CASE("arrival sampling: degenerate and moment checks") {
    const auto zero = TrafficModel::poisson(0.0);
    Rng rng(21);
    for (int i = 0; i < 200; ++i)
        CHECK(sample_arrivals(zero, rng) == 0);

    const auto det = TrafficModel::deterministic(3);
    for (int i = 0; i < 200; ++i)
        CHECK(sample_arrivals(det, rng) == 3);

    const auto pois = TrafficModel::poisson(4.0);
    double total = 0.0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
        const int a = sample_arrivals(pois, rng);
        REQUIRE(a >= 0);
        REQUIRE(a <= pois.a_max());
        total += a;
    }
    const double mean = total / n;
    CHECK(mean > 3.98);
    CHECK(mean < 4.02);
}

TEST_CASE("system parameter validation rejects out-of-range values") {
    SystemParams p = params_q(10);
    p.rrh_count = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = params_q(0);
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = params_q(10, 0.0);
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = params_q(10, 1.0, -0.5);
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = params_q(10);
    p.drop_weight = -1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

} // TEST_SUITE
