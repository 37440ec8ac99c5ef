#include <benchmark/benchmark.h>

#include <optional>
#include <vector>

#include "cransched/exact.hpp"
#include "cransched/harness.hpp"
#include "cransched/learning.hpp"
#include "cransched/model.hpp"

using namespace cransched;

namespace {

LinkChain sticky_two_state() {
    LinkStateSpace space({"Slow", "Fast"}, {1.0, 2.0});
    return LinkChain(space, {{0.75, 0.25}, {0.25, 0.75}});
}

SystemModel small_model(int rrh_count, int q_max) {
    SystemParams p;
    p.rrh_count = rrh_count;
    p.q_max = q_max;
    p.slot = 1.0;
    p.signalling = 0.0;
    p.drop_weight = 1.0;
    return make_uniform_model(p, sticky_two_state(), TrafficModel::poisson(1.25));
}

// Full learner slot: greedy action, queue step, one table update.
void BM_learner_slot(benchmark::State& state) {
    const SystemModel model = small_model(2, 2);
    LearnerConfig config;
    config.alpha0 = 0.6;
    config.ref_cu = 1;
    LearnerPolicy policy(model, config);
    Rng env(1), act(2);
    SlotRunner runner(model, policy, env, act, InitialLinks::stationary);
    for (auto _ : state)
        benchmark::DoNotOptimize(runner.run_slot());
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}
BENCHMARK(BM_learner_slot);

// Greedy argmin over the feasible (rrh, l1) set with additive table scores.
void BM_greedy_action(benchmark::State& state) {
    const SystemModel model = small_model(static_cast<int>(state.range(0)), 4);
    const ValueTables tables(model);
    LearnerConfig config;
    config.ref_cu = 1;
    GlobalState s = model.zero_state();
    s.q_cu = 4;
    Rng rng(3);
    for (auto _ : state)
        benchmark::DoNotOptimize(select_action(tables, model, s, 0, config, rng));
}
BENCHMARK(BM_greedy_action)->Arg(1)->Arg(3)->Arg(6);

// Average-cost solve of the two-RRH instance (432 states).
void BM_solve_desk(benchmark::State& state) {
    const SystemModel model = small_model(2, 2);
    ExactOptions opts;
    opts.tolerance = 1e-6; // per-sweep work is the subject, not the tail
    for (auto _ : state)
        benchmark::DoNotOptimize(relative_value_iteration(model, opts));
}
BENCHMARK(BM_solve_desk)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
