#include "cransched/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <utility>

#include <json.hpp>

namespace cransched {

namespace {

// Stream labels for seed derivation; part of the reproducibility contract.
constexpr std::uint64_t kEnvStream = 1;
constexpr std::uint64_t kPolicyStreamBase = 16;

int policy_id(const std::string& name) {
    if (name == "proposed")
        return 0;
    if (name == "max_rate")
        return 1;
    if (name == "max_queue")
        return 2;
    if (name == "random")
        return 3;
    if (name == "exact")
        return 4;
    throw std::invalid_argument("unknown policy: " + name);
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double config_lambda(const ExperimentConfig& config) {
    return config.traffic.kind == TrafficSpec::Kind::poisson
               ? config.traffic.lambda
               : static_cast<double>(config.traffic.value);
}

} // namespace

TrafficModel TrafficSpec::build() const {
    if (kind == Kind::poisson)
        return TrafficModel::poisson(lambda);
    return TrafficModel::deterministic(value);
}

std::string TrackedEntry::label() const {
    if (table == Table::cu)
        return "cu_q" + std::to_string(queue);
    return "rrh" + std::to_string(rrh) + "_f" + std::to_string(fronthaul) + "_a" +
           std::to_string(access) + "_q" + std::to_string(queue);
}

ExactOptions SolverSpec::options() const {
    ExactOptions opt;
    opt.tolerance = tolerance;
    opt.max_iterations = max_iterations;
    opt.state_budget = state_budget;
    opt.handover = handover;
    opt.threads = threads;
    return opt;
}

SystemModel ExperimentConfig::build_model() const {
    return SystemModel(params, links, traffic.build());
}

void ExperimentConfig::validate() const {
    params.validate();
    if (static_cast<int>(links.size()) != 2 * params.rrh_count)
        throw std::invalid_argument("need exactly two link chains per RRH");
    if (horizon < 1)
        throw std::invalid_argument("horizon must be at least 1 slot");
    if (effective_warmup() >= horizon)
        throw std::invalid_argument("warmup must leave at least one measured slot");
    policy_id(policy);
    if (trace_every < 1)
        throw std::invalid_argument("trace_every must be at least 1");
    const SystemModel model = build_model();
    if (policy == "proposed")
        learner.validate(model);
    if (!trace.empty() && policy != "proposed")
        throw std::invalid_argument("tracing table entries requires the proposed policy");
    for (const auto& e : trace) {
        if (e.queue < 0 || e.queue > params.q_max)
            throw std::invalid_argument("traced entry queue out of range");
        if (e.table == TrackedEntry::Table::rrh) {
            if (e.rrh < 0 || e.rrh >= params.rrh_count)
                throw std::invalid_argument("traced entry names an RRH outside the network");
            if (e.fronthaul < 0 || e.fronthaul >= model.fronthaul(e.rrh).space().size() ||
                e.access < 0 || e.access >= model.access(e.rrh).space().size())
                throw std::invalid_argument("traced entry link state out of range");
        }
    }
    if (sweep) {
        if (sweep->replicates < 1)
            throw std::invalid_argument("sweep replicates must be at least 1");
        if (!sweep->lambda.empty() && traffic.kind != TrafficSpec::Kind::poisson)
            throw std::invalid_argument("lambda sweeps need poisson traffic");
        for (double g : sweep->gamma)
            if (g < 0.0)
                throw std::invalid_argument("sweep gamma must be nonnegative");
        for (double l : sweep->lambda)
            if (l < 0.0)
                throw std::invalid_argument("sweep lambda must be nonnegative");
    }
    if (compare.policies.empty())
        throw std::invalid_argument("compare needs at least one policy");
    for (const auto& name : compare.policies)
        policy_id(name);
    if (compare.replicates < 1)
        throw std::invalid_argument("compare replicates must be at least 1");
    if (solver.tolerance <= 0.0 || solver.max_iterations < 1 || solver.threads < 1)
        throw std::invalid_argument("solver settings out of range");
}

// ---------------------------------------------------------------------------
// SlotRunner

SlotRunner::SlotRunner(const SystemModel& model, Policy& policy, Rng& env_rng, Rng& policy_rng,
                       InitialLinks initial_links)
    : model_(&model), policy_(&policy), env_rng_(&env_rng), policy_rng_(&policy_rng) {
    state_ = initial_links == InitialLinks::stationary ? model.initial_state(env_rng)
                                                       : model.zero_state();
    totals_.initial_queue = state_.total_queue();
    rrh_stamps_.resize(static_cast<std::size_t>(model.rrh_count()));
}

SlotObservation SlotRunner::run_slot() {
    ++slot_;
    Decision decision = policy_->decide(state_, prev_, *policy_rng_);
    if (decision.rrh < 0 || decision.rrh >= model_->rrh_count())
        throw std::runtime_error("policy returned an RRH outside the network");
    const int b = decision.rrh;
    const double rho = model_->rho(state_, HandoverState{prev_, false}, b);
    const int bound = model_->l1_bound(state_, b, rho);
    decision.l1 = std::clamp(decision.l1, 0, bound);
    const int delivered = model_->delivered(state_, b, decision.l1, rho);
    policy_->post_decision(state_, decision, delivered);

    const int arrivals = sample_arrivals(model_->traffic(), *env_rng_);
    auto [next, drops] = step_queues(state_, decision, arrivals, delivered, model_->params());

    // Arrival-stamp bookkeeping mirrors the queue updates: the l1 packets
    // move CU front -> RRH back, delivery pops the RRH front, admitted
    // arrivals join the CU back, overflow arrivals never enter.
    auto& rq = rrh_stamps_[static_cast<std::size_t>(b)];
    for (int i = 0; i < decision.l1; ++i) {
        rq.push_back(cu_stamps_.front());
        cu_stamps_.pop_front();
    }
    for (int i = 0; i < delivered; ++i) {
        totals_.sojourn_slots += static_cast<double>(slot_ - rq.front());
        ++totals_.sojourn_count;
        rq.pop_front();
    }
    for (int i = 0; i < arrivals - drops; ++i)
        cu_stamps_.push_back(slot_);

    totals_.arrivals += static_cast<std::uint64_t>(arrivals);
    totals_.delivered += static_cast<std::uint64_t>(delivered);
    totals_.drops += static_cast<std::uint64_t>(drops);
    totals_.queue_slot_sum += static_cast<std::uint64_t>(state_.total_queue());
    totals_.slots = slot_;
    if (prev_.has_value() && b != *prev_)
        ++totals_.handovers;

    model_->advance_links(next, *env_rng_);

    SlotObservation obs;
    obs.slot = slot_;
    obs.state = state_;
    obs.prev_rrh = prev_;
    obs.decision = decision;
    obs.delivered = delivered;
    obs.arrivals = arrivals;
    obs.drops = drops;
    obs.next = next;
    obs.handover_time = rho;
    policy_->end_slot(obs);

    state_ = std::move(next);
    prev_ = b;
    return obs;
}

RunTotals SlotRunner::finish() const {
    if (static_cast<int>(cu_stamps_.size()) != state_.q_cu)
        throw std::logic_error("arrival-stamp tracker out of step with the CU queue");
    for (int j = 0; j < model_->rrh_count(); ++j)
        if (static_cast<int>(rrh_stamps_[static_cast<std::size_t>(j)].size()) !=
            state_.locals[static_cast<std::size_t>(j)].q_rrh)
            throw std::logic_error("arrival-stamp tracker out of step with an RRH queue");
    RunTotals t = totals_;
    t.final_queue = state_.total_queue();
    return t;
}

// ---------------------------------------------------------------------------
// Policy construction and experiment loop

std::unique_ptr<Policy> make_policy(const std::string& name, const SystemModel& model,
                                    const ExperimentConfig& config,
                                    std::shared_ptr<const ExactSolution> solution) {
    switch (policy_id(name)) {
    case 0:
        return std::make_unique<LearnerPolicy>(model, config.learner);
    case 1:
        return std::make_unique<MaxRatePolicy>(model);
    case 2:
        return std::make_unique<MaxQueuePolicy>(model);
    case 3:
        return std::make_unique<RandomPolicy>(model);
    default:
        if (!solution)
            solution = std::make_shared<const ExactSolution>(
                relative_value_iteration(model, config.solver.options()));
        return std::make_unique<ExactPolicy>(model, std::move(solution));
    }
}

RunResult run_experiment(const ExperimentConfig& config, int replicate,
                         std::shared_ptr<const ExactSolution> solution) {
    config.validate();
    const SystemModel model = config.build_model();
    Rng env_rng(derive_seed(config.seed, kEnvStream, static_cast<std::uint64_t>(replicate)));
    Rng policy_rng(derive_seed(config.seed,
                               kPolicyStreamBase +
                                   static_cast<std::uint64_t>(policy_id(config.policy)),
                               static_cast<std::uint64_t>(replicate)));
    const auto policy = make_policy(config.policy, model, config, std::move(solution));
    SlotRunner runner(model, *policy, env_rng, policy_rng, config.initial_links);

    const std::uint64_t warmup = config.effective_warmup();
    RunResult result;
    result.policy = config.policy;
    result.gamma = config.params.drop_weight;
    result.lambda = config_lambda(config);
    result.seed = config.seed;
    result.replicate = replicate;
    result.traces.resize(config.trace.size());
    for (auto& t : result.traces)
        t.reserve(static_cast<std::size_t>((config.horizon + config.trace_every - 1) /
                                           config.trace_every));

    std::uint64_t q_sum = 0, drops = 0, delivered = 0, handovers = 0;
    for (std::uint64_t t = 1; t <= config.horizon; ++t) {
        const SlotObservation obs = runner.run_slot();
        if (t > warmup) {
            q_sum += static_cast<std::uint64_t>(obs.state.total_queue());
            drops += static_cast<std::uint64_t>(obs.drops);
            delivered += static_cast<std::uint64_t>(obs.delivered);
            if (obs.prev_rrh.has_value() && obs.decision.rrh != *obs.prev_rrh)
                ++handovers;
        }
        if (!config.trace.empty() && (t - 1) % config.trace_every == 0) {
            const ValueTables* tables = policy->value_tables();
            for (std::size_t e = 0; e < config.trace.size(); ++e) {
                const TrackedEntry& entry = config.trace[e];
                result.traces[e].push_back(entry.table == TrackedEntry::Table::cu
                                               ? tables->cu(entry.queue)
                                               : tables->rrh(entry.rrh, entry.fronthaul,
                                                             entry.access, entry.queue));
            }
        }
    }

    const std::uint64_t measured = config.horizon - warmup;
    result.metrics.slot_count = measured;
    result.metrics.avg_queue_len = static_cast<double>(q_sum) / static_cast<double>(measured);
    result.metrics.avg_drop_rate = static_cast<double>(drops) / static_cast<double>(measured);
    result.metrics.objective =
        result.metrics.avg_queue_len + config.params.drop_weight * result.metrics.avg_drop_rate;
    result.metrics.handover_count = handovers;
    result.metrics.delivered_total = delivered;
    result.totals = runner.finish();
    result.little_law_error = little_law_check(result.totals);
    return result;
}

namespace {

template <typename Task>
std::vector<RunResult> run_tasks(const std::vector<Task>& tasks, int jobs) {
    std::vector<RunResult> results(tasks.size());
    if (jobs <= 1 || tasks.size() <= 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i)
            results[i] = tasks[i]();
        return results;
    }
    std::atomic<std::size_t> cursor{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&]() {
        while (true) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= tasks.size())
                return;
            try {
                results[i] = tasks[i]();
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int n = std::min<int>(jobs, static_cast<int>(tasks.size()));
    pool.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        pool.emplace_back(worker);
    for (auto& th : pool)
        th.join();
    if (failure)
        std::rethrow_exception(failure);
    return results;
}

} // namespace

std::vector<RunResult> run_sweep(const ExperimentConfig& config, int jobs) {
    config.validate();
    const SweepSpec spec = config.sweep.value_or(SweepSpec{});
    const std::vector<double> gammas =
        spec.gamma.empty() ? std::vector<double>{config.params.drop_weight} : spec.gamma;
    const std::vector<double> lambdas =
        spec.lambda.empty() ? std::vector<double>{config_lambda(config)} : spec.lambda;
    std::vector<std::function<RunResult()>> tasks;
    for (double g : gammas)
        for (double l : lambdas)
            for (int rep = 0; rep < spec.replicates; ++rep) {
                ExperimentConfig point = config;
                point.params.drop_weight = g;
                if (!spec.lambda.empty())
                    point.traffic.lambda = l;
                tasks.push_back([point, rep]() { return run_experiment(point, rep); });
            }
    return run_tasks(tasks, jobs);
}

std::vector<RunResult> run_compare(const ExperimentConfig& config, int jobs) {
    config.validate();
    std::shared_ptr<const ExactSolution> solution;
    for (const auto& name : config.compare.policies)
        if (name == "exact" && !solution) {
            const SystemModel model = config.build_model();
            solution = std::make_shared<const ExactSolution>(
                relative_value_iteration(model, config.solver.options()));
        }
    std::vector<std::function<RunResult()>> tasks;
    for (const auto& name : config.compare.policies)
        for (int rep = 0; rep < config.compare.replicates; ++rep) {
            ExperimentConfig one = config;
            one.policy = name;
            one.trace.clear(); // comparisons never emit value traces
            tasks.push_back(
                [one, rep, solution]() { return run_experiment(one, rep, solution); });
        }
    return run_tasks(tasks, jobs);
}

std::optional<double> little_law_check(const RunTotals& totals) {
    if (totals.arrivals == 0)
        return 0.0;
    if (totals.delivered == 0)
        return std::nullopt;
    if (static_cast<double>(totals.drops) > 0.001 * static_cast<double>(totals.arrivals))
        return std::nullopt;
    const double throughput =
        static_cast<double>(totals.delivered) / static_cast<double>(totals.slots);
    const double avg_queue =
        static_cast<double>(totals.queue_slot_sum) / static_cast<double>(totals.slots);
    const double mean_sojourn = totals.sojourn_slots / static_cast<double>(totals.sojourn_count);
    if (mean_sojourn <= 0.0)
        return std::nullopt;
    return std::abs(avg_queue / throughput - mean_sojourn) / mean_sojourn;
}

// ---------------------------------------------------------------------------
// Writers

void write_metrics_csv(std::ostream& os, const std::vector<RunResult>& results) {
    os << "policy,gamma,lambda,replicate,seed,slot_count,avg_queue_len,avg_drop_rate,"
          "objective,handover_count,delivered_total,arrivals,delivered,drops,handovers,"
          "initial_queue,final_queue,little_law_error\n";
    for (const auto& r : results) {
        os << r.policy << ',' << fmt_double(r.gamma) << ',' << fmt_double(r.lambda) << ','
           << r.replicate << ',' << r.seed << ',' << r.metrics.slot_count << ','
           << fmt_double(r.metrics.avg_queue_len) << ',' << fmt_double(r.metrics.avg_drop_rate)
           << ',' << fmt_double(r.metrics.objective) << ',' << r.metrics.handover_count << ','
           << r.metrics.delivered_total << ',' << r.totals.arrivals << ',' << r.totals.delivered
           << ',' << r.totals.drops << ',' << r.totals.handovers << ',' << r.totals.initial_queue
           << ',' << r.totals.final_queue << ','
           << (r.little_law_error ? fmt_double(*r.little_law_error) : std::string{}) << '\n';
    }
}

void write_trace_csv(std::ostream& os, const ExperimentConfig& config, const RunResult& result) {
    os << "slot";
    for (const auto& entry : config.trace)
        os << ',' << entry.label();
    os << '\n';
    const std::size_t rows = result.traces.empty() ? 0 : result.traces.front().size();
    for (std::size_t i = 0; i < rows; ++i) {
        os << (1 + static_cast<std::uint64_t>(i) * config.trace_every);
        for (const auto& series : result.traces)
            os << ',' << fmt_double(series[i]);
        os << '\n';
    }
}

namespace {

nlohmann::json result_json(const RunResult& r) {
    nlohmann::json j{
        {"policy", r.policy},
        {"gamma", r.gamma},
        {"lambda", r.lambda},
        {"replicate", r.replicate},
        {"seed", r.seed},
        {"metrics",
         {{"avg_queue_len", r.metrics.avg_queue_len},
          {"avg_drop_rate", r.metrics.avg_drop_rate},
          {"objective", r.metrics.objective},
          {"handover_count", r.metrics.handover_count},
          {"delivered_total", r.metrics.delivered_total},
          {"slot_count", r.metrics.slot_count}}},
        {"totals",
         {{"arrivals", r.totals.arrivals},
          {"delivered", r.totals.delivered},
          {"drops", r.totals.drops},
          {"handovers", r.totals.handovers},
          {"initial_queue", r.totals.initial_queue},
          {"final_queue", r.totals.final_queue},
          {"slots", r.totals.slots}}},
    };
    if (r.little_law_error)
        j["little_law_error"] = *r.little_law_error;
    else
        j["little_law_error"] = nullptr;
    return j;
}

nlohmann::json config_json(const ExperimentConfig& config) {
    return nlohmann::json{{"rrh_count", config.params.rrh_count},
                          {"q_max", config.params.q_max},
                          {"slot", config.params.slot},
                          {"signalling", config.params.signalling},
                          {"drop_weight", config.params.drop_weight},
                          {"policy", config.policy},
                          {"horizon", config.horizon},
                          {"warmup", config.effective_warmup()},
                          {"seed", config.seed}};
}

} // namespace

std::string run_summary_json(const ExperimentConfig& config, const RunResult& result) {
    nlohmann::json j{{"config", config_json(config)}, {"result", result_json(result)}};
    return j.dump(2) + "\n";
}

std::string sweep_summary_json(const ExperimentConfig& config,
                               const std::vector<RunResult>& results) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : results)
        arr.push_back(result_json(r));
    nlohmann::json j{{"config", config_json(config)}, {"results", std::move(arr)}};
    return j.dump(2) + "\n";
}

std::string solve_summary_json(const ExperimentConfig& config, const SolveReport& report) {
    nlohmann::json j{{"config", config_json(config)},
                     {"gain", report.gain},
                     {"residual", report.residual},
                     {"iterations", report.iterations},
                     {"state_count", report.state_count},
                     {"reachable_count", report.reachable_count},
                     {"tolerance", config.solver.tolerance},
                     {"handover", config.solver.handover == HandoverModel::worst_case
                                      ? "worst_case"
                                      : "tracked"}};
    return j.dump(2) + "\n";
}

void write_policy_csv(std::ostream& os, const SystemModel& model, const ExactSolution& solution) {
    const StateIndexer& idx = solution.indexer;
    os << "index";
    if (idx.tracked())
        os << ",prev";
    os << ",q_cu";
    for (int j = 0; j < model.rrh_count(); ++j)
        os << ",q_rrh" << j;
    for (int j = 0; j < model.rrh_count(); ++j)
        os << ",f" << j << ",a" << j;
    os << ",rrh,l1,value\n";
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (!solution.reachable[i])
            continue;
        const GlobalState s = idx.decode(i);
        os << i;
        if (idx.tracked()) {
            const auto prev = idx.decode_prev(i);
            os << ',' << (prev ? std::to_string(*prev) : std::string{"none"});
        }
        os << ',' << s.q_cu;
        for (const auto& l : s.locals)
            os << ',' << l.q_rrh;
        for (const auto& l : s.locals)
            os << ',' << l.link.fronthaul << ',' << l.link.access;
        os << ',' << solution.policy[i].rrh << ',' << solution.policy[i].l1 << ','
           << fmt_double(solution.values[i]) << '\n';
    }
}

} // namespace cransched
