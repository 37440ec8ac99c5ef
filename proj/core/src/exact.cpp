#include "cransched/exact.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>

namespace cransched {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kIndexCeiling = std::size_t(1) << 50;
constexpr std::size_t kEvalBudget = 2000; // dense linear-solve guard
constexpr int kMaxRrh = 32;

std::size_t checked_mul(std::size_t a, std::size_t b) {
    if (b != 0 && a > kIndexCeiling / b)
        throw std::invalid_argument("state space too large to index");
    return a * b;
}

} // namespace

// ---------------------------------------------------------------------------
// StateIndexer

StateIndexer::StateIndexer(const SystemModel& model, HandoverModel handover)
    : rrh_count_(model.rrh_count()),
      q_max_(model.params().q_max),
      tracked_(handover == HandoverModel::tracked) {
    if (rrh_count_ > kMaxRrh)
        throw std::invalid_argument("too many RRHs to index");
    link_sizes_.reserve(model.links().size());
    for (const auto& chain : model.links())
        link_sizes_.push_back(chain.space().size());
    queue_parts_ = 1;
    for (int i = 0; i <= rrh_count_; ++i)
        queue_parts_ = checked_mul(queue_parts_, static_cast<std::size_t>(q_max_) + 1);
    link_parts_ = 1;
    for (int s : link_sizes_)
        link_parts_ = checked_mul(link_parts_, static_cast<std::size_t>(s));
    size_ = checked_mul(queue_parts_, link_parts_);
    if (tracked_)
        size_ = checked_mul(size_, static_cast<std::size_t>(rrh_count_) + 1);
}

std::size_t StateIndexer::encode(const GlobalState& state, std::optional<int> prev_rrh) const {
    if (static_cast<int>(state.locals.size()) != rrh_count_)
        throw std::invalid_argument("state has the wrong number of RRHs");
    if (state.q_cu < 0 || state.q_cu > q_max_)
        throw std::invalid_argument("q_cu out of range");
    std::size_t queue_part = static_cast<std::size_t>(state.q_cu);
    for (int j = 0; j < rrh_count_; ++j) {
        const int q = state.locals[j].q_rrh;
        if (q < 0 || q > q_max_)
            throw std::invalid_argument("q_rrh out of range");
        queue_part = queue_part * (static_cast<std::size_t>(q_max_) + 1) +
                     static_cast<std::size_t>(q);
    }
    std::size_t link_part = 0;
    for (int k = 0; k < 2 * rrh_count_; ++k) {
        const auto& pair = state.locals[k / 2].link;
        const int digit = (k % 2 == 0) ? pair.fronthaul : pair.access;
        if (digit < 0 || digit >= link_sizes_[k])
            throw std::invalid_argument("link state out of range");
        link_part = link_part * static_cast<std::size_t>(link_sizes_[k]) +
                    static_cast<std::size_t>(digit);
    }
    std::size_t index = queue_part * link_parts_ + link_part;
    if (tracked_) {
        int digit = rrh_count_; // "none yet"
        if (prev_rrh.has_value()) {
            if (*prev_rrh < 0 || *prev_rrh >= rrh_count_)
                throw std::invalid_argument("prev_rrh out of range");
            digit = *prev_rrh;
        }
        index += static_cast<std::size_t>(digit) * queue_parts_ * link_parts_;
    }
    return index;
}

GlobalState StateIndexer::decode(std::size_t index) const {
    if (index >= size_)
        throw std::invalid_argument("state index out of range");
    std::size_t link_part = index % link_parts_;
    std::size_t queue_part = (index / link_parts_) % queue_parts_;

    GlobalState state;
    state.locals.resize(static_cast<std::size_t>(rrh_count_));
    for (int k = 2 * rrh_count_ - 1; k >= 0; --k) {
        const int digit = static_cast<int>(link_part % static_cast<std::size_t>(link_sizes_[k]));
        link_part /= static_cast<std::size_t>(link_sizes_[k]);
        if (k % 2 == 0)
            state.locals[k / 2].link.fronthaul = digit;
        else
            state.locals[k / 2].link.access = digit;
    }
    for (int j = rrh_count_ - 1; j >= 0; --j) {
        state.locals[j].q_rrh =
            static_cast<int>(queue_part % (static_cast<std::size_t>(q_max_) + 1));
        queue_part /= static_cast<std::size_t>(q_max_) + 1;
    }
    state.q_cu = static_cast<int>(queue_part);
    return state;
}

std::optional<int> StateIndexer::decode_prev(std::size_t index) const {
    if (index >= size_)
        throw std::invalid_argument("state index out of range");
    if (!tracked_)
        return std::nullopt;
    const int digit = static_cast<int>(index / (queue_parts_ * link_parts_));
    if (digit == rrh_count_)
        return std::nullopt;
    return digit;
}

// ---------------------------------------------------------------------------
// transition_distribution

std::vector<std::pair<GlobalState, double>>
transition_distribution(const SystemModel& model, const GlobalState& state,
                        const Decision& decision, const HandoverState& ctx) {
    const int jn = model.rrh_count();
    if (decision.rrh < 0 || decision.rrh >= jn)
        throw std::invalid_argument("decision names an RRH outside the network");
    const double rho = model.rho(state, ctx, decision.rrh);
    const int bound = model.l1_bound(state, decision.rrh, rho);
    if (decision.l1 < 0 || decision.l1 > bound)
        throw std::invalid_argument("decision is infeasible: l1 outside [0, " +
                                    std::to_string(bound) + "]");
    const int delivered = model.delivered(state, decision.rrh, decision.l1, rho);
    const int q_rrh_next = state.locals[decision.rrh].q_rrh + decision.l1 - delivered;
    const int q_max = model.params().q_max;

    // Arrivals folded by the CU queue value they lead to.
    std::vector<double> cu_weight(static_cast<std::size_t>(q_max) + 1, 0.0);
    const auto& pmf = model.traffic().pmf();
    const int post_cu = state.q_cu - decision.l1;
    for (std::size_t a = 0; a < pmf.size(); ++a)
        cu_weight[static_cast<std::size_t>(std::min(q_max, post_cu + static_cast<int>(a)))] +=
            pmf[a];

    // Joint link successors: product of per-chain nonzero transitions,
    // enumerated in lexicographic order of the interleaved link digits.
    std::vector<std::pair<GlobalState, double>> out;
    GlobalState succ = state;
    succ.locals[decision.rrh].q_rrh = q_rrh_next;

    const int n_links = 2 * jn;
    auto enumerate = [&](auto&& self, int level, double prob) -> void {
        if (level == n_links) {
            out.emplace_back(succ, prob);
            return;
        }
        const auto& chain = model.links()[static_cast<std::size_t>(level)];
        const auto& pair = state.locals[level / 2].link;
        const int from = (level % 2 == 0) ? pair.fronthaul : pair.access;
        for (int to = 0; to < chain.space().size(); ++to) {
            const double p = chain.transition(from, to);
            if (p <= 0.0)
                continue;
            if (level % 2 == 0)
                succ.locals[level / 2].link.fronthaul = to;
            else
                succ.locals[level / 2].link.access = to;
            self(self, level + 1, prob * p);
        }
    };
    for (int q_cu_next = 0; q_cu_next <= q_max; ++q_cu_next) {
        if (cu_weight[static_cast<std::size_t>(q_cu_next)] == 0.0)
            continue;
        succ.q_cu = q_cu_next;
        enumerate(enumerate, 0, cu_weight[static_cast<std::size_t>(q_cu_next)]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Solver scaffold shared by the value iteration, policy extraction, and
// policy evaluation entry points.

namespace {

class ExactSolver {
public:
    ExactSolver(const SystemModel& model, const ExactOptions& opt)
        : model_(model), opt_(opt), idx_(model, opt.handover) {
        if (idx_.size() > opt_.state_budget)
            throw std::invalid_argument(
                "state space has " + std::to_string(idx_.size()) +
                " states, exceeding the budget of " + std::to_string(opt_.state_budget));
        jn_ = model_.rrh_count();
        q_max_ = model_.params().q_max;
        gamma_ = model_.params().drop_weight;
        qp_ = idx_.queue_parts();
        lp_ = idx_.link_parts();
        cu_weight_ = static_cast<std::size_t>(1);
        for (int j = 0; j < jn_; ++j)
            cu_weight_ *= static_cast<std::size_t>(q_max_) + 1;
        rrh_weight_.resize(static_cast<std::size_t>(jn_));
        for (int j = 0; j < jn_; ++j) {
            std::size_t w = 1;
            for (int k = j + 1; k < jn_; ++k)
                w *= static_cast<std::size_t>(q_max_) + 1;
            rrh_weight_[static_cast<std::size_t>(j)] = w;
        }
        build_link_rows();
        build_arrival_tables();
        build_rate_tables();
        build_totq();
    }

    const StateIndexer& indexer() const { return idx_; }

    std::size_t reference_index() const {
        if (opt_.reference_state.has_value())
            return idx_.encode(*opt_.reference_state, opt_.reference_prev);
        GlobalState zero = model_.zero_state();
        return idx_.encode(zero, std::nullopt);
    }

    // BFS closure from the zero-queue initial set (every link combination;
    // association "none" under tracked handover).
    void build_reachable() {
        reachable_.assign(idx_.size(), 0);
        std::deque<std::size_t> frontier;
        const std::size_t aug_root =
            idx_.tracked() ? static_cast<std::size_t>(jn_) * qp_ * lp_ : 0;
        for (std::size_t link = 0; link < lp_; ++link) {
            const std::size_t root = aug_root + link;
            reachable_[root] = 1;
            frontier.push_back(root);
        }
        reach_list_.clear();
        while (!frontier.empty()) {
            const std::size_t x = frontier.front();
            frontier.pop_front();
            reach_list_.push_back(static_cast<std::uint32_t>(x));
            for_each_successor_set(x, [&](std::size_t y) {
                if (!reachable_[y]) {
                    reachable_[y] = 1;
                    frontier.push_back(y);
                }
            });
        }
        std::sort(reach_list_.begin(), reach_list_.end());
    }

    const std::vector<std::uint8_t>& reachable() const { return reachable_; }
    const std::vector<std::uint32_t>& reach_list() const { return reach_list_; }

    struct Eval {
        double best = kInf;
        Decision arg{-1, -1};
    };

    // One-step lookahead over all feasible decisions; enumeration order is
    // RRH ascending, l1 descending, with strict improvement, so ties land on
    // the lowest RRH and the largest l1.
    Eval eval_state(std::size_t x, const std::vector<double>& h) const {
        DecodedState s;
        decode_parts(x, s);
        Eval ev;
        for (int j = 0; j < jn_; ++j) {
            const double rho = action_rho(s, j);
            const double rf = rate_f_[static_cast<std::size_t>(j) * lp_ + s.link];
            const double ra = rate_a_[static_cast<std::size_t>(j) * lp_ + s.link];
            const int bound =
                l1_upper_bound(s.q_cu, s.q_rrh[static_cast<std::size_t>(j)], rho, rf,
                               model_.params());
            const std::size_t aug_off =
                idx_.tracked() ? static_cast<std::size_t>(j) * qp_ * lp_ : 0;
            for (int l1 = bound; l1 >= 0; --l1) {
                const int d = delivered_packets(s.q_rrh[static_cast<std::size_t>(j)], l1, rho,
                                                rf, ra, model_.params());
                const int post_cu = s.q_cu - l1;
                const int q_rrh_next = s.q_rrh[static_cast<std::size_t>(j)] + l1 - d;
                const std::size_t qp_base =
                    s.queue_part - static_cast<std::size_t>(s.q_cu) * cu_weight_ +
                    static_cast<std::size_t>(q_rrh_next - s.q_rrh[static_cast<std::size_t>(j)]) *
                        rrh_weight_[static_cast<std::size_t>(j)];
                double value = static_cast<double>(s.total_q) +
                               gamma_ * edrops_[static_cast<std::size_t>(post_cu)];
                const auto& row = link_rows_[s.link];
                for (int qn = 0; qn <= q_max_; ++qn) {
                    const double w =
                        fold_[static_cast<std::size_t>(post_cu) *
                                  (static_cast<std::size_t>(q_max_) + 1) +
                              static_cast<std::size_t>(qn)];
                    if (w == 0.0)
                        continue;
                    const std::size_t base =
                        aug_off +
                        (qp_base + static_cast<std::size_t>(qn) * cu_weight_) * lp_;
                    double dot = 0.0;
                    for (const auto& [to, p] : row)
                        dot += p * h[base + to];
                    value += w * dot;
                }
                if (value < ev.best) {
                    ev.best = value;
                    ev.arg = Decision{j, l1};
                }
            }
        }
        return ev;
    }

    // Expected slot cost plus successor distribution of a fixed decision,
    // in index space; used by the policy-evaluation linear system.
    double action_row(std::size_t x, const Decision& decision,
                      std::vector<std::pair<std::size_t, double>>& row_out) const {
        DecodedState s;
        decode_parts(x, s);
        const int j = decision.rrh;
        const double rho = action_rho(s, j);
        const double rf = rate_f_[static_cast<std::size_t>(j) * lp_ + s.link];
        const double ra = rate_a_[static_cast<std::size_t>(j) * lp_ + s.link];
        const int bound = l1_upper_bound(s.q_cu, s.q_rrh[static_cast<std::size_t>(j)], rho, rf,
                                         model_.params());
        if (decision.l1 < 0 || decision.l1 > bound)
            throw std::invalid_argument("policy decision is infeasible in its state");
        const int d = delivered_packets(s.q_rrh[static_cast<std::size_t>(j)], decision.l1, rho,
                                        rf, ra, model_.params());
        const int post_cu = s.q_cu - decision.l1;
        const int q_rrh_next = s.q_rrh[static_cast<std::size_t>(j)] + decision.l1 - d;
        const std::size_t qp_base =
            s.queue_part - static_cast<std::size_t>(s.q_cu) * cu_weight_ +
            static_cast<std::size_t>(q_rrh_next - s.q_rrh[static_cast<std::size_t>(j)]) *
                rrh_weight_[static_cast<std::size_t>(j)];
        const std::size_t aug_off =
            idx_.tracked() ? static_cast<std::size_t>(j) * qp_ * lp_ : 0;
        row_out.clear();
        for (int qn = 0; qn <= q_max_; ++qn) {
            const double w = fold_[static_cast<std::size_t>(post_cu) *
                                       (static_cast<std::size_t>(q_max_) + 1) +
                                   static_cast<std::size_t>(qn)];
            if (w == 0.0)
                continue;
            const std::size_t base =
                aug_off + (qp_base + static_cast<std::size_t>(qn) * cu_weight_) * lp_;
            for (const auto& [to, p] : link_rows_[s.link])
                row_out.emplace_back(base + to, w * p);
        }
        return static_cast<double>(s.total_q) +
               gamma_ * edrops_[static_cast<std::size_t>(post_cu)];
    }

    void sweep(const std::vector<double>& h_old, std::vector<double>& th) const {
        const int threads = std::max(1, opt_.threads);
        if (threads == 1 || reach_list_.size() < 1024) {
            for (const std::uint32_t x : reach_list_)
                th[x] = eval_state(x, h_old).best;
            return;
        }
        std::vector<std::thread> pool;
        const std::size_t chunk = (reach_list_.size() + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const std::size_t lo = static_cast<std::size_t>(t) * chunk;
            const std::size_t hi = std::min(reach_list_.size(), lo + chunk);
            if (lo >= hi)
                break;
            pool.emplace_back([this, &h_old, &th, lo, hi]() {
                for (std::size_t i = lo; i < hi; ++i)
                    th[reach_list_[i]] = eval_state(reach_list_[i], h_old).best;
            });
        }
        for (auto& t : pool)
            t.join();
    }

private:
    struct DecodedState {
        std::size_t link = 0;
        std::size_t queue_part = 0;
        int prev = -1; // augmentation digit; jn_ means "none"
        int q_cu = 0;
        std::array<int, kMaxRrh> q_rrh{};
        int total_q = 0;
    };

    void decode_parts(std::size_t x, DecodedState& s) const {
        s.link = x % lp_;
        std::size_t rest = x / lp_;
        s.queue_part = rest % qp_;
        s.prev = idx_.tracked() ? static_cast<int>(rest / qp_) : -1;
        std::size_t qp = s.queue_part;
        for (int j = jn_ - 1; j >= 0; --j) {
            s.q_rrh[static_cast<std::size_t>(j)] =
                static_cast<int>(qp % (static_cast<std::size_t>(q_max_) + 1));
            qp /= static_cast<std::size_t>(q_max_) + 1;
        }
        s.q_cu = static_cast<int>(qp);
        s.total_q = totq_[s.queue_part];
    }

    double action_rho(const DecodedState& s, int j) const {
        if (idx_.tracked() && s.prev == j)
            return 0.0;
        return rho_change_[static_cast<std::size_t>(j) * lp_ + s.link];
    }

    template <typename Visit>
    void for_each_successor_set(std::size_t x, Visit&& visit) const {
        DecodedState s;
        decode_parts(x, s);
        for (int j = 0; j < jn_; ++j) {
            const double rho = action_rho(s, j);
            const double rf = rate_f_[static_cast<std::size_t>(j) * lp_ + s.link];
            const double ra = rate_a_[static_cast<std::size_t>(j) * lp_ + s.link];
            const int bound =
                l1_upper_bound(s.q_cu, s.q_rrh[static_cast<std::size_t>(j)], rho, rf,
                               model_.params());
            const std::size_t aug_off =
                idx_.tracked() ? static_cast<std::size_t>(j) * qp_ * lp_ : 0;
            for (int l1 = 0; l1 <= bound; ++l1) {
                const int d = delivered_packets(s.q_rrh[static_cast<std::size_t>(j)], l1, rho,
                                                rf, ra, model_.params());
                const int post_cu = s.q_cu - l1;
                const int q_rrh_next = s.q_rrh[static_cast<std::size_t>(j)] + l1 - d;
                const std::size_t qp_base =
                    s.queue_part - static_cast<std::size_t>(s.q_cu) * cu_weight_ +
                    static_cast<std::size_t>(q_rrh_next -
                                             s.q_rrh[static_cast<std::size_t>(j)]) *
                        rrh_weight_[static_cast<std::size_t>(j)];
                for (int qn = 0; qn <= q_max_; ++qn) {
                    if (fold_[static_cast<std::size_t>(post_cu) *
                                  (static_cast<std::size_t>(q_max_) + 1) +
                              static_cast<std::size_t>(qn)] == 0.0)
                        continue;
                    const std::size_t base =
                        aug_off +
                        (qp_base + static_cast<std::size_t>(qn) * cu_weight_) * lp_;
                    for (const auto& [to, p] : link_rows_[s.link])
                        visit(base + to);
                }
            }
        }
    }

    void build_link_rows() {
        link_rows_.resize(lp_);
        const int n_links = 2 * jn_;
        std::vector<int> from(static_cast<std::size_t>(n_links));
        for (std::size_t part = 0; part < lp_; ++part) {
            std::size_t rest = part;
            for (int k = n_links - 1; k >= 0; --k) {
                const int sz = model_.links()[static_cast<std::size_t>(k)].space().size();
                from[static_cast<std::size_t>(k)] = static_cast<int>(rest % sz);
                rest /= static_cast<std::size_t>(sz);
            }
            auto& row = link_rows_[part];
            row.emplace_back(0, 1.0);
            for (int k = 0; k < n_links; ++k) {
                const auto& chain = model_.links()[static_cast<std::size_t>(k)];
                const int sz = chain.space().size();
                std::vector<std::pair<std::uint32_t, double>> next;
                next.reserve(row.size() * static_cast<std::size_t>(sz));
                for (const auto& [to_part, p] : row) {
                    for (int to = 0; to < sz; ++to) {
                        const double q = chain.transition(from[static_cast<std::size_t>(k)], to);
                        if (q > 0.0)
                            next.emplace_back(
                                to_part * static_cast<std::uint32_t>(sz) +
                                    static_cast<std::uint32_t>(to),
                                p * q);
                    }
                }
                row = std::move(next);
            }
        }
    }

    void build_arrival_tables() {
        const std::size_t n = static_cast<std::size_t>(q_max_) + 1;
        fold_.assign(n * n, 0.0);
        edrops_.assign(n, 0.0);
        const auto& pmf = model_.traffic().pmf();
        for (int c = 0; c <= q_max_; ++c) {
            for (std::size_t a = 0; a < pmf.size(); ++a) {
                const int raw = c + static_cast<int>(a);
                fold_[static_cast<std::size_t>(c) * n +
                      static_cast<std::size_t>(std::min(q_max_, raw))] += pmf[a];
                if (raw > q_max_)
                    edrops_[static_cast<std::size_t>(c)] += pmf[a] * (raw - q_max_);
            }
        }
    }

    void build_rate_tables() {
        rate_f_.resize(static_cast<std::size_t>(jn_) * lp_);
        rate_a_.resize(static_cast<std::size_t>(jn_) * lp_);
        rho_change_.resize(static_cast<std::size_t>(jn_) * lp_);
        const int n_links = 2 * jn_;
        std::vector<int> digits(static_cast<std::size_t>(n_links));
        for (std::size_t part = 0; part < lp_; ++part) {
            std::size_t rest = part;
            for (int k = n_links - 1; k >= 0; --k) {
                const int sz = model_.links()[static_cast<std::size_t>(k)].space().size();
                digits[static_cast<std::size_t>(k)] = static_cast<int>(rest % sz);
                rest /= static_cast<std::size_t>(sz);
            }
            for (int j = 0; j < jn_; ++j) {
                const double rf = model_.fronthaul(j).space().rate(
                    digits[static_cast<std::size_t>(2 * j)]);
                const double ra =
                    model_.access(j).space().rate(digits[static_cast<std::size_t>(2 * j + 1)]);
                rate_f_[static_cast<std::size_t>(j) * lp_ + part] = rf;
                rate_a_[static_cast<std::size_t>(j) * lp_ + part] = ra;
                rho_change_[static_cast<std::size_t>(j) * lp_ + part] =
                    handover_cost(std::nullopt, j, rf, ra, model_.params());
            }
        }
    }

    void build_totq() {
        totq_.resize(qp_);
        for (std::size_t part = 0; part < qp_; ++part) {
            std::size_t rest = part;
            int sum = 0;
            for (int j = 0; j <= jn_; ++j) {
                sum += static_cast<int>(rest % (static_cast<std::size_t>(q_max_) + 1));
                rest /= static_cast<std::size_t>(q_max_) + 1;
            }
            totq_[part] = sum;
        }
    }

    const SystemModel& model_;
    ExactOptions opt_;
    StateIndexer idx_;
    int jn_ = 0;
    int q_max_ = 0;
    double gamma_ = 0.0;
    std::size_t qp_ = 0;
    std::size_t lp_ = 0;
    std::size_t cu_weight_ = 0;               // queue-part weight of the q_cu digit
    std::vector<std::size_t> rrh_weight_;     // queue-part weight per RRH digit
    std::vector<std::vector<std::pair<std::uint32_t, double>>> link_rows_;
    std::vector<double> fold_;                // (q_max+1)^2 arrival fold
    std::vector<double> edrops_;              // expected drops per post-CU value
    std::vector<double> rate_f_, rate_a_, rho_change_;
    std::vector<int> totq_;
    std::vector<std::uint8_t> reachable_;
    std::vector<std::uint32_t> reach_list_;
};

} // namespace

// ---------------------------------------------------------------------------
// Entry points

ExactSolution relative_value_iteration(const SystemModel& model, const ExactOptions& options) {
    ExactSolver solver(model, options);
    solver.build_reachable();
    const std::size_t ref = solver.reference_index();
    if (!solver.reachable()[ref])
        throw std::invalid_argument("reference state is not reachable");

    const std::size_t n = solver.indexer().size();
    std::vector<double> h(n, 0.0), th(n, 0.0);
    double span = kInf;
    double gain = 0.0;
    int iterations = 0;
    for (int it = 1; it <= options.max_iterations; ++it) {
        solver.sweep(h, th);
        double lo = kInf, hi = -kInf;
        for (const std::uint32_t x : solver.reach_list()) {
            const double d = th[x] - h[x];
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        span = hi - lo;
        gain = 0.5 * (lo + hi);
        const double pin = th[ref];
        for (const std::uint32_t x : solver.reach_list())
            h[x] = th[x] - pin;
        iterations = it;
        if (span <= options.tolerance)
            break;
    }
    if (span > options.tolerance)
        throw std::runtime_error("relative value iteration did not converge in " +
                                 std::to_string(options.max_iterations) +
                                 " sweeps; span residual " + std::to_string(span));

    ExactSolution sol{.gain = gain,
                      .values = {},
                      .policy = {},
                      .reachable = solver.reachable(),
                      .reachable_count = solver.reach_list().size(),
                      .residual = span,
                      .iterations = iterations,
                      .indexer = solver.indexer(),
                      .options = options};
    sol.policy.assign(n, Decision{-1, -1});
    for (const std::uint32_t x : solver.reach_list())
        sol.policy[x] = solver.eval_state(x, h).arg;
    sol.values.assign(n, kNaN);
    for (const std::uint32_t x : solver.reach_list())
        sol.values[x] = h[x];
    return sol;
}

std::vector<Decision> extract_policy(const SystemModel& model, const std::vector<double>& values,
                                     const ExactOptions& options) {
    ExactSolver solver(model, options);
    if (values.size() != solver.indexer().size())
        throw std::invalid_argument("value vector size does not match the state space");
    std::vector<Decision> policy(values.size(), Decision{-1, -1});
    for (std::size_t x = 0; x < values.size(); ++x) {
        if (std::isnan(values[x]))
            continue;
        policy[x] = solver.eval_state(x, values).arg;
    }
    return policy;
}

double evaluate_policy_gain(const SystemModel& model, const std::vector<Decision>& policy,
                            const ExactOptions& options) {
    ExactSolver solver(model, options);
    if (policy.size() != solver.indexer().size())
        throw std::invalid_argument("policy size does not match the state space");
    const std::size_t ref = solver.reference_index();

    // Closure of the reference state under the fixed policy.
    std::vector<std::size_t> order;
    std::vector<std::int32_t> local(solver.indexer().size(), -1);
    std::deque<std::size_t> frontier{ref};
    local[ref] = 0;
    order.push_back(ref);
    std::vector<std::pair<std::size_t, double>> row;
    while (!frontier.empty()) {
        const std::size_t x = frontier.front();
        frontier.pop_front();
        const Decision d = policy[x];
        if (d.rrh < 0)
            throw std::invalid_argument("policy has no decision for a reachable state");
        solver.action_row(x, d, row);
        for (const auto& [y, p] : row) {
            (void)p;
            if (local[y] < 0) {
                local[y] = static_cast<std::int32_t>(order.size());
                order.push_back(y);
                frontier.push_back(y);
                if (order.size() > 2000)
                    throw std::runtime_error(
                        "policy evaluation limited to 2000 reachable states");
            }
        }
    }

    // h(x) + nu = c(x) + sum_y P(x,y) h(y), h(ref) = 0. Unknowns: h at every
    // non-reference state, then nu, giving a square system.
    const std::size_t m = order.size();
    auto column = [&](std::size_t state_pos) -> std::size_t {
        // reference column is replaced by nu (the last unknown)
        return state_pos == 0 ? m - 1 : state_pos - 1;
    };
    std::vector<double> a(m * m, 0.0), b(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t x = order[i];
        const double cost = solver.action_row(x, policy[x], row);
        b[i] = cost;
        a[i * m + m - 1] = 1.0; // nu
        if (i != 0)
            a[i * m + column(i)] += 1.0; // h(x)
        for (const auto& [y, p] : row) {
            const std::size_t pos = static_cast<std::size_t>(local[y]);
            if (pos != 0)
                a[i * m + column(pos)] -= p;
        }
    }

    // Gaussian elimination with partial pivoting.
    std::vector<std::size_t> perm(m);
    for (std::size_t i = 0; i < m; ++i)
        perm[i] = i;
    for (std::size_t k = 0; k < m; ++k) {
        std::size_t piv = k;
        double best = std::abs(a[perm[k] * m + k]);
        for (std::size_t i = k + 1; i < m; ++i) {
            const double v = std::abs(a[perm[i] * m + k]);
            if (v > best) {
                best = v;
                piv = i;
            }
        }
        if (best < 1e-12)
            throw std::runtime_error(
                "policy evaluation system is singular; the policy-induced chain "
                "may not be unichain from the reference state");
        std::swap(perm[k], perm[piv]);
        const double pivot = a[perm[k] * m + k];
        for (std::size_t i = k + 1; i < m; ++i) {
            const double f = a[perm[i] * m + k] / pivot;
            if (f == 0.0)
                continue;
            a[perm[i] * m + k] = 0.0;
            for (std::size_t c = k + 1; c < m; ++c)
                a[perm[i] * m + c] -= f * a[perm[k] * m + c];
            b[perm[i]] -= f * b[perm[k]];
        }
    }
    std::vector<double> u(m, 0.0);
    for (std::size_t k = m; k-- > 0;) {
        double s = b[perm[k]];
        for (std::size_t c = k + 1; c < m; ++c)
            s -= a[perm[k] * m + c] * u[c];
        u[k] = s / a[perm[k] * m + k];
    }
    return u[m - 1]; // nu
}

} // namespace cransched
