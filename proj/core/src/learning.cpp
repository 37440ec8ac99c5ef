#include "cransched/learning.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace cransched {

PostDecisionState post_decision(const GlobalState& state, const Decision& decision,
                                int delivered) {
    const int j = decision.rrh;
    if (j < 0 || j >= static_cast<int>(state.locals.size()))
        throw std::invalid_argument("decision names an RRH outside the network");
    if (decision.l1 < 0 || decision.l1 > state.q_cu)
        throw std::invalid_argument("l1 outside [0, q_cu]");
    if (delivered < 0 || delivered > state.locals[j].q_rrh + decision.l1)
        throw std::invalid_argument("delivered outside [0, q_rrh + l1]");
    PostDecisionState post;
    post.q_cu_post = state.q_cu - decision.l1;
    post.locals = state.locals;
    post.locals[j].q_rrh = state.locals[j].q_rrh + decision.l1 - delivered;
    return post;
}

ValueTables::ValueTables(const SystemModel& model) : q_max_(model.params().q_max) {
    v_cu_.assign(static_cast<std::size_t>(q_max_) + 1, 0.0);
    rrh_.resize(static_cast<std::size_t>(model.rrh_count()));
    for (int j = 0; j < model.rrh_count(); ++j) {
        auto& t = rrh_[static_cast<std::size_t>(j)];
        t.f_states = model.fronthaul(j).space().size();
        t.a_states = model.access(j).space().size();
        t.v.assign(static_cast<std::size_t>(t.f_states) * t.a_states * (q_max_ + 1), 0.0);
    }
}

std::size_t ValueTables::entry_count() const {
    std::size_t n = v_cu_.size();
    for (const auto& t : rrh_)
        n += t.v.size();
    return n;
}

std::size_t ValueTables::checked_cu(int q) const {
    if (q < 0 || q > q_max_)
        throw std::invalid_argument("CU table index out of range");
    return static_cast<std::size_t>(q);
}

std::size_t ValueTables::checked_rrh(int j) const {
    if (j < 0 || j >= static_cast<int>(rrh_.size()))
        throw std::invalid_argument("RRH table index out of range");
    return static_cast<std::size_t>(j);
}

std::size_t ValueTables::rrh_offset(int j, int f, int a, int q) const {
    const auto& t = rrh_[static_cast<std::size_t>(j)];
    if (f < 0 || f >= t.f_states || a < 0 || a >= t.a_states || q < 0 || q > q_max_)
        throw std::invalid_argument("RRH table coordinates out of range");
    return (static_cast<std::size_t>(f) * t.a_states + a) *
               (static_cast<std::size_t>(q_max_) + 1) +
           static_cast<std::size_t>(q);
}

void LearnerConfig::validate(const SystemModel& model) const {
    if (!(alpha0 > 0.0 && alpha0 < 1.0))
        throw std::invalid_argument("alpha0 must lie in (0, 1)");
    if (ref_cu < 0 || ref_cu > model.params().q_max)
        throw std::invalid_argument("ref_cu outside the CU table");
    if (!ref_rrh.empty() && static_cast<int>(ref_rrh.size()) != model.rrh_count())
        throw std::invalid_argument("ref_rrh needs one entry per RRH (or none)");
    for (std::size_t j = 0; j < ref_rrh.size(); ++j) {
        const auto& r = ref_rrh[j];
        if (r.fronthaul < 0 || r.fronthaul >= model.fronthaul(static_cast<int>(j)).space().size() ||
            r.access < 0 || r.access >= model.access(static_cast<int>(j)).space().size() ||
            r.q < 0 || r.q > model.params().q_max)
            throw std::invalid_argument("ref_rrh entry outside its table");
    }
    if (exploration_eps < 0.0 || exploration_eps > 1.0)
        throw std::invalid_argument("exploration_eps must lie in [0, 1]");
}

double learning_rate(double t, double alpha0) {
    if (t < 1.0)
        throw std::invalid_argument("slot index starts at 1");
    return alpha0 / (std::log(t) + 1.0);
}

double decomposed_value(const ValueTables& tables, const PostDecisionState& post) {
    double v = tables.cu(post.q_cu_post);
    for (int j = 0; j < static_cast<int>(post.locals.size()); ++j) {
        const auto& l = post.locals[static_cast<std::size_t>(j)];
        v += tables.rrh(j, l.link.fronthaul, l.link.access, l.q_rrh);
    }
    return v;
}

double score_candidate(const ValueTables& tables, const SystemModel& model,
                       const GlobalState& state, int rrh, int l1,
                       std::optional<int> prev_rrh) {
    if (rrh < 0 || rrh >= model.rrh_count())
        throw std::invalid_argument("candidate names an RRH outside the network");
    const HandoverState ctx{prev_rrh, false};
    const double rho = model.rho(state, ctx, rrh);
    const int bound = model.l1_bound(state, rrh, rho);
    if (l1 < 0 || l1 > bound)
        throw std::invalid_argument("candidate l1 outside [0, " + std::to_string(bound) + "]");
    const int delivered = model.delivered(state, rrh, l1, rho);
    const int q_post = state.locals[rrh].q_rrh + l1 - delivered;
    const auto& link = state.locals[rrh].link;
    return tables.cu(state.q_cu - l1) - tables.cu(state.q_cu) +
           tables.rrh(rrh, link.fronthaul, link.access, q_post) -
           tables.rrh(rrh, link.fronthaul, link.access, state.locals[rrh].q_rrh);
}

Decision select_action(const ValueTables& tables, const SystemModel& model,
                       const GlobalState& state, std::optional<int> prev_rrh,
                       const LearnerConfig& config, Rng& rng) {
    if (config.exploration_eps > 0.0 && rng.uniform01() < config.exploration_eps) {
        std::vector<Decision> feasible;
        for (int j = 0; j < model.rrh_count(); ++j) {
            const double rho = model.rho(state, HandoverState{prev_rrh, false}, j);
            const int bound = model.l1_bound(state, j, rho);
            for (int l1 = 0; l1 <= bound; ++l1)
                feasible.push_back(Decision{j, l1});
        }
        return feasible[static_cast<std::size_t>(
            rng.uniform_int(static_cast<int>(feasible.size())))];
    }

    Decision best{0, 0};
    double best_score = std::numeric_limits<double>::infinity();
    for (int j = 0; j < model.rrh_count(); ++j) {
        const double rho = model.rho(state, HandoverState{prev_rrh, false}, j);
        const int bound = model.l1_bound(state, j, rho);
        const double v_cu_now = tables.cu(state.q_cu);
        const auto& link = state.locals[j].link;
        const double v_rrh_now =
            tables.rrh(j, link.fronthaul, link.access, state.locals[j].q_rrh);
        for (int l1 = bound; l1 >= 0; --l1) {
            const int delivered = model.delivered(state, j, l1, rho);
            const int q_post = state.locals[j].q_rrh + l1 - delivered;
            const double score = tables.cu(state.q_cu - l1) - v_cu_now +
                                 tables.rrh(j, link.fronthaul, link.access, q_post) -
                                 v_rrh_now;
            if (score < best_score) {
                best_score = score;
                best = Decision{j, l1};
            }
        }
    }
    return best;
}

void apply_update(ValueTables& tables, const TransitionRecord& record,
                  const LearnerConfig& config, const SystemParams& params) {
    if (record.alpha < 0.0 || record.alpha > 1.0)
        throw std::invalid_argument("alpha outside [0, 1]");
    if (record.drops < 0)
        throw std::invalid_argument("drops must be nonnegative");
    const int j = record.rrh;
    const RefLocal ref_j = config.ref_rrh.empty()
                               ? RefLocal{}
                               : config.ref_rrh[static_cast<std::size_t>(j)];

    // Targets use the tables as they stand before this update.
    const double cu_target = params.drop_weight * record.drops +
                             (record.cu_next_q + tables.cu(record.cu_next_post_q)) -
                             tables.cu(config.ref_cu);
    const double rrh_target =
        (record.rrh_next_q +
         tables.rrh(j, record.rrh_next_f, record.rrh_next_a, record.rrh_next_post_q)) -
        tables.rrh(j, ref_j.fronthaul, ref_j.access, ref_j.q);

    double& cu_entry = tables.cu(record.cu_entry_q);
    cu_entry = (1.0 - record.alpha) * cu_entry + record.alpha * cu_target;
    double& rrh_entry = tables.rrh(j, record.rrh_entry_f, record.rrh_entry_a,
                                   record.rrh_entry_q);
    rrh_entry = (1.0 - record.alpha) * rrh_entry + record.alpha * rrh_target;
}

LearnerPolicy::LearnerPolicy(const SystemModel& model, LearnerConfig config)
    : model_(&model), config_(std::move(config)), tables_(model) {
    config_.validate(model);
}

Decision LearnerPolicy::decide(const GlobalState& state, std::optional<int> prev_rrh,
                               Rng& rng) {
    return select_action(tables_, *model_, state, prev_rrh, config_, rng);
}

void LearnerPolicy::post_decision(const GlobalState& state, const Decision& decision,
                                  int delivered) {
    const PostDecisionState post = cransched::post_decision(state, decision, delivered);
    last_ = LastUpdate{};
    if (pending_active_) {
        TransitionRecord rec = pending_;
        rec.cu_next_post_q = post.q_cu_post;
        rec.rrh_next_post_q = post.locals[static_cast<std::size_t>(rec.rrh)].q_rrh;
        const double cu_before = tables_.cu(rec.cu_entry_q);
        const double rrh_before =
            tables_.rrh(rec.rrh, rec.rrh_entry_f, rec.rrh_entry_a, rec.rrh_entry_q);
        apply_update(tables_, rec, config_, model_->params());
        last_.applied = true;
        last_.cu_q = rec.cu_entry_q;
        last_.cu_delta = tables_.cu(rec.cu_entry_q) - cu_before;
        last_.rrh = rec.rrh;
        last_.rrh_f = rec.rrh_entry_f;
        last_.rrh_a = rec.rrh_entry_a;
        last_.rrh_q = rec.rrh_entry_q;
        last_.rrh_delta =
            tables_.rrh(rec.rrh, rec.rrh_entry_f, rec.rrh_entry_a, rec.rrh_entry_q) -
            rrh_before;
        pending_active_ = false;
    }
    post_ = post;
    have_post_ = true;
}

void LearnerPolicy::end_slot(const SlotObservation& obs) {
    if (!have_post_)
        throw std::logic_error("end_slot needs the slot's post_decision call first");
    const int j = obs.decision.rrh;
    TransitionRecord rec;
    rec.rrh = j;
    rec.cu_entry_q = post_.q_cu_post;
    rec.rrh_entry_f = obs.state.locals[static_cast<std::size_t>(j)].link.fronthaul;
    rec.rrh_entry_a = obs.state.locals[static_cast<std::size_t>(j)].link.access;
    rec.rrh_entry_q = post_.locals[static_cast<std::size_t>(j)].q_rrh;
    rec.drops = obs.drops;
    rec.cu_next_q = obs.next.q_cu;
    rec.rrh_next_q = obs.next.locals[static_cast<std::size_t>(j)].q_rrh;
    rec.rrh_next_f = obs.next.locals[static_cast<std::size_t>(j)].link.fronthaul;
    rec.rrh_next_a = obs.next.locals[static_cast<std::size_t>(j)].link.access;
    rec.alpha = learning_rate(static_cast<double>(obs.slot), config_.alpha0);
    pending_ = rec;
    pending_active_ = true;
    have_post_ = false;
}

} // namespace cransched
