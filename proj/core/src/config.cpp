#include "cransched/config.hpp"

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace cransched {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw std::invalid_argument("config: " + where + ": " + what);
}

std::string slot_path(const std::string& base, std::size_t i) {
    return base + "[" + std::to_string(i) + "]";
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed) {
            if (item.key() == key) {
                known = true;
                break;
            }
        }
        if (!known)
            fail(where, "unknown key \"" + item.key() + "\"");
    }
}

const json& require(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end())
        fail(where, std::string("missing required key \"") + key + "\"");
    return *it;
}

const json& expect_object(const json& v, const std::string& where) {
    if (!v.is_object())
        fail(where, "expected an object");
    return v;
}

double to_double(const json& v, const std::string& where) {
    if (!v.is_number())
        fail(where, "expected a number");
    return v.get<double>();
}

int to_int(const json& v, const std::string& where) {
    if (!v.is_number_integer())
        fail(where, "expected an integer");
    const auto wide = v.get<std::int64_t>();
    if (wide < INT32_MIN || wide > INT32_MAX)
        fail(where, "integer out of range");
    return static_cast<int>(wide);
}

std::uint64_t to_uint64(const json& v, const std::string& where) {
    if (!v.is_number_integer())
        fail(where, "expected an integer");
    if (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)
        fail(where, "expected a nonnegative integer");
    return v.get<std::uint64_t>();
}

std::string to_string(const json& v, const std::string& where) {
    if (!v.is_string())
        fail(where, "expected a string");
    return v.get<std::string>();
}

std::vector<double> to_number_array(const json& v, const std::string& where) {
    if (!v.is_array())
        fail(where, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(to_double(v[i], slot_path(where, i)));
    return out;
}

LinkChain parse_chain(const json& v, const std::string& where) {
    expect_object(v, where);
    check_keys(v, where, {"states", "rates", "transition"});

    std::vector<double> rates = to_number_array(require(v, "rates", where), where + ".rates");
    if (rates.empty())
        fail(where + ".rates", "expected at least one state");

    std::vector<std::string> names;
    if (auto it = v.find("states"); it != v.end()) {
        if (!it->is_array())
            fail(where + ".states", "expected an array of strings");
        for (std::size_t i = 0; i < it->size(); ++i)
            names.push_back(to_string((*it)[i], slot_path(where + ".states", i)));
        if (names.size() != rates.size())
            fail(where, "states and rates must have the same length");
    } else {
        for (std::size_t i = 0; i < rates.size(); ++i)
            names.push_back("s" + std::to_string(i));
    }

    const json& jt = require(v, "transition", where);
    if (!jt.is_array())
        fail(where + ".transition", "expected an array of rows");
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < jt.size(); ++i)
        rows.push_back(to_number_array(jt[i], slot_path(where + ".transition", i)));

    try {
        return LinkChain(LinkStateSpace(std::move(names), std::move(rates)), rows);
    } catch (const std::invalid_argument& e) {
        fail(where, e.what());
    }
}

std::vector<LinkChain> parse_links(const json& v, int rrh_count) {
    const std::string where = "links";
    expect_object(v, where);
    check_keys(v, where, {"profile", "uniform", "chains"});
    if (v.size() != 1)
        fail(where, "expected exactly one of \"profile\", \"uniform\", \"chains\"");

    const std::size_t n_links = 2 * static_cast<std::size_t>(rrh_count);
    std::vector<LinkChain> out;
    out.reserve(n_links);

    if (auto it = v.find("profile"); it != v.end()) {
        const std::string name = to_string(*it, where + ".profile");
        if (name != "default")
            fail(where + ".profile", "unknown profile \"" + name + "\"");
        for (std::size_t i = 0; i < n_links; ++i)
            out.push_back(default_profile_chain());
        return out;
    }
    if (auto it = v.find("uniform"); it != v.end()) {
        LinkChain chain = parse_chain(*it, where + ".uniform");
        for (std::size_t i = 0; i < n_links; ++i)
            out.push_back(chain);
        return out;
    }
    const json& jc = v.at("chains");
    if (!jc.is_array())
        fail(where + ".chains", "expected an array");
    if (jc.size() != n_links)
        fail(where + ".chains", "expected " + std::to_string(n_links) +
                                    " chains (fronthaul and access per RRH), got " +
                                    std::to_string(jc.size()));
    for (std::size_t i = 0; i < jc.size(); ++i)
        out.push_back(parse_chain(jc[i], slot_path(where + ".chains", i)));
    return out;
}

TrafficSpec parse_traffic(const json& v) {
    const std::string where = "traffic";
    expect_object(v, where);
    check_keys(v, where, {"kind", "lambda", "value"});
    TrafficSpec spec;
    const std::string kind = to_string(require(v, "kind", where), where + ".kind");
    if (kind == "poisson") {
        spec.kind = TrafficSpec::Kind::poisson;
        if (v.contains("value"))
            fail(where, "\"value\" only applies to deterministic traffic");
        spec.lambda = to_double(require(v, "lambda", where), where + ".lambda");
        if (spec.lambda < 0.0)
            fail(where + ".lambda", "must be nonnegative");
    } else if (kind == "deterministic") {
        spec.kind = TrafficSpec::Kind::deterministic;
        if (v.contains("lambda"))
            fail(where, "\"lambda\" only applies to poisson traffic");
        spec.value = to_int(require(v, "value", where), where + ".value");
        if (spec.value < 0)
            fail(where + ".value", "must be nonnegative");
    } else {
        fail(where + ".kind", "expected \"poisson\" or \"deterministic\"");
    }
    return spec;
}

void parse_policy(const json& v, ExperimentConfig& cfg) {
    const std::string where = "policy";
    if (v.is_string()) {
        cfg.policy = v.get<std::string>();
        return;
    }
    expect_object(v, where);
    check_keys(v, where, {"name", "alpha0", "exploration_eps", "ref_cu", "ref_rrh"});
    cfg.policy = to_string(require(v, "name", where), where + ".name");
    if (auto it = v.find("alpha0"); it != v.end())
        cfg.learner.alpha0 = to_double(*it, where + ".alpha0");
    if (auto it = v.find("exploration_eps"); it != v.end())
        cfg.learner.exploration_eps = to_double(*it, where + ".exploration_eps");
    if (auto it = v.find("ref_cu"); it != v.end())
        cfg.learner.ref_cu = to_int(*it, where + ".ref_cu");
    if (auto it = v.find("ref_rrh"); it != v.end()) {
        if (!it->is_array())
            fail(where + ".ref_rrh", "expected an array (one entry per RRH)");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const std::string ew = slot_path(where + ".ref_rrh", i);
            const json& je = expect_object((*it)[i], ew);
            check_keys(je, ew, {"fronthaul", "access", "queue"});
            RefLocal ref;
            if (auto f = je.find("fronthaul"); f != je.end())
                ref.fronthaul = to_int(*f, ew + ".fronthaul");
            if (auto a = je.find("access"); a != je.end())
                ref.access = to_int(*a, ew + ".access");
            if (auto q = je.find("queue"); q != je.end())
                ref.q = to_int(*q, ew + ".queue");
            cfg.learner.ref_rrh.push_back(ref);
        }
    }
}

void parse_trace(const json& v, ExperimentConfig& cfg) {
    const std::string where = "trace";
    expect_object(v, where);
    check_keys(v, where, {"every", "entries"});
    if (auto it = v.find("every"); it != v.end()) {
        cfg.trace_every = to_uint64(*it, where + ".every");
        if (cfg.trace_every == 0)
            fail(where + ".every", "must be at least 1");
    }
    const json& je = require(v, "entries", where);
    if (!je.is_array() || je.empty())
        fail(where + ".entries", "expected a non-empty array");
    for (std::size_t i = 0; i < je.size(); ++i) {
        const std::string ew = slot_path(where + ".entries", i);
        const json& e = expect_object(je[i], ew);
        TrackedEntry entry;
        const std::string table = to_string(require(e, "table", ew), ew + ".table");
        if (table == "cu") {
            check_keys(e, ew, {"table", "queue"});
            entry.table = TrackedEntry::Table::cu;
            entry.queue = to_int(require(e, "queue", ew), ew + ".queue");
        } else if (table == "rrh") {
            check_keys(e, ew, {"table", "rrh", "fronthaul", "access", "queue"});
            entry.table = TrackedEntry::Table::rrh;
            entry.rrh = to_int(require(e, "rrh", ew), ew + ".rrh");
            entry.fronthaul = to_int(require(e, "fronthaul", ew), ew + ".fronthaul");
            entry.access = to_int(require(e, "access", ew), ew + ".access");
            entry.queue = to_int(require(e, "queue", ew), ew + ".queue");
        } else {
            fail(ew + ".table", "expected \"cu\" or \"rrh\"");
        }
        cfg.trace.push_back(entry);
    }
}

void parse_sweep(const json& v, ExperimentConfig& cfg) {
    const std::string where = "sweep";
    expect_object(v, where);
    check_keys(v, where, {"gamma", "lambda", "replicates"});
    SweepSpec spec;
    if (auto it = v.find("gamma"); it != v.end())
        spec.gamma = to_number_array(*it, where + ".gamma");
    if (auto it = v.find("lambda"); it != v.end())
        spec.lambda = to_number_array(*it, where + ".lambda");
    if (auto it = v.find("replicates"); it != v.end()) {
        spec.replicates = to_int(*it, where + ".replicates");
        if (spec.replicates < 1)
            fail(where + ".replicates", "must be at least 1");
    }
    cfg.sweep = spec;
}

void parse_compare(const json& v, ExperimentConfig& cfg) {
    const std::string where = "compare";
    expect_object(v, where);
    check_keys(v, where, {"policies", "replicates"});
    if (auto it = v.find("policies"); it != v.end()) {
        if (!it->is_array() || it->empty())
            fail(where + ".policies", "expected a non-empty array of policy names");
        cfg.compare.policies.clear();
        for (std::size_t i = 0; i < it->size(); ++i)
            cfg.compare.policies.push_back(
                to_string((*it)[i], slot_path(where + ".policies", i)));
    }
    if (auto it = v.find("replicates"); it != v.end()) {
        cfg.compare.replicates = to_int(*it, where + ".replicates");
        if (cfg.compare.replicates < 1)
            fail(where + ".replicates", "must be at least 1");
    }
}

void parse_solver(const json& v, ExperimentConfig& cfg) {
    const std::string where = "solver";
    expect_object(v, where);
    check_keys(v, where, {"tolerance", "max_iterations", "state_budget", "handover", "threads"});
    if (auto it = v.find("tolerance"); it != v.end()) {
        cfg.solver.tolerance = to_double(*it, where + ".tolerance");
        if (cfg.solver.tolerance <= 0.0)
            fail(where + ".tolerance", "must be positive");
    }
    if (auto it = v.find("max_iterations"); it != v.end()) {
        cfg.solver.max_iterations = to_int(*it, where + ".max_iterations");
        if (cfg.solver.max_iterations < 1)
            fail(where + ".max_iterations", "must be at least 1");
    }
    if (auto it = v.find("state_budget"); it != v.end())
        cfg.solver.state_budget = static_cast<std::size_t>(to_uint64(*it, where + ".state_budget"));
    if (auto it = v.find("handover"); it != v.end()) {
        const std::string mode = to_string(*it, where + ".handover");
        if (mode == "worst_case")
            cfg.solver.handover = HandoverModel::worst_case;
        else if (mode == "tracked")
            cfg.solver.handover = HandoverModel::tracked;
        else
            fail(where + ".handover", "expected \"worst_case\" or \"tracked\"");
    }
    if (auto it = v.find("threads"); it != v.end()) {
        cfg.solver.threads = to_int(*it, where + ".threads");
        if (cfg.solver.threads < 1)
            fail(where + ".threads", "must be at least 1");
    }
}

} // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    expect_object(root, "top level");
    check_keys(root, "top level",
               {"params", "traffic", "links", "policy", "horizon", "warmup", "seed",
                "initial_links", "trace", "sweep", "compare", "solver"});

    ExperimentConfig cfg;

    const json& jp = require(root, "params", "top level");
    expect_object(jp, "params");
    check_keys(jp, "params", {"rrh_count", "q_max", "slot", "signalling", "drop_weight"});
    cfg.params.rrh_count = to_int(require(jp, "rrh_count", "params"), "params.rrh_count");
    cfg.params.q_max = to_int(require(jp, "q_max", "params"), "params.q_max");
    if (auto it = jp.find("slot"); it != jp.end())
        cfg.params.slot = to_double(*it, "params.slot");
    if (auto it = jp.find("signalling"); it != jp.end())
        cfg.params.signalling = to_double(*it, "params.signalling");
    if (auto it = jp.find("drop_weight"); it != jp.end())
        cfg.params.drop_weight = to_double(*it, "params.drop_weight");
    try {
        cfg.params.validate();
    } catch (const std::invalid_argument& e) {
        fail("params", e.what());
    }

    cfg.traffic = parse_traffic(require(root, "traffic", "top level"));
    cfg.links = parse_links(require(root, "links", "top level"), cfg.params.rrh_count);

    if (auto it = root.find("policy"); it != root.end())
        parse_policy(*it, cfg);
    if (auto it = root.find("horizon"); it != root.end()) {
        cfg.horizon = to_uint64(*it, "horizon");
        if (cfg.horizon == 0)
            fail("horizon", "must be at least 1");
    }
    if (auto it = root.find("warmup"); it != root.end())
        cfg.warmup = to_uint64(*it, "warmup");
    if (auto it = root.find("seed"); it != root.end())
        cfg.seed = to_uint64(*it, "seed");
    if (auto it = root.find("initial_links"); it != root.end()) {
        const std::string mode = to_string(*it, "initial_links");
        if (mode == "stationary")
            cfg.initial_links = InitialLinks::stationary;
        else if (mode == "zero")
            cfg.initial_links = InitialLinks::zero;
        else
            fail("initial_links", "expected \"stationary\" or \"zero\"");
    }
    if (auto it = root.find("trace"); it != root.end())
        parse_trace(*it, cfg);
    if (auto it = root.find("sweep"); it != root.end())
        parse_sweep(*it, cfg);
    if (auto it = root.find("compare"); it != root.end())
        parse_compare(*it, cfg);
    if (auto it = root.find("solver"); it != root.end())
        parse_solver(*it, cfg);

    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::invalid_argument("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

} // namespace cransched
