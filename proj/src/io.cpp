#include "fdctmc/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>

#include <json.hpp>

namespace fdctmc {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& pointer, const std::string& msg) {
    raise(ErrorCode::validation, msg + " (at " + pointer + ")");
}

const json& need(const json& obj, const char* key, const std::string& pointer) {
    auto it = obj.find(key);
    if (it == obj.end()) bad(pointer + "/" + key, "missing required key");
    return *it;
}

int state_index(const std::map<std::string, int>& index, const json& v, const std::string& pointer) {
    if (!v.is_string()) bad(pointer, "expected a state name");
    auto it = index.find(v.get<std::string>());
    if (it == index.end()) bad(pointer, "reference to undeclared state '" + v.get<std::string>() + "'");
    return it->second;
}

double number_at(const json& v, const std::string& pointer) {
    if (!v.is_number()) bad(pointer, "expected a number");
    return v.get<double>();
}

SparseMatrix parse_triples(const json& arr, const std::map<std::string, int>& index, int n,
                           const std::string& pointer) {
    if (!arr.is_array()) bad(pointer, "expected an array of [from, to, value] triples");
    SparseMatrix m(n);
    for (size_t i = 0; i < arr.size(); ++i) {
        std::string p = pointer + "/" + std::to_string(i);
        const json& t = arr[i];
        if (!t.is_array() || t.size() != 3) bad(p, "expected a [from, to, value] triple");
        int from = state_index(index, t[0], p + "/0");
        int to = state_index(index, t[1], p + "/1");
        m.add(from, to, number_at(t[2], p + "/2"));
    }
    return m;
}

json triples_to_json(const SparseMatrix& m, const std::vector<std::string>& states) {
    json arr = json::array();
    for (int i = 0; i < m.n; ++i)
        for (const auto& [j, v] : m.rows[i])
            if (v != 0.0) arr.push_back(json::array({states[i], states[j], v}));
    return arr;
}

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& pointer) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!known.count(it.key())) bad(pointer + "/" + it.key(), "unknown key");
}

struct CommonFields {
    std::vector<std::string> states;
    std::map<std::string, int> index;
    std::vector<char> fd_states, targets;
    SparseMatrix fd_matrix;
    CostStructure costs;
    int initial = 0;
    std::vector<std::vector<int>> tie_groups;
};

CommonFields parse_common(const json& doc) {
    CommonFields out;
    const json& states = need(doc, "states", "");
    if (!states.is_array() || states.empty()) bad("/states", "expected a non-empty array of state names");
    for (size_t i = 0; i < states.size(); ++i) {
        if (!states[i].is_string()) bad("/states/" + std::to_string(i), "state names must be strings");
        std::string name = states[i].get<std::string>();
        if (out.index.count(name)) bad("/states/" + std::to_string(i), "duplicate state '" + name + "'");
        out.index[name] = static_cast<int>(i);
        out.states.push_back(name);
    }
    int n = static_cast<int>(out.states.size());

    out.fd_states.assign(n, 0);
    const json& fd = need(doc, "fd_states", "");
    if (!fd.is_array()) bad("/fd_states", "expected an array of state names");
    for (size_t i = 0; i < fd.size(); ++i)
        out.fd_states[state_index(out.index, fd[i], "/fd_states/" + std::to_string(i))] = 1;

    out.fd_matrix = parse_triples(need(doc, "F", ""), out.index, n, "/F");
    // Missing rows for states outside fd_states default to the identity.
    for (int s = 0; s < n; ++s)
        if (!out.fd_states[s] && out.fd_matrix.empty_row(s)) out.fd_matrix.add(s, s, 1.0);
    for (int s = 0; s < n; ++s) {
        double sum = out.fd_matrix.row_sum(s);
        if (std::abs(sum - 1.0) > kStochasticTol)
            bad("/F", "row for state '" + out.states[s] + "' sums to " + std::to_string(sum));
        out.fd_matrix.normalize_row(s);
    }

    const json& costs = need(doc, "costs", "");
    if (!costs.is_object()) bad("/costs", "expected an object");
    reject_unknown(costs, {"R", "I_P", "I_F"}, "/costs");
    const json& rates = need(costs, "R", "/costs");
    if (!rates.is_object()) bad("/costs/R", "expected {state: rate} entries");
    out.costs.rate.assign(n, 0.0);
    for (auto it = rates.begin(); it != rates.end(); ++it) {
        auto found = out.index.find(it.key());
        if (found == out.index.end()) bad("/costs/R/" + it.key(), "reference to undeclared state");
        out.costs.rate[found->second] = number_at(it.value(), "/costs/R/" + it.key());
    }
    for (int s = 0; s < n; ++s)
        if (!(out.costs.rate[s] > 0)) bad("/costs/R", "missing or non-positive rate cost for state '" + out.states[s] + "'");
    out.costs.impulse_exp = costs.contains("I_P")
                                ? parse_triples(costs["I_P"], out.index, n, "/costs/I_P")
                                : SparseMatrix(n);
    out.costs.impulse_fd = costs.contains("I_F")
                               ? parse_triples(costs["I_F"], out.index, n, "/costs/I_F")
                               : SparseMatrix(n);

    out.initial = state_index(out.index, need(doc, "initial", ""), "/initial");
    out.targets.assign(n, 0);
    const json& targets = need(doc, "targets", "");
    if (!targets.is_array() || targets.empty()) bad("/targets", "expected a non-empty array");
    for (size_t i = 0; i < targets.size(); ++i)
        out.targets[state_index(out.index, targets[i], "/targets/" + std::to_string(i))] = 1;

    if (doc.contains("tie_groups")) {
        const json& groups = doc["tie_groups"];
        if (!groups.is_array()) bad("/tie_groups", "expected an array of state-name arrays");
        for (size_t g = 0; g < groups.size(); ++g) {
            std::string p = "/tie_groups/" + std::to_string(g);
            if (!groups[g].is_array()) bad(p, "expected an array of state names");
            std::vector<int> members;
            for (size_t i = 0; i < groups[g].size(); ++i)
                members.push_back(state_index(out.index, groups[g][i], p + "/" + std::to_string(i)));
            out.tie_groups.push_back(std::move(members));
        }
    }
    return out;
}

}  // namespace

FdCtmc ParsedModel::to_fdctmc() const {
    if (uniform) return *uniform;
    return uniformize(*rate);
}

ParsedModel parse_model(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        raise(ErrorCode::validation, std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) bad("", "model document must be an object");
    reject_unknown(doc,
                   {"format", "states", "lambda", "P", "rates", "fd_states", "F", "costs", "initial",
                    "targets", "tie_groups"},
                   "");
    if (doc.contains("format") && (!doc["format"].is_number_integer() || doc["format"] != 1))
        bad("/format", "unsupported format version");

    bool has_rates = doc.contains("rates");
    bool has_uniform = doc.contains("lambda") || doc.contains("P");
    if (has_rates == has_uniform)
        bad("", "exactly one of 'rates' or 'lambda'+'P' must be present");

    CommonFields common = parse_common(doc);
    int n = static_cast<int>(common.states.size());

    ParsedModel out;
    if (has_rates) {
        RateModel m;
        m.states = common.states;
        m.rates = parse_triples(doc["rates"], common.index, n, "/rates");
        m.fd_states = common.fd_states;
        m.fd_matrix = common.fd_matrix;
        m.costs = common.costs;
        m.initial = common.initial;
        m.targets = common.targets;
        m.tie_groups = common.tie_groups;
        m.validate();
        out.rate = std::move(m);
    } else {
        FdCtmc c;
        c.states = common.states;
        c.lambda = number_at(need(doc, "lambda", ""), "/lambda");
        c.p = parse_triples(need(doc, "P", ""), common.index, n, "/P");
        for (int s = 0; s < n; ++s) {
            double sum = c.p.row_sum(s);
            if (std::abs(sum - 1.0) > kStochasticTol)
                bad("/P", "row for state '" + common.states[s] + "' sums to " + std::to_string(sum));
            c.p.normalize_row(s);
        }
        c.fd_states = common.fd_states;
        c.fd_matrix = common.fd_matrix;
        c.costs = common.costs;
        c.initial = common.initial;
        c.targets = common.targets;
        c.tie_groups = common.tie_groups;
        c.validate();
        out.uniform = std::move(c);
    }
    return out;
}

namespace {

json common_to_json(const std::vector<std::string>& states, const std::vector<char>& fd,
                    const SparseMatrix& fmat, const CostStructure& costs, int initial,
                    const std::vector<char>& targets,
                    const std::vector<std::vector<int>>& tie_groups) {
    json doc;
    doc["format"] = 1;
    doc["states"] = states;
    json fdj = json::array();
    for (size_t s = 0; s < states.size(); ++s)
        if (fd[s]) fdj.push_back(states[s]);
    doc["fd_states"] = fdj;
    doc["F"] = triples_to_json(fmat, states);
    json r = json::object();
    for (size_t s = 0; s < states.size(); ++s) r[states[s]] = costs.rate[s];
    doc["costs"] = {{"R", r},
                    {"I_P", triples_to_json(costs.impulse_exp, states)},
                    {"I_F", triples_to_json(costs.impulse_fd, states)}};
    doc["initial"] = states[initial];
    json t = json::array();
    for (size_t s = 0; s < states.size(); ++s)
        if (targets[s]) t.push_back(states[s]);
    doc["targets"] = t;
    if (!tie_groups.empty()) {
        json gj = json::array();
        for (const auto& g : tie_groups) {
            json one = json::array();
            for (int s : g) one.push_back(states[s]);
            gj.push_back(one);
        }
        doc["tie_groups"] = gj;
    }
    return doc;
}

}  // namespace

std::string serialize_model(const RateModel& m) {
    json doc = common_to_json(m.states, m.fd_states, m.fd_matrix, m.costs, m.initial, m.targets,
                              m.tie_groups);
    doc["rates"] = triples_to_json(m.rates, m.states);
    return doc.dump(2) + "\n";
}

std::string serialize_model(const FdCtmc& c) {
    json doc = common_to_json(c.states, c.fd_states, c.fd_matrix, c.costs, c.initial, c.targets,
                              c.tie_groups);
    doc["lambda"] = c.lambda;
    doc["P"] = triples_to_json(c.p, c.states);
    return doc.dump(2) + "\n";
}

DelayFunction parse_delays(const std::string& json_text, const FdCtmc& c,
                           const StateClassification& cls) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        raise(ErrorCode::validation, std::string("malformed JSON: ") + e.what());
    }
    const json* map = &doc;
    if (doc.is_object() && doc.contains("delays")) map = &doc["delays"];
    if (!map->is_object()) raise(ErrorCode::validation, "delay file must map state names to seconds");

    DelayFunction d;
    int n = c.num_states();
    d.tau.assign(n, std::numeric_limits<double>::quiet_NaN());
    std::map<std::string, int> index;
    for (int s = 0; s < n; ++s) index[c.states[s]] = s;
    for (auto it = map->begin(); it != map->end(); ++it) {
        auto found = index.find(it.key());
        if (found == index.end())
            raise(ErrorCode::validation, "delay for undeclared state '" + it.key() + "'");
        double v = number_at(it.value(), "/delays/" + it.key());
        if (!(v > 0)) raise(ErrorCode::validation, "delays must be positive (state '" + it.key() + "')");
        d.tau[found->second] = v;
    }
    for (int s = 0; s < n; ++s) {
        if (cls.s_off[s]) d.tau[s] = std::numeric_limits<double>::infinity();
        if (cls.s_set[s] && !d.has(s))
            raise(ErrorCode::validation, "missing delay for set state '" + c.states[s] + "'");
    }
    return d;
}

namespace {

std::string fmt9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string json_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(ch) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", ch);
                    out += buf;
                } else {
                    out += ch;
                }
        }
    }
    return out;
}

}  // namespace

std::string report_to_json(const SynthesisReport& rep, const DiscretizationParams& params,
                           const FdCtmc& c) {
    // Hand-written writer: fixed key order and 9-significant-digit numbers so
    // reports diff cleanly across runs and modes.
    std::string s = "{\n";
    s += "  \"format\": 1,\n";
    s += std::string("  \"mode\": \"") +
         (rep.mode == ImproveMode::symbolic ? "symbolic" : "explicit") + "\",\n";
    s += "  \"epsilon\": " + fmt9(params.epsilon) + ",\n";
    s += "  \"delta\": " + fmt9(params.delta) + ",\n";
    s += "  \"tau_max\": " + fmt9(params.tau_max) + ",\n";
    s += "  \"kappa\": " + fmt9(params.kappa) + ",\n";
    s += "  \"I\": " + std::to_string(rep.trunc_index) + ",\n";
    s += "  \"iterations\": " + std::to_string(rep.iterations) + ",\n";
    s += "  \"value\": " + fmt9(rep.value_at_initial) + ",\n";
    s += "  \"delays\": {";
    bool first = true;
    for (int st = 0; st < c.num_states(); ++st) {
        if (!rep.delays.has(st) || std::isinf(rep.delays.tau[st])) continue;
        if (!first) s += ", ";
        first = false;
        s += "\"" + json_escape(c.states[st]) + "\": " + fmt9(rep.delays.tau[st]);
    }
    s += "},\n";
    s += "  \"per_iteration\": [\n";
    for (size_t i = 0; i < rep.per_iteration.size(); ++i) {
        const IterationStats& st = rep.per_iteration[i];
        s += "    {\"max_degree\": " + std::to_string(st.max_degree) +
             ", \"num_roots\": " + std::to_string(st.num_roots) +
             ", \"candidates\": " + std::to_string(st.candidates) +
             ", \"millis\": " + fmt9(st.millis) + "}";
        s += (i + 1 < rep.per_iteration.size()) ? ",\n" : "\n";
    }
    s += "  ]\n}\n";
    return s;
}

}  // namespace fdctmc
