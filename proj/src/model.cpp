#include "fdctmc/model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace fdctmc {

const char* code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::validation: return "validation error";
        case ErrorCode::degenerate_model: return "degenerate model";
        case ErrorCode::target_unreachable: return "target unreachable";
        case ErrorCode::model_shape_violation: return "model shape violation";
        case ErrorCode::truncation_overflow: return "truncation overflow";
        case ErrorCode::precision_exhausted: return "precision exhausted";
        case ErrorCode::coefficient_overflow: return "numeric overflow in coefficient assembly";
        case ErrorCode::root_isolation_precision: return "root isolation precision failure";
        case ErrorCode::infinite_expected_cost: return "infinite expected cost under current policy";
        case ErrorCode::solver_failure: return "linear solver failure";
        case ErrorCode::estimator_starved: return "estimator starved";
    }
    return "unknown error";
}

int exit_code(ErrorCode c) {
    switch (c) {
        case ErrorCode::validation:
        case ErrorCode::degenerate_model:
        case ErrorCode::target_unreachable:
        case ErrorCode::model_shape_violation:
            return 2;
        default:
            return 3;
    }
}

void SparseMatrix::add(int i, int j, double v) {
    for (auto& [col, val] : rows[i]) {
        if (col == j) {
            val += v;
            return;
        }
    }
    rows[i].emplace_back(j, v);
}

double SparseMatrix::at(int i, int j) const {
    for (const auto& [col, val] : rows[i])
        if (col == j) return val;
    return 0.0;
}

double SparseMatrix::row_sum(int i) const {
    double s = 0;
    for (const auto& [col, val] : rows[i]) s += val;
    return s;
}

void SparseMatrix::normalize_row(int i) {
    double s = row_sum(i);
    if (s <= 0) return;
    for (auto& [col, val] : rows[i]) val /= s;
}

double DelayFunction::at(int s) const {
    if (!has(s))
        raise(ErrorCode::validation, "delay function has no value for state index " + std::to_string(s));
    return tau[s];
}

namespace {

void check_stochastic_rows(SparseMatrix& m, const std::vector<char>* only_mask, const char* what) {
    for (int i = 0; i < m.n; ++i) {
        if (only_mask && !(*only_mask)[i]) continue;
        for (const auto& [col, val] : m.rows[i]) {
            (void)col;
            if (val < 0 || !std::isfinite(val))
                raise(ErrorCode::validation,
                      std::string(what) + " has a negative or non-finite entry in row " + std::to_string(i));
        }
        double s = m.row_sum(i);
        if (std::abs(s - 1.0) > kStochasticTol)
            raise(ErrorCode::validation,
                  std::string(what) + " row " + std::to_string(i) + " sums to " + std::to_string(s) +
                      ", expected 1");
        m.normalize_row(i);
    }
}

void check_costs(const CostStructure& costs, int n) {
    if (static_cast<int>(costs.rate.size()) != n)
        raise(ErrorCode::validation, "cost rate vector has wrong length");
    for (int s = 0; s < n; ++s)
        if (!(costs.rate[s] > 0) || !std::isfinite(costs.rate[s]))
            raise(ErrorCode::validation, "rate cost must be positive and finite (state " + std::to_string(s) + ")");
    for (const SparseMatrix* m : {&costs.impulse_exp, &costs.impulse_fd})
        for (int i = 0; i < m->n; ++i)
            for (const auto& [col, val] : m->rows[i]) {
                (void)col;
                if (val < 0 || !std::isfinite(val))
                    raise(ErrorCode::validation, "impulse costs must be non-negative and finite");
            }
}

void check_fd_identity(const SparseMatrix& f, const std::vector<char>& fd, const char* what) {
    for (int s = 0; s < f.n; ++s) {
        if (fd[s]) continue;
        if (std::abs(f.at(s, s) - 1.0) > kStochasticTol)
            raise(ErrorCode::validation,
                  std::string(what) + "(s,s) must be 1 for states outside fd_states (state " +
                      std::to_string(s) + ")");
    }
}

void check_common(int n, const std::vector<char>& fd, const std::vector<char>& targets,
                  int initial, const std::vector<std::vector<int>>& tie_groups) {
    if (n == 0) raise(ErrorCode::validation, "model has no states");
    if (static_cast<int>(fd.size()) != n || static_cast<int>(targets.size()) != n)
        raise(ErrorCode::validation, "mask vectors have wrong length");
    if (initial < 0 || initial >= n) raise(ErrorCode::validation, "initial state out of range");
    if (std::none_of(targets.begin(), targets.end(), [](char t) { return t != 0; }))
        raise(ErrorCode::validation, "target set is empty");
    for (const auto& g : tie_groups)
        for (int s : g) {
            if (s < 0 || s >= n) raise(ErrorCode::validation, "tie group member out of range");
            if (!fd[s]) raise(ErrorCode::validation, "tie group member must be a fd state");
        }
}

}  // namespace

void RateModel::validate() const {
    int n = num_states();
    check_common(n, fd_states, targets, initial, tie_groups);
    if (rates.n != n || fd_matrix.n != n)
        raise(ErrorCode::validation, "matrix dimension mismatch");
    for (int i = 0; i < n; ++i)
        for (const auto& [col, val] : rates.rows[i]) {
            if (val < 0 || !std::isfinite(val))
                raise(ErrorCode::validation, "rates must be non-negative and finite");
            if (col == i && val != 0)
                raise(ErrorCode::validation, "rate matrix must have zero diagonal (state " + std::to_string(i) + ")");
        }
    auto f = fd_matrix;
    check_stochastic_rows(f, nullptr, "F");
    check_fd_identity(fd_matrix, fd_states, "F");
    check_costs(costs, n);
}

void FdCtmc::validate() const {
    int n = num_states();
    check_common(n, fd_states, targets, initial, tie_groups);
    if (p.n != n || fd_matrix.n != n)
        raise(ErrorCode::validation, "matrix dimension mismatch");
    if (!(lambda > 0) || !std::isfinite(lambda))
        raise(ErrorCode::validation, "lambda must be positive and finite");
    auto pp = p;
    check_stochastic_rows(pp, nullptr, "P");
    auto f = fd_matrix;
    check_stochastic_rows(f, nullptr, "F");
    check_fd_identity(fd_matrix, fd_states, "F");
    check_costs(costs, n);
}

FdCtmc uniformize(const RateModel& m) {
    m.validate();
    int n = m.num_states();

    double lambda = 0;
    std::vector<double> exit(n, 0.0);
    for (int s = 0; s < n; ++s) {
        exit[s] = m.rates.row_sum(s);
        lambda = std::max(lambda, exit[s]);
    }
    if (lambda <= 0) raise(ErrorCode::degenerate_model, "all exit rates are zero");

    FdCtmc c;
    c.states = m.states;
    c.lambda = lambda;
    c.p = SparseMatrix(n);
    for (int s = 0; s < n; ++s) {
        for (const auto& [t, r] : m.rates.rows[s])
            if (r > 0) c.p.add(s, t, r / lambda);
        double self = 1.0 - exit[s] / lambda;
        if (self > 0) c.p.add(s, s, self);  // compensating self-loop, zero impulse cost
        c.p.normalize_row(s);
    }
    c.fd_states = m.fd_states;
    c.fd_matrix = m.fd_matrix;
    c.costs = m.costs;
    c.initial = m.initial;
    c.targets = m.targets;
    c.tie_groups = m.tie_groups;
    c.validate();
    return c;
}

StateClassification classify(const FdCtmc& c) {
    int n = c.num_states();
    StateClassification cls;
    cls.s_off.assign(n, 0);
    cls.s_set.assign(n, 0);
    for (int s = 0; s < n; ++s)
        if (!c.fd_states[s]) cls.s_off[s] = 1;

    // s in S_set iff s in S_fd with an incoming exp edge from S_off or an
    // incoming fixed-delay edge.
    for (int s = 0; s < n; ++s) {
        if (cls.s_off[s])
            for (const auto& [t, v] : c.p.rows[s])
                if (v > 0 && c.fd_states[t]) cls.s_set[t] = 1;
        if (c.fd_states[s])
            for (const auto& [t, v] : c.fd_matrix.rows[s])
                if (v > 0 && c.fd_states[t]) cls.s_set[t] = 1;
    }

    // Timeout is set at time zero in the initial state.
    if (c.fd_states[c.initial]) cls.s_set[c.initial] = 1;

    cls.mdp_index.assign(n, -1);
    for (int s = 0; s < n; ++s) {
        if (cls.s_off[s] || cls.s_set[s]) {
            cls.mdp_index[s] = static_cast<int>(cls.mdp_states.size());
            cls.mdp_states.push_back(s);
        }
    }

    for (int s = 0; s < n; ++s)
        if (c.targets[s] && !cls.in_mdp(s))
            raise(ErrorCode::validation,
                  "target state " + c.states[s] + " is neither in S_off nor in S_set");
    return cls;
}

FdCtmc prune_unreachable(const FdCtmc& c, const StateClassification& cls) {
    int n = c.num_states();

    // Forward reachability over the union of supports: exp edges everywhere,
    // fixed-delay edges from clock-running (fd) states. Every Poisson count
    // has positive probability, so this graph is exact.
    std::vector<char> reach(n, 0);
    std::deque<int> queue{c.initial};
    reach[c.initial] = 1;
    while (!queue.empty()) {
        int s = queue.front();
        queue.pop_front();
        auto visit = [&](int t) {
            if (!reach[t]) {
                reach[t] = 1;
                queue.push_back(t);
            }
        };
        for (const auto& [t, v] : c.p.rows[s])
            if (v > 0) visit(t);
        if (c.fd_states[s])
            for (const auto& [t, v] : c.fd_matrix.rows[s])
                if (v > 0) visit(t);
    }

    bool target_left = false;
    for (int s = 0; s < n; ++s)
        if (reach[s] && c.targets[s]) target_left = true;
    if (!target_left) raise(ErrorCode::target_unreachable, "no target state is reachable from the initial state");

    (void)cls;
    if (std::all_of(reach.begin(), reach.end(), [](char r) { return r != 0; })) return c;

    std::vector<int> remap(n, -1);
    FdCtmc out;
    out.lambda = c.lambda;
    for (int s = 0; s < n; ++s) {
        if (!reach[s]) continue;
        remap[s] = static_cast<int>(out.states.size());
        out.states.push_back(c.states[s]);
    }
    int m = static_cast<int>(out.states.size());
    out.p = SparseMatrix(m);
    out.fd_matrix = SparseMatrix(m);
    out.costs.impulse_exp = SparseMatrix(m);
    out.costs.impulse_fd = SparseMatrix(m);
    out.costs.rate.resize(m);
    out.fd_states.assign(m, 0);
    out.targets.assign(m, 0);
    for (int s = 0; s < n; ++s) {
        if (remap[s] < 0) continue;
        int s2 = remap[s];
        out.fd_states[s2] = c.fd_states[s];
        out.targets[s2] = c.targets[s];
        out.costs.rate[s2] = c.costs.rate[s];
        // Unreachable states receive no probability mass, so dropping their
        // columns keeps the surviving rows stochastic.
        for (const auto& [t, v] : c.p.rows[s])
            if (remap[t] >= 0 && v > 0) out.p.add(s2, remap[t], v);
        for (const auto& [t, v] : c.fd_matrix.rows[s])
            if (remap[t] >= 0 && v > 0) out.fd_matrix.add(s2, remap[t], v);
        for (const auto& [t, v] : c.costs.impulse_exp.rows[s])
            if (remap[t] >= 0) out.costs.impulse_exp.add(s2, remap[t], v);
        for (const auto& [t, v] : c.costs.impulse_fd.rows[s])
            if (remap[t] >= 0) out.costs.impulse_fd.add(s2, remap[t], v);
    }
    out.initial = remap[c.initial];
    for (const auto& g : c.tie_groups) {
        std::vector<int> g2;
        for (int s : g)
            if (remap[s] >= 0) g2.push_back(remap[s]);
        if (g2.size() > 1) out.tie_groups.push_back(std::move(g2));
    }
    out.validate();
    return out;
}

}  // namespace fdctmc
