#include "fdctmc/simulator.hpp"

#include <cassert>
#include <cmath>
#include <limits>

namespace fdctmc {

void SimConfig::validate() const {
    if (runs < 1) raise(ErrorCode::validation, "runs must be at least 1");
    if (step_cap < 1 || !(cost_cap > 0)) raise(ErrorCode::validation, "simulation caps must be positive");
}

namespace {

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(seed ^ mix64(stream * 0xda942042e4dd58b5ull))) {}

std::uint64_t CounterRng::next_u64() { return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ull); }

double CounterRng::next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::next_exp(double rate) {
    double u;
    do {
        u = next_unit();
    } while (u == 0.0);
    return -std::log(u) / rate;
}

namespace {

int pick(const std::vector<std::pair<int, double>>& row, double u) {
    double acc = 0;
    for (const auto& [t, p] : row) {
        acc += p;
        if (u < acc) return t;
    }
    return row.back().first;
}

}  // namespace

double sample_run(const FdCtmc& c, const StateClassification& cls, const DelayFunction& d,
                  CounterRng& rng, const SimConfig& cfg, bool* truncated) {
    (void)cls;  // referenced by the clock-reset assertions below
    const double inf = std::numeric_limits<double>::infinity();
    *truncated = false;
    int s = c.initial;
    double clock = c.is_fd(s) ? d.at(s) : inf;
    double cost = 0;
    for (long step = 0; step < cfg.step_cap; ++step) {
        double t_exp = rng.next_exp(c.lambda);
        int next;
        double next_clock;
        if (t_exp < clock) {
            next = pick(c.p.rows[s], rng.next_unit());
            cost += t_exp * c.costs.rate[s] + c.costs.impulse_exp.at(s, next);
            if (c.is_fd(next) && c.is_fd(s)) {
                next_clock = clock - t_exp;
            } else if (!c.is_fd(next)) {
                next_clock = inf;
            } else {
                // Clock freshly set entering S_fd from S_off: the target is in
                // S_set by classification, so a delay value must exist.
                assert(cls.s_set[next]);
                next_clock = d.at(next);
            }
        } else {
            next = pick(c.fd_matrix.rows[s], rng.next_unit());
            cost += clock * c.costs.rate[s] + c.costs.impulse_fd.at(s, next);
            next_clock = c.is_fd(next) ? d.at(next) : inf;
            if (c.is_fd(next)) assert(cls.s_set[next]);
        }
        s = next;
        clock = next_clock;
        if (c.is_target(s)) return cost;
        if (cost > cfg.cost_cap) break;
    }
    *truncated = true;
    return cost;
}

SimEstimate estimate(const FdCtmc& c, const DelayFunction& d, const SimConfig& cfg) {
    cfg.validate();
    StateClassification cls = classify(c);

    SimEstimate est;
    est.runs = cfg.runs;
    double mean = 0, m2 = 0;
    long n = 0;
    for (long r = 0; r < cfg.runs; ++r) {
        CounterRng rng(cfg.seed, static_cast<std::uint64_t>(r));
        bool truncated = false;
        double cost = sample_run(c, cls, d, rng, cfg, &truncated);
        if (truncated) {
            ++est.truncated_runs;
            continue;
        }
        ++n;
        double delta = cost - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (cost - mean);
    }
    if (n == 0) raise(ErrorCode::estimator_starved, "every run hit a simulation cap");
    est.mean = mean;
    est.std_error = n > 1 ? std::sqrt(m2 / (static_cast<double>(n) * (n - 1)))
                          : std::numeric_limits<double>::quiet_NaN();
    return est;
}

DelayFunction extend_delays(const FdCtmc& c, const StateClassification& cls, DelayFunction d,
                            double fallback) {
    int n = c.num_states();
    if (static_cast<int>(d.tau.size()) < n) d.tau.resize(n, std::numeric_limits<double>::quiet_NaN());
    std::vector<int> group_of(n, -1);
    for (size_t g = 0; g < c.tie_groups.size(); ++g)
        for (int s : c.tie_groups[g]) group_of[s] = static_cast<int>(g);
    for (int s = 0; s < n; ++s) {
        if (!c.is_fd(s) || d.has(s)) continue;
        double v = fallback;
        if (group_of[s] >= 0)
            for (int t : c.tie_groups[group_of[s]])
                if (cls.s_set[t] && d.has(t)) {
                    v = d.at(t);
                    break;
                }
        d.tau[s] = v;
    }
    return d;
}

}  // namespace fdctmc
