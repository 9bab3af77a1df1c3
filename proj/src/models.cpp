#include "fdctmc/models.hpp"

#include <cmath>
#include <string>

namespace fdctmc {

void ProtocolParams::validate() const {
    if (n_bobs < 1) raise(ErrorCode::validation, "protocol needs at least one channel");
    if (!(p > 0 && p <= 1) || !(q > 0 && q <= 1))
        raise(ErrorCode::validation, "p and q must lie in (0, 1]");
    if (!(lambda > 0) || !(rate_cost > 0) || fd_impulse < 0)
        raise(ErrorCode::validation, "protocol rates and costs must be positive");
}

void DpmParams::validate() const {
    if (n < 1) raise(ErrorCode::validation, "buffer bound must be at least 1");
    if (!(arrival_rate > 0) || !(service_rate > 0))
        raise(ErrorCode::validation, "arrival and service rates must be positive");
    if (!(energy_busy > 0) || !(energy_idle > 0) || !(energy_sleep > 0) || !(energy_acc > 0))
        raise(ErrorCode::validation, "energy rates must be positive");
}

namespace {

// Component states of the single-channel protocol.
enum : int { kA = 0, kB = 1, kC = 2, kF = 3 };
constexpr char kLetter[4] = {'A', 'B', 'C', 'F'};

}  // namespace

RateModel gen_protocol(const ProtocolParams& params) {
    params.validate();
    int n = params.n_bobs;
    long total = 1;
    for (int i = 0; i < n; ++i) total *= 4;

    // Component exp edges (probabilities under the common rate lambda).
    // Self-loops (C stays with q, F always) carry no rate mass; they come
    // back as compensating self-loops during uniformization.
    const double p = params.p, q = params.q;
    std::vector<std::vector<std::pair<int, double>>> comp_p(4);
    comp_p[kA] = {{kB, p}, {kF, 1 - p}};
    comp_p[kB] = {{kC, p}, {kF, 1 - p}};
    comp_p[kC] = {{kA, 1 - q}};
    comp_p[kF] = {};

    auto comp_of = [&](long code, int i) { return static_cast<int>((code >> (2 * i)) & 3); };
    auto with_comp = [&](long code, int i, int v) {
        return (code & ~(3L << (2 * i))) | (static_cast<long>(v) << (2 * i));
    };
    auto name_of = [&](long code) {
        std::string s(n, '?');
        for (int i = 0; i < n; ++i) s[n - 1 - i] = kLetter[comp_of(code, i)];
        return s;
    };

    RateModel m;
    m.states.reserve(total);
    for (long code = 0; code < total; ++code) m.states.push_back(name_of(code));
    int ns = static_cast<int>(total);
    m.rates = SparseMatrix(ns);
    m.fd_matrix = SparseMatrix(ns);
    m.costs.impulse_exp = SparseMatrix(ns);
    m.costs.impulse_fd = SparseMatrix(ns);
    m.costs.rate.assign(ns, params.rate_cost);
    m.fd_states.assign(ns, 0);
    m.targets.assign(ns, 0);

    long all_c = 0;
    for (int i = 0; i < n; ++i) all_c = with_comp(all_c, i, kC);

    for (long code = 0; code < total; ++code) {
        bool any_open = code != all_c;
        m.fd_states[code] = any_open;
        for (int i = 0; i < n; ++i) {
            int s = comp_of(code, i);
            for (const auto& [t, prob] : comp_p[s]) {
                long dst = with_comp(code, i, t);
                if (dst != code) m.rates.add(code, dst, params.lambda * prob);
            }
        }
        if (any_open) {
            // The timeout restarts every unestablished component.
            long dst = 0;
            for (int i = 0; i < n; ++i)
                dst = with_comp(dst, i, comp_of(code, i) == kC ? kC : kA);
            m.fd_matrix.add(code, dst, 1.0);
            if (params.fd_impulse > 0) m.costs.impulse_fd.add(code, dst, params.fd_impulse);
        } else {
            m.fd_matrix.add(code, code, 1.0);
        }
    }
    m.initial = 0;  // (A, ..., A)
    m.targets[all_c] = 1;
    m.validate();
    return m;
}

RateModel gen_dpm(const DpmParams& params) {
    params.validate();
    int n = params.n;
    // acc, idle0, busy1..busyn, sleep0..sleepn
    int ns = 2 * (n + 1) + 1;
    int acc = 0, idle0 = 1;
    auto busy = [&](int k) { return 1 + k; };          // k in 1..n
    auto sleep = [&](int k) { return n + 2 + k; };     // k in 0..n

    RateModel m;
    m.states.resize(ns);
    m.states[acc] = "acc";
    m.states[idle0] = "idle0";
    for (int k = 1; k <= n; ++k) m.states[busy(k)] = "busy" + std::to_string(k);
    for (int k = 0; k <= n; ++k) m.states[sleep(k)] = "sleep" + std::to_string(k);

    m.rates = SparseMatrix(ns);
    m.fd_matrix = SparseMatrix(ns);
    m.costs.impulse_exp = SparseMatrix(ns);
    m.costs.impulse_fd = SparseMatrix(ns);
    m.costs.rate.assign(ns, 0.0);
    m.fd_states.assign(ns, 0);
    m.targets.assign(ns, 0);

    // Arrivals bump the buffer; the saturating self-arrival at the bound is a
    // no-op and carries no rate mass.
    m.rates.add(idle0, busy(1), params.arrival_rate);
    for (int k = 1; k < n; ++k) m.rates.add(busy(k), busy(k + 1), params.arrival_rate);
    for (int k = 0; k < n; ++k) m.rates.add(sleep(k), sleep(k + 1), params.arrival_rate);
    // Service; no service while asleep.
    m.rates.add(busy(1), acc, params.service_rate);
    for (int k = 2; k <= n; ++k) m.rates.add(busy(k), busy(k - 1), params.service_rate);

    m.fd_states[idle0] = 1;
    for (int k = 0; k <= n; ++k) m.fd_states[sleep(k)] = 1;
    m.fd_matrix.add(idle0, sleep(0), 1.0);
    m.fd_matrix.add(sleep(0), idle0, 1.0);
    for (int k = 1; k <= n; ++k) m.fd_matrix.add(sleep(k), busy(k), 1.0);
    m.fd_matrix.add(acc, acc, 1.0);
    for (int k = 1; k <= n; ++k) m.fd_matrix.add(busy(k), busy(k), 1.0);

    m.costs.rate[acc] = params.energy_acc;
    m.costs.rate[idle0] = params.energy_idle;
    for (int k = 1; k <= n; ++k) m.costs.rate[busy(k)] = params.energy_busy;
    for (int k = 0; k <= n; ++k) m.costs.rate[sleep(k)] = params.energy_sleep;

    m.initial = idle0;
    m.targets[acc] = 1;
    std::vector<int> tie;
    for (int k = 0; k <= n; ++k) tie.push_back(sleep(k));
    m.tie_groups.push_back(tie);
    m.validate();
    return m;
}

}  // namespace fdctmc
