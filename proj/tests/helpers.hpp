#pragma once

#include <cmath>
#include <cstdint>

#include "fdctmc/models.hpp"
#include "fdctmc/simulator.hpp"

namespace fdctmc::test {

/// Simplified handshake: two deliveries must land before the timeout, C
/// absorbing, costs are elapsed time.
inline FdCtmc handshake(double p = 0.9, double lambda = 1.0) {
    FdCtmc c;
    c.states = {"A", "B", "C", "F"};
    c.lambda = lambda;
    c.p = SparseMatrix(4);
    c.p.add(0, 1, p);
    c.p.add(0, 3, 1 - p);
    c.p.add(1, 2, p);
    c.p.add(1, 3, 1 - p);
    c.p.add(2, 2, 1.0);
    c.p.add(3, 3, 1.0);
    c.fd_states = {1, 1, 0, 1};
    c.fd_matrix = SparseMatrix(4);
    c.fd_matrix.add(0, 0, 1.0);
    c.fd_matrix.add(1, 0, 1.0);
    c.fd_matrix.add(2, 2, 1.0);
    c.fd_matrix.add(3, 0, 1.0);
    c.costs.rate.assign(4, 1.0);
    c.costs.impulse_exp = SparseMatrix(4);
    c.costs.impulse_fd = SparseMatrix(4);
    c.initial = 0;
    c.targets = {0, 0, 1, 0};
    c.validate();
    return c;
}

/// Full single-channel protocol (link breaking, restart impulse).
inline FdCtmc channel(double p = 0.9, double q = 0.9, double lambda = 1.0) {
    ProtocolParams pp;
    pp.p = p;
    pp.q = q;
    pp.lambda = lambda;
    return uniformize(gen_protocol(pp));
}

/// Small random valid model with every state leaking toward the target, so
/// every policy is proper.
inline FdCtmc random_model(std::uint64_t seed, int n = 5) {
    CounterRng rng(seed, 0x6d6f64656cull);
    FdCtmc c;
    for (int i = 0; i < n; ++i) c.states.push_back("s" + std::to_string(i));
    c.lambda = 0.2 + 3.0 * rng.next_unit();
    int target = n - 1;
    c.fd_states.assign(n, 0);
    for (int s = 0; s < n - 1; ++s) c.fd_states[s] = rng.next_unit() < 0.5 ? 1 : 0;
    c.fd_states[0] = 1;  // keep at least one set state (initial gets promoted)

    c.p = SparseMatrix(n);
    c.fd_matrix = SparseMatrix(n);
    c.costs.impulse_exp = SparseMatrix(n);
    c.costs.impulse_fd = SparseMatrix(n);
    for (int s = 0; s < n; ++s) {
        double to_target = 0.05 + 0.3 * rng.next_unit();
        c.p.add(s, target, to_target);
        double rest = 1 - to_target;
        int k = 1 + static_cast<int>(rng.next_unit() * 3);
        std::vector<double> cut(k, 0.0);
        for (int j = 0; j < k; ++j) cut[j] = rng.next_unit() + 1e-3;
        double tot = 0;
        for (double v : cut) tot += v;
        for (int j = 0; j < k; ++j) {
            int t = static_cast<int>(rng.next_unit() * n) % n;
            c.p.add(s, t, rest * cut[j] / tot);
            if (rng.next_unit() < 0.3) c.costs.impulse_exp.add(s, t, rng.next_unit());
        }
        c.p.normalize_row(s);
        if (c.fd_states[s]) {
            int t = static_cast<int>(rng.next_unit() * n) % n;
            double split = 0.3 + 0.7 * rng.next_unit();
            c.fd_matrix.add(s, t, split);
            c.fd_matrix.add(s, target, 1 - split);
            if (rng.next_unit() < 0.5) c.costs.impulse_fd.add(s, t, rng.next_unit());
        } else {
            c.fd_matrix.add(s, s, 1.0);
        }
    }
    c.costs.rate.assign(n, 0.0);
    for (int s = 0; s < n; ++s) c.costs.rate[s] = 0.1 + 2.0 * rng.next_unit();
    c.initial = 0;
    c.targets.assign(n, 0);
    c.targets[target] = 1;
    c.validate();
    return c;
}

}  // namespace fdctmc::test
