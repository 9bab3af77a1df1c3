#include <doctest.h>

#include <cfloat>
#include <cmath>

#include "fdctmc/embedded.hpp"
#include "fdctmc/models.hpp"
#include "helpers.hpp"

using namespace fdctmc;

namespace {

DiscretizationParams params_for(double delta, double tau_max, double kappa) {
    DiscretizationParams p;
    p.delta = delta;
    p.tau_max = tau_max;
    p.kappa = kappa;
    p.epsilon = 1e-2;
    return p;
}

// Direct evaluation of the truncated series, independent of the kernel's
// precomputed tables: walks P̄ explicitly and sums term by term.
KernelRow naive_set_row(const FdCtmc& c, const StateClassification& cls, int s, double tau, long big) {
    int n = c.num_states();
    int e = cls.mdp_size();
    KernelRow out;
    out.dist.assign(e, 0.0);
    std::vector<double> v(n, 0.0);
    v[s] = 1.0;
    std::vector<std::vector<double>> vs;
    for (long i = 0; i < big; ++i) {
        vs.push_back(v);
        std::vector<double> next(n, 0.0);
        for (int u = 0; u < n; ++u) {
            if (v[u] == 0) continue;
            if (!c.fd_states[u]) {
                next[u] += v[u];
                continue;
            }
            for (const auto& [t, pv] : c.p.rows[u]) next[t] += v[u] * pv;
        }
        v = next;
    }
    auto rbar = [&](int u) { return c.fd_states[u] ? c.costs.rate[u] : 0.0; };
    auto jp = [&](int u) {
        if (!c.fd_states[u]) return 0.0;
        double acc = 0;
        for (const auto& [t, pv] : c.p.rows[u]) acc += pv * c.costs.impulse_exp.at(u, t);
        return acc;
    };
    auto jf = [&](int u) {
        if (!c.fd_states[u]) return 0.0;
        double acc = 0;
        for (const auto& [t, fv] : c.fd_matrix.rows[u]) acc += fv * c.costs.impulse_fd.at(u, t);
        return acc;
    };
    double mu = c.lambda * tau;
    double w = std::exp(-mu);
    for (long i = 0; i < big; ++i) {
        for (int u = 0; u < n; ++u) {
            if (vs[i][u] == 0) continue;
            for (const auto& [t, fv] : c.fd_matrix.rows[u]) out.dist[cls.mdp_index[t]] += w * vs[i][u] * fv;
        }
        double inner = 0;
        for (long j = 0; j < i; ++j)
            for (int u = 0; u < n; ++u)
                inner += vs[j][u] * (tau * rbar(u) / static_cast<double>(i + 1) + jp(u));
        for (int u = 0; u < n; ++u)
            inner += vs[i][u] * (tau * rbar(u) / static_cast<double>(i + 1) + jf(u));
        out.cost += w * inner;
        w *= mu / static_cast<double>(i + 1);
    }
    return out;
}

}  // namespace

TEST_SUITE("embedded") {

TEST_CASE("truncation_index: zero rate needs a single summand") {
    CHECK(truncation_index(0.0, 5.0, 1e-9, 1.0) == 1);
}

TEST_CASE("truncation_index: Poisson(1) tail crosses 1e-6 at I = 10") {
    CHECK(truncation_index(1.0, 1.0, 1e-6, 1.0) == 10);
    CHECK(poisson_tail(1.0, 10) <= 1e-6);
    CHECK(poisson_tail(1.0, 9) > 1e-6);
}

TEST_CASE("truncation_index: larger kappa never increases I") {
    CounterRng rng(42, 0);
    for (int trial = 0; trial < 50; ++trial) {
        double lambda = 0.1 + 10 * rng.next_unit();
        double tau_max = 0.1 + 20 * rng.next_unit();
        double kappa = std::pow(10.0, -9.0 + 6.0 * rng.next_unit());
        double bound = 1.0 + 10 * rng.next_unit();
        long i1 = truncation_index(lambda, tau_max, kappa, bound);
        long i2 = truncation_index(lambda, tau_max, 2 * kappa, bound);
        CHECK(i2 <= i1);
        CHECK(poisson_tail(lambda * tau_max, i1) * bound <= kappa);
    }
}

TEST_CASE("truncation_index: hard cap overflow") {
    CHECK_THROWS_WITH_AS(truncation_index(1.0, 1.0, 1e-300, 1e6, 50),
                         doctest::Contains("truncation"), Error);
}

TEST_CASE("poisson weights match the tail and survive large rates") {
    CounterRng rng(7, 0);
    for (int trial = 0; trial < 30; ++trial) {
        double mu = 50 * rng.next_unit();
        long count = 5 + static_cast<long>(100 * rng.next_unit());
        PoissonWeights pw = poisson_weights(mu, count);
        CHECK(pw.total == doctest::Approx(1.0 - poisson_tail(mu, count)).epsilon(1e-11));
    }
    // Scaled mode: e^{-mu} underflows but weights near the mode do not.
    double mu = 800.0;
    PoissonWeights pw = poisson_weights(mu, 1200);
    CHECK(pw.total == doctest::Approx(1.0).epsilon(1e-9));
    long mode = 800;
    double expect = std::exp(-mu + mode * std::log(mu) - std::lgamma(mode + 1.0));
    CHECK(pw.w[mode] == doctest::Approx(expect).epsilon(1e-9));
    CHECK(pw.w[0] == 0.0);
}

TEST_CASE("build_kernel: handshake chain shapes") {
    FdCtmc c = test::handshake();
    StateClassification cls = classify(c);
    EmbeddedKernel k(c, cls, params_for(0.01, 10.0, 1e-8));
    CHECK(k.p_bar().at(2, 2) == 1.0);  // C absorbing
    CHECK(k.p_bar().at(0, 1) == doctest::Approx(0.9));
    CHECK(k.p_bar().at(1, 2) == doctest::Approx(0.9));
    CHECK(k.r_bar()[2] == 0.0);
    CHECK(k.r_bar()[0] == 1.0);
    for (int s = 0; s < 4; ++s) {
        CHECK(k.jp_bar()[s] == 0.0);  // the handshake chain has no impulse costs
        CHECK(k.jf_bar()[s] == 0.0);
    }
}

TEST_CASE("build_kernel: dpm cost vectors follow the off/fd split") {
    FdCtmc c = uniformize(gen_dpm(DpmParams{.n = 2}));
    StateClassification cls = classify(c);
    EmbeddedKernel k(c, cls, params_for(0.01, 5.0, 1e-6));
    auto idx = [&](const std::string& name) {
        for (int s = 0; s < c.num_states(); ++s)
            if (c.states[s] == name) return s;
        return -1;
    };
    // R̄ carries the configured energy rates on clock-running states and is
    // zero on S_off; busy/acc rate costs enter through the off-state rows.
    CHECK(k.r_bar()[idx("idle0")] == doctest::Approx(0.90));
    CHECK(k.r_bar()[idx("sleep1")] == doctest::Approx(0.13));
    CHECK(k.r_bar()[idx("busy1")] == 0.0);
    CHECK(k.r_bar()[idx("acc")] == 0.0);
    KernelRow busy = k.off_state_row(idx("busy1"));
    CHECK(busy.cost == doctest::Approx(2.15 / 13.89));
    // No impulse costs anywhere in this model.
    for (int s = 0; s < c.num_states(); ++s) {
        CHECK(k.jp_bar()[s] == 0.0);
        CHECK(k.jf_bar()[s] == 0.0);
    }
}

TEST_CASE("kernel_off_state: constant row and cost") {
    FdCtmc c = test::handshake();
    StateClassification cls = classify(c);
    EmbeddedKernel k(c, cls, params_for(0.01, 10.0, 1e-8));
    KernelRow row = k.off_state_row(2);
    CHECK(row.dist[cls.mdp_index[2]] == doctest::Approx(1.0));
    CHECK(row.cost == doctest::Approx(1.0));  // R(C)/lambda, no impulses

    FdCtmc proto = test::channel();
    StateClassification pcls = classify(proto);
    EmbeddedKernel pk(proto, pcls, params_for(0.01, 10.0, 1e-8));
    KernelRow prow = pk.off_state_row(2);
    CHECK(prow.dist[pcls.mdp_index[2]] == doctest::Approx(0.9));
    CHECK(prow.dist[pcls.mdp_index[0]] == doctest::Approx(0.1));
}

TEST_CASE("kernel_set_state: tiny tau collapses to the fixed-delay step") {
    FdCtmc proto = test::channel();
    StateClassification cls = classify(proto);
    EmbeddedKernel k(proto, cls, params_for(0.01, 10.0, 1e-8));
    KernelRow row = k.set_state_row(0, DBL_MIN);
    CHECK(row.dist[cls.mdp_index[0]] == doctest::Approx(1.0).epsilon(1e-12));  // F(A) = A
    CHECK(row.cost == doctest::Approx(1.0).epsilon(1e-9));                     // jf(A): restart impulse
}

TEST_CASE("kernel_set_state: handshake closed form for reaching C") {
    FdCtmc c = test::handshake();
    StateClassification cls = classify(c);
    double kappa = 1e-9;
    EmbeddedKernel k(c, cls, params_for(0.01, 12.0, kappa));
    CounterRng rng(3, 0);
    for (int i = 0; i < 50; ++i) {
        double tau = 12.0 * std::max(rng.next_unit(), 1e-3);
        KernelRow row = k.set_state_row(0, tau);
        double p = 0.9, lt = c.lambda * tau;
        double expect = p * p * (1.0 - std::exp(-lt) * (1.0 + lt));
        CHECK(std::abs(row.dist[cls.mdp_index[2]] - expect) <= kappa + 1e-9);
    }
}

TEST_CASE("kernel_set_state: agrees with direct series evaluation") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        FdCtmc c = test::random_model(seed);
        StateClassification cls = classify(c);
        EmbeddedKernel k(c, cls, params_for(0.05, 4.0, 1e-7));
        CounterRng rng(seed, 99);
        for (int s = 0; s < c.num_states(); ++s) {
            if (!cls.s_set[s]) continue;
            double tau = 4.0 * std::max(rng.next_unit(), 1e-3);
            KernelRow fast = k.set_state_row(s, tau);
            KernelRow slow = naive_set_row(c, cls, s, tau, k.trunc_index());
            CHECK(fast.cost == doctest::Approx(slow.cost).epsilon(1e-11));
            for (int j = 0; j < cls.mdp_size(); ++j)
                CHECK(std::abs(fast.dist[j] - slow.dist[j]) <= 1e-11);
        }
    }
}

TEST_CASE("kernel_set_state: retained mass is within kappa of one") {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        FdCtmc c = test::random_model(seed);
        StateClassification cls = classify(c);
        CounterRng rng(seed, 5);
        double kappa = std::pow(10.0, -8.0 + 5.0 * rng.next_unit());
        double tau_max = 0.5 + 8.0 * rng.next_unit();
        EmbeddedKernel k(c, cls, params_for(tau_max / 50.0, tau_max, kappa));
        for (int s = 0; s < c.num_states(); ++s) {
            if (!cls.s_set[s]) continue;
            double tau = tau_max * std::max(rng.next_unit(), 1e-3);
            KernelRow row = k.set_state_row(s, tau);
            double mass = 0;
            for (double d : row.dist) mass += d;
            CHECK(mass >= 1.0 - kappa);
            CHECK(mass <= 1.0 + 1e-12);
            CHECK(row.cost >= 0.0);
        }
    }
}

TEST_CASE("kernel_set_state: cost is continuous in tau") {
    FdCtmc c = test::random_model(11);
    StateClassification cls = classify(c);
    EmbeddedKernel k(c, cls, params_for(0.05, 5.0, 1e-8));
    CounterRng rng(11, 1);
    for (int s = 0; s < c.num_states(); ++s) {
        if (!cls.s_set[s]) continue;
        for (int i = 0; i < 5; ++i) {
            double tau = 0.2 + 4.0 * rng.next_unit();
            double h = 1e-6;
            double a = k.set_state_row(s, tau - h).cost;
            double b = k.set_state_row(s, tau + h).cost;
            CHECK(std::abs(b - a) <= 1e-4 * (1.0 + std::abs(a)));
        }
    }
}

TEST_CASE("precompute_powers: indicator start, identity chain, handshake two-step") {
    FdCtmc c = test::handshake();
    StateClassification cls = classify(c);
    auto v = precompute_powers(c, cls, 0, 3);
    CHECK(v[0] == std::vector<double>{1, 0, 0, 0});
    // Two steps from A: C with p^2, everything else stuck in F.
    CHECK(v[2][2] == doctest::Approx(0.81));
    CHECK(v[2][3] == doctest::Approx(0.19));
    CHECK(v[2][0] == 0.0);
    for (auto& row : v) {
        double sum = 0;
        for (double x : row) sum += x;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }

    // Absorbing one-state chain: every power is the indicator.
    FdCtmc one;
    one.states = {"s", "g"};
    one.lambda = 1.0;
    one.p = SparseMatrix(2);
    one.p.add(0, 0, 1.0);
    one.p.add(1, 1, 1.0);
    one.fd_states = {1, 0};
    one.fd_matrix = SparseMatrix(2);
    one.fd_matrix.add(0, 0, 1.0);
    one.fd_matrix.add(1, 1, 1.0);
    one.costs.rate = {1.0, 1.0};
    one.costs.impulse_exp = SparseMatrix(2);
    one.costs.impulse_fd = SparseMatrix(2);
    one.initial = 0;
    one.targets = {0, 1};
    auto w = precompute_powers(one, classify(one), 0, 4);
    for (const auto& row : w) CHECK(row == std::vector<double>{1, 0});
}

TEST_CASE("suggest_kappa is positive and below epsilon") {
    FdCtmc c = test::channel();
    double kappa = suggest_kappa(c, 1e-2);
    CHECK(kappa > 0);
    CHECK(kappa < 1e-2);
}

}  // TEST_SUITE
