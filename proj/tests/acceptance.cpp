// Acceptance suite: runs every criterion at its stated tolerance and prints
// one pass/fail line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "fdctmc/io.hpp"
#include "fdctmc/models.hpp"
#include "fdctmc/simulator.hpp"

using namespace fdctmc;

namespace {

int failed = 0;

void line(int id, bool ok, const std::string& what) {
    std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
    if (!ok) ++failed;
}

double now_s() {
    using clock = std::chrono::steady_clock;
    static const auto t0 = clock::now();
    return std::chrono::duration<double>(clock::now() - t0).count();
}

DiscretizationParams make_params(double epsilon, double delta, double tau_max) {
    DiscretizationParams p;
    p.epsilon = epsilon;
    p.delta = delta;
    p.tau_max = tau_max;
    p.kappa = epsilon / 100.0;
    return p;
}

FdCtmc prepared(RateModel m) {
    FdCtmc c = uniformize(m);
    return prune_unreachable(c, classify(c));
}

struct MatrixRun {
    std::string name;
    FdCtmc model;
    DiscretizationParams params;
    SynthesisReport symbolic;
    SynthesisReport explicit_;
};

std::vector<MatrixRun> matrix_runs;

// ---- criterion 1: explicit/symbolic equivalence over the sweep -----------

bool criterion1() {
    std::vector<std::pair<std::string, FdCtmc>> models;
    {
        ProtocolParams pp;
        models.emplace_back("protocol n=1", prepared(gen_protocol(pp)));
        DpmParams d2;
        d2.n = 2;
        models.emplace_back("dpm n=2", prepared(gen_dpm(d2)));
        DpmParams d4;
        d4.n = 4;
        models.emplace_back("dpm n=4", prepared(gen_dpm(d4)));
    }
    bool ok = true;
    double t0 = now_s();
    for (const auto& [name, model] : models) {
        for (double delta : {0.01, 0.001}) {
            for (double tau_max : {10.0, 20.0}) {
                for (double epsilon : {1e-2, 1e-3}) {
                    DiscretizationParams prm = make_params(epsilon, delta, tau_max);
                    MatrixRun run;
                    run.name = name + " d=" + std::to_string(delta) + " T=" + std::to_string(tau_max) +
                               " e=" + std::to_string(epsilon);
                    run.model = model;
                    run.params = prm;
                    PolicyOptions sym;
                    sym.mode = ImproveMode::symbolic;
                    PolicyOptions exp;
                    exp.mode = ImproveMode::explicit_enumeration;
                    run.symbolic = synthesize(model, prm, sym);
                    run.explicit_ = synthesize(model, prm, exp);
                    for (int s = 0; s < model.num_states(); ++s) {
                        bool hs = run.symbolic.delays.has(s), he = run.explicit_.delays.has(s);
                        if (hs != he) ok = false;
                        if (hs && he && run.symbolic.delays.tau[s] != run.explicit_.delays.tau[s]) {
                            ok = false;
                            std::printf("    mismatch %s state %s: %.12g vs %.12g\n", run.name.c_str(),
                                        model.states[s].c_str(), run.symbolic.delays.tau[s],
                                        run.explicit_.delays.tau[s]);
                        }
                    }
                    double a = run.symbolic.value_at_initial, b = run.explicit_.value_at_initial;
                    if (std::abs(a - b) > 1e-9 * (1.0 + std::abs(a))) {
                        ok = false;
                        std::printf("    value mismatch %s: %.15g vs %.15g\n", run.name.c_str(), a, b);
                    }
                    matrix_runs.push_back(std::move(run));
                }
            }
        }
    }
    double elapsed = now_s() - t0;
    std::printf("    (24 configs x 2 modes in %.1f s)\n", elapsed);
    if (elapsed > 300) ok = false;
    return ok;
}

// ---- criterion 2: Monte Carlo oracle agreement ----------------------------

bool criterion2() {
    bool ok = true;
    double t0 = now_s();
    std::map<std::string, bool> done;  // dedupe identical (model, delays) pairs
    for (const MatrixRun& run : matrix_runs) {
        std::string key = run.name.substr(0, run.name.find(" e="));
        std::string sig;
        for (int s = 0; s < run.model.num_states(); ++s)
            if (run.symbolic.delays.has(s) && std::isfinite(run.symbolic.delays.tau[s]))
                sig += std::to_string(run.symbolic.delays.tau[s]) + ",";
        if (done.count(key + sig)) continue;
        done[key + sig] = true;

        StateClassification cls = classify(run.model);
        EmbeddedKernel kernel(run.model, cls, run.params);
        ValueVector x = policy_evaluate(kernel, run.model, run.symbolic.delays);
        double exact = report_value(kernel, run.model, run.symbolic.delays, x);

        DelayFunction d = extend_delays(run.model, cls, run.symbolic.delays, run.params.tau_max);
        SimConfig cfg;
        cfg.runs = 1000000;
        cfg.seed = 20260809;
        SimEstimate est = estimate(run.model, d, cfg);
        double err = std::abs(est.mean - exact);
        bool this_ok = err <= 3 * est.std_error &&
                       est.truncated_runs < cfg.runs / 10000;  // < 0.01% truncation
        if (!this_ok) {
            ok = false;
            std::printf("    %s: mc %.6f +- %.6f vs %.6f (trunc %ld)\n", run.name.c_str(), est.mean,
                        est.std_error, exact, est.truncated_runs);
        }
    }
    std::printf("    (%zu distinct delay functions, %.1f s)\n", done.size(), now_s() - t0);
    if (now_s() - t0 > 600) ok = false;
    return ok;
}

// ---- criterion 3: kernel closed form on the handshake chain ----------------

bool criterion3() {
    FdCtmc c;
    c.states = {"A", "B", "C", "F"};
    c.lambda = 1.0;
    c.p = SparseMatrix(4);
    c.p.add(0, 1, 0.9);
    c.p.add(0, 3, 0.1);
    c.p.add(1, 2, 0.9);
    c.p.add(1, 3, 0.1);
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
    StateClassification cls = classify(c);
    double kappa = 1e-8, tau_max = 15.0;
    DiscretizationParams prm;
    prm.delta = 0.01;
    prm.tau_max = tau_max;
    prm.kappa = kappa;
    prm.epsilon = 1e-2;
    EmbeddedKernel kernel(c, cls, prm);
    CounterRng rng(1234, 0);
    bool ok = true;
    const double p = 0.9;
    for (int i = 0; i < 50; ++i) {
        double tau = tau_max * std::max(rng.next_unit(), 1e-6);
        KernelRow row = kernel.set_state_row(0, tau);
        double expect = p * p * (1.0 - std::exp(-tau) * (1.0 + tau));
        if (std::abs(row.dist[cls.mdp_index[2]] - expect) > kappa + 1e-9) ok = false;
    }
    return ok;
}

// ---- criterion 4: truncation soundness -------------------------------------

bool criterion4() {
    bool ok = true;
    CounterRng rng(99, 0);
    for (int trial = 0; trial < 100; ++trial) {
        double lambda = 0.1 + 8.0 * rng.next_unit();
        double tau_max = 0.3 + 15.0 * rng.next_unit();
        double kappa = std::pow(10.0, -9.0 + 6.0 * rng.next_unit());
        FdCtmc c = [&] {
            // small random model via the io round trip helpers in tests is
            // build a randomized single-channel chain with random costs
            ProtocolParams pp;
            pp.p = 0.5 + 0.45 * rng.next_unit();
            pp.q = 0.5 + 0.45 * rng.next_unit();
            pp.lambda = lambda;
            pp.rate_cost = 0.2 + 2.0 * rng.next_unit();
            pp.fd_impulse = 2.0 * rng.next_unit();
            return uniformize(gen_protocol(pp));
        }();
        StateClassification cls = classify(c);
        DiscretizationParams prm;
        prm.delta = tau_max / 64.0;
        prm.tau_max = tau_max;
        prm.kappa = kappa;
        prm.epsilon = 1e-2;
        EmbeddedKernel k(c, cls, prm);
        if (poisson_tail(c.lambda * tau_max, k.trunc_index()) * k.cost_bound() > kappa) ok = false;
        double tau = tau_max * std::max(rng.next_unit(), 1e-3);
        KernelRow row = k.set_state_row(0, tau);
        double mass = 0;
        for (double v : row.dist) mass += v;
        if (!(mass >= 1.0 - kappa && mass <= 1.0 + 1e-12)) ok = false;
    }
    return ok;
}

// ---- criterion 5: polynomial identity and derivative -----------------------

bool criterion5() {
    bool ok = true;
    int checked = 0;
    for (std::uint64_t seed = 1; checked < 100; ++seed) {
        ProtocolParams pp;
        CounterRng rng(seed, 1);
        pp.p = 0.5 + 0.45 * rng.next_unit();
        pp.q = 0.5 + 0.45 * rng.next_unit();
        pp.lambda = 0.3 + 3.0 * rng.next_unit();
        pp.n_bobs = 1 + static_cast<int>(rng.next_unit() * 2);
        pp.fd_impulse = rng.next_unit();
        FdCtmc c = prepared(gen_protocol(pp));
        StateClassification cls = classify(c);
        DiscretizationParams prm;
        prm.delta = 0.05;
        prm.tau_max = 1.0 + 6.0 * rng.next_unit();
        prm.kappa = 1e-7;
        prm.epsilon = 1e-2;
        EmbeddedKernel k(c, cls, prm);
        std::vector<double> x(cls.mdp_size());
        for (auto& xi : x) xi = 5.0 * rng.next_unit();
        for (int s = 0; s < c.num_states() && checked < 100; ++s) {
            if (!cls.s_set[s]) continue;
            ScaledPoly p = build_objective_poly(k, s, x);
            ScaledPoly q = derivative_poly(p);
            double tau = prm.tau_max * std::max(rng.next_unit(), 2e-3);
            KernelRow row = k.set_state_row(s, tau);
            double direct = row.cost;
            for (int j = 0; j < cls.mdp_size(); ++j) direct += row.dist[j] * x[j];
            if (std::abs(p.eval_f(tau) - direct) > 1e-9 * (1.0 + std::abs(direct))) {
                ok = false;
                std::printf("    identity miss at seed %llu\n", static_cast<unsigned long long>(seed));
            }
            double h = 1e-6;
            double fd = (p.eval_f(tau + h) - p.eval_f(tau - h)) / (2 * h);
            double qv = std::exp(-p.lambda * tau) * q.eval_p(tau);
            if (std::abs(qv - fd) > 1e-5 * (1.0 + std::abs(fd))) {
                ok = false;
                std::printf("    derivative miss at seed %llu (%.3g vs %.3g)\n",
                            static_cast<unsigned long long>(seed), qv, fd);
            }
            ++checked;
        }
    }
    return ok;
}

// ---- criterion 6: root isolation completeness ------------------------------

bool criterion6() {
    bool ok = true;
    CounterRng rng(2718, 0);
    const double alpha = 0.01, beta = 50.0, acc = 5e-4;
    RootIsolationOptions opts;
    opts.sturm_check = true;
    for (int trial = 0; trial < 200; ++trial) {
        int count = 1 + static_cast<int>(rng.next_unit() * 30);
        // Log-spaced placement with a relative gap: double-precision
        // coefficients keep such roots in place (clustered placements are
        // destroyed by coefficient rounding long before isolation begins).
        const double lo = 0.02, hi = 40.0, min_ratio = 1.25;
        double span = std::log(hi / lo), need = (count - 1) * std::log(min_ratio);
        std::vector<double> extra(count + 1);
        double total = 0;
        for (auto& e : extra) {
            e = rng.next_unit() + 1e-3;
            total += e;
        }
        std::vector<double> roots(count);
        double pos = std::log(lo) + extra[0] / total * (span - need);
        roots[0] = std::exp(pos);
        for (int i = 1; i < count; ++i) {
            pos += std::log(min_ratio) + extra[i] / total * (span - need);
            roots[i] = std::exp(pos);
        }

        std::vector<double> mono{1.0};
        for (double r : roots) {
            std::vector<double> next(mono.size() + 1, 0.0);
            for (size_t i = 0; i < mono.size(); ++i) {
                next[i] -= r * mono[i];
                next[i + 1] += mono[i];
            }
            mono = next;
        }
        ScaledPoly q;
        q.lambda = 1.0;
        q.coeffs.resize(mono.size());
        double fact = 1.0;
        for (size_t k = 0; k < mono.size(); ++k) {
            if (k > 0) fact *= static_cast<double>(k);
            q.coeffs[k] = mono[k] * fact;
        }

        RootSet rs = isolate_roots(q, alpha, beta, acc, opts);
        if (rs.roots.size() != roots.size()) {
            ok = false;
            std::printf("    trial %d: %zu roots reported, %d placed\n", trial, rs.roots.size(), count);
            continue;
        }
        for (int i = 0; i < count; ++i)
            if (std::abs(rs.roots[i] - roots[i]) > acc) {
                ok = false;
                std::printf("    trial %d: root %.6f recovered as %.6f\n", trial, roots[i], rs.roots[i]);
            }
    }
    return ok;
}

// ---- criterion 7: candidate bound and evaluation savings -------------------

bool criterion7() {
    ProtocolParams pp;
    FdCtmc c = prepared(gen_protocol(pp));
    DiscretizationParams prm = make_params(1e-2, 0.001, 20.0);
    PolicyOptions sym;
    sym.mode = ImproveMode::symbolic;
    PolicyOptions exp;
    exp.mode = ImproveMode::explicit_enumeration;
    SynthesisReport a = synthesize(c, prm, sym);
    SynthesisReport b = synthesize(c, prm, exp);
    bool ok = true;
    long bound = 4 * a.trunc_index + 2;
    long total_sym = 0, total_exp = 0;
    for (const auto& st : a.per_iteration) {
        // One set state in this model, so the per-iteration count is the
        // per-state count.
        if (st.candidates > bound) ok = false;
        total_sym += st.candidates;
    }
    for (const auto& st : b.per_iteration) total_exp += st.candidates;
    if (!(total_sym * 20 < total_exp)) ok = false;  // < 5%
    std::printf("    (symbolic %ld evaluations vs explicit %ld, bound 4I+2 = %ld)\n", total_sym,
                total_exp, bound);
    return ok;
}

// ---- criterion 8: monotone improvement, finite iteration counts ------------

bool criterion8() {
    bool ok = true;
    for (const MatrixRun& run : matrix_runs) {
        for (const SynthesisReport* rep : {&run.symbolic, &run.explicit_}) {
            if (rep->iterations >= 100) ok = false;
            for (const auto& st : rep->per_iteration)
                if (st.max_value_increase > 1e-10) {
                    ok = false;
                    std::printf("    %s: value increase %.3g\n", run.name.c_str(), st.max_value_increase);
                }
        }
    }
    return ok;
}

// ---- criterion 9: conditional reference-timeout check (non-gating) ---------

bool criterion9() {
    ProtocolParams pp;  // lambda = 1 hypothesis
    FdCtmc c = prepared(gen_protocol(pp));
    DiscretizationParams prm = make_params(1e-5, 1e-4, 20.0);
    PolicyOptions sym;
    SynthesisReport rep = synthesize(c, prm, sym);
    double got = rep.delays.tau[0];
    const double reference = 3.779370;
    if (std::abs(got - reference) <= 2 * prm.delta) {
        std::printf("    lambda=1 reproduces the reported timeout: %.6f\n", got);
    } else {
        std::printf("    lambda=1 does not reproduce the reported %.6f; obtained %.6f "
                    "(value %.6f) - logged, the delivery rate is a free parameter\n",
                    reference, got, rep.value_at_initial);
    }
    // Internal cross-check against the independently derived optimum for
    // lambda = 1 (continuous argmin 4.00885, value 3.47252).
    return std::abs(got - 4.00885) <= 1.5e-3 &&
           std::abs(rep.value_at_initial - 3.4725246754) <= 1e-3;
}

}  // namespace

int main() {
    std::printf("acceptance suite\n");
    line(1, criterion1(), "explicit and symbolic synthesis agree across the sweep");
    line(2, criterion2(), "Monte Carlo oracle matches policy evaluation within 3 sigma");
    line(3, criterion3(), "kernel distribution matches the two-step closed form");
    line(4, criterion4(), "Poisson truncation keeps the promised mass and tail bound");
    line(5, criterion5(), "objective polynomial identity and symbolic derivative");
    line(6, criterion6(), "root isolation recovers constructed factor products");
    line(7, criterion7(), "symbolic candidate bound 4I+2 and < 5% of explicit work");
    line(8, criterion8(), "values non-increasing, iteration counts finite");
    line(9, criterion9(), "conditional reference-timeout comparison (reported either way)");
    std::printf("%s (%d failed) in %.1f s\n", failed == 0 ? "ALL PASS" : "FAILURES", failed, now_s());
    return failed == 0 ? 0 : 1;
}
