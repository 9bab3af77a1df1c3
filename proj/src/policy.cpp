#include "fdctmc/policy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>

namespace fdctmc {

namespace {

long grid_index_of(const DiscretizationParams& p, double tau) {
    double k = tau / p.delta;
    long kr = static_cast<long>(std::llround(k));
    if (kr >= 1 && std::abs(kr * p.delta - tau) <= 1e-9 * std::max(1.0, tau)) return kr;
    return -1;
}

KernelRow row_for(const EmbeddedKernel& k, const FdCtmc& c, const DelayFunction& d, int s) {
    (void)c;
    if (k.is_off_state(s)) return k.off_state_row(s);
    double tau = d.at(s);
    return k.set_state_row(s, tau, grid_index_of(k.params(), tau));
}

struct LinearSystem {
    // x = b + T x restricted to non-target MDP states
    std::vector<int> free_states;   // MDP indices of non-target states
    std::vector<int> pos;           // MDP index -> row in the system, -1 for targets
    std::vector<double> t;          // dense nt x nt
    std::vector<double> b;
};

LinearSystem assemble(const EmbeddedKernel& k, const FdCtmc& c, const DelayFunction& d) {
    const StateClassification& cls = k.classification();
    int e = cls.mdp_size();
    LinearSystem sys;
    sys.pos.assign(e, -1);
    for (int i = 0; i < e; ++i) {
        if (!c.is_target(cls.mdp_states[i])) {
            sys.pos[i] = static_cast<int>(sys.free_states.size());
            sys.free_states.push_back(i);
        }
    }
    int nt = static_cast<int>(sys.free_states.size());
    sys.t.assign(static_cast<size_t>(nt) * nt, 0.0);
    sys.b.assign(nt, 0.0);
    for (int r = 0; r < nt; ++r) {
        int s = cls.mdp_states[sys.free_states[r]];
        KernelRow row = row_for(k, c, d, s);
        sys.b[r] = row.cost;
        for (int j = 0; j < e; ++j) {
            int cpos = sys.pos[j];
            if (cpos >= 0) sys.t[static_cast<size_t>(r) * nt + cpos] = row.dist[j];
        }
    }
    return sys;
}

// Dense LU with partial pivoting on A = I - T.
std::vector<double> solve_lu(LinearSystem sys, const PolicyOptions& opts) {
    int n = static_cast<int>(sys.free_states.size());
    std::vector<double> a(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            a[static_cast<size_t>(i) * n + j] = (i == j ? 1.0 : 0.0) - sys.t[static_cast<size_t>(i) * n + j];
    std::vector<double> saved_a = a;
    std::vector<double> x = sys.b;
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;

    for (int col = 0; col < n; ++col) {
        int piv = col;
        double best = std::abs(a[static_cast<size_t>(col) * n + col]);
        for (int r = col + 1; r < n; ++r) {
            double v = std::abs(a[static_cast<size_t>(r) * n + col]);
            if (v > best) {
                best = v;
                piv = r;
            }
        }
        if (best < opts.pivot_tolerance)
            raise(ErrorCode::infinite_expected_cost,
                  "singular evaluation system (pivot " + std::to_string(best) + ")");
        if (piv != col) {
            for (int j = 0; j < n; ++j)
                std::swap(a[static_cast<size_t>(piv) * n + j], a[static_cast<size_t>(col) * n + j]);
            std::swap(x[piv], x[col]);
        }
        double d = a[static_cast<size_t>(col) * n + col];
        for (int r = col + 1; r < n; ++r) {
            double f = a[static_cast<size_t>(r) * n + col] / d;
            if (f == 0) continue;
            a[static_cast<size_t>(r) * n + col] = f;  // keep the multiplier for refinement
            for (int j = col + 1; j < n; ++j)
                a[static_cast<size_t>(r) * n + j] -= f * a[static_cast<size_t>(col) * n + j];
            x[r] -= f * x[col];
        }
    }
    for (int r = n - 1; r >= 0; --r) {
        double s = x[r];
        for (int j = r + 1; j < n; ++j) s -= a[static_cast<size_t>(r) * n + j] * x[j];
        x[r] = s / a[static_cast<size_t>(r) * n + r];
    }

    double xmax = 0;
    for (double v : x) xmax = std::max(xmax, std::abs(v));
    if (xmax > opts.divergence_cap)
        raise(ErrorCode::infinite_expected_cost,
              "value vector exceeds the divergence cap, no target reached almost surely");
    double rmax = 0;
    for (int i = 0; i < n; ++i) {
        double r = sys.b[i];
        for (int j = 0; j < n; ++j) r -= saved_a[static_cast<size_t>(i) * n + j] * x[j];
        rmax = std::max(rmax, std::abs(r));
    }
    if (rmax > 1e-9 * (1.0 + xmax))
        raise(ErrorCode::solver_failure, "linear solve residual " + std::to_string(rmax) + " too large");
    return x;
}

std::vector<double> solve_gauss_seidel(const LinearSystem& sys, const PolicyOptions& opts) {
    int n = static_cast<int>(sys.free_states.size());
    std::vector<double> x(n, 0.0);
    const long max_sweeps = 200000;
    for (long sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_rel = 0, xmax = 0;
        for (int i = 0; i < n; ++i) {
            double s = sys.b[i];
            double diag = sys.t[static_cast<size_t>(i) * n + i];
            for (int j = 0; j < n; ++j)
                if (j != i) s += sys.t[static_cast<size_t>(i) * n + j] * x[j];
            double nx = (diag < 1.0) ? s / (1.0 - diag) : opts.divergence_cap * 2;
            max_rel = std::max(max_rel, std::abs(nx - x[i]) / (1.0 + std::abs(nx)));
            x[i] = nx;
            xmax = std::max(xmax, std::abs(nx));
        }
        if (xmax > opts.divergence_cap)
            raise(ErrorCode::infinite_expected_cost,
                  "value vector exceeds the divergence cap, no target reached almost surely");
        if (max_rel <= 1e-10) return x;
    }
    raise(ErrorCode::solver_failure, "Gauss-Seidel did not converge");
}

ScaledPoly group_objective(const EmbeddedKernel& k, std::span<const int> group, const ValueVector& x) {
    ScaledPoly sum;
    for (int s : group) {
        ScaledPoly p = build_objective_poly(k, s, x.x);
        if (sum.coeffs.empty()) {
            sum = std::move(p);
        } else {
            for (size_t i = 0; i < sum.coeffs.size(); ++i) sum.coeffs[i] += p.coeffs[i];
        }
    }
    return sum;
}

// Argmin over candidate grid indices with the equal-within-tolerance rule;
// ties prefer the current index, then the smallest.
void finish_argmin(Improvement& imp, const std::vector<long>& ks, const std::vector<double>& vals,
                   long current_k, double tie_tol) {
    double best = vals[0];
    for (double v : vals) best = std::min(best, v);
    double band = tie_tol * (1.0 + std::abs(best));
    for (size_t i = 0; i < ks.size(); ++i)
        if (vals[i] <= best + band) imp.argmin.push_back(ks[i]);
    imp.best_value = best;
    if (std::binary_search(imp.argmin.begin(), imp.argmin.end(), current_k))
        imp.chosen = current_k;
    else
        imp.chosen = imp.argmin.front();
}

}  // namespace

ValueVector policy_evaluate(const EmbeddedKernel& k, const FdCtmc& c, const DelayFunction& d,
                            const PolicyOptions& opts) {
    LinearSystem sys = assemble(k, c, d);
    int nt = static_cast<int>(sys.free_states.size());
    std::vector<double> xf;
    bool use_gs = opts.solver == LinearSolver::gauss_seidel ||
                  (opts.solver == LinearSolver::automatic && nt > opts.dense_solver_limit);
    if (nt > 0) xf = use_gs ? solve_gauss_seidel(sys, opts) : solve_lu(sys, opts);

    ValueVector out;
    out.x.assign(k.mdp_size(), 0.0);
    double xmax = 0;
    for (double v : xf) xmax = std::max(xmax, std::abs(v));
    for (int r = 0; r < nt; ++r) {
        double v = xf[r];
        if (v < 0) {
            if (v < -1e-9 * (1.0 + xmax))
                raise(ErrorCode::solver_failure, "negative expected cost from the linear solve");
            v = 0;  // roundoff within the residual tolerance
        }
        out.x[sys.free_states[r]] = v;
    }
    return out;
}

Improvement improve_group_explicit(const EmbeddedKernel& k, std::span<const int> group,
                                   const ValueVector& x, long current_k, const PolicyOptions& opts) {
    const DiscretizationParams& prm = k.params();
    long kmax = prm.grid_count();
    ScaledPoly f = group_objective(k, group, x);

    Improvement imp;
    imp.degree = f.degree();
    imp.candidates.full_grid = true;
    std::vector<long> ks(kmax);
    std::vector<double> vals(kmax);
    for (long i = 0; i < kmax; ++i) {
        ks[i] = i + 1;
        vals[i] = f.eval_f(prm.grid_tau(i + 1));
    }
    imp.evaluations = kmax;
    finish_argmin(imp, ks, vals, current_k, opts.tie_tolerance);
    return imp;
}

Improvement improve_group_symbolic(const EmbeddedKernel& k, std::span<const int> group,
                                   const ValueVector& x, long current_k, const PolicyOptions& opts) {
    const DiscretizationParams& prm = k.params();
    long kmax = prm.grid_count();
    double alpha = prm.grid_tau(1), beta = prm.grid_tau(kmax);
    ScaledPoly f = group_objective(k, group, x);
    ScaledPoly q = derivative_poly(f);

    Improvement imp;
    imp.degree = q.degree();
    if (q.is_zero(opts.roots.zero_threshold)) {
        // f is constant on the interval: L is the whole grid, keep the
        // current delay (grid membership is maintained by the driver).
        imp.zero_poly = true;
        imp.candidates.full_grid = true;
        imp.chosen = current_k >= 1 ? current_k : 1;
        imp.argmin.push_back(imp.chosen);
        imp.best_value = std::numeric_limits<double>::quiet_NaN();
        return imp;
    }

    RootSet roots = isolate_roots(q, alpha, beta, prm.delta / 2.0, opts.roots);
    imp.num_roots = static_cast<long>(roots.roots.size());

    // D'(s): interval bounds plus grid points within 3*delta/2 of a root.
    std::set<long> candidate_ks{1, kmax};
    std::set<long> near_root;
    for (double r : roots.roots) {
        long lo = static_cast<long>(std::ceil((r - 1.5 * prm.delta) / prm.delta - 1e-9));
        long hi = static_cast<long>(std::floor((r + 1.5 * prm.delta) / prm.delta + 1e-9));
        for (long kk = std::max<long>(1, lo); kk <= std::min(kmax, hi); ++kk) {
            candidate_ks.insert(kk);
            near_root.insert(kk);
        }
    }

    std::vector<long> ks(candidate_ks.begin(), candidate_ks.end());
    std::vector<double> vals(ks.size());
    for (size_t i = 0; i < ks.size(); ++i) vals[i] = f.eval_f(prm.grid_tau(ks[i]));
    imp.evaluations = static_cast<long>(ks.size());
    imp.candidates.ks = ks;
    for (long kk : ks)
        imp.candidates.provenance.push_back(near_root.count(kk)
                                                ? CandidateSet::Provenance::near_root
                                                : CandidateSet::Provenance::interval_bound);
    finish_argmin(imp, ks, vals, current_k, opts.tie_tolerance);
    return imp;
}

double report_value(const EmbeddedKernel& k, const FdCtmc& c, const DelayFunction& d,
                    const ValueVector& x) {
    const StateClassification& cls = k.classification();
    if (!c.is_target(c.initial)) return x.x[cls.mdp_index[c.initial]];
    // Cost counts at least one transition: unroll one step from the target.
    KernelRow row = row_for(k, c, d, c.initial);
    double v = row.cost;
    for (int j = 0; j < cls.mdp_size(); ++j) v += row.dist[j] * x.x[j];
    return v;
}

SynthesisReport synthesize(const FdCtmc& c, const DiscretizationParams& params,
                           const PolicyOptions& opts) {
    c.validate();
    params.validate();
    StateClassification cls = classify(c);
    EmbeddedKernel kernel(c, cls, params);

    int n = c.num_states();
    // Improvement units: tied set states improve jointly, everything else
    // alone; deterministic input-state order.
    std::vector<int> group_of(n, -1);
    std::vector<std::vector<int>> groups;
    for (size_t g = 0; g < c.tie_groups.size(); ++g)
        for (int s : c.tie_groups[g])
            if (cls.s_set[s]) group_of[s] = static_cast<int>(g);
    std::vector<char> emitted(c.tie_groups.size(), 0);
    for (int s = 0; s < n; ++s) {
        if (!cls.s_set[s]) continue;
        if (group_of[s] < 0) {
            groups.push_back({s});
        } else if (!emitted[group_of[s]]) {
            emitted[group_of[s]] = 1;
            std::vector<int> members;
            for (int t : c.tie_groups[group_of[s]])
                if (cls.s_set[t]) members.push_back(t);
            groups.push_back(std::move(members));
        }
    }

    std::vector<long> d_k(n, -1);
    for (int s = 0; s < n; ++s)
        if (cls.s_set[s]) d_k[s] = 1;  // initial policy: minimal delays
    auto make_delay = [&]() {
        DelayFunction d;
        d.tau.assign(n, std::numeric_limits<double>::quiet_NaN());
        for (int s = 0; s < n; ++s) {
            if (cls.s_off[s]) d.tau[s] = std::numeric_limits<double>::infinity();
            if (cls.s_set[s]) d.tau[s] = params.grid_tau(d_k[s]);
        }
        return d;
    };

    SynthesisReport rep;
    rep.mode = opts.mode;
    rep.trunc_index = kernel.trunc_index();
    rep.initial_is_target = c.is_target(c.initial);

    ValueVector prev;
    for (long iter = 1; iter <= opts.max_iterations; ++iter) {
        auto t0 = std::chrono::steady_clock::now();
        DelayFunction d = make_delay();
        ValueVector x = policy_evaluate(kernel, c, d, opts);

        IterationStats st;
        st.value_at_initial = report_value(kernel, c, d, x);
        if (!prev.x.empty()) {
            double prev_max = 0;
            for (double v : prev.x) prev_max = std::max(prev_max, std::abs(v));
            for (size_t i = 0; i < x.x.size(); ++i)
                st.max_value_increase =
                    std::max(st.max_value_increase, (x.x[i] - prev.x[i]) / (1.0 + prev_max));
        }

        bool changed = false;
        for (const auto& g : groups) {
            long cur = d_k[g.front()];
            Improvement imp = opts.mode == ImproveMode::symbolic
                                  ? improve_group_symbolic(kernel, g, x, cur, opts)
                                  : improve_group_explicit(kernel, g, x, cur, opts);
            st.max_degree = std::max(st.max_degree, imp.degree);
            st.num_roots += imp.num_roots;
            st.candidates += imp.evaluations;
            if (imp.chosen != cur) changed = true;
            for (int s : g) d_k[s] = imp.chosen;
        }
        st.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        rep.per_iteration.push_back(st);
        rep.iterations = iter;

        if (!changed) {
            rep.delays = make_delay();
            rep.value_at_initial = report_value(kernel, c, rep.delays, x);
            return rep;
        }
        prev = std::move(x);
    }
    raise(ErrorCode::solver_failure, "policy iteration did not reach a fixpoint within the iteration guard");
}

}  // namespace fdctmc
