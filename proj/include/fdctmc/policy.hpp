#pragma once

#include <span>
#include <vector>

#include "fdctmc/polynomial.hpp"

namespace fdctmc {

/// Expected total cost before reaching a target, per MDP state; zero at
/// targets by convention.
struct ValueVector {
    std::vector<double> x;
};

enum class ImproveMode { explicit_enumeration, symbolic };
enum class LinearSolver { automatic, dense_lu, gauss_seidel };

struct PolicyOptions {
    ImproveMode mode = ImproveMode::symbolic;
    LinearSolver solver = LinearSolver::automatic;
    RootIsolationOptions roots;
    long max_iterations = 1000000;
    double tie_tolerance = 1e-12;    // equal-value band for argmin sets
    double divergence_cap = 1e15;    // value magnitude treated as infinite cost
    double pivot_tolerance = 1e-12;  // LU pivot below this means a singular system
    long dense_solver_limit = 4000;  // automatic solver switches to Gauss-Seidel above this
};

/// Candidate timeouts examined during one policy-improvement step.
struct CandidateSet {
    enum class Provenance { interval_bound, near_root, full_grid };
    std::vector<long> ks;  // grid indices, ascending
    std::vector<Provenance> provenance;
    bool full_grid = false;  // zero-polynomial branch: L is all of Dval(s)
};

/// Outcome of improving one state (or one tied group) of S_set.
struct Improvement {
    CandidateSet candidates;
    std::vector<long> argmin;  // grid indices of L, ascending
    long chosen = 0;
    double best_value = 0;
    long evaluations = 0;  // objective evaluations performed
    long num_roots = 0;
    long degree = 0;
    bool zero_poly = false;
};

struct IterationStats {
    long max_degree = 0;
    long num_roots = 0;
    long candidates = 0;
    double millis = 0;
    double value_at_initial = 0;
    double max_value_increase = 0;  // entrywise vs previous iteration, scaled by 1+|x|_inf
};

struct SynthesisReport {
    DelayFunction delays;
    double value_at_initial = 0;
    bool initial_is_target = false;  // value reported via one-step unrolling
    long iterations = 0;
    long trunc_index = 0;
    ImproveMode mode = ImproveMode::symbolic;
    std::vector<IterationStats> per_iteration;
};

/// Solve x(s) = cost_s(d(s)) + sum_{s' not in G} T_{s,s'}(d(s)) x(s') with
/// x(g) = 0 on targets. Dense LU with partial pivoting by default; switches
/// to Gauss-Seidel sweeps above `dense_solver_limit` states.
ValueVector policy_evaluate(const EmbeddedKernel& k, const FdCtmc& c, const DelayFunction& d,
                            const PolicyOptions& opts = {});

/// Exhaustive argmin over the whole grid. `group` lists the set states
/// sharing the timeout being improved.
Improvement improve_group_explicit(const EmbeddedKernel& k, std::span<const int> group,
                                   const ValueVector& x, long current_k, const PolicyOptions& opts);

/// Root-guided argmin: isolate the stationary points of the objective and
/// evaluate only grid points within 3*delta/2 of a root plus the interval
/// bounds.
Improvement improve_group_symbolic(const EmbeddedKernel& k, std::span<const int> group,
                                   const ValueVector& x, long current_k, const PolicyOptions& opts);

/// Policy iteration from the all-minimal-delays policy until fixpoint.
/// Expects a validated, classified and pruned model.
SynthesisReport synthesize(const FdCtmc& c, const DiscretizationParams& params,
                           const PolicyOptions& opts = {});

/// Value at the initial state, with one-step unrolling when the initial
/// state is itself a target (Cost counts at least one transition).
double report_value(const EmbeddedKernel& k, const FdCtmc& c, const DelayFunction& d,
                    const ValueVector& x);

}  // namespace fdctmc
