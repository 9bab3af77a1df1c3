#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <span>
#include <vector>

#include "fdctmc/model.hpp"

namespace fdctmc {

struct DiscretizationParams {
    double delta = 0;     // grid step, seconds
    double tau_max = 0;   // grid bound, seconds
    double kappa = 0;     // kernel accuracy
    double epsilon = 0;   // overall synthesis error (bookkeeping only)
    long hard_cap = 100000;

    void validate() const;
    long grid_count() const;            // largest k with k*delta <= tau_max
    double grid_tau(long k) const { return static_cast<double>(k) * delta; }
};

/// Poisson weights w_i = e^{-mu} mu^i / i! for i < count. For mu beyond the
/// double exp underflow threshold the recurrence is run outward from the
/// mode with a shared exponent carried separately.
struct PoissonWeights {
    std::vector<double> w;  // true (unscaled) weights
    double total = 0;       // sum of w, equals 1 - tail(mu, count)
};

PoissonWeights poisson_weights(double mu, long count);

/// P(X >= i) for X ~ Poisson(mu), computed by suffix summation.
double poisson_tail(double mu, long i);

/// Smallest I with poisson_tail(lambda*tau_max, I) * cost_bound <= kappa.
long truncation_index(double lambda, double tau_max, double kappa, double cost_bound,
                      long hard_cap = 100000);

/// One row of the embedded kernel: sub-stochastic next-state distribution
/// over S_off ∪ S_set plus the expected cost of the segment.
struct KernelRow {
    std::vector<double> dist;
    double cost = 0;
};

/// Precomputed embedded-kernel data for one (model, params) pair. Immutable
/// after construction; per-grid-point row cache is internally synchronized.
class EmbeddedKernel {
public:
    EmbeddedKernel(const FdCtmc& c, const StateClassification& cls, const DiscretizationParams& params);

    double lambda() const { return lambda_; }
    long trunc_index() const { return trunc_index_; }
    double cost_bound() const { return cost_bound_; }
    const DiscretizationParams& params() const { return params_; }
    const StateClassification& classification() const { return cls_; }
    int mdp_size() const { return cls_.mdp_size(); }

    bool is_set_state(int s) const { return cls_.s_set[s] != 0; }
    bool is_off_state(int s) const { return cls_.s_off[s] != 0; }

    /// T(s,.) and cost for s in S_off; independent of tau.
    KernelRow off_state_row(int s) const;

    /// Truncated series row for s in S_set at timeout tau in (0, tau_max].
    /// grid_k >= 1 enables caching under the grid index.
    KernelRow set_state_row(int s, double tau, long grid_k = -1) const;

    /// Per-state series coefficients, exposed for objective-polynomial
    /// assembly: entry i of `dist_rows` is (1_s P̄^i) F restricted to the MDP
    /// states; `rate_prefix[i]` = sum_{j<=i} v_j·R̄, `jp_prefix[i]` =
    /// sum_{j<i} v_j·J̄_P, `jf[i]` = v_i·J̄_F.
    struct SeriesTable {
        std::vector<double> dist_rows;  // trunc_index x mdp_size, row-major
        std::vector<double> rate_prefix;
        std::vector<double> jp_prefix;
        std::vector<double> jf;
    };
    const SeriesTable& series(int s) const;

    const std::vector<double>& r_bar() const { return r_bar_; }
    const std::vector<double>& jp_bar() const { return jp_bar_; }
    const std::vector<double>& jf_bar() const { return jf_bar_; }
    const SparseMatrix& p_bar() const { return p_bar_; }

private:
    const FdCtmc& model_;
    StateClassification cls_;
    DiscretizationParams params_;
    double lambda_;
    long trunc_index_;
    double cost_bound_;

    SparseMatrix p_bar_;
    std::vector<double> r_bar_, jp_bar_, jf_bar_;
    std::vector<SeriesTable> tables_;  // indexed by state, empty for non-set states

    mutable std::mutex cache_mutex_;
    mutable std::map<std::pair<int, long>, KernelRow> row_cache_;
};

/// v_j = 1_s · P̄^j for j = 0..count-1 (over all model states).
std::vector<std::vector<double>> precompute_powers(const FdCtmc& c, const StateClassification& cls,
                                                   int s, long count);

/// Heuristic kappa suggestion, kappa = epsilon / (8 |S| scale). Not certified;
/// the certified derivation of delta/tau_max/kappa is configuration input.
double suggest_kappa(const FdCtmc& c, double epsilon);

}  // namespace fdctmc
