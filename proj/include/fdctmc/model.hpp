#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "fdctmc/error.hpp"

namespace fdctmc {

/// Row-sum tolerance for stochastic matrices. Rows deviating by less than
/// this are renormalized; anything larger is a validation error.
inline constexpr double kStochasticTol = 1e-12;

/// Square sparse matrix with per-row (column, value) entries.
struct SparseMatrix {
    int n = 0;
    std::vector<std::vector<std::pair<int, double>>> rows;

    SparseMatrix() = default;
    explicit SparseMatrix(int size) : n(size), rows(size) {}

    void add(int i, int j, double v);
    double at(int i, int j) const;
    double row_sum(int i) const;
    bool empty_row(int i) const { return rows[i].empty(); }

    /// Rescale row i so it sums to exactly 1 (no-op on empty rows).
    void normalize_row(int i);
};

struct CostStructure {
    std::vector<double> rate;   // R(s) > 0, cost per second
    SparseMatrix impulse_exp;   // I_P >= 0, per exp-delay edge
    SparseMatrix impulse_fd;    // I_F >= 0, per fixed-delay edge
};

/// CTMC with fixed-delay transitions given as a matrix of exponential rates
/// (no common exit rate yet). `rates` has zero diagonal; self-loop rates are
/// no-ops and must be dropped by the producer.
struct RateModel {
    std::vector<std::string> states;
    SparseMatrix rates;               // transitions/sec
    std::vector<char> fd_states;      // S_fd membership mask
    SparseMatrix fd_matrix;           // F, row-stochastic, identity outside S_fd
    CostStructure costs;
    int initial = 0;
    std::vector<char> targets;        // non-empty mask
    std::vector<std::vector<int>> tie_groups;  // states sharing one timeout

    int num_states() const { return static_cast<int>(states.size()); }
    void validate() const;
};

/// Uniformized fdCTMC: common exit rate lambda and row-stochastic P.
struct FdCtmc {
    std::vector<std::string> states;
    double lambda = 0;
    SparseMatrix p;                   // P, row-stochastic
    std::vector<char> fd_states;
    SparseMatrix fd_matrix;           // F, row-stochastic, identity outside S_fd
    CostStructure costs;
    int initial = 0;
    std::vector<char> targets;
    std::vector<std::vector<int>> tie_groups;

    int num_states() const { return static_cast<int>(states.size()); }
    bool is_fd(int s) const { return fd_states[s] != 0; }
    bool is_target(int s) const { return targets[s] != 0; }
    void validate() const;
};

/// Partition of states into S_off (clock off) and S_set (clock can be
/// (re)set). The embedded decision process lives on S_off ∪ S_set.
struct StateClassification {
    std::vector<char> s_off;
    std::vector<char> s_set;
    std::vector<int> mdp_states;   // S_off ∪ S_set in input order
    std::vector<int> mdp_index;    // state -> position in mdp_states, or -1

    bool in_mdp(int s) const { return mdp_index[s] >= 0; }
    int mdp_size() const { return static_cast<int>(mdp_states.size()); }
};

/// Timeout assignment. Finite positive values on S_set, +inf on S_off,
/// NaN where no timeout applies (states of S_fd \ S_set reached only with
/// a running clock).
struct DelayFunction {
    std::vector<double> tau;

    bool has(int s) const { return s < static_cast<int>(tau.size()) && !std::isnan(tau[s]); }
    double at(int s) const;
};

/// Replace per-state exit rates by the common rate lambda = max exit rate,
/// compensating with self-loop probability mass (zero impulse cost).
FdCtmc uniformize(const RateModel& m);

/// Compute S_off and S_set. The initial state is promoted into S_set when it
/// lies in S_fd without an incoming (re)set edge; a target outside
/// S_off ∪ S_set is a validation error.
StateClassification classify(const FdCtmc& c);

/// Drop states unreachable from the initial state in the embedded decision
/// process (exp and fixed-delay edges from clock-running states, exp edges
/// from S_off). Errors out if no target survives.
FdCtmc prune_unreachable(const FdCtmc& c, const StateClassification& cls);

}  // namespace fdctmc
