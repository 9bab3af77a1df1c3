#pragma once

#include <cstdint>

#include "fdctmc/model.hpp"

namespace fdctmc {

struct SimConfig {
    long runs = 1;
    std::uint64_t seed = 0;
    long step_cap = 10000000;
    double cost_cap = 1e12;

    void validate() const;
};

struct SimEstimate {
    double mean = 0;
    double std_error = 0;  // NaN when undefined (single run)
    long truncated_runs = 0;
    long runs = 0;
};

/// Counter-based generator: output j of stream r is a function of
/// (seed, r, j) alone, so runs are reproducible and independently seekable.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream);
    std::uint64_t next_u64();
    double next_unit();                // [0, 1)
    double next_exp(double rate);      // exponential with the given rate

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// One run under the fixed delay function; total cost before reaching a
/// target in at least one transition. Sets *truncated when a cap fires.
double sample_run(const FdCtmc& c, const StateClassification& cls, const DelayFunction& d,
                  CounterRng& rng, const SimConfig& cfg, bool* truncated);

/// Mean and standard error of the run cost over cfg.runs runs; truncated
/// runs are counted and excluded from the estimate.
SimEstimate estimate(const FdCtmc& c, const DelayFunction& d, const SimConfig& cfg);

/// Total delay function for simulation: states of S_fd \ S_set take the value
/// of a tied S_set representative when one exists, `fallback` otherwise.
/// Those values are never read on runs that respect the semantics.
DelayFunction extend_delays(const FdCtmc& c, const StateClassification& cls, DelayFunction d,
                            double fallback);

}  // namespace fdctmc
