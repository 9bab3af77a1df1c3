#pragma once

#include "fdctmc/model.hpp"

namespace fdctmc {

/// Connection-establishment protocol: n independent unreliable channels, one
/// shared restart timeout per set of unestablished channels.
struct ProtocolParams {
    int n_bobs = 1;
    double p = 0.9;          // delivery probability
    double q = 0.9;          // link stability per exp step of an established link
    double lambda = 1.0;     // delivery-time rate, a free parameter of the scenario
    double rate_cost = 1.0;
    double fd_impulse = 1.0;

    void validate() const;
};

/// Disk-drive power manager: M/M/1/n queue with a sleep mode entered and
/// left by timeouts; all sleep states share one timeout value.
struct DpmParams {
    int n = 2;                    // buffer bound
    double arrival_rate = 1.39;
    double service_rate = 12.5;
    double energy_busy = 2.15;    // per-second energy draws; illustrative defaults
    double energy_idle = 0.90;
    double energy_sleep = 0.13;
    double energy_acc = 1.0;      // never accrued: acc is the absorbing target

    void validate() const;
};

/// Interleaved product of n copies of the single-channel protocol: an exp
/// step moves one component (uniformly at rate n*lambda after
/// uniformization), the timeout resets every unestablished component at once.
RateModel gen_protocol(const ProtocolParams& params);

RateModel gen_dpm(const DpmParams& params);

}  // namespace fdctmc
