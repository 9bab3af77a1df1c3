#pragma once

#include <span>
#include <vector>

#include "fdctmc/embedded.hpp"

namespace fdctmc {

/// Polynomial in the Poisson-scaled basis: p(tau) = sum_i coeffs[i] (lambda
/// tau)^i / i!. The objective is f(tau) = e^{-lambda tau} p(tau), so f is the
/// coefficient sequence mixed by Poisson(lambda tau) weights; coefficients
/// stay at the magnitude of costs and values regardless of degree.
struct ScaledPoly {
    std::vector<double> coeffs;
    double lambda = 1.0;

    /// Index of the last nonzero coefficient, -1 for the zero polynomial.
    long degree() const;
    bool is_zero(double threshold = 1e-300) const;

    double eval_p(double tau) const;  // plain scaled sum, overflows for large lambda*tau
    double eval_f(double tau) const;  // e^{-lambda tau} p(tau), underflow-safe
};

/// Coefficients of p_{s,x} with T_s^I(tau)·x + c_s^I(tau) = e^{-lambda tau} p(tau).
ScaledPoly build_objective_poly(const EmbeddedKernel& k, int s, std::span<const double> x);

/// q = p' - lambda p; the roots of q are exactly the stationary points of f.
ScaledPoly derivative_poly(const ScaledPoly& p);

struct RootSet {
    std::vector<double> roots;  // sorted, within the queried interval
    bool is_zero_poly = false;
};

struct RootIsolationOptions {
    unsigned mantissa_bits = 256;
    bool sturm_check = false;       // verify interval count against a Sturm chain
    double zero_threshold = 1e-300; // scaled-basis magnitude treated as identically zero
};

/// Isolate all real roots of q on [alpha, beta] so that every real root has
/// an approximation within `accuracy` and no reported value is farther than
/// `accuracy` from a root; approximations closer than `accuracy` are merged.
/// Descartes-rule bisection over MPFR arithmetic.
RootSet isolate_roots(const ScaledPoly& q, double alpha, double beta, double accuracy,
                      const RootIsolationOptions& opts = {});

/// Number of distinct real roots of q in (a, b], by Sturm chain.
long sturm_root_count(const ScaledPoly& q, double a, double b, unsigned mantissa_bits = 256);

}  // namespace fdctmc
