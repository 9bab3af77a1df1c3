#include "fdctmc/polynomial.hpp"

#include <cmath>

namespace fdctmc {

long ScaledPoly::degree() const {
    for (long i = static_cast<long>(coeffs.size()) - 1; i >= 0; --i)
        if (coeffs[i] != 0.0) return i;
    return -1;
}

bool ScaledPoly::is_zero(double threshold) const {
    for (double c : coeffs)
        if (std::abs(c) >= threshold) return false;
    return true;
}

double ScaledPoly::eval_p(double tau) const {
    double u = lambda * tau;
    double term = 1.0;  // u^i / i!
    double sum = 0.0;
    for (size_t i = 0; i < coeffs.size(); ++i) {
        sum += coeffs[i] * term;
        term *= u / static_cast<double>(i + 1);
    }
    return sum;
}

double ScaledPoly::eval_f(double tau) const {
    long n = static_cast<long>(coeffs.size());
    if (n == 0) return 0.0;
    PoissonWeights pw = poisson_weights(lambda * tau, n);
    double sum = 0.0;
    for (long i = 0; i < n; ++i) sum += coeffs[i] * pw.w[i];
    return sum;
}

ScaledPoly build_objective_poly(const EmbeddedKernel& k, int s, std::span<const double> x) {
    int e = k.mdp_size();
    if (static_cast<int>(x.size()) != e)
        raise(ErrorCode::validation, "value vector length does not match the MDP state count");
    for (double xi : x)
        if (!std::isfinite(xi) || xi < 0)
            raise(ErrorCode::validation, "value vector entries must be finite and non-negative");

    const auto& tab = k.series(s);
    long big = k.trunc_index();
    ScaledPoly p;
    p.lambda = k.lambda();
    p.coeffs.assign(big + 1, 0.0);
    // Under weights w_i = e^{-lt}(lt)^i/i!:
    //   T·x + c = sum_i w_i (m_i·x + jp_i + jf_i) + sum_i w_i tau rp_i/(i+1)
    // and w_i tau = w_{i+1} (i+1)/lambda, which shifts the rate part up one slot.
    for (long i = 0; i < big; ++i) {
        const double* row = &tab.dist_rows[static_cast<size_t>(i) * e];
        double dot = 0;
        for (int j = 0; j < e; ++j) dot += row[j] * x[j];
        p.coeffs[i] += dot + tab.jp_prefix[i] + tab.jf[i];
        p.coeffs[i + 1] += tab.rate_prefix[i] / p.lambda;
    }
    for (double c : p.coeffs)
        if (!std::isfinite(c)) raise(ErrorCode::coefficient_overflow, "non-finite objective coefficient");
    return p;
}

ScaledPoly derivative_poly(const ScaledPoly& p) {
    // p = sum b_i (lt)^i/i!  =>  p' - lambda p = lambda sum (b_{i+1} - b_i) (lt)^i/i!
    ScaledPoly q;
    q.lambda = p.lambda;
    if (p.coeffs.empty()) return q;
    q.coeffs.assign(p.coeffs.size(), 0.0);
    for (size_t i = 0; i < p.coeffs.size(); ++i) {
        double next = (i + 1 < p.coeffs.size()) ? p.coeffs[i + 1] : 0.0;
        q.coeffs[i] = p.lambda * (next - p.coeffs[i]);
    }
    return q;
}

}  // namespace fdctmc
