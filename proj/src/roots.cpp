#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "fdctmc/polynomial.hpp"

namespace fdctmc {

namespace {

// RAII mpfr_t. All arithmetic below rounds to nearest.
class Big {
public:
    explicit Big(mpfr_prec_t prec) { mpfr_init2(v_, prec); mpfr_set_zero(v_, 1); }
    Big(const Big& o) {
        mpfr_init2(v_, mpfr_get_prec(o.v_));
        mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    Big(Big&& o) noexcept {
        mpfr_init2(v_, mpfr_get_prec(o.v_));
        mpfr_swap(v_, o.v_);
    }
    Big& operator=(const Big& o) {
        if (this != &o) mpfr_set(v_, o.v_, MPFR_RNDN);
        return *this;
    }
    Big& operator=(Big&& o) noexcept {
        mpfr_swap(v_, o.v_);
        return *this;
    }
    ~Big() { mpfr_clear(v_); }
    mpfr_ptr get() { return v_; }
    mpfr_srcptr get() const { return v_; }
    int sgn() const { return mpfr_sgn(v_); }

private:
    mpfr_t v_;
};

using Poly = std::vector<Big>;  // monomial coefficients, low to high

int var_count(const Poly& p) {
    int v = 0, last = 0;
    for (const Big& c : p) {
        int s = c.sgn();
        if (s == 0) continue;
        if (last != 0 && s != last) ++v;
        last = s;
    }
    return v;
}

// In-place Taylor shift p(x) -> p(x + 1).
void shift1(Poly& p) {
    long d = static_cast<long>(p.size()) - 1;
    for (long i = 0; i < d; ++i)
        for (long j = d - 1; j >= i; --j)
            mpfr_add(p[j].get(), p[j].get(), p[j + 1].get(), MPFR_RNDN);
}

// In-place Taylor shift p(x) -> p(x + t).
void shift_by(Poly& p, mpfr_srcptr t, mpfr_prec_t prec) {
    long d = static_cast<long>(p.size()) - 1;
    Big tmp(prec);
    for (long i = 0; i < d; ++i)
        for (long j = d - 1; j >= i; --j) {
            mpfr_mul(tmp.get(), p[j + 1].get(), t, MPFR_RNDN);
            mpfr_add(p[j].get(), p[j].get(), tmp.get(), MPFR_RNDN);
        }
}

// p(x) -> p(x / 2), exact.
void halve_argument(Poly& p) {
    for (size_t k = 1; k < p.size(); ++k) mpfr_mul_2si(p[k].get(), p[k].get(), -static_cast<long>(k), MPFR_RNDN);
}

// Descartes bound on the number of roots in the open interval (0,1).
int descartes_01(const Poly& p) {
    Poly t(p.rbegin(), p.rend());
    shift1(t);
    return var_count(t);
}

void eval_at(const Poly& p, mpfr_srcptr x, mpfr_ptr out, mpfr_prec_t prec) {
    Big acc(prec);
    mpfr_set_zero(acc.get(), 1);
    for (long i = static_cast<long>(p.size()) - 1; i >= 0; --i) {
        mpfr_mul(acc.get(), acc.get(), x, MPFR_RNDN);
        mpfr_add(acc.get(), acc.get(), p[i].get(), MPFR_RNDN);
    }
    mpfr_set(out, acc.get(), MPFR_RNDN);
}

int sign_at(const Poly& p, mpfr_srcptr x, mpfr_prec_t prec) {
    Big v(prec);
    eval_at(p, x, v.get(), prec);
    return v.sgn();
}

int sign_at_d(const Poly& p, double x, mpfr_prec_t prec) {
    Big b(prec);
    mpfr_set_d(b.get(), x, MPFR_RNDN);
    return sign_at(p, b.get(), prec);
}

// Sign-change bisection for a certified single simple root of q in (a, b).
double bisect_root(const Poly& q, double a, double b, double accuracy, mpfr_prec_t prec) {
    int sa = sign_at_d(q, a, prec);
    int sb = sign_at_d(q, b, prec);
    double w = b - a;
    if (sa == 0) {
        double probe = a + w * 0x1p-40;
        sa = sign_at_d(q, probe, prec);
        a = probe;
    }
    if (sb == 0) {
        double probe = b - w * 0x1p-40;
        sb = sign_at_d(q, probe, prec);
        b = probe;
    }
    if (sa == 0 || sb == 0 || sa == sb) return 0.5 * (a + b);  // flat to full precision
    for (int it = 0; it < 400 && (b - a) >= accuracy; ++it) {
        double mid = 0.5 * (a + b);
        int sm = sign_at_d(q, mid, prec);
        if (sm == 0) return mid;
        if (sm == sa)
            a = mid;
        else
            b = mid;
    }
    return 0.5 * (a + b);
}

struct Node {
    Poly p;  // normalized to [0,1]
    double a, b;
};

Poly to_monomial_u(const ScaledPoly& q, mpfr_prec_t prec, long top) {
    // q(tau) = sum c_k u^k / k! with u = lambda tau
    Poly out;
    out.reserve(top + 1);
    Big fact(prec);
    mpfr_set_ui(fact.get(), 1, MPFR_RNDN);
    for (long k = 0; k <= top; ++k) {
        if (k > 0) mpfr_mul_ui(fact.get(), fact.get(), static_cast<unsigned long>(k), MPFR_RNDN);
        Big c(prec);
        mpfr_set_d(c.get(), q.coeffs[k], MPFR_RNDN);
        mpfr_div(c.get(), c.get(), fact.get(), MPFR_RNDN);
        out.push_back(std::move(c));
    }
    while (out.size() > 1 && out.back().sgn() == 0) out.pop_back();
    return out;
}

// ---- Sturm chain -------------------------------------------------------

void trim(Poly& p) {
    while (!p.empty() && p.back().sgn() == 0) p.pop_back();
}

// rem <- rem mod div (degrees via size, div non-empty and trimmed)
void poly_mod(Poly& rem, const Poly& div, mpfr_prec_t prec) {
    Big coef(prec), tmp(prec);
    long dn = static_cast<long>(div.size()) - 1;
    while (static_cast<long>(rem.size()) - 1 >= dn && !rem.empty()) {
        long dm = static_cast<long>(rem.size()) - 1;
        mpfr_div(coef.get(), rem[dm].get(), div[dn].get(), MPFR_RNDN);
        for (long i = 0; i <= dn; ++i) {
            mpfr_mul(tmp.get(), coef.get(), div[i].get(), MPFR_RNDN);
            mpfr_sub(rem[dm - dn + i].get(), rem[dm - dn + i].get(), tmp.get(), MPFR_RNDN);
        }
        rem.pop_back();  // leading term cancels by construction
        trim(rem);
    }
}

void normalize_max(Poly& p, mpfr_prec_t prec) {
    Big mx(prec);
    mpfr_set_zero(mx.get(), 1);
    for (const Big& c : p) {
        Big a(prec);
        mpfr_abs(a.get(), c.get(), MPFR_RNDN);
        if (mpfr_cmp(a.get(), mx.get()) > 0) mpfr_set(mx.get(), a.get(), MPFR_RNDN);
    }
    if (mx.sgn() == 0) return;
    for (Big& c : p) mpfr_div(c.get(), c.get(), mx.get(), MPFR_RNDN);
}

std::vector<Poly> sturm_chain(Poly p0, mpfr_prec_t prec) {
    std::vector<Poly> chain;
    trim(p0);
    if (p0.empty()) return chain;
    Poly p1;
    for (size_t k = 1; k < p0.size(); ++k) {
        Big c(prec);
        mpfr_mul_ui(c.get(), p0[k].get(), static_cast<unsigned long>(k), MPFR_RNDN);
        p1.push_back(std::move(c));
    }
    chain.push_back(std::move(p0));
    trim(p1);
    if (p1.empty()) return chain;
    chain.push_back(std::move(p1));
    while (chain.back().size() > 1) {
        Poly rem = chain[chain.size() - 2];
        poly_mod(rem, chain.back(), prec);
        if (rem.empty()) break;
        for (Big& c : rem) mpfr_neg(c.get(), c.get(), MPFR_RNDN);
        normalize_max(rem, prec);
        chain.push_back(std::move(rem));
    }
    return chain;
}

int sturm_variations(const std::vector<Poly>& chain, double x, mpfr_prec_t prec) {
    int v = 0, last = 0;
    for (const Poly& p : chain) {
        int s = sign_at_d(p, x, prec);
        if (s == 0) continue;
        if (last != 0 && s != last) ++v;
        last = s;
    }
    return v;
}

long sturm_count_u(const std::vector<Poly>& chain, double a, double b, mpfr_prec_t prec) {
    if (chain.empty()) return 0;
    return sturm_variations(chain, a, prec) - sturm_variations(chain, b, prec);
}

}  // namespace

long sturm_root_count(const ScaledPoly& q, double a, double b, unsigned mantissa_bits) {
    if (q.is_zero()) return 0;
    mpfr_prec_t prec = mantissa_bits;
    long top = q.degree();
    if (top <= 0) return 0;
    Poly mono = to_monomial_u(q, prec, top);
    auto chain = sturm_chain(std::move(mono), prec);
    return sturm_count_u(chain, q.lambda * a, q.lambda * b, prec);
}

RootSet isolate_roots(const ScaledPoly& q, double alpha, double beta, double accuracy,
                      const RootIsolationOptions& opts) {
    if (!(alpha < beta)) raise(ErrorCode::validation, "root isolation interval is empty");
    if (!(accuracy > 0)) raise(ErrorCode::validation, "root isolation accuracy must be positive");
    RootSet out;
    if (q.is_zero(opts.zero_threshold)) {
        out.is_zero_poly = true;
        return out;
    }
    long top = q.degree();
    if (top <= 0) return out;  // nonzero constant, no roots

    mpfr_prec_t prec = opts.mantissa_bits;
    double A = q.lambda * alpha, B = q.lambda * beta;
    double acc_u = q.lambda * accuracy;
    Poly mono = to_monomial_u(q, prec, top);
    long deg = static_cast<long>(mono.size()) - 1;
    std::vector<double> found;

    if (deg >= 1) {
        if (sign_at_d(mono, A, prec) == 0) found.push_back(A);
        if (sign_at_d(mono, B, prec) == 0) found.push_back(B);

        // Normalize to [0,1]: G(x) = Q(A + (B-A) x).
        Poly g = mono;
        {
            Big w(prec), wp(prec), t(prec);
            mpfr_set_d(w.get(), B - A, MPFR_RNDN);
            mpfr_set_ui(wp.get(), 1, MPFR_RNDN);
            for (size_t k = 1; k < g.size(); ++k) {
                mpfr_mul(wp.get(), wp.get(), w.get(), MPFR_RNDN);
                mpfr_mul(g[k].get(), g[k].get(), wp.get(), MPFR_RNDN);
            }
            mpfr_set_d(t.get(), A, MPFR_RNDN);
            mpfr_div(t.get(), t.get(), w.get(), MPFR_RNDN);
            shift_by(g, t.get(), prec);
        }

        double span = B - A;
        long node_budget = 64 + 16 * (deg + 1) * (2 + static_cast<long>(std::ceil(std::log2(std::max(2.0, span / acc_u)))));
        long nodes = 0;
        std::vector<Node> stack;
        stack.push_back({std::move(g), A, B});
        while (!stack.empty()) {
            if (++nodes > node_budget)
                raise(ErrorCode::root_isolation_precision,
                      "subdivision budget exhausted; retry with a wider mantissa");
            Node nd = std::move(stack.back());
            stack.pop_back();
            int v = descartes_01(nd.p);
            if (v == 0) continue;
            if (v == 1) {
                found.push_back(bisect_root(mono, nd.a, nd.b, acc_u, prec));
                continue;
            }
            if (nd.b - nd.a < acc_u) {
                found.push_back(0.5 * (nd.a + nd.b));  // unresolved cluster within accuracy
                continue;
            }
            double mid = 0.5 * (nd.a + nd.b);
            Poly left = std::move(nd.p);
            halve_argument(left);
            {
                Big one(prec), val(prec);
                mpfr_set_ui(one.get(), 1, MPFR_RNDN);
                eval_at(left, one.get(), val.get(), prec);
                if (val.sgn() == 0) found.push_back(mid);
            }
            Poly right = left;
            shift1(right);
            stack.push_back({std::move(left), nd.a, mid});
            stack.push_back({std::move(right), mid, nd.b});
        }
    }

    // Map back to tau, clamp and merge brackets closer than the accuracy.
    std::vector<double> taus;
    taus.reserve(found.size());
    for (double u : found) taus.push_back(std::clamp(u / q.lambda, alpha, beta));
    std::sort(taus.begin(), taus.end());
    size_t i = 0;
    while (i < taus.size()) {
        size_t j = i;
        while (j + 1 < taus.size() && taus[j + 1] - taus[j] <= accuracy) ++j;
        out.roots.push_back(0.5 * (taus[i] + taus[j]));
        i = j + 1;
    }
    if (static_cast<long>(out.roots.size()) > deg)
        raise(ErrorCode::root_isolation_precision, "more candidates than the degree admits");

    if (opts.sturm_check && !out.roots.empty()) {
        Poly chain_input = to_monomial_u(q, prec, top);
        auto chain = sturm_chain(std::move(chain_input), prec);
        double m = 1.01 * accuracy;
        std::vector<std::pair<double, double>> windows;
        for (double r : out.roots) {
            double lo = std::max(alpha, r - m), hi = std::min(beta, r + m);
            if (!windows.empty() && lo <= windows.back().second)
                windows.back().second = hi;
            else
                windows.emplace_back(lo, hi);
        }
        double cursor = alpha;
        for (const auto& [lo, hi] : windows) {
            if (sturm_count_u(chain, q.lambda * cursor, q.lambda * lo, prec) != 0)
                raise(ErrorCode::root_isolation_precision, "Sturm cross-check found a missed root");
            if (sturm_count_u(chain, q.lambda * lo, q.lambda * hi, prec) < 1)
                raise(ErrorCode::root_isolation_precision, "Sturm cross-check rejects a reported root");
            cursor = hi;
        }
        if (sturm_count_u(chain, q.lambda * cursor, q.lambda * beta, prec) != 0)
            raise(ErrorCode::root_isolation_precision, "Sturm cross-check found a missed root");
    }
    return out;
}

}  // namespace fdctmc
