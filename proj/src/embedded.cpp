#include "fdctmc/embedded.hpp"

#include <algorithm>
#include <cmath>

namespace fdctmc {

void DiscretizationParams::validate() const {
    if (!(delta > 0) || !std::isfinite(delta)) raise(ErrorCode::validation, "delta must be positive");
    if (!(tau_max >= delta) || !std::isfinite(tau_max))
        raise(ErrorCode::validation, "tau_max must be at least delta");
    if (!(kappa > 0) || !std::isfinite(kappa)) raise(ErrorCode::validation, "kappa must be positive");
    if (!(epsilon > 0) || !std::isfinite(epsilon)) raise(ErrorCode::validation, "epsilon must be positive");
    if (hard_cap < 1) raise(ErrorCode::validation, "truncation hard cap must be positive");
}

long DiscretizationParams::grid_count() const {
    return static_cast<long>(std::floor(tau_max / delta + 1e-9));
}

PoissonWeights poisson_weights(double mu, long count) {
    PoissonWeights pw;
    pw.w.assign(static_cast<size_t>(count), 0.0);
    if (count <= 0) return pw;
    if (mu <= 0) {
        pw.w[0] = 1.0;
        pw.total = 1.0;
        return pw;
    }
    if (mu <= 700.0) {
        double w = std::exp(-mu);
        for (long i = 0; i < count; ++i) {
            pw.w[i] = w;
            pw.total += w;
            w *= mu / static_cast<double>(i + 1);
        }
        return pw;
    }
    // e^{-mu} underflows; run the recurrence outward from the mode with the
    // common magnitude split off into a single scale factor.
    long mode = std::min<long>(static_cast<long>(std::floor(mu)), count - 1);
    double log_scale = -mu + static_cast<double>(mode) * std::log(mu) - std::lgamma(static_cast<double>(mode) + 1.0);
    double scale = std::exp(log_scale);
    if (scale == 0.0) return pw;  // every retained weight is below double range
    std::vector<double> u(static_cast<size_t>(count), 0.0);
    u[mode] = 1.0;
    for (long i = mode; i > 0; --i) u[i - 1] = u[i] * static_cast<double>(i) / mu;
    for (long i = mode; i + 1 < count; ++i) u[i + 1] = u[i] * mu / static_cast<double>(i + 1);
    for (long i = 0; i < count; ++i) {
        pw.w[i] = u[i] * scale;
        pw.total += pw.w[i];
    }
    return pw;
}

double poisson_tail(double mu, long i) {
    if (i <= 0) return 1.0;
    if (mu <= 0) return 0.0;
    long mode = static_cast<long>(std::floor(mu));
    if (i <= mode) {
        // Head is the smaller piece here; 1 - head loses nothing.
        double wi = std::exp(-mu + static_cast<double>(i - 1) * std::log(mu) -
                             std::lgamma(static_cast<double>(i)));
        double head = 0;
        double w = wi;
        for (long j = i - 1; j >= 0; --j) {
            head += w;
            if (w < head * 1e-20) break;
            w *= static_cast<double>(j) / mu;
        }
        return 1.0 - head;
    }
    // Suffix summation, no cancellation.
    double w = std::exp(-mu + static_cast<double>(i) * std::log(mu) - std::lgamma(static_cast<double>(i) + 1.0));
    double sum = 0;
    long j = i;
    while (w > 0 && (sum == 0 || w > sum * 1e-20)) {
        sum += w;
        ++j;
        w *= mu / static_cast<double>(j);
    }
    return sum;
}

long truncation_index(double lambda, double tau_max, double kappa, double cost_bound, long hard_cap) {
    if (!(lambda >= 0) || !(tau_max >= 0) || !(kappa > 0) || !(cost_bound > 0))
        raise(ErrorCode::validation, "truncation_index arguments must be positive");
    double mu = lambda * tau_max;
    double bound = kappa / cost_bound;
    if (poisson_tail(mu, hard_cap) > bound)
        raise(ErrorCode::truncation_overflow,
              "truncation index would exceed the hard cap " + std::to_string(hard_cap));
    long lo = 1, hi = hard_cap;  // tail is non-increasing in I
    while (lo < hi) {
        long mid = lo + (hi - lo) / 2;
        if (poisson_tail(mu, mid) <= bound)
            hi = mid;
        else
            lo = mid + 1;
    }
    return lo;
}

EmbeddedKernel::EmbeddedKernel(const FdCtmc& c, const StateClassification& cls,
                               const DiscretizationParams& params)
    : model_(c), cls_(cls), params_(params), lambda_(c.lambda) {
    params_.validate();
    int n = c.num_states();

    p_bar_ = SparseMatrix(n);
    for (int s = 0; s < n; ++s) {
        if (cls_.s_off[s])
            p_bar_.add(s, s, 1.0);
        else
            p_bar_.rows[s] = c.p.rows[s];
    }
    r_bar_.assign(n, 0.0);
    jp_bar_.assign(n, 0.0);
    jf_bar_.assign(n, 0.0);
    double r_max = 0;
    for (int s = 0; s < n; ++s) {
        r_max = std::max(r_max, c.costs.rate[s]);
        if (!c.fd_states[s]) continue;
        r_bar_[s] = c.costs.rate[s];
        for (const auto& [t, v] : c.p.rows[s]) jp_bar_[s] += v * c.costs.impulse_exp.at(s, t);
        for (const auto& [t, v] : c.fd_matrix.rows[s]) jf_bar_[s] += v * c.costs.impulse_fd.at(s, t);
    }
    double j_max = 1.0;
    for (int s = 0; s < n; ++s) j_max = std::max({j_max, jp_bar_[s], jf_bar_[s]});
    cost_bound_ = params_.tau_max * r_max + j_max;
    trunc_index_ = truncation_index(lambda_, params_.tau_max, params_.kappa, cost_bound_, params_.hard_cap);

    long big = trunc_index_;
    int e = cls_.mdp_size();
    tables_.resize(n);
    std::vector<double> v(n), vnext(n), vf(n);
    for (int s = 0; s < n; ++s) {
        if (!cls_.s_set[s]) continue;
        SeriesTable& tab = tables_[s];
        tab.dist_rows.assign(static_cast<size_t>(big) * e, 0.0);
        tab.rate_prefix.assign(big, 0.0);
        tab.jp_prefix.assign(big, 0.0);
        tab.jf.assign(big, 0.0);

        std::fill(v.begin(), v.end(), 0.0);
        v[s] = 1.0;
        double jp_running = 0;  // sum_{j<i} v_j . J̄_P
        for (long i = 0; i < big; ++i) {
            std::fill(vf.begin(), vf.end(), 0.0);
            double rate_dot = 0, jp_dot = 0, jf_dot = 0;
            for (int u = 0; u < n; ++u) {
                if (v[u] == 0) continue;
                rate_dot += v[u] * r_bar_[u];
                jp_dot += v[u] * jp_bar_[u];
                jf_dot += v[u] * jf_bar_[u];
                for (const auto& [t, f] : c.fd_matrix.rows[u]) vf[t] += v[u] * f;
            }
            tab.rate_prefix[i] = (i ? tab.rate_prefix[i - 1] : 0.0) + rate_dot;
            tab.jp_prefix[i] = jp_running;
            jp_running += jp_dot;
            tab.jf[i] = jf_dot;
            double* row = &tab.dist_rows[static_cast<size_t>(i) * e];
            for (int u = 0; u < n; ++u) {
                if (vf[u] == 0) continue;
                int idx = cls_.mdp_index[u];
                if (idx < 0)
                    raise(ErrorCode::model_shape_violation,
                          "fixed-delay successor " + c.states[u] + " lies outside S_off ∪ S_set");
                row[idx] += vf[u];
            }
            if (i + 1 < big) {
                std::fill(vnext.begin(), vnext.end(), 0.0);
                for (int u = 0; u < n; ++u) {
                    if (v[u] == 0) continue;
                    for (const auto& [t, pval] : p_bar_.rows[u]) vnext[t] += v[u] * pval;
                }
                std::swap(v, vnext);
            }
        }
    }
}

const EmbeddedKernel::SeriesTable& EmbeddedKernel::series(int s) const {
    if (!is_set_state(s)) raise(ErrorCode::validation, "series table requested for a non-set state");
    return tables_[s];
}

KernelRow EmbeddedKernel::off_state_row(int s) const {
    if (!is_off_state(s)) raise(ErrorCode::validation, "off_state_row requires a state of S_off");
    KernelRow row;
    row.dist.assign(cls_.mdp_size(), 0.0);
    row.cost = model_.costs.rate[s] / lambda_;
    for (const auto& [t, v] : model_.p.rows[s]) {
        if (v <= 0) continue;
        int idx = cls_.mdp_index[t];
        if (idx < 0)
            raise(ErrorCode::model_shape_violation,
                  "successor " + model_.states[t] + " of off-state " + model_.states[s] +
                      " lies outside S_off ∪ S_set");
        row.dist[idx] += v;
        row.cost += v * model_.costs.impulse_exp.at(s, t);
    }
    return row;
}

KernelRow EmbeddedKernel::set_state_row(int s, double tau, long grid_k) const {
    if (!is_set_state(s)) raise(ErrorCode::validation, "set_state_row requires a state of S_set");
    if (!(tau > 0) || tau > params_.tau_max * (1 + 1e-12))
        raise(ErrorCode::validation, "tau must lie in (0, tau_max]");
    if (grid_k >= 1) {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        auto it = row_cache_.find({s, grid_k});
        if (it != row_cache_.end()) return it->second;
    }

    long big = trunc_index_;
    int e = cls_.mdp_size();
    PoissonWeights pw = poisson_weights(lambda_ * tau, big);
    if (pw.total <= 0)
        raise(ErrorCode::precision_exhausted,
              "Poisson weights underflow at lambda*tau = " + std::to_string(lambda_ * tau));

    const SeriesTable& tab = tables_[s];
    KernelRow row;
    row.dist.assign(e, 0.0);
    for (long i = 0; i < big; ++i) {
        double w = pw.w[i];
        if (w == 0) continue;
        const double* src = &tab.dist_rows[static_cast<size_t>(i) * e];
        for (int j = 0; j < e; ++j) row.dist[j] += w * src[j];
        row.cost += w * (tau * tab.rate_prefix[i] / static_cast<double>(i + 1) + tab.jp_prefix[i] + tab.jf[i]);
    }

    if (grid_k >= 1) {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        row_cache_.emplace(std::make_pair(s, grid_k), row);
    }
    return row;
}

std::vector<std::vector<double>> precompute_powers(const FdCtmc& c, const StateClassification& cls,
                                                   int s, long count) {
    if (!cls.s_set[s]) raise(ErrorCode::validation, "precompute_powers requires a state of S_set");
    int n = c.num_states();
    std::vector<std::vector<double>> out;
    out.reserve(count);
    std::vector<double> v(n, 0.0);
    v[s] = 1.0;
    for (long j = 0; j < count; ++j) {
        out.push_back(v);
        std::vector<double> next(n, 0.0);
        for (int u = 0; u < n; ++u) {
            if (v[u] == 0) continue;
            if (cls.s_off[u]) {
                next[u] += v[u];
                continue;
            }
            for (const auto& [t, pval] : c.p.rows[u]) next[t] += v[u] * pval;
        }
        v = std::move(next);
    }
    return out;
}

double suggest_kappa(const FdCtmc& c, double epsilon) {
    double scale = 1.0;
    for (double r : c.costs.rate) scale = std::max(scale, r);
    for (const SparseMatrix* m : {&c.costs.impulse_exp, &c.costs.impulse_fd})
        for (const auto& row : m->rows)
            for (const auto& [t, v] : row) {
                (void)t;
                scale = std::max(scale, v);
            }
    return epsilon / (8.0 * c.num_states() * scale);
}

}  // namespace fdctmc
