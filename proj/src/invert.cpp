#include "riskcert/invert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "riskcert/errors.hpp"

namespace riskcert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Bisection budget; brackets on [0,1] collapse to adjacent doubles well
// before this many halvings.
constexpr int kMaxBisect = 200;
// Above this trial count the CDF is accumulated term-by-term in log space
// instead of via the scaled recurrence.
constexpr std::int64_t kRecurrenceLimit = 100000;

void check_unit_interval(double x, const char* name) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw DataError(std::string(name) + " must lie in [0,1], got " + std::to_string(x));
    }
}

// Largest x in [lo, hi] with pred(x) true, assuming pred is true at lo,
// false at hi, and monotone (true then false). Returns the feasible
// endpoint of the final bracket, so the defining predicate still holds at
// the returned value.
template <typename Pred>
double sup_bisect(double lo, double hi, Pred pred, int* iterations) {
    int it = 0;
    while (it < kMaxBisect) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // bracket collapsed to adjacent doubles
        ++it;
        if (pred(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (iterations != nullptr) *iterations = it;
    return lo;
}

}  // namespace

EmpiricalCount::EmpiricalCount(std::int64_t k_, std::int64_t m_) : k(k_), m(m_) {
    if (m < 1) throw DataError("EmpiricalCount: m must be >= 1, got " + std::to_string(m));
    if (k < 0 || k > m) {
        throw DataError("EmpiricalCount: need 0 <= k <= m, got k=" + std::to_string(k) +
                        ", m=" + std::to_string(m));
    }
}

Confidence::Confidence(double d) : delta(d) {
    if (!(d > 0.0 && d <= 1.0)) {
        throw DataError("Confidence: delta must lie in (0,1], got " + std::to_string(d));
    }
}

double log_binom_coef(std::int64_t n, std::int64_t k) {
    if (n < 0 || k < 0 || k > n) {
        throw DataError("log_binom_coef: need 0 <= k <= n");
    }
    if (k == 0 || k == n) return 0.0;
    return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
           std::lgamma(static_cast<double>(n - k) + 1.0);
}

double binom_log_cdf(const EmpiricalCount& count, double p) {
    check_unit_interval(p, "p");
    const std::int64_t k = count.k;
    const std::int64_t m = count.m;
    if (k == m) return 0.0;
    if (p == 0.0) return 0.0;
    if (p == 1.0) return -kInf;  // k < m here

    const double logp = std::log(p);
    const double logq = std::log1p(-p);

    if (m <= kRecurrenceLimit) {
        // Scaled term recurrence anchored at the largest term in [0, k].
        // Terms decay monotonically away from the mode, so both walks can
        // stop once contributions fall below the accumulated sum's noise.
        const auto mode = static_cast<std::int64_t>(std::floor(p * static_cast<double>(m + 1)));
        const std::int64_t anchor = std::min(k, std::min(mode, m));
        const double log_anchor = log_binom_coef(m, anchor) +
                                  static_cast<double>(anchor) * logp +
                                  static_cast<double>(m - anchor) * logq;
        const double odds_down = (1.0 - p) / p;  // multiplies when stepping i -> i-1
        const double odds_up = p / (1.0 - p);

        double sum = 1.0;
        double term = 1.0;
        for (std::int64_t i = anchor; i > 0; --i) {
            // t_{i-1} / t_i = (i / (m - i + 1)) * (1-p)/p
            term *= static_cast<double>(i) / static_cast<double>(m - i + 1) * odds_down;
            sum += term;
            if (term < 1e-19 * sum) break;
        }
        if (k > anchor) {
            term = 1.0;
            for (std::int64_t i = anchor + 1; i <= k; ++i) {
                // t_i / t_{i-1} = ((m - i + 1) / i) * p/(1-p)
                term *= static_cast<double>(m - i + 1) / static_cast<double>(i) * odds_up;
                sum += term;
                if (term < 1e-19 * sum) break;
            }
        }
        return std::min(0.0, log_anchor + std::log(sum));
    }

    // Streaming log-sum-exp over i = 0..k with a running log-term.
    const double log_odds = logp - logq;
    double lt = static_cast<double>(m) * logq;  // i = 0
    double best = lt;
    double acc = 1.0;  // sum of exp(lt_i - best)
    const double mode = p * static_cast<double>(m + 1);
    for (std::int64_t i = 1; i <= k; ++i) {
        lt += std::log(static_cast<double>(m - i + 1) / static_cast<double>(i)) + log_odds;
        if (lt > best) {
            acc = acc * std::exp(best - lt) + 1.0;
            best = lt;
        } else {
            acc += std::exp(lt - best);
            if (static_cast<double>(i) > mode && lt < best - 45.0) break;  // tail is negligible
        }
    }
    return std::min(0.0, best + std::log(acc));
}

double binom_cdf(const EmpiricalCount& count, double p) {
    return std::exp(binom_log_cdf(count, p));
}

double binom_tail_inverse_log(const EmpiricalCount& count, double log_delta) {
    if (log_delta > 0.0) throw DataError("binom_tail_inverse_log: log_delta must be <= 0");
    if (count.k == count.m) return 1.0;
    const double value = sup_bisect(
        0.0, 1.0, [&](double p) { return binom_log_cdf(count, p) >= log_delta; }, nullptr);
    return value >= 1.0 - 4e-16 ? 1.0 : value;
}

InversionResult binom_tail_inverse_detail(const EmpiricalCount& count, Confidence conf) {
    InversionResult res;
    if (count.k == count.m) {
        res.value = 1.0;
        return res;
    }
    const double log_delta = std::log(conf.delta);
    res.value = sup_bisect(
        0.0, 1.0, [&](double p) { return binom_log_cdf(count, p) >= log_delta; },
        &res.iterations);
    if (res.value >= 1.0 - 4e-16) res.value = 1.0;
    res.residual = std::abs(binom_cdf(count, res.value) - conf.delta);
    return res;
}

double binom_tail_inverse(const EmpiricalCount& count, Confidence conf) {
    return binom_tail_inverse_detail(count, conf).value;
}

double kl_div(double q, double p) {
    check_unit_interval(q, "q");
    check_unit_interval(p, "p");
    double total = 0.0;
    if (q > 0.0) {
        if (p == 0.0) return kInf;
        total += q * std::log(q / p);
    }
    if (q < 1.0) {
        if (p == 1.0) return kInf;
        total += (1.0 - q) * std::log((1.0 - q) / (1.0 - p));
    }
    return std::max(0.0, total);
}

InversionResult kl_inverse_detail(double q, double eps) {
    check_unit_interval(q, "q");
    if (!(eps >= 0.0)) throw DataError("kl_inverse: eps must be >= 0");
    InversionResult res;
    if (q >= 1.0 || eps == 0.0) {
        res.value = q;
        return res;
    }
    if (std::isinf(eps)) {
        res.value = 1.0;
        return res;
    }
    res.value = sup_bisect(
        q, 1.0, [&](double p) { return kl_div(q, p) <= eps; }, &res.iterations);
    if (res.value >= 1.0 - 4e-16) {
        res.value = 1.0;  // sup lies beyond double resolution near 1
        return res;
    }
    res.residual = std::abs(kl_div(q, res.value) - eps);
    return res;
}

double kl_inverse(double q, double eps) { return kl_inverse_detail(q, eps).value; }

double pinsker_inverse(double q, double eps) {
    check_unit_interval(q, "q");
    if (!(eps >= 0.0)) throw DataError("pinsker_inverse: eps must be >= 0");
    return std::min(1.0, q + std::sqrt(eps / 2.0));
}

double catoni_inverse(double q, double eps, double c) {
    check_unit_interval(q, "q");
    if (!(eps >= 0.0)) throw DataError("catoni_inverse: eps must be >= 0");
    if (!(c > 0.0)) throw DataError("catoni_inverse: c must be > 0");
    const double numer = -std::expm1(-(eps + c * q));
    const double denom = -std::expm1(-c);
    return std::min(1.0, numer / denom);
}

double p2l_log_psi(std::int64_t k, std::int64_t n, double delta, double u) {
    if (n < 1 || k < 0 || k > n) throw DataError("p2l_log_psi: need 0 <= k <= n, n >= 1");
    if (k == n) return -kInf;  // empty sum
    // log terms: ln C(m,k) - ln C(n,k) + (n - m) u, for m = k .. n-1.
    // The increment ln((m+1)/(m+1-k)) - u is decreasing in m, so the terms
    // are unimodal; the walk stops once past the peak and negligible.
    double lt = -log_binom_coef(n, k) + static_cast<double>(n - k) * u;
    double best = lt;
    double acc = 1.0;
    bool past_peak = false;
    for (std::int64_t m = k + 1; m <= n - 1; ++m) {
        const double step =
            std::log(static_cast<double>(m) / static_cast<double>(m - k)) - u;
        if (step < 0.0) past_peak = true;
        lt += step;
        if (lt > best) {
            acc = acc * std::exp(best - lt) + 1.0;
            best = lt;
        } else {
            acc += std::exp(lt - best);
            if (past_peak && lt < best - 45.0) break;
        }
    }
    return std::log(delta / static_cast<double>(n)) + best + std::log(acc);
}

P2lRoot p2l_epsilon_detail(std::int64_t k, std::int64_t n, Confidence conf) {
    if (n < 1 || k < 0) throw DataError("p2l_epsilon: need 0 <= k <= n, n >= 1");
    if (k > n) throw DataError("p2l_epsilon: k exceeds n");
    P2lRoot root;
    if (k == n) return root;  // epsilon-bar(n, delta) = 1 by definition

    const double delta = conf.delta;
    // Solve in u = -ln(1 - eps); log Psi is strictly increasing in u and the
    // substitution keeps full precision when the root sits near eps = 1.
    double u_lo = std::log(static_cast<double>(n) / static_cast<double>(n - k));
    if (p2l_log_psi(k, n, delta, u_lo) > 0.0) {
        // Root pinned at the lower boundary eps = k/n.
        root.value = static_cast<double>(k) / static_cast<double>(n);
        root.complement = static_cast<double>(n - k) / static_cast<double>(n);
        root.residual = std::abs(std::expm1(p2l_log_psi(k, n, delta, u_lo)));
        return root;
    }
    double u_hi = std::max(1.0, 2.0 * u_lo);
    int expand = 0;
    while (p2l_log_psi(k, n, delta, u_hi) <= 0.0) {
        u_lo = u_hi;
        u_hi *= 2.0;
        if (++expand > 80) throw DataError("p2l_epsilon: failed to bracket the root");
    }

    int it = 0;
    while (it < kMaxBisect) {
        const double mid = 0.5 * (u_lo + u_hi);
        if (mid <= u_lo || mid >= u_hi) break;
        ++it;
        const double lp = p2l_log_psi(k, n, delta, mid);
        if (std::abs(lp) <= 1e-12) {
            u_lo = u_hi = mid;
            break;
        }
        if (lp <= 0.0) {
            u_lo = mid;
        } else {
            u_hi = mid;
        }
    }
    const double u = u_hi;  // Psi >= 1 side: rounding the bound upward
    root.iterations = it;
    root.complement = std::exp(-u);
    root.value = -std::expm1(-u);
    root.residual = std::abs(std::expm1(p2l_log_psi(k, n, delta, u)));
    return root;
}

double p2l_epsilon(std::int64_t k, std::int64_t n, Confidence conf) {
    return p2l_epsilon_detail(k, n, conf).value;
}

}  // namespace riskcert
