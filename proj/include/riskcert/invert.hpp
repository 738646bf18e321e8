#pragma once

#include <cstdint>

namespace riskcert {

// k successes out of m Bernoulli trials (disagreements, errors, ...).
struct EmpiricalCount {
    std::int64_t k = 0;
    std::int64_t m = 1;

    EmpiricalCount(std::int64_t k_, std::int64_t m_);
    double rate() const { return static_cast<double>(k) / static_cast<double>(m); }
};

// Failure probability delta in (0, 1].
struct Confidence {
    double delta = 0.01;

    explicit Confidence(double d);
};

// Outcome of a monotone inversion. `value` is clamped to [0,1]; `residual`
// is the gap between the defining equation and its target at `value`
// (0 when the result sits on a boundary).
struct InversionResult {
    double value = 0.0;
    int iterations = 0;
    double residual = 0.0;
};

// Root of Psi(eps) = 1 for the sample-compression epsilon-bar solver.
// `complement` keeps 1 - value at full precision; for roots very close to 1
// the double `value` alone cannot represent the solution accurately.
struct P2lRoot {
    double value = 1.0;
    double complement = 0.0;
    int iterations = 0;
    double residual = 0.0;
};

// ln C(n, k) via log-gamma.
double log_binom_coef(std::int64_t n, std::int64_t k);

// Binomial CDF: sum_{i=0}^{k} C(m,i) p^i (1-p)^{m-i}, and its logarithm.
// Monotone non-increasing in p.
double binom_cdf(const EmpiricalCount& count, double p);
double binom_log_cdf(const EmpiricalCount& count, double p);

// Largest p in [0,1] with binom_cdf(k, m, p) >= delta.
double binom_tail_inverse(const EmpiricalCount& count, Confidence conf);
InversionResult binom_tail_inverse_detail(const EmpiricalCount& count, Confidence conf);

// Same inversion against log(delta); lets callers pass union-bound priors
// far below double underflow (log-space delta' is never materialized).
double binom_tail_inverse_log(const EmpiricalCount& count, double log_delta);

// Binary KL divergence kl(q, p) with the usual 0 log 0 conventions.
// Returns +inf when p is 0 or 1 and q differs.
double kl_div(double q, double p);

// Largest p >= q with kl_div(q, p) <= eps.
double kl_inverse(double q, double eps);
InversionResult kl_inverse_detail(double q, double eps);

// Comparator inverses dominating kl_inverse (quadratic / Catoni distances).
double pinsker_inverse(double q, double eps);
double catoni_inverse(double q, double eps, double c = 1.0);

// log Psi_{k,delta} evaluated at u = -ln(1 - eps) >= 0.
double p2l_log_psi(std::int64_t k, std::int64_t n, double delta, double u);

// Unique solution of Psi_{k,delta}(eps) = 1 in [k/n, 1); exactly 1 for k = n.
double p2l_epsilon(std::int64_t k, std::int64_t n, Confidence conf);
P2lRoot p2l_epsilon_detail(std::int64_t k, std::int64_t n, Confidence conf);

}  // namespace riskcert
