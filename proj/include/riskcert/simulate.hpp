#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "riskcert/invert.hpp"

namespace riskcert {

// A synthetic data distribution with analytically known true quantities,
// built so the inequality under test holds at the population level.
struct SyntheticWorld {
    enum class Kind { bernoulli_pair, bounded_loss_pair };

    Kind kind = Kind::bernoulli_pair;
    double p_f = 0.15;        // true risk of the target
    double p_h = 0.10;        // true risk of the surrogate (or its Q-average)
    double p_disagree = 0.08; // true per-example disagreement rate

    double loss_f = 0.0;      // bounded-loss case: true losses
    double loss_h = 0.0;
    double beta_a = 1.0;      // per-example |loss gap| law: scale * Beta(a, b)
    double beta_b = 9.0;
    double scale = 1.0;

    static SyntheticWorld bernoulli(double p_f, double p_h, double p_disagree);
    static SyntheticWorld bounded(double loss_f, double loss_h, double beta_a, double beta_b,
                                  double scale, double gap_cap);
    double mean_disagreement() const;
};

struct CoverageConfig {
    std::int64_t m = 200;        // per-trial sample size (and n for train-set bounds)
    std::int64_t trials = 10000;
    std::uint64_t seed = 1;
    int threads = 1;
    std::int64_t m_tilde = 5;    // sc_binomial compression size
    std::int64_t code_bits = 16; // mc_binomial code length
    int v_samples = 25;          // Monte Carlo posterior sample count
    double k_ell = 0.2;          // thm5 Lipschitz constant
    double kl_qp = 0.0;          // posterior-prior divergence fed to PAC-Bayes rows
};

struct CoverageResult {
    std::int64_t trials = 0;
    std::int64_t violations = 0;
    double empirical_coverage = 1.0;
    double target = 0.0;  // 1 - delta
    bool pass = false;    // coverage >= target - 3 sigma
};

const std::vector<std::string>& coverage_bound_ids();
SyntheticWorld default_world(const std::string& bound_id);

CoverageResult run_coverage(const std::string& bound_id, const SyntheticWorld& world,
                            const CoverageConfig& config, Confidence conf);

// Exact coverage of the binomial test-set bound by enumerating the trial
// count distribution; the Monte Carlo runner must agree within noise.
double exact_coverage_test_binomial(std::int64_t m, double p, Confidence conf);

std::string coverage_csv(const std::string& bound_id, const CoverageConfig& config,
                         Confidence conf, const CoverageResult& result);

}  // namespace riskcert
