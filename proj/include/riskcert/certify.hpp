#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "riskcert/bounds.hpp"
#include "riskcert/invert.hpp"
#include "riskcert/losses.hpp"

namespace riskcert {

// Explicit failure-probability ledger. The total is defined as the exact
// left-to-right sum of the allocations, so conservation is bit-exact by
// construction.
struct DeltaBudget {
    std::vector<std::pair<std::string, double>> allocation;

    double total() const;
    double delta_for(const std::string& term) const;
    void validate() const;

    // Splits `total` evenly; the last share takes the exact remainder so
    // the shares still sum to `total` bit-exactly.
    static DeltaBudget even_split(Confidence total, const std::vector<std::string>& terms);
};

// Prior masses over a countable surrogate family.
struct SurrogatePrior {
    std::vector<std::pair<std::string, double>> masses;

    double mass_of(const std::string& id) const;
    void validate() const;
};

enum class UseCase { certify_target, certify_uniform, risk_gap };

std::string to_string(UseCase use_case);
UseCase use_case_from_string(const std::string& name);

struct CertificateReport {
    double target_bound = 0.0;
    std::optional<BoundResult> surrogate_bound;
    double disagreement_term = 0.0;
    DeltaBudget budget;
    UseCase use_case = UseCase::risk_gap;
    std::string inputs_digest;
    bool vacuous = false;
};

// Disagreement terms (zero-one, Lipschitz, bounded-loss, Monte Carlo
// posterior). Each is monotone in its statistic and in 1/delta.
double disagree_01(const EmpiricalCount& count, Confidence conf);
double disagree_lipschitz(double dk_mean, double k_ell, std::int64_t m, Confidence conf);
double disagree_lipschitz(double dk_mean, const LossSpec& spec, std::int64_t m, Confidence conf);
double disagree_loss(double dl_mean, const LossSpec& spec, std::int64_t m, Confidence conf);
double disagree_pacbayes_mc(std::span<const double> per_sample_dl, const LossSpec& spec,
                            std::int64_t m, Confidence conf_inner, Confidence conf_outer);

// Certificate assembly for the three use cases.
CertificateReport certify_target(const BoundResult& surrogate, double disagreement,
                                 const DeltaBudget& budget, std::string inputs_digest = {});
CertificateReport certify_uniform(const std::string& surrogate_id, const SurrogatePrior& prior,
                                  const BoundResult& surrogate,
                                  const std::function<double(Confidence)>& disagreement_at,
                                  const DeltaBudget& budget, std::string inputs_digest = {});
CertificateReport risk_gap(double disagreement, const DeltaBudget& budget,
                           std::string inputs_digest = {});

// Full Monte Carlo PAC-Bayes certificate: the posterior-risk bound uses
// sample indices [0, V/2) and the disagreement bound uses [V/2, V), keeping
// the two halves structurally disjoint.
struct SampleRange {
    int begin = 0;
    int end = 0;
};
CertificateReport pacbayes_mc_certificate(std::span<const PredictionRecord> train_records,
                                          std::span<const PredictionRecord> disagree_records,
                                          const LossSpec& spec, double kl_qp,
                                          SampleRange risk_samples, SampleRange dl_samples,
                                          Confidence delta_each, std::string inputs_digest = {});

}  // namespace riskcert
