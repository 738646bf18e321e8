#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "riskcert/invert.hpp"
#include "riskcert/losses.hpp"

namespace riskcert {

// Assembled risk bound: the value, the failure probability it consumed and
// the named contributions it was built from.
struct BoundResult {
    double risk_bound = 0.0;
    double delta_spent = 0.0;
    bool vacuous = false;
    std::vector<std::pair<std::string, double>> terms;

    double term(const std::string& name) const;
};

// Sample-compression bookkeeping: n training points, a compression set of
// size m_tilde, and the empirical loss on the complement.
struct CompressionMeta {
    std::int64_t n = 1;
    std::int64_t m_tilde = 0;
    std::int64_t complement_size = 1;  // n - m_tilde, must stay positive
    double complement_risk = 0.0;

    CompressionMeta(std::int64_t n, std::int64_t m_tilde, double complement_risk);
};

// Model-compression bookkeeping: code length in bits and train risk.
struct CodeLengthMeta {
    std::int64_t code_bits = 1;
    std::int64_t n = 1;
    double train_risk = 0.0;

    CodeLengthMeta(std::int64_t code_bits, std::int64_t n, double train_risk);
};

struct PACBayesMeta {
    double kl_qp = 0.0;
    std::int64_t n = 1;
    int v_samples = 1;
    std::vector<double> sampled_risks;

    PACBayesMeta(double kl_qp, std::int64_t n, std::vector<double> sampled_risks);
    double mean_risk() const;
};

struct PartitionParams {
    std::int64_t subsets = 1;  // K
    std::vector<std::int64_t> counts;
    std::int64_t t_occupied = 0;
    double alpha_p = 0.0;
    double gamma_p = 1.0;
    double t_upper = 1.0;
    double train_risk = 0.0;

    PartitionParams(std::int64_t subsets, std::vector<std::int64_t> counts, double alpha_p,
                    double gamma_p, double t_upper, double train_risk);
    std::int64_t total_count() const;
};

struct NormBoundInputs {
    double rho = 0.0;
    double margin_risk = 0.0;
    double gamma_margin = 1.0;
    int depth = 1;                    // L
    std::vector<double> pred_counts;  // max predecessor count per layer 1..L-1
    int num_classes = 2;
    double sq_pixel_norm_sum = 0.0;
    std::int64_t n = 1;
};

// Test-set bounds.
BoundResult test_set_binomial(const EmpiricalCount& errors, Confidence conf);
BoundResult test_set_chernoff(double mean_loss, const LossSpec& spec, std::int64_t m,
                              Confidence conf);

// Sample-compression bounds (binomial, kl and sqrt forms) and the
// pick-to-learn epsilon-bar bound.
BoundResult sc_binomial(const CompressionMeta& meta, Confidence conf);
BoundResult sc_kl(const CompressionMeta& meta, const LossSpec& spec, Confidence conf);
BoundResult sc_sqrt(const CompressionMeta& meta, const LossSpec& spec, Confidence conf);
BoundResult p2l_bound(std::int64_t compression_size, std::int64_t complement_errors,
                      std::int64_t n, Confidence conf);

// Model-compression bounds with the Occam code-length prior.
BoundResult mc_binomial(const CodeLengthMeta& meta, Confidence conf);
BoundResult mc_kl(const CodeLengthMeta& meta, const LossSpec& spec, Confidence conf);

// PAC-Bayes bounds.
BoundResult pacbayes_mcallester(const PACBayesMeta& meta, const LossSpec& spec, Confidence conf);
BoundResult pacbayes_double_kl(const PACBayesMeta& meta, const LossSpec& spec, Confidence conf,
                               Confidence conf_prime);

// Partition-based baseline.
BoundResult partition_bound(const PartitionParams& params, Confidence conf);
double partition_gamma(double alpha_p, Confidence conf);

struct PartitionCandidate {
    std::int64_t subsets = 1;
    std::vector<std::int64_t> counts;
    double alpha_p = 1.0;
};
BoundResult partition_grid_search(const std::vector<PartitionCandidate>& candidates,
                                  double t_upper, double train_risk, Confidence conf);

struct PartitionAssignment {
    std::vector<std::int64_t> counts;
    std::int64_t t_occupied = 0;
};
PartitionAssignment random_partition_assign(const std::vector<std::vector<double>>& features,
                                            std::int64_t subsets, std::uint64_t seed);

// Norm-based baseline.
BoundResult norm_bound(const NormBoundInputs& inputs, Confidence conf);

}  // namespace riskcert
