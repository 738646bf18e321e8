#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riskcert/invert.hpp"

namespace riskcert {

enum class LossKind { zero_one, xent_clamped, xent_smoothed, huber };

// Identity of a bounded loss: its range [b_lower, t_upper], the width
// lambda = t_upper - b_lower, and the Lipschitz constant where one exists.
struct LossSpec {
    LossKind kind = LossKind::zero_one;
    int num_classes = 2;
    double alpha = 1e-3;    // softmax clamp/smooth parameter (xent only)
    double delta_h = 0.2;   // Huber threshold (huber only)
    double b_lower = 0.0;
    double t_upper = 1.0;
    double lambda = 1.0;    // t_upper - b_lower, exactly
    std::optional<double> lipschitz;

    static LossSpec zero_one(int num_classes);
    static LossSpec xent_clamped(int num_classes, double alpha = 1e-3);
    static LossSpec xent_smoothed(int num_classes, double alpha = 1e-3);
    static LossSpec huber(int num_classes, double delta_h = 0.2);
};

// One example's outputs from the target f and the surrogate h. A stochastic
// surrogate stores V posterior samples; V is constant across a dataset.
// Labels are 1-based class indices, as in the log format.
struct PredictionRecord {
    std::string id;
    char split = 'U';  // 'S', 'U' or 'L'
    std::optional<int> label;
    std::vector<double> f_logits;
    std::vector<std::vector<double>> h_logits;
};

// Disagreement statistics of a record set under a loss spec.
struct DisagreementStats {
    EmpiricalCount d01;        // argmax disagreements
    double dk_mean = 0.0;      // mean L1 softmax distance, in [0,2]
    double dl_mean = 0.0;      // mean |loss(f) - loss(h)|, needs labels
    double dhat_mean = 0.0;    // mean |label-prob(f) - label-prob(h)|
    std::int64_t m = 0;
};

// Averages the statistic over all V stored surrogate samples.
inline constexpr int kAllSamples = -1;

std::vector<double> softmax(std::span<const double> logits);
int argmax_lowest(std::span<const double> values);

// Label-probability variants; `label` is 1-based.
double clamped_softmax(std::span<const double> logits, int label, double alpha);
double smoothed_softmax(std::span<const double> logits, int label, double alpha);

double eval_loss(const LossSpec& spec, std::span<const double> logits, int label);

EmpiricalCount disagreement_01(std::span<const PredictionRecord> records, int sample_index);
double disagreement_l1(std::span<const PredictionRecord> records, int sample_index);
double disagreement_loss(std::span<const PredictionRecord> records, const LossSpec& spec,
                         int sample_index);
double disagreement_label_prob(std::span<const PredictionRecord> records, const LossSpec& spec,
                               int sample_index);

double empirical_risk_f(std::span<const PredictionRecord> records, const LossSpec& spec);
double empirical_risk_h(std::span<const PredictionRecord> records, const LossSpec& spec,
                        int sample_index);

// Per-sample vectors over a half-open sample range, for Monte Carlo
// posterior bounds that must keep their two halves disjoint.
std::vector<double> per_sample_loss_disagreement(std::span<const PredictionRecord> records,
                                                 const LossSpec& spec, int sample_begin,
                                                 int sample_end);
std::vector<double> per_sample_risk_h(std::span<const PredictionRecord> records,
                                      const LossSpec& spec, int sample_begin, int sample_end);

DisagreementStats compute_disagreement_stats(std::span<const PredictionRecord> records,
                                             const LossSpec& spec, int sample_index);

std::vector<PredictionRecord> select_split(std::span<const PredictionRecord> records, char split);

}  // namespace riskcert
