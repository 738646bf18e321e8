#include "riskcert/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "riskcert/errors.hpp"

namespace riskcert {

namespace {

void check_classes(int num_classes) {
    if (num_classes < 2) throw DataError("LossSpec: num_classes must be >= 2");
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DataError("LossSpec: alpha must lie in (0,1)");
}

int checked_label(const PredictionRecord& rec, int num_classes) {
    if (!rec.label.has_value()) {
        throw DataError("record '" + rec.id + "': label required but missing");
    }
    const int y = *rec.label;
    if (y < 1 || y > num_classes) {
        throw DataError("record '" + rec.id + "': label " + std::to_string(y) +
                        " outside [1.." + std::to_string(num_classes) + "]");
    }
    return y;
}

const std::vector<double>& h_sample(const PredictionRecord& rec, int j) {
    if (j < 0 || j >= static_cast<int>(rec.h_logits.size())) {
        throw UsageError("sample index " + std::to_string(j) + " outside [0.." +
                         std::to_string(rec.h_logits.size()) + ") for record '" + rec.id + "'");
    }
    return rec.h_logits[static_cast<std::size_t>(j)];
}

int sample_count(std::span<const PredictionRecord> records) {
    if (records.empty()) throw DataError("empty record set");
    return static_cast<int>(records.front().h_logits.size());
}

// Applies `fn(record, j)` averaged over records, then over the requested
// sample index or all V samples.
template <typename Fn>
double mean_over(std::span<const PredictionRecord> records, int sample_index, Fn fn) {
    const int v = sample_count(records);
    const int j_begin = sample_index == kAllSamples ? 0 : sample_index;
    const int j_end = sample_index == kAllSamples ? v : sample_index + 1;
    if (j_begin < 0 || j_end > v) {
        throw UsageError("sample index " + std::to_string(sample_index) + " outside [0.." +
                         std::to_string(v) + ")");
    }
    double total = 0.0;
    for (const auto& rec : records) {
        double per_record = 0.0;
        for (int j = j_begin; j < j_end; ++j) per_record += fn(rec, j);
        total += per_record / static_cast<double>(j_end - j_begin);
    }
    return total / static_cast<double>(records.size());
}

}  // namespace

LossSpec LossSpec::zero_one(int num_classes) {
    check_classes(num_classes);
    LossSpec s;
    s.kind = LossKind::zero_one;
    s.num_classes = num_classes;
    s.b_lower = 0.0;
    s.t_upper = 1.0;
    s.lambda = 1.0;
    return s;
}

LossSpec LossSpec::xent_clamped(int num_classes, double alpha) {
    check_classes(num_classes);
    check_alpha(alpha);
    LossSpec s;
    s.kind = LossKind::xent_clamped;
    s.num_classes = num_classes;
    s.alpha = alpha;
    s.b_lower = 0.0;
    s.t_upper = std::log(static_cast<double>(num_classes) / alpha);
    s.lambda = s.t_upper - s.b_lower;
    s.lipschitz = static_cast<double>(num_classes) / alpha;
    return s;
}

LossSpec LossSpec::xent_smoothed(int num_classes, double alpha) {
    check_classes(num_classes);
    check_alpha(alpha);
    LossSpec s;
    s.kind = LossKind::xent_smoothed;
    s.num_classes = num_classes;
    s.alpha = alpha;
    // The loss -ln(sigma_smooth) ranges over [-ln(1-a+a/C), ln(C/a)], which
    // makes lambda equal ln(1 + (1-a)C/a).
    s.b_lower = -std::log1p(alpha * (1.0 / static_cast<double>(num_classes) - 1.0));
    s.t_upper = std::log(static_cast<double>(num_classes) / alpha);
    s.lambda = s.t_upper - s.b_lower;
    s.lipschitz = static_cast<double>(num_classes) / alpha;
    return s;
}

LossSpec LossSpec::huber(int num_classes, double delta_h) {
    check_classes(num_classes);
    if (!(delta_h > 0.0 && delta_h <= 1.0)) {
        throw DataError("LossSpec: huber delta_h must lie in (0,1]");
    }
    LossSpec s;
    s.kind = LossKind::huber;
    s.num_classes = num_classes;
    s.delta_h = delta_h;
    s.b_lower = 0.0;
    s.t_upper = delta_h - 0.5 * delta_h * delta_h;
    s.lambda = s.t_upper - s.b_lower;
    s.lipschitz = delta_h;
    return s;
}

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) throw DataError("softmax: empty logits");
    double top = -std::numeric_limits<double>::infinity();
    for (double z : logits) {
        if (!std::isfinite(z)) throw DataError("softmax: non-finite logit");
        top = std::max(top, z);
    }
    std::vector<double> probs(logits.size());
    double norm = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - top);
        norm += probs[i];
    }
    for (double& v : probs) v /= norm;
    return probs;
}

int argmax_lowest(std::span<const double> values) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i) {
        if (values[static_cast<std::size_t>(i)] > values[static_cast<std::size_t>(best)]) best = i;
    }
    return best;
}

double clamped_softmax(std::span<const double> logits, int label, double alpha) {
    check_alpha(alpha);
    const auto probs = softmax(logits);
    if (label < 1 || label > static_cast<int>(probs.size())) {
        throw DataError("clamped_softmax: label outside [1..C]");
    }
    return std::max(alpha / static_cast<double>(probs.size()),
                    probs[static_cast<std::size_t>(label - 1)]);
}

double smoothed_softmax(std::span<const double> logits, int label, double alpha) {
    check_alpha(alpha);
    const auto probs = softmax(logits);
    if (label < 1 || label > static_cast<int>(probs.size())) {
        throw DataError("smoothed_softmax: label outside [1..C]");
    }
    return (1.0 - alpha) * probs[static_cast<std::size_t>(label - 1)] +
           alpha / static_cast<double>(probs.size());
}

double eval_loss(const LossSpec& spec, std::span<const double> logits, int label) {
    if (static_cast<int>(logits.size()) != spec.num_classes) {
        throw DataError("eval_loss: logit vector length differs from num_classes");
    }
    if (label < 1 || label > spec.num_classes) throw DataError("eval_loss: label outside [1..C]");
    switch (spec.kind) {
        case LossKind::zero_one:
            return argmax_lowest(logits) == label - 1 ? 0.0 : 1.0;
        case LossKind::xent_clamped:
            return -std::log(clamped_softmax(logits, label, spec.alpha));
        case LossKind::xent_smoothed:
            return -std::log(smoothed_softmax(logits, label, spec.alpha));
        case LossKind::huber: {
            const auto probs = softmax(logits);
            const double dh = spec.delta_h;
            double total = 0.0;
            for (int i = 0; i < spec.num_classes; ++i) {
                const double target = (i == label - 1) ? 1.0 : 0.0;
                const double gap = std::abs(probs[static_cast<std::size_t>(i)] - target);
                total += gap <= dh ? 0.5 * gap * gap : dh * gap - 0.5 * dh * dh;
            }
            return total / static_cast<double>(spec.num_classes);
        }
    }
    throw UsageError("eval_loss: unknown loss kind");
}

EmpiricalCount disagreement_01(std::span<const PredictionRecord> records, int sample_index) {
    if (records.empty()) throw DataError("disagreement_01: empty record set");
    std::int64_t k = 0;
    for (const auto& rec : records) {
        const auto& h = h_sample(rec, sample_index);
        if (argmax_lowest(rec.f_logits) != argmax_lowest(h)) ++k;
    }
    return EmpiricalCount(k, static_cast<std::int64_t>(records.size()));
}

double disagreement_l1(std::span<const PredictionRecord> records, int sample_index) {
    return mean_over(records, sample_index, [](const PredictionRecord& rec, int j) {
        const auto pf = softmax(rec.f_logits);
        const auto ph = softmax(rec.h_logits[static_cast<std::size_t>(j)]);
        if (pf.size() != ph.size()) {
            throw DataError("disagreement_l1: f/h dimension mismatch in record '" + rec.id + "'");
        }
        double l1 = 0.0;
        for (std::size_t c = 0; c < pf.size(); ++c) l1 += std::abs(pf[c] - ph[c]);
        return l1;
    });
}

double disagreement_loss(std::span<const PredictionRecord> records, const LossSpec& spec,
                         int sample_index) {
    return mean_over(records, sample_index, [&](const PredictionRecord& rec, int j) {
        const int y = checked_label(rec, spec.num_classes);
        return std::abs(eval_loss(spec, rec.f_logits, y) -
                        eval_loss(spec, rec.h_logits[static_cast<std::size_t>(j)], y));
    });
}

double disagreement_label_prob(std::span<const PredictionRecord> records, const LossSpec& spec,
                               int sample_index) {
    if (spec.kind != LossKind::xent_clamped && spec.kind != LossKind::xent_smoothed) {
        throw UsageError("disagreement_label_prob: needs a clamped or smoothed xent spec");
    }
    const bool clamped = spec.kind == LossKind::xent_clamped;
    return mean_over(records, sample_index, [&](const PredictionRecord& rec, int j) {
        const int y = checked_label(rec, spec.num_classes);
        const auto& h = rec.h_logits[static_cast<std::size_t>(j)];
        const double pf = clamped ? clamped_softmax(rec.f_logits, y, spec.alpha)
                                  : smoothed_softmax(rec.f_logits, y, spec.alpha);
        const double ph = clamped ? clamped_softmax(h, y, spec.alpha)
                                  : smoothed_softmax(h, y, spec.alpha);
        return std::abs(pf - ph);
    });
}

double empirical_risk_f(std::span<const PredictionRecord> records, const LossSpec& spec) {
    if (records.empty()) throw DataError("empirical_risk: empty record set");
    double total = 0.0;
    for (const auto& rec : records) {
        total += eval_loss(spec, rec.f_logits, checked_label(rec, spec.num_classes));
    }
    return total / static_cast<double>(records.size());
}

double empirical_risk_h(std::span<const PredictionRecord> records, const LossSpec& spec,
                        int sample_index) {
    return mean_over(records, sample_index, [&](const PredictionRecord& rec, int j) {
        return eval_loss(spec, rec.h_logits[static_cast<std::size_t>(j)],
                         checked_label(rec, spec.num_classes));
    });
}

std::vector<double> per_sample_loss_disagreement(std::span<const PredictionRecord> records,
                                                 const LossSpec& spec, int sample_begin,
                                                 int sample_end) {
    if (sample_begin < 0 || sample_end <= sample_begin) {
        throw UsageError("per_sample_loss_disagreement: empty or negative sample range");
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(sample_end - sample_begin));
    for (int j = sample_begin; j < sample_end; ++j) {
        out.push_back(disagreement_loss(records, spec, j));
    }
    return out;
}

std::vector<double> per_sample_risk_h(std::span<const PredictionRecord> records,
                                      const LossSpec& spec, int sample_begin, int sample_end) {
    if (sample_begin < 0 || sample_end <= sample_begin) {
        throw UsageError("per_sample_risk_h: empty or negative sample range");
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(sample_end - sample_begin));
    for (int j = sample_begin; j < sample_end; ++j) {
        out.push_back(empirical_risk_h(records, spec, j));
    }
    return out;
}

DisagreementStats compute_disagreement_stats(std::span<const PredictionRecord> records,
                                             const LossSpec& spec, int sample_index) {
    DisagreementStats stats{EmpiricalCount(0, 1), 0.0, 0.0, 0.0, 0};
    stats.d01 = disagreement_01(records, sample_index == kAllSamples ? 0 : sample_index);
    stats.dk_mean = disagreement_l1(records, sample_index);
    const bool labeled = std::all_of(records.begin(), records.end(),
                                     [](const PredictionRecord& r) { return r.label.has_value(); });
    if (labeled) {
        stats.dl_mean = disagreement_loss(records, spec, sample_index);
        if (spec.kind == LossKind::xent_clamped || spec.kind == LossKind::xent_smoothed) {
            stats.dhat_mean = disagreement_label_prob(records, spec, sample_index);
        }
    }
    stats.m = static_cast<std::int64_t>(records.size());
    return stats;
}

std::vector<PredictionRecord> select_split(std::span<const PredictionRecord> records, char split) {
    std::vector<PredictionRecord> out;
    for (const auto& rec : records) {
        if (rec.split == split) out.push_back(rec);
    }
    return out;
}

}  // namespace riskcert
