#include "riskcert/certify.hpp"

#include <algorithm>
#include <cmath>

#include "riskcert/errors.hpp"

namespace riskcert {

double DeltaBudget::total() const {
    double sum = 0.0;
    for (const auto& [name, delta] : allocation) sum += delta;
    return sum;
}

double DeltaBudget::delta_for(const std::string& term) const {
    for (const auto& [name, delta] : allocation) {
        if (name == term) return delta;
    }
    throw UsageError("DeltaBudget: no allocation named '" + term + "'");
}

void DeltaBudget::validate() const {
    if (allocation.empty()) throw UsageError("DeltaBudget: empty allocation");
    for (const auto& [name, delta] : allocation) {
        if (!(delta > 0.0)) throw UsageError("DeltaBudget: share '" + name + "' must be > 0");
    }
    const double sum = total();
    if (!(sum > 0.0 && sum <= 1.0)) {
        throw UsageError("DeltaBudget: total delta must lie in (0,1], got " + std::to_string(sum));
    }
}

DeltaBudget DeltaBudget::even_split(Confidence total, const std::vector<std::string>& terms) {
    if (terms.empty()) throw UsageError("DeltaBudget: need at least one term");
    DeltaBudget budget;
    const double share = total.delta / static_cast<double>(terms.size());
    double allocated = 0.0;
    for (std::size_t i = 0; i + 1 < terms.size(); ++i) {
        budget.allocation.emplace_back(terms[i], share);
        allocated += share;
    }
    // Sterbenz: allocated is within a factor two of the total, so the
    // remainder and the final sum are both exact.
    budget.allocation.emplace_back(terms.back(), total.delta - allocated);
    budget.validate();
    return budget;
}

double SurrogatePrior::mass_of(const std::string& id) const {
    for (const auto& [name, mass] : masses) {
        if (name == id) return mass;
    }
    throw UsageError("SurrogatePrior: no mass for surrogate '" + id + "'");
}

void SurrogatePrior::validate() const {
    double sum = 0.0;
    for (const auto& [name, mass] : masses) {
        if (!(mass > 0.0 && mass <= 1.0)) {
            throw UsageError("SurrogatePrior: mass of '" + name + "' must lie in (0,1]");
        }
        sum += mass;
    }
    if (sum > 1.0 + 1e-12) throw UsageError("SurrogatePrior: masses must sum to at most 1");
}

std::string to_string(UseCase use_case) {
    switch (use_case) {
        case UseCase::certify_target: return "target";
        case UseCase::certify_uniform: return "uniform";
        case UseCase::risk_gap: return "gap";
    }
    return "unknown";
}

UseCase use_case_from_string(const std::string& name) {
    if (name == "target") return UseCase::certify_target;
    if (name == "uniform") return UseCase::certify_uniform;
    if (name == "gap") return UseCase::risk_gap;
    throw UsageError("unknown use case '" + name + "'");
}

double disagree_01(const EmpiricalCount& count, Confidence conf) {
    return binom_tail_inverse(count, conf);
}

double disagree_lipschitz(double dk_mean, double k_ell, std::int64_t m, Confidence conf) {
    if (!(k_ell > 0.0)) throw UsageError("disagree_lipschitz: needs a positive Lipschitz constant");
    if (!(dk_mean >= 0.0 && dk_mean <= 2.0)) {
        throw DataError("disagree_lipschitz: softmax L1 disagreement must lie in [0,2]");
    }
    if (m < 1) throw DataError("disagree_lipschitz: m must be >= 1");
    const double eps = std::log(1.0 / conf.delta) / static_cast<double>(m);
    return 2.0 * k_ell * kl_inverse(dk_mean / 2.0, eps);
}

double disagree_lipschitz(double dk_mean, const LossSpec& spec, std::int64_t m, Confidence conf) {
    if (!spec.lipschitz.has_value()) {
        throw UsageError("disagree_lipschitz: loss spec carries no Lipschitz constant");
    }
    return disagree_lipschitz(dk_mean, *spec.lipschitz, m, conf);
}

double disagree_loss(double dl_mean, const LossSpec& spec, std::int64_t m, Confidence conf) {
    if (!(dl_mean >= 0.0)) throw DataError("disagree_loss: statistic must be nonnegative");
    if (dl_mean > spec.lambda * (1.0 + 1e-12)) {
        throw DataError("disagree_loss: statistic exceeds the loss range lambda");
    }
    if (m < 1) throw DataError("disagree_loss: m must be >= 1");
    if (spec.lambda == 0.0) return 0.0;
    const double q = std::min(1.0, dl_mean / spec.lambda);
    const double eps = std::log(1.0 / conf.delta) / static_cast<double>(m);
    return spec.lambda * kl_inverse(q, eps);
}

double disagree_pacbayes_mc(std::span<const double> per_sample_dl, const LossSpec& spec,
                            std::int64_t m, Confidence conf_inner, Confidence conf_outer) {
    if (per_sample_dl.empty()) throw DataError("disagree_pacbayes_mc: needs sampled statistics");
    if (m < 1) throw DataError("disagree_pacbayes_mc: m must be >= 1");
    if (spec.lambda == 0.0) return 0.0;
    double mean = 0.0;
    for (double dl : per_sample_dl) {
        if (!(dl >= 0.0) || dl > spec.lambda * (1.0 + 1e-12)) {
            throw DataError("disagree_pacbayes_mc: per-sample statistic outside [0, lambda]");
        }
        mean += std::min(1.0, dl / spec.lambda);
    }
    mean /= static_cast<double>(per_sample_dl.size());
    const double eps_inner =
        std::log(1.0 / conf_inner.delta) / static_cast<double>(per_sample_dl.size());
    const double eps_outer = std::log(1.0 / conf_outer.delta) / static_cast<double>(m);
    return spec.lambda * kl_inverse(kl_inverse(mean, eps_inner), eps_outer);
}

namespace {

CertificateReport assemble(const std::optional<BoundResult>& surrogate, double disagreement,
                           DeltaBudget budget, UseCase use_case, std::string digest) {
    budget.validate();
    CertificateReport report;
    report.surrogate_bound = surrogate;
    report.disagreement_term = disagreement;
    report.use_case = use_case;
    report.inputs_digest = std::move(digest);
    report.target_bound =
        (surrogate.has_value() ? surrogate->risk_bound : 0.0) + disagreement;
    report.vacuous = surrogate.has_value() && surrogate->vacuous;
    report.budget = std::move(budget);
    return report;
}

}  // namespace

CertificateReport certify_target(const BoundResult& surrogate, double disagreement,
                                 const DeltaBudget& budget, std::string inputs_digest) {
    const double delta_s = budget.delta_for("surrogate");
    if (delta_s != surrogate.delta_spent) {
        throw UsageError("certify_target: budget's surrogate share (" + std::to_string(delta_s) +
                         ") differs from the certificate's delta (" +
                         std::to_string(surrogate.delta_spent) + ")");
    }
    budget.delta_for("disagreement");
    return assemble(surrogate, disagreement, budget, UseCase::certify_target,
                    std::move(inputs_digest));
}

CertificateReport certify_uniform(const std::string& surrogate_id, const SurrogatePrior& prior,
                                  const BoundResult& surrogate,
                                  const std::function<double(Confidence)>& disagreement_at,
                                  const DeltaBudget& budget, std::string inputs_digest) {
    prior.validate();
    const double mass = prior.mass_of(surrogate_id);
    const double delta_u = budget.delta_for("disagreement");
    const double disagreement = disagreement_at(Confidence(delta_u * mass));
    auto report = certify_target(surrogate, disagreement, budget, std::move(inputs_digest));
    report.use_case = UseCase::certify_uniform;
    return report;
}

CertificateReport risk_gap(double disagreement, const DeltaBudget& budget,
                           std::string inputs_digest) {
    budget.delta_for("disagreement");
    return assemble(std::nullopt, disagreement, budget, UseCase::risk_gap,
                    std::move(inputs_digest));
}

CertificateReport pacbayes_mc_certificate(std::span<const PredictionRecord> train_records,
                                          std::span<const PredictionRecord> disagree_records,
                                          const LossSpec& spec, double kl_qp,
                                          SampleRange risk_samples, SampleRange dl_samples,
                                          Confidence delta_each, std::string inputs_digest) {
    if (risk_samples.end > dl_samples.begin && dl_samples.end > risk_samples.begin) {
        throw UsageError("pacbayes_mc_certificate: risk and disagreement sample ranges overlap");
    }
    const auto risks =
        per_sample_risk_h(train_records, spec, risk_samples.begin, risk_samples.end);
    const auto dls = per_sample_loss_disagreement(disagree_records, spec, dl_samples.begin,
                                                  dl_samples.end);
    PACBayesMeta meta(kl_qp, static_cast<std::int64_t>(train_records.size()), risks);
    auto surrogate = pacbayes_double_kl(meta, spec, delta_each, delta_each);
    const double disagreement =
        disagree_pacbayes_mc(dls, spec, static_cast<std::int64_t>(disagree_records.size()),
                             delta_each, delta_each);

    DeltaBudget budget;
    budget.allocation = {{"surrogate", surrogate.delta_spent},
                         {"disagreement_inner", delta_each.delta},
                         {"disagreement_outer", delta_each.delta}};
    budget.validate();
    CertificateReport report;
    report.surrogate_bound = std::move(surrogate);
    report.disagreement_term = disagreement;
    report.use_case = UseCase::certify_target;
    report.inputs_digest = std::move(inputs_digest);
    report.target_bound = report.surrogate_bound->risk_bound + disagreement;
    report.vacuous = report.surrogate_bound->vacuous;
    report.budget = std::move(budget);
    return report;
}

}  // namespace riskcert
