#include "riskcert/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "riskcert/errors.hpp"
#include "riskcert/rng.hpp"

namespace riskcert {

namespace {

constexpr double kVacuousSlack = 1e-12;

// ln(6 / pi^2), the Occam series normalizer of the (m_tilde + 1)^-2 prior.
const double kLogSixOverPiSq = std::log(6.0) - 2.0 * std::log(M_PI);

std::int64_t count_from_rate(double rate, std::int64_t m, const char* what) {
    const double scaled = rate * static_cast<double>(m);
    const auto k = static_cast<std::int64_t>(std::llround(scaled));
    if (std::abs(scaled - static_cast<double>(k)) > 1e-6 || k < 0 || k > m) {
        throw DataError(std::string(what) + ": rate " + std::to_string(rate) +
                        " is not a zero-one count over m=" + std::to_string(m));
    }
    return k;
}

double normalized(double loss, const LossSpec& spec, const char* what) {
    if (!(loss >= spec.b_lower - 1e-9 && loss <= spec.t_upper + 1e-9)) {
        throw DataError(std::string(what) + ": loss " + std::to_string(loss) +
                        " outside [B, T] = [" + std::to_string(spec.b_lower) + ", " +
                        std::to_string(spec.t_upper) + "]");
    }
    if (spec.lambda == 0.0) return 0.0;
    return std::clamp((loss - spec.b_lower) / spec.lambda, 0.0, 1.0);
}

// Shared assembly for every bound of the form B + lambda * kl_inverse(q, eps).
BoundResult finish_kl_bound(double q, double eps, const LossSpec& spec, double delta_spent,
                            std::vector<std::pair<std::string, double>> terms) {
    const double inv = kl_inverse(q, eps);
    BoundResult res;
    res.delta_spent = delta_spent;
    res.risk_bound = spec.b_lower + spec.lambda * inv;
    if (inv >= 1.0 - 1e-9) {
        res.risk_bound = spec.t_upper;  // inversion hit its ceiling
        res.vacuous = true;
    }
    res.vacuous = res.vacuous || res.risk_bound >= spec.t_upper - kVacuousSlack;
    terms.emplace_back("kl_epsilon", eps);
    terms.emplace_back("normalized_empirical", q);
    res.terms = std::move(terms);
    return res;
}

BoundResult finish_binomial_bound(const EmpiricalCount& count, double log_delta_prime,
                                  double delta_spent,
                                  std::vector<std::pair<std::string, double>> terms) {
    BoundResult res;
    res.delta_spent = delta_spent;
    res.risk_bound = binom_tail_inverse_log(count, log_delta_prime);
    res.vacuous = res.risk_bound >= 1.0 - kVacuousSlack;
    if (res.vacuous) res.risk_bound = 1.0;
    terms.emplace_back("empirical", count.rate());
    terms.emplace_back("log_delta_prime", log_delta_prime);
    res.terms = std::move(terms);
    return res;
}

}  // namespace

double BoundResult::term(const std::string& name) const {
    for (const auto& [key, value] : terms) {
        if (key == name) return value;
    }
    throw UsageError("BoundResult: no term named '" + name + "'");
}

CompressionMeta::CompressionMeta(std::int64_t n_, std::int64_t m_tilde_, double complement_risk_)
    : n(n_), m_tilde(m_tilde_), complement_size(n_ - m_tilde_), complement_risk(complement_risk_) {
    if (n < 1) throw DataError("CompressionMeta: n must be >= 1");
    if (m_tilde < 0 || m_tilde > n) throw DataError("CompressionMeta: need 0 <= m_tilde <= n");
    if (complement_size <= 0) throw DataError("CompressionMeta: complement must be nonempty");
}

CodeLengthMeta::CodeLengthMeta(std::int64_t code_bits_, std::int64_t n_, double train_risk_)
    : code_bits(code_bits_), n(n_), train_risk(train_risk_) {
    if (code_bits < 1) throw DataError("CodeLengthMeta: code_bits must be >= 1");
    if (n < 1) throw DataError("CodeLengthMeta: n must be >= 1");
}

PACBayesMeta::PACBayesMeta(double kl_qp_, std::int64_t n_, std::vector<double> sampled_risks_)
    : kl_qp(kl_qp_), n(n_), v_samples(static_cast<int>(sampled_risks_.size())),
      sampled_risks(std::move(sampled_risks_)) {
    if (kl_qp < 0.0) throw DataError("PACBayesMeta: KL(Q||P) must be >= 0");
    if (n < 1) throw DataError("PACBayesMeta: n must be >= 1");
    if (sampled_risks.empty()) throw DataError("PACBayesMeta: needs at least one sampled risk");
}

double PACBayesMeta::mean_risk() const {
    return std::accumulate(sampled_risks.begin(), sampled_risks.end(), 0.0) /
           static_cast<double>(sampled_risks.size());
}

PartitionParams::PartitionParams(std::int64_t subsets_, std::vector<std::int64_t> counts_,
                                 double alpha_p_, double gamma_p_, double t_upper_,
                                 double train_risk_)
    : subsets(subsets_), counts(std::move(counts_)), alpha_p(alpha_p_), gamma_p(gamma_p_),
      t_upper(t_upper_), train_risk(train_risk_) {
    if (subsets < 1) throw DataError("PartitionParams: K must be >= 1");
    if (static_cast<std::int64_t>(counts.size()) != subsets) {
        throw DataError("PartitionParams: counts must have K entries");
    }
    for (std::int64_t c : counts) {
        if (c < 0) throw DataError("PartitionParams: counts must be nonnegative");
        if (c > 0) ++t_occupied;
    }
    if (total_count() < 1) throw DataError("PartitionParams: total sample count must be >= 1");
    if (t_occupied < 1) throw DataError("PartitionParams: at least one occupied subset required");
    if (gamma_p < 1.0) throw DataError("PartitionParams: gamma must be >= 1");
    if (alpha_p < 0.0) throw std::domain_error("PartitionParams: alpha must be >= 0");
}

std::int64_t PartitionParams::total_count() const {
    return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

BoundResult test_set_binomial(const EmpiricalCount& errors, Confidence conf) {
    return finish_binomial_bound(errors, std::log(conf.delta), conf.delta, {});
}

BoundResult test_set_chernoff(double mean_loss, const LossSpec& spec, std::int64_t m,
                              Confidence conf) {
    if (m < 1) throw DataError("test_set_chernoff: m must be >= 1");
    const double q = normalized(mean_loss, spec, "test_set_chernoff");
    const double eps = std::log(1.0 / conf.delta) / static_cast<double>(m);
    return finish_kl_bound(q, eps, spec, conf.delta, {{"mean_loss", mean_loss}});
}

BoundResult sc_binomial(const CompressionMeta& meta, Confidence conf) {
    const std::int64_t k =
        count_from_rate(meta.complement_risk, meta.complement_size, "sc_binomial");
    // delta' = delta * (6/pi^2) (m_tilde+1)^-2 / C(n, m_tilde), kept in logs.
    const double log_delta_prime = std::log(conf.delta) + kLogSixOverPiSq -
                                   2.0 * std::log(static_cast<double>(meta.m_tilde) + 1.0) -
                                   log_binom_coef(meta.n, meta.m_tilde);
    return finish_binomial_bound(EmpiricalCount(k, meta.complement_size), log_delta_prime,
                                 conf.delta, {{"m_tilde", static_cast<double>(meta.m_tilde)}});
}

BoundResult sc_kl(const CompressionMeta& meta, const LossSpec& spec, Confidence conf) {
    const double q = normalized(meta.complement_risk, spec, "sc_kl");
    const auto ic = static_cast<double>(meta.complement_size);
    const double eps = (log_binom_coef(meta.n, meta.m_tilde) + std::log(2.0 * std::sqrt(ic)) -
                        kLogSixOverPiSq + 2.0 * std::log(static_cast<double>(meta.m_tilde) + 1.0) -
                        std::log(conf.delta)) /
                       ic;
    return finish_kl_bound(q, eps, spec, conf.delta,
                           {{"m_tilde", static_cast<double>(meta.m_tilde)}});
}

BoundResult sc_sqrt(const CompressionMeta& meta, const LossSpec& spec, Confidence conf) {
    if (!(meta.complement_risk >= spec.b_lower - 1e-9 &&
          meta.complement_risk <= spec.t_upper + 1e-9)) {
        throw DataError("sc_sqrt: complement risk outside [B, T]");
    }
    const auto ic = static_cast<double>(meta.complement_size);
    const double log_pn = kLogSixOverPiSq -
                          2.0 * std::log(static_cast<double>(meta.m_tilde) + 1.0) -
                          log_binom_coef(meta.n, meta.m_tilde);
    const double penalty = std::sqrt(spec.lambda * spec.lambda / (2.0 * ic) *
                                     (std::log(2.0 * std::sqrt(ic)) - log_pn -
                                      std::log(conf.delta)));
    BoundResult res;
    res.risk_bound = meta.complement_risk + penalty;
    res.delta_spent = conf.delta;
    res.vacuous = res.risk_bound >= spec.t_upper - kVacuousSlack;
    res.terms = {{"empirical", meta.complement_risk}, {"penalty", penalty}};
    return res;
}

BoundResult p2l_bound(std::int64_t compression_size, std::int64_t complement_errors,
                      std::int64_t n, Confidence conf) {
    if (compression_size < 0 || complement_errors < 0) {
        throw DataError("p2l_bound: counts must be nonnegative");
    }
    const std::int64_t k = compression_size + complement_errors;
    if (k > n) throw DataError("p2l_bound: M + complement errors exceeds n");
    BoundResult res;
    res.risk_bound = p2l_epsilon(k, n, conf);
    res.delta_spent = conf.delta;
    res.vacuous = res.risk_bound >= 1.0 - kVacuousSlack;
    res.terms = {{"compression_size", static_cast<double>(compression_size)},
                 {"complement_errors", static_cast<double>(complement_errors)}};
    return res;
}

BoundResult mc_binomial(const CodeLengthMeta& meta, Confidence conf) {
    const std::int64_t k = count_from_rate(meta.train_risk, meta.n, "mc_binomial");
    // delta' = delta * 2^-l * l^-2, kept in logs.
    const auto bits = static_cast<double>(meta.code_bits);
    const double log_delta_prime =
        std::log(conf.delta) - bits * std::log(2.0) - 2.0 * std::log(bits);
    return finish_binomial_bound(EmpiricalCount(k, meta.n), log_delta_prime, conf.delta,
                                 {{"code_bits", bits}});
}

BoundResult mc_kl(const CodeLengthMeta& meta, const LossSpec& spec, Confidence conf) {
    const double q = normalized(meta.train_risk, spec, "mc_kl");
    const auto bits = static_cast<double>(meta.code_bits);
    const auto n = static_cast<double>(meta.n);
    const double eps =
        (bits * std::log(2.0) + 2.0 * std::log(bits) + std::log(2.0 * std::sqrt(n) / conf.delta)) /
        n;
    return finish_kl_bound(q, eps, spec, conf.delta, {{"code_bits", bits}});
}

BoundResult pacbayes_mcallester(const PACBayesMeta& meta, const LossSpec& spec, Confidence conf) {
    const double mean = meta.mean_risk();
    if (!(mean >= spec.b_lower - 1e-9 && mean <= spec.t_upper + 1e-9)) {
        throw DataError("pacbayes_mcallester: expected loss outside [B, T]");
    }
    const auto n = static_cast<double>(meta.n);
    const double penalty =
        spec.lambda *
        std::sqrt((meta.kl_qp + std::log(2.0 * std::sqrt(n) / conf.delta)) / (2.0 * n));
    BoundResult res;
    res.risk_bound = mean + penalty;
    res.delta_spent = conf.delta;
    res.vacuous = res.risk_bound >= spec.t_upper - kVacuousSlack;
    res.terms = {{"empirical", mean}, {"penalty", penalty}, {"kl_qp", meta.kl_qp}};
    return res;
}

BoundResult pacbayes_double_kl(const PACBayesMeta& meta, const LossSpec& spec, Confidence conf,
                               Confidence conf_prime) {
    double q = 0.0;
    for (double risk : meta.sampled_risks) {
        q += normalized(risk, spec, "pacbayes_double_kl");
    }
    q /= static_cast<double>(meta.v_samples);
    const double eps_inner =
        std::log(2.0 / conf_prime.delta) / static_cast<double>(meta.v_samples);
    const double inner = kl_inverse(q, eps_inner);
    const auto n = static_cast<double>(meta.n);
    const double eps_outer = (meta.kl_qp + std::log(2.0 * std::sqrt(n) / conf.delta)) / n;
    auto res = finish_kl_bound(inner, eps_outer, spec, conf.delta + conf_prime.delta,
                               {{"inner_kl_inverse", inner}, {"inner_epsilon", eps_inner}});
    return res;
}

double partition_gamma(double alpha_p, Confidence conf) {
    if (!(alpha_p > 0.0)) throw std::domain_error("partition_gamma: alpha must be > 0");
    // gamma = (delta/2)^(-1/alpha), so gamma^-alpha spends exactly delta/2.
    return std::exp(std::log(2.0 / conf.delta) / alpha_p);
}

BoundResult partition_bound(const PartitionParams& params, Confidence conf) {
    const auto n = static_cast<double>(params.total_count());
    const auto subsets = static_cast<double>(params.subsets);
    const double gamma = params.gamma_p;
    const double alpha_max = gamma * n * (subsets + gamma * n) / (subsets * (4.0 * n - 3.0));
    if (params.alpha_p > alpha_max) {
        throw std::domain_error("partition_bound: alpha " + std::to_string(params.alpha_p) +
                                " exceeds admissible maximum " + std::to_string(alpha_max));
    }

    double sum_sq = 0.0;
    for (std::int64_t c : params.counts) {
        const double frac = static_cast<double>(c) / n;
        sum_sq += frac * frac;
    }
    const auto occupied = static_cast<double>(params.t_occupied);
    const double delta = conf.delta;
    const double t_upper = params.t_upper;

    const double term1 = t_upper * std::sqrt(params.alpha_p * std::log(gamma)) *
                         std::sqrt(gamma / (2.0 * n) + gamma * gamma / 2.0 * sum_sq +
                                   gamma * gamma *
                                       std::sqrt(2.0 / n * std::log(2.0 * subsets / delta)));
    const double term2 = t_upper * (std::sqrt(2.0) + 1.0) *
                         std::sqrt(occupied * std::log(4.0 * subsets / delta) / n);
    const double term3 = 2.0 * t_upper * occupied * std::log(4.0 * subsets / delta) / n;

    BoundResult res;
    res.risk_bound = params.train_risk + term1 + term2 + term3;
    const double spent = std::pow(gamma, -params.alpha_p) + delta;
    res.delta_spent = std::min(1.0, spent);
    res.vacuous = res.risk_bound >= params.t_upper - kVacuousSlack || spent >= 1.0;
    res.terms = {{"empirical", params.train_risk},
                 {"partition_term", term1},
                 {"occupancy_sqrt_term", term2},
                 {"occupancy_linear_term", term3},
                 {"gamma", gamma}};
    return res;
}

BoundResult partition_grid_search(const std::vector<PartitionCandidate>& candidates,
                                  double t_upper, double train_risk, Confidence conf) {
    if (candidates.empty()) throw DataError("partition_grid_search: empty candidate list");
    const double delta_each = conf.delta / static_cast<double>(candidates.size());
    BoundResult best;
    std::size_t best_index = 0;
    bool first = true;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& cand = candidates[i];
        const double gamma = partition_gamma(cand.alpha_p, Confidence(delta_each));
        PartitionParams params(cand.subsets, cand.counts, cand.alpha_p, gamma, t_upper,
                               train_risk);
        auto res = partition_bound(params, Confidence(delta_each / 2.0));
        if (first || res.risk_bound < best.risk_bound) {
            best = std::move(res);
            best_index = i;
            first = false;
        }
    }
    best.delta_spent = conf.delta;
    best.terms.emplace_back("chosen_candidate", static_cast<double>(best_index));
    return best;
}

PartitionAssignment random_partition_assign(const std::vector<std::vector<double>>& features,
                                            std::int64_t subsets, std::uint64_t seed) {
    if (subsets < 1) throw DataError("random_partition_assign: K must be >= 1");
    if (features.empty()) throw DataError("random_partition_assign: empty feature set");
    const std::size_t dim = features.front().size();
    for (const auto& f : features) {
        if (f.size() != dim) throw DataError("random_partition_assign: ragged feature vectors");
    }

    std::vector<double> lo(dim, std::numeric_limits<double>::infinity());
    std::vector<double> hi(dim, -std::numeric_limits<double>::infinity());
    for (const auto& f : features) {
        for (std::size_t d = 0; d < dim; ++d) {
            lo[d] = std::min(lo[d], f[d]);
            hi[d] = std::max(hi[d], f[d]);
        }
    }

    RngStream rng(seed);
    std::vector<std::vector<double>> centroids(static_cast<std::size_t>(subsets));
    for (auto& c : centroids) {
        c.resize(dim);
        for (std::size_t d = 0; d < dim; ++d) c[d] = lo[d] + (hi[d] - lo[d]) * rng.next_unit();
    }

    PartitionAssignment out;
    out.counts.assign(static_cast<std::size_t>(subsets), 0);
    for (const auto& f : features) {
        std::size_t best = 0;
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < centroids.size(); ++c) {
            double dist = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
                const double diff = f[d] - centroids[c][d];
                dist += diff * diff;
            }
            if (dist < best_dist) {  // strict: ties keep the lowest index
                best_dist = dist;
                best = c;
            }
        }
        ++out.counts[best];
    }
    for (std::int64_t c : out.counts) {
        if (c > 0) ++out.t_occupied;
    }
    return out;
}

BoundResult norm_bound(const NormBoundInputs& inputs, Confidence conf) {
    if (inputs.depth < 1) throw DataError("norm_bound: depth must be >= 1");
    if (inputs.rho < 0.0 || inputs.margin_risk < 0.0 || inputs.sq_pixel_norm_sum < 0.0) {
        throw DataError("norm_bound: inputs must be nonnegative");
    }
    if (!(inputs.gamma_margin > 0.0)) throw DataError("norm_bound: margin gamma must be > 0");
    if (static_cast<int>(inputs.pred_counts.size()) < inputs.depth - 1) {
        throw DataError("norm_bound: need a predecessor count per layer 1..L-1");
    }
    double log_pred_sum = 0.0;   // sum of ln max|pred(l, .)|
    double log_pred_prod = 0.0;  // ln of the max path product
    for (int l = 0; l < inputs.depth - 1; ++l) {
        const double p = inputs.pred_counts[static_cast<std::size_t>(l)];
        if (!(p >= 1.0)) throw DataError("norm_bound: predecessor counts must be >= 1");
        log_pred_sum += std::log(p);
        log_pred_prod += std::log(p);
    }
    const double inner = 2.0 * (static_cast<double>(inputs.depth) * std::log(2.0) + log_pred_sum +
                                std::log(static_cast<double>(inputs.num_classes)));
    // Path products reach ~10^60 at conv-net scale, so the square root is
    // assembled in log space.
    const double capacity =
        (1.0 + std::sqrt(inner)) *
        std::exp(0.5 * (log_pred_prod + std::log(std::max(inputs.sq_pixel_norm_sum,
                                                          std::numeric_limits<double>::min()))));
    const auto n = static_cast<double>(inputs.n);
    const double term1 =
        2.0 * std::sqrt(2.0) * (inputs.rho + 1.0) / (inputs.gamma_margin * n) * capacity;
    const double term2 =
        3.0 * std::sqrt(std::log(2.0 * (inputs.rho + 2.0) * (inputs.rho + 2.0) / conf.delta) /
                        (2.0 * n));
    BoundResult res;
    res.risk_bound = inputs.margin_risk + term1 + term2;
    res.delta_spent = conf.delta;
    res.vacuous = res.risk_bound >= 1.0 - kVacuousSlack;
    res.terms = {{"empirical", inputs.margin_risk},
                 {"capacity_term", term1},
                 {"concentration_term", term2}};
    return res;
}

}  // namespace riskcert
