#include "riskcert/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <thread>

#include "riskcert/bounds.hpp"
#include "riskcert/certify.hpp"
#include "riskcert/errors.hpp"
#include "riskcert/format.hpp"
#include "riskcert/rng.hpp"

namespace riskcert {

namespace {

double sample_mean_disagreement(RngStream& rng, const SyntheticWorld& world, std::int64_t m) {
    double total = 0.0;
    for (std::int64_t i = 0; i < m; ++i) {
        total += world.scale * rng.beta(world.beta_a, world.beta_b);
    }
    return total / static_cast<double>(m);
}

void require_kind(const SyntheticWorld& world, SyntheticWorld::Kind kind, const char* bound_id) {
    if (world.kind != kind) {
        throw UsageError(std::string(bound_id) + ": world kind does not match the bound");
    }
}

}  // namespace

SyntheticWorld SyntheticWorld::bernoulli(double p_f, double p_h, double p_disagree) {
    for (double v : {p_f, p_h, p_disagree}) {
        if (!(v >= 0.0 && v <= 1.0)) throw DataError("SyntheticWorld: rates must lie in [0,1]");
    }
    if (std::abs(p_f - p_h) > p_disagree + 1e-12) {
        throw DataError("SyntheticWorld: |p_f - p_h| must not exceed p_disagree");
    }
    SyntheticWorld w;
    w.kind = Kind::bernoulli_pair;
    w.p_f = p_f;
    w.p_h = p_h;
    w.p_disagree = p_disagree;
    return w;
}

SyntheticWorld SyntheticWorld::bounded(double loss_f, double loss_h, double beta_a, double beta_b,
                                       double scale, double gap_cap) {
    if (!(beta_a > 0.0 && beta_b > 0.0)) throw DataError("SyntheticWorld: Beta shapes must be > 0");
    if (!(scale > 0.0)) throw DataError("SyntheticWorld: scale must be > 0");
    if (std::abs(loss_f - loss_h) > gap_cap + 1e-12) {
        throw DataError("SyntheticWorld: |loss_f - loss_h| exceeds the admissible gap");
    }
    SyntheticWorld w;
    w.kind = Kind::bounded_loss_pair;
    w.loss_f = loss_f;
    w.loss_h = loss_h;
    w.beta_a = beta_a;
    w.beta_b = beta_b;
    w.scale = scale;
    return w;
}

double SyntheticWorld::mean_disagreement() const {
    return kind == Kind::bernoulli_pair ? p_disagree : scale * beta_a / (beta_a + beta_b);
}

const std::vector<std::string>& coverage_bound_ids() {
    static const std::vector<std::string> ids = {
        "thm4",        "thm5",  "thm6",        "test_binomial", "sc_binomial",
        "sc_kl",       "sc_sqrt", "p2l",       "mc_binomial",   "mc_kl",
        "pb_mcallester", "pb_double_kl", "pb_mc_disagreement"};
    return ids;
}

SyntheticWorld default_world(const std::string& bound_id) {
    if (bound_id == "thm4") return SyntheticWorld::bernoulli(0.15, 0.10, 0.08);
    if (bound_id == "thm5") {
        // Softmax-distance law 2*Beta(2,23): mean 0.16, cap K*0.16 = 0.032.
        return SyntheticWorld::bounded(0.10, 0.08, 2.0, 23.0, 2.0, 0.2 * 0.16);
    }
    if (bound_id == "thm6") {
        // Loss-gap law Beta(1,9) on a unit-range loss: mean 0.1.
        return SyntheticWorld::bounded(0.35, 0.30, 1.0, 9.0, 1.0, 0.1);
    }
    if (bound_id == "pb_mc_disagreement") return SyntheticWorld::bernoulli(0.12, 0.10, 0.05);
    for (const auto& id : coverage_bound_ids()) {
        if (bound_id == id) return SyntheticWorld::bernoulli(0.10, 0.10, 0.0);
    }
    throw UsageError("unknown coverage bound id '" + bound_id + "'");
}

CoverageResult run_coverage(const std::string& bound_id, const SyntheticWorld& world,
                            const CoverageConfig& config, Confidence conf) {
    if (config.trials < 1) throw DataError("run_coverage: trials must be >= 1");
    if (config.m < 1) throw DataError("run_coverage: m must be >= 1");

    const double delta = conf.delta;
    const std::int64_t m = config.m;
    const LossSpec zero_one = LossSpec::zero_one(2);

    // Each trial resamples a fresh dataset and checks the bound's
    // inequality against the world's known true quantities.
    std::function<bool(RngStream&)> violated;

    if (bound_id == "thm4") {
        require_kind(world, SyntheticWorld::Kind::bernoulli_pair, "thm4");
        violated = [=](RngStream& rng) {
            const std::int64_t k = rng.binomial(m, world.p_disagree);
            const double d = disagree_01(EmpiricalCount(k, m), Confidence(delta));
            return world.p_f > world.p_h + d;
        };
    } else if (bound_id == "thm5") {
        require_kind(world, SyntheticWorld::Kind::bounded_loss_pair, "thm5");
        if (world.scale > 2.0) throw DataError("thm5: softmax L1 distances live in [0,2]");
        const double k_ell = config.k_ell;
        violated = [=](RngStream& rng) {
            const double dk = sample_mean_disagreement(rng, world, m);
            const double d = disagree_lipschitz(dk, k_ell, m, Confidence(delta));
            return world.loss_f > world.loss_h + d;
        };
    } else if (bound_id == "thm6") {
        require_kind(world, SyntheticWorld::Kind::bounded_loss_pair, "thm6");
        LossSpec spec = zero_one;
        spec.t_upper = world.scale;
        spec.lambda = world.scale;
        violated = [=](RngStream& rng) {
            const double dl = sample_mean_disagreement(rng, world, m);
            const double d = disagree_loss(dl, spec, m, Confidence(delta));
            return world.loss_f > world.loss_h + d;
        };
    } else if (bound_id == "test_binomial") {
        violated = [=](RngStream& rng) {
            const std::int64_t k = rng.binomial(m, world.p_f);
            const auto res = test_set_binomial(EmpiricalCount(k, m), Confidence(delta));
            return world.p_f > res.risk_bound;
        };
    } else if (bound_id == "sc_binomial") {
        const std::int64_t m_tilde = config.m_tilde;
        if (m_tilde >= m) throw DataError("sc_binomial: m_tilde must be below m");
        violated = [=](RngStream& rng) {
            const std::int64_t ic = m - m_tilde;
            const std::int64_t k = rng.binomial(ic, world.p_f);
            CompressionMeta meta(m, m_tilde,
                                 static_cast<double>(k) / static_cast<double>(ic));
            return world.p_f > sc_binomial(meta, Confidence(delta)).risk_bound;
        };
    } else if (bound_id == "sc_kl" || bound_id == "sc_sqrt") {
        const std::int64_t m_tilde = config.m_tilde;
        if (m_tilde >= m) throw DataError(bound_id + ": m_tilde must be below m");
        const bool sqrt_form = bound_id == "sc_sqrt";
        violated = [=](RngStream& rng) {
            const std::int64_t ic = m - m_tilde;
            const std::int64_t k = rng.binomial(ic, world.p_f);
            CompressionMeta meta(m, m_tilde, static_cast<double>(k) / static_cast<double>(ic));
            const auto res = sqrt_form ? sc_sqrt(meta, zero_one, Confidence(delta))
                                       : sc_kl(meta, zero_one, Confidence(delta));
            return world.p_f > res.risk_bound;
        };
    } else if (bound_id == "p2l") {
        const std::int64_t compression = config.m_tilde;
        if (compression >= m) throw DataError("p2l: compression size must be below m");
        violated = [=](RngStream& rng) {
            const std::int64_t errors = rng.binomial(m - compression, world.p_f);
            return world.p_f > p2l_bound(compression, errors, m, Confidence(delta)).risk_bound;
        };
    } else if (bound_id == "mc_binomial" || bound_id == "mc_kl") {
        const std::int64_t bits = config.code_bits;
        const bool kl_form = bound_id == "mc_kl";
        violated = [=](RngStream& rng) {
            const std::int64_t k = rng.binomial(m, world.p_f);
            CodeLengthMeta meta(bits, m, static_cast<double>(k) / static_cast<double>(m));
            const auto res = kl_form ? mc_kl(meta, zero_one, Confidence(delta))
                                     : mc_binomial(meta, Confidence(delta));
            return world.p_f > res.risk_bound;
        };
    } else if (bound_id == "pb_mcallester") {
        const double kl_qp = config.kl_qp;
        violated = [=](RngStream& rng) {
            const std::int64_t k = rng.binomial(m, world.p_f);
            PACBayesMeta meta(kl_qp, m, {static_cast<double>(k) / static_cast<double>(m)});
            return world.p_f > pacbayes_mcallester(meta, zero_one, Confidence(delta)).risk_bound;
        };
    } else if (bound_id == "pb_double_kl") {
        const int v = config.v_samples;
        const double kl_qp = config.kl_qp;
        violated = [=](RngStream& rng) {
            std::vector<double> risks(static_cast<std::size_t>(v));
            for (auto& r : risks) {
                r = static_cast<double>(rng.binomial(m, world.p_f)) / static_cast<double>(m);
            }
            PACBayesMeta meta(kl_qp, m, std::move(risks));
            const auto res = pacbayes_double_kl(meta, zero_one, Confidence(delta / 2.0),
                                                Confidence(delta / 2.0));
            return world.p_f > res.risk_bound;
        };
    } else if (bound_id == "pb_mc_disagreement") {
        require_kind(world, SyntheticWorld::Kind::bernoulli_pair, "pb_mc_disagreement");
        const int v = config.v_samples;
        const double kl_qp = config.kl_qp;
        const double delta_each = delta / 4.0;
        violated = [=](RngStream& rng) {
            std::vector<double> risks(static_cast<std::size_t>(v));
            for (auto& r : risks) {
                r = static_cast<double>(rng.binomial(m, world.p_h)) / static_cast<double>(m);
            }
            std::vector<double> dls(static_cast<std::size_t>(v));
            for (auto& d : dls) {
                d = static_cast<double>(rng.binomial(m, world.p_disagree)) /
                    static_cast<double>(m);
            }
            PACBayesMeta meta(kl_qp, m, std::move(risks));
            const auto surrogate = pacbayes_double_kl(meta, zero_one, Confidence(delta_each),
                                                      Confidence(delta_each));
            const double d = disagree_pacbayes_mc(dls, zero_one, m, Confidence(delta_each),
                                                  Confidence(delta_each));
            return world.p_f > surrogate.risk_bound + d;
        };
    } else {
        throw UsageError("unknown coverage bound id '" + bound_id + "'");
    }

    const int threads = std::max(1, config.threads);
    std::vector<std::int64_t> violation_chunks(static_cast<std::size_t>(threads), 0);
    auto worker = [&](int t) {
        std::int64_t local = 0;
        for (std::int64_t i = t; i < config.trials; i += threads) {
            RngStream rng(config.seed, static_cast<std::uint64_t>(i));
            if (violated(rng)) ++local;
        }
        violation_chunks[static_cast<std::size_t>(t)] = local;
    };
    if (threads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
        for (auto& th : pool) th.join();
    }

    CoverageResult result;
    result.trials = config.trials;
    for (std::int64_t c : violation_chunks) result.violations += c;
    result.empirical_coverage =
        1.0 - static_cast<double>(result.violations) / static_cast<double>(result.trials);
    result.target = 1.0 - delta;
    const double sigma = std::sqrt(delta * (1.0 - delta) / static_cast<double>(result.trials));
    result.pass = result.empirical_coverage >= result.target - 3.0 * sigma;
    return result;
}

double exact_coverage_test_binomial(std::int64_t m, double p, Confidence conf) {
    // Bound(k) is non-decreasing in k, so the uncovered region is an initial
    // segment of counts; sum its binomial mass directly.
    std::int64_t k_star = 0;
    while (k_star <= m &&
           binom_tail_inverse(EmpiricalCount(k_star, m), conf) < p) {
        ++k_star;
    }
    if (k_star == 0) return 1.0;
    return 1.0 - binom_cdf(EmpiricalCount(k_star - 1, m), p);
}

std::string coverage_csv(const std::string& bound_id, const CoverageConfig& config,
                         Confidence conf, const CoverageResult& result) {
    std::ostringstream out;
    out << "bound,m,delta,trials,seed,violations,empirical_coverage,target,pass\n";
    out << bound_id << ',' << config.m << ',' << format_double(conf.delta) << ','
        << result.trials << ',' << config.seed << ',' << result.violations << ','
        << format_double(result.empirical_coverage) << ',' << format_double(result.target) << ','
        << (result.pass ? 1 : 0) << '\n';
    return out.str();
}

}  // namespace riskcert
