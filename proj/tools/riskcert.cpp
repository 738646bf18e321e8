#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "riskcert/bound_eval.hpp"
#include "riskcert/bounds.hpp"
#include "riskcert/certify.hpp"
#include "riskcert/errors.hpp"
#include "riskcert/ingest.hpp"
#include "riskcert/invert.hpp"
#include "riskcert/losses.hpp"
#include "riskcert/simulate.hpp"

namespace {

using nlohmann::json;
using namespace riskcert;

std::uint64_t default_seed() {
    if (const char* env = std::getenv("RISKCERT_SEED")) {
        return std::strtoull(env, nullptr, 10);
    }
    return 1;
}

void write_output(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write output file '" + path + "'");
    out << text;
    std::cout << path << "\n";
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open JSON file '" + path + "'");
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw DataError("malformed JSON in '" + path + "'");
    return j;
}

std::string timestamp_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

struct LossFlags {
    std::string name = "xent-smoothed";
    int num_classes = 10;
    double alpha = 1e-3;
    double delta_h = 0.2;

    void attach(CLI::App* cmd) {
        cmd->add_option("--loss", name, "Loss: 01, xent-smoothed, xent-clamped, huber")
            ->check(CLI::IsMember({"01", "xent-smoothed", "xent-clamped", "huber"}));
        cmd->add_option("--classes", num_classes, "Number of classes C");
        cmd->add_option("--alpha", alpha, "Softmax clamp/smooth parameter");
        cmd->add_option("--delta-h", delta_h, "Huber threshold");
    }
    LossSpec spec() const { return loss_from_name(name, num_classes, alpha, delta_h); }
};

int run_invert(const std::string& kind, std::int64_t k, std::int64_t m, std::int64_t n, double q,
               double eps, double delta, double c) {
    double value = 0.0;
    if (kind == "bin") {
        value = binom_tail_inverse(EmpiricalCount(k, m), Confidence(delta));
    } else if (kind == "kl") {
        value = kl_inverse(q, eps);
    } else if (kind == "pinsker") {
        value = pinsker_inverse(q, eps);
    } else if (kind == "catoni") {
        value = catoni_inverse(q, eps, c);
    } else if (kind == "p2l") {
        value = p2l_epsilon(k, n, Confidence(delta));
    } else {
        throw UsageError("unknown inversion kind '" + kind + "'");
    }
    std::printf("%.12g\n", value);
    return 0;
}

// The disagreement statistic and bound term matching the chosen loss:
// argmax counts for zero-one, softmax L1 for Lipschitz losses, absolute
// loss gaps for the rest.
std::pair<double, double> disagreement_for_loss(const ParsedLog& log, const LossSpec& spec,
                                                Confidence conf, int sample_index) {
    if (spec.kind == LossKind::zero_one) {
        auto records = select_split(log.records, 'U');
        if (records.empty()) throw DataError("log declares no U split records");
        const auto count = disagreement_01(records, sample_index == kAllSamples ? 0 : sample_index);
        return {count.rate(), disagree_01(count, conf)};
    }
    if (spec.kind == LossKind::huber) {
        auto records = select_split(log.records, 'U');
        if (records.empty()) throw DataError("log declares no U split records");
        const double dk = disagreement_l1(records, sample_index);
        return {dk, disagree_lipschitz(dk, spec, static_cast<std::int64_t>(records.size()), conf)};
    }
    auto records = select_split(log.records, 'L');
    if (records.empty()) throw DataError("log declares no L split records");
    const double dl = disagreement_loss(records, spec, sample_index);
    return {dl, disagree_loss(dl, spec, static_cast<std::int64_t>(records.size()), conf)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"riskcert: generalization certificates from prediction logs"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read flags from a config file");

    // --- invert ---------------------------------------------------------
    auto* invert_cmd = app.add_subcommand("invert", "Evaluate a tail inversion directly");
    std::string inv_kind = "bin";
    std::int64_t inv_k = 0, inv_m = 1, inv_n = 1;
    double inv_q = 0.0, inv_eps = 0.0, inv_delta = 0.01, inv_c = 1.0;
    invert_cmd->add_option("--kind", inv_kind, "bin, kl, pinsker, catoni or p2l")
        ->check(CLI::IsMember({"bin", "kl", "pinsker", "catoni", "p2l"}));
    invert_cmd->add_option("--k", inv_k, "Success count");
    invert_cmd->add_option("--m", inv_m, "Trial count");
    invert_cmd->add_option("--n", inv_n, "Training size (p2l)");
    invert_cmd->add_option("--q", inv_q, "Empirical mean");
    invert_cmd->add_option("--eps", inv_eps, "Divergence budget");
    invert_cmd->add_option("--delta", inv_delta, "Failure probability");
    invert_cmd->add_option("--c", inv_c, "Catoni parameter");

    // --- bound ----------------------------------------------------------
    auto* bound_cmd = app.add_subcommand("bound", "Evaluate one surrogate bound formula");
    std::string bd_formula, bd_json, bd_risks;
    double bd_delta = 0.01;
    json bd_params = json::object();
    LossFlags bd_loss;
    bound_cmd->add_option("--formula", bd_formula, "One of: test_binomial, test_chernoff, "
                          "sc_binomial, sc_kl, sc_sqrt, p2l, mc_binomial, mc_kl, pb_mcallester, "
                          "pb_double_kl, partition, partition_grid, norm")
        ->required();
    bound_cmd->add_option("--json", bd_json, "JSON file with all formula inputs");
    bound_cmd->add_option("--delta", bd_delta, "Failure probability");
    bd_loss.attach(bound_cmd);
    std::int64_t bd_k = -1, bd_m = -1, bd_n = -1, bd_mtilde = -1, bd_bits = -1, bd_M = -1,
                 bd_errors = -1, bd_depth = -1, bd_K = -1;
    double bd_risk = -1.0, bd_mean = -1.0, bd_kl = -1.0, bd_dprime = -1.0, bd_alpha_p = -1.0,
           bd_gamma_p = -1.0, bd_tupper = -1.0, bd_rho = -1.0, bd_margin = -1.0,
           bd_gamma_margin = -1.0, bd_sq_norm = -1.0;
    bound_cmd->add_option("--k", bd_k, "Error count");
    bound_cmd->add_option("--m", bd_m, "Sample size");
    bound_cmd->add_option("--n", bd_n, "Training size");
    bound_cmd->add_option("--m-tilde", bd_mtilde, "Compression set size");
    bound_cmd->add_option("--code-bits", bd_bits, "Code length in bits");
    bound_cmd->add_option("--compression-size", bd_M, "P2L compression size");
    bound_cmd->add_option("--complement-errors", bd_errors, "P2L complement errors");
    bound_cmd->add_option("--risk", bd_risk, "Empirical risk (train or complement)");
    bound_cmd->add_option("--mean-loss", bd_mean, "Mean test loss");
    bound_cmd->add_option("--kl", bd_kl, "KL(Q||P)");
    bound_cmd->add_option("--risks", bd_risks, "Comma-separated sampled risks");
    bound_cmd->add_option("--delta-prime", bd_dprime, "Second failure probability");
    bound_cmd->add_option("--partition-k", bd_K, "Partition subset count");
    bound_cmd->add_option("--partition-alpha", bd_alpha_p, "Partition alpha");
    bound_cmd->add_option("--partition-gamma", bd_gamma_p, "Partition gamma");
    bound_cmd->add_option("--t-upper", bd_tupper, "Loss ceiling");
    bound_cmd->add_option("--rho", bd_rho, "Weight norm rho");
    bound_cmd->add_option("--margin-risk", bd_margin, "Empirical margin risk");
    bound_cmd->add_option("--gamma-margin", bd_gamma_margin, "Margin parameter");
    bound_cmd->add_option("--depth", bd_depth, "Network depth L");
    bound_cmd->add_option("--sq-pixel-norm-sum", bd_sq_norm, "Sum of squared input norms");

    // --- disagree -------------------------------------------------------
    auto* disagree_cmd = app.add_subcommand("disagree", "Disagreement statistics from a log");
    std::string dg_log, dg_kind = "auto";
    double dg_delta = 0.01;
    int dg_sample = kAllSamples;
    LossFlags dg_loss;
    disagree_cmd->add_option("--log", dg_log, "Prediction log path")->required();
    disagree_cmd->add_option("--kind", dg_kind, "Statistic: auto, 01, l1, loss, labelprob")
        ->check(CLI::IsMember({"auto", "01", "l1", "loss", "labelprob"}));
    disagree_cmd->add_option("--delta", dg_delta, "Failure probability");
    disagree_cmd->add_option("--sample", dg_sample, "Surrogate sample index (-1 for all)");
    dg_loss.attach(disagree_cmd);

    // --- certify --------------------------------------------------------
    auto* certify_cmd = app.add_subcommand("certify", "Assemble a certificate from a log");
    std::string ct_log, ct_use_case = "target", ct_cert, ct_prior, ct_surrogate_id, ct_out,
                ct_format = "json";
    double ct_delta = 0.01;
    bool ct_same_delta = false;
    bool ct_stamp = false;
    LossFlags ct_loss;
    certify_cmd->add_option("--log", ct_log, "Prediction log path")->required();
    certify_cmd->add_option("--delta", ct_delta, "Total failure probability");
    certify_cmd->add_option("--use-case", ct_use_case, "target, uniform or gap")
        ->check(CLI::IsMember({"target", "uniform", "gap"}));
    certify_cmd->add_option("--surrogate-cert", ct_cert, "Surrogate bound JSON file");
    certify_cmd->add_option("--prior", ct_prior, "Prior masses JSON file (uniform use case)");
    certify_cmd->add_option("--surrogate-id", ct_surrogate_id, "Surrogate id within the prior");
    certify_cmd->add_option("--out", ct_out, "Output path (default stdout)");
    certify_cmd->add_option("--format", ct_format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    certify_cmd->add_flag("--same-delta", ct_same_delta,
                          "Spend the surrogate's delta again on the disagreement term");
    certify_cmd->add_flag("--stamp", ct_stamp, "Record a wall-clock timestamp (non-reproducible)");
    ct_loss.attach(certify_cmd);

    // --- simulate -------------------------------------------------------
    auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo coverage experiment");
    std::string sm_bound = "thm4", sm_out;
    CoverageConfig sm_cfg;
    double sm_delta = 0.05;
    double sm_pf = -1.0, sm_ph = -1.0, sm_pd = -1.0;
    simulate_cmd->add_option("--bound", sm_bound,
                             "thm4, thm5, thm6, test_binomial, sc_binomial, sc_kl, sc_sqrt, p2l, "
                             "mc_binomial, mc_kl, pb_mcallester, pb_double_kl, "
                             "pb_mc_disagreement");
    simulate_cmd->add_option("--m", sm_cfg.m, "Per-trial sample size");
    simulate_cmd->add_option("--delta", sm_delta, "Failure probability");
    simulate_cmd->add_option("--trials", sm_cfg.trials, "Trial count");
    auto* seed_opt = simulate_cmd->add_option("--seed", sm_cfg.seed, "Master seed");
    simulate_cmd->add_option("--threads", sm_cfg.threads, "Worker thread count");
    simulate_cmd->add_option("--m-tilde", sm_cfg.m_tilde, "Compression size (sc_binomial)");
    simulate_cmd->add_option("--code-bits", sm_cfg.code_bits, "Code length (mc_binomial)");
    simulate_cmd->add_option("--v-samples", sm_cfg.v_samples, "Posterior sample count");
    simulate_cmd->add_option("--k-ell", sm_cfg.k_ell, "Lipschitz constant (thm5)");
    simulate_cmd->add_option("--kl-qp", sm_cfg.kl_qp, "KL(Q||P) fed to PAC-Bayes rows");
    simulate_cmd->add_option("--pf", sm_pf, "World: true risk of f");
    simulate_cmd->add_option("--ph", sm_ph, "World: true risk of h");
    simulate_cmd->add_option("--pd", sm_pd, "World: true disagreement rate");
    simulate_cmd->add_option("--out", sm_out, "CSV output path (default stdout)");

    // --- compare --------------------------------------------------------
    auto* compare_cmd = app.add_subcommand("compare", "Tabulate bounds over a shared scenario");
    std::string cp_scenario, cp_out;
    double cp_delta = 0.01;
    compare_cmd->add_option("--scenario", cp_scenario, "Scenario JSON file")->required();
    compare_cmd->add_option("--delta", cp_delta, "Failure probability");
    compare_cmd->add_option("--out", cp_out, "CSV output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (invert_cmd->parsed()) {
            return run_invert(inv_kind, inv_k, inv_m, inv_n, inv_q, inv_eps, inv_delta, inv_c);
        }

        if (bound_cmd->parsed()) {
            if (!bd_json.empty()) bd_params = load_json_file(bd_json);
            auto set_int = [&](const char* key, std::int64_t v) {
                if (v >= 0) bd_params[key] = v;
            };
            auto set_num = [&](const char* key, double v) {
                if (v >= 0.0) bd_params[key] = v;
            };
            set_int("k", bd_k);
            set_int("m", bd_m);
            set_int("n", bd_n);
            set_int("m_tilde", bd_mtilde);
            set_int("code_bits", bd_bits);
            set_int("compression_size", bd_M);
            set_int("complement_errors", bd_errors);
            set_int("depth", bd_depth);
            set_int("K", bd_K);
            set_num("complement_risk", bd_risk);
            set_num("train_risk", bd_risk);
            set_num("mean_loss", bd_mean);
            set_num("kl", bd_kl);
            set_num("delta_prime", bd_dprime);
            set_num("alpha", bd_alpha_p);
            set_num("gamma", bd_gamma_p);
            set_num("t_upper", bd_tupper);
            set_num("rho", bd_rho);
            set_num("margin_risk", bd_margin);
            set_num("gamma_margin", bd_gamma_margin);
            set_num("sq_pixel_norm_sum", bd_sq_norm);
            if (!bd_risks.empty()) {
                std::vector<double> risks;
                std::stringstream ss(bd_risks);
                for (std::string item; std::getline(ss, item, ',');) {
                    risks.push_back(std::stod(item));
                }
                bd_params["sampled_risks"] = risks;
            }
            if (!bd_params.contains("loss")) {
                bd_params["loss"] = {{"kind", bd_loss.name},
                                     {"num_classes", bd_loss.num_classes},
                                     {"alpha", bd_loss.alpha},
                                     {"delta_h", bd_loss.delta_h}};
            }
            const auto res = evaluate_bound(bd_formula, bd_params, Confidence(bd_delta));
            json out = {{"formula", bd_formula},
                        {"risk_bound", res.risk_bound},
                        {"delta_spent", res.delta_spent},
                        {"vacuous", res.vacuous}};
            for (const auto& [name, value] : res.terms) out["terms"][name] = value;
            std::cout << out.dump(2) << "\n";
            return 0;
        }

        if (disagree_cmd->parsed()) {
            const auto log = parse_log(dg_log);
            const auto spec = dg_loss.spec();
            const Confidence conf(dg_delta);
            json out = {{"digest", log.digest}, {"delta", dg_delta}};
            if (dg_kind == "auto") {
                const auto [stat, term] = disagreement_for_loss(log, spec, conf, dg_sample);
                out["statistic"] = stat;
                out["bound_term"] = term;
            } else if (dg_kind == "01") {
                auto records = select_split(log.records, 'U');
                if (records.empty()) throw DataError("log declares no U split records");
                const auto count =
                    disagreement_01(records, dg_sample == kAllSamples ? 0 : dg_sample);
                out["statistic"] = count.rate();
                out["bound_term"] = disagree_01(count, conf);
            } else if (dg_kind == "l1") {
                auto records = select_split(log.records, 'U');
                if (records.empty()) throw DataError("log declares no U split records");
                const double dk = disagreement_l1(records, dg_sample);
                out["statistic"] = dk;
                out["bound_term"] = disagree_lipschitz(
                    dk, spec, static_cast<std::int64_t>(records.size()), conf);
            } else if (dg_kind == "loss") {
                auto records = select_split(log.records, 'L');
                if (records.empty()) throw DataError("log declares no L split records");
                const double dl = disagreement_loss(records, spec, dg_sample);
                out["statistic"] = dl;
                out["bound_term"] =
                    disagree_loss(dl, spec, static_cast<std::int64_t>(records.size()), conf);
            } else {  // labelprob
                auto records = select_split(log.records, 'L');
                if (records.empty()) throw DataError("log declares no L split records");
                const double dhat = disagreement_label_prob(records, spec, dg_sample);
                out["statistic"] = dhat;
                if (!spec.lipschitz.has_value()) {
                    throw UsageError("labelprob chain needs a Lipschitz loss spec");
                }
                const double proxied = std::min(spec.lambda, *spec.lipschitz * dhat);
                out["bound_term"] = disagree_loss(
                    proxied, spec, static_cast<std::int64_t>(records.size()), conf);
            }
            std::cout << out.dump(2) << "\n";
            return 0;
        }

        if (certify_cmd->parsed()) {
            const auto log = parse_log(ct_log);
            const auto spec = ct_loss.spec();
            const auto use_case = use_case_from_string(ct_use_case);
            CertificateReport report;

            if (use_case == UseCase::risk_gap) {
                DeltaBudget budget;
                budget.allocation = {{"disagreement", ct_delta}};
                const auto [stat, term] =
                    disagreement_for_loss(log, spec, Confidence(ct_delta), kAllSamples);
                (void)stat;
                report = risk_gap(term, budget, log.digest);
            } else {
                if (ct_cert.empty()) {
                    throw UsageError("use case '" + ct_use_case + "' needs --surrogate-cert");
                }
                const json cert_json = load_json_file(ct_cert);
                BoundResult surrogate;
                surrogate.risk_bound = cert_json.at("risk_bound").get<double>();
                surrogate.delta_spent = cert_json.at("delta_spent").get<double>();
                surrogate.vacuous = cert_json.value("vacuous", false);
                const double delta_s = surrogate.delta_spent;
                const double delta_u = ct_same_delta ? delta_s : ct_delta - delta_s;
                if (!(delta_u > 0.0)) {
                    throw UsageError("budget mismatch: total delta must exceed the surrogate's " +
                                     std::to_string(delta_s));
                }
                DeltaBudget budget;
                budget.allocation = {{"surrogate", delta_s}, {"disagreement", delta_u}};

                if (use_case == UseCase::certify_target) {
                    const auto [stat, term] =
                        disagreement_for_loss(log, spec, Confidence(delta_u), kAllSamples);
                    (void)stat;
                    report = certify_target(surrogate, term, budget, log.digest);
                } else {
                    if (ct_prior.empty() || ct_surrogate_id.empty()) {
                        throw UsageError("uniform use case needs --prior and --surrogate-id");
                    }
                    SurrogatePrior prior;
                    const json prior_json = load_json_file(ct_prior);
                    for (const auto& [key, value] : prior_json.items()) {
                        prior.masses.emplace_back(key, value.get<double>());
                    }
                    auto disagreement_at = [&](Confidence conf) {
                        return disagreement_for_loss(log, spec, conf, kAllSamples).second;
                    };
                    report = certify_uniform(ct_surrogate_id, prior, surrogate, disagreement_at,
                                             budget, log.digest);
                }
            }

            auto doc = make_report(std::move(report), default_seed());
            if (ct_stamp) doc.metadata.generated = timestamp_now();
            const auto format = ct_format == "csv" ? ReportFormat::csv : ReportFormat::json;
            write_output(emit_report(doc, format), ct_out);
            return 0;
        }

        if (simulate_cmd->parsed()) {
            if (!*seed_opt) sm_cfg.seed = default_seed();
            SyntheticWorld world = default_world(sm_bound);
            if (sm_pf >= 0.0) world.p_f = sm_pf;
            if (sm_ph >= 0.0) world.p_h = sm_ph;
            if (sm_pd >= 0.0) world.p_disagree = sm_pd;
            if (world.kind == SyntheticWorld::Kind::bernoulli_pair) {
                world = SyntheticWorld::bernoulli(world.p_f, world.p_h, world.p_disagree);
            }
            const Confidence conf(sm_delta);
            const auto result = run_coverage(sm_bound, world, sm_cfg, conf);
            write_output(coverage_csv(sm_bound, sm_cfg, conf, result), sm_out);
            return 0;
        }

        if (compare_cmd->parsed()) {
            const json scenario = load_json_file(cp_scenario);
            if (!scenario.is_array()) throw DataError("scenario must be a JSON array");
            std::vector<std::pair<std::string, json>> rows;
            for (const auto& entry : scenario) {
                json params = entry.value("params", json::object());
                if (params.empty()) {
                    params = entry;
                    params.erase("bound");
                }
                rows.emplace_back(entry.at("bound").get<std::string>(), std::move(params));
            }
            const auto table = compare_bounds(rows, Confidence(cp_delta));
            write_output(compare_csv(table), cp_out);
            return 0;
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
