#include "riskcert/bound_eval.hpp"

#include <algorithm>
#include <sstream>

#include "riskcert/errors.hpp"
#include "riskcert/format.hpp"

namespace riskcert {

using nlohmann::json;

namespace {

double need_num(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) {
        throw UsageError(std::string("bound parameters: missing numeric field '") + key + "'");
    }
    return j.at(key).get<double>();
}

std::int64_t need_int(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number_integer()) {
        throw UsageError(std::string("bound parameters: missing integer field '") + key + "'");
    }
    return j.at(key).get<std::int64_t>();
}

std::vector<double> need_vector(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_array()) {
        throw UsageError(std::string("bound parameters: missing array field '") + key + "'");
    }
    std::vector<double> out;
    for (const auto& v : j.at(key)) out.push_back(v.get<double>());
    return out;
}

}  // namespace

LossSpec loss_from_name(const std::string& name, int num_classes, double alpha, double delta_h) {
    if (name == "01" || name == "zero-one") return LossSpec::zero_one(num_classes);
    if (name == "xent-clamped") return LossSpec::xent_clamped(num_classes, alpha);
    if (name == "xent-smoothed") return LossSpec::xent_smoothed(num_classes, alpha);
    if (name == "huber") return LossSpec::huber(num_classes, delta_h);
    throw UsageError("unknown loss '" + name + "'");
}

LossSpec loss_from_json(const json& j) {
    if (!j.is_object()) throw UsageError("loss spec must be a JSON object");
    const std::string kind = j.value("kind", "xent-smoothed");
    const int num_classes = j.value("num_classes", 10);
    const double alpha = j.value("alpha", 1e-3);
    const double delta_h = j.value("delta_h", 0.2);
    return loss_from_name(kind, num_classes, alpha, delta_h);
}

const std::vector<std::string>& bound_formula_ids() {
    static const std::vector<std::string> ids = {
        "test_binomial", "test_chernoff", "test_chernoff_pinsker", "sc_binomial",   "sc_kl",       "sc_sqrt",
        "p2l",           "mc_binomial",   "mc_kl",         "pb_mcallester",
        "pb_double_kl",  "partition",     "partition_grid", "norm"};
    return ids;
}

BoundResult evaluate_bound(const std::string& bound_id, const json& params, Confidence conf) {
    if (bound_id == "test_binomial") {
        return test_set_binomial(EmpiricalCount(need_int(params, "k"), need_int(params, "m")),
                                 conf);
    }
    if (bound_id == "test_chernoff") {
        return test_set_chernoff(need_num(params, "mean_loss"),
                                 loss_from_json(params.value("loss", json::object())),
                                 need_int(params, "m"), conf);
    }
    if (bound_id == "test_chernoff_pinsker") {
        // Same certificate with the quadratic comparator in place of kl.
        const auto spec = loss_from_json(params.value("loss", json::object()));
        const double mean = need_num(params, "mean_loss");
        const auto m = need_int(params, "m");
        const double q = spec.lambda == 0.0
                             ? 0.0
                             : std::clamp((mean - spec.b_lower) / spec.lambda, 0.0, 1.0);
        const double inv = pinsker_inverse(q, std::log(1.0 / conf.delta) / static_cast<double>(m));
        BoundResult res;
        res.risk_bound = spec.b_lower + spec.lambda * inv;
        res.delta_spent = conf.delta;
        res.vacuous = res.risk_bound >= spec.t_upper - 1e-12;
        res.terms = {{"mean_loss", mean}, {"normalized_empirical", q}};
        return res;
    }
    if (bound_id == "sc_binomial") {
        CompressionMeta meta(need_int(params, "n"), need_int(params, "m_tilde"),
                             need_num(params, "complement_risk"));
        return sc_binomial(meta, conf);
    }
    if (bound_id == "sc_kl") {
        CompressionMeta meta(need_int(params, "n"), need_int(params, "m_tilde"),
                             need_num(params, "complement_risk"));
        return sc_kl(meta, loss_from_json(params.value("loss", json::object())), conf);
    }
    if (bound_id == "sc_sqrt") {
        CompressionMeta meta(need_int(params, "n"), need_int(params, "m_tilde"),
                             need_num(params, "complement_risk"));
        return sc_sqrt(meta, loss_from_json(params.value("loss", json::object())), conf);
    }
    if (bound_id == "p2l") {
        return p2l_bound(need_int(params, "compression_size"),
                         need_int(params, "complement_errors"), need_int(params, "n"), conf);
    }
    if (bound_id == "mc_binomial") {
        CodeLengthMeta meta(need_int(params, "code_bits"), need_int(params, "n"),
                            need_num(params, "train_risk"));
        return mc_binomial(meta, conf);
    }
    if (bound_id == "mc_kl") {
        CodeLengthMeta meta(need_int(params, "code_bits"), need_int(params, "n"),
                            need_num(params, "train_risk"));
        return mc_kl(meta, loss_from_json(params.value("loss", json::object())), conf);
    }
    if (bound_id == "pb_mcallester") {
        PACBayesMeta meta(need_num(params, "kl"), need_int(params, "n"),
                          need_vector(params, "sampled_risks"));
        return pacbayes_mcallester(meta, loss_from_json(params.value("loss", json::object())),
                                   conf);
    }
    if (bound_id == "pb_double_kl") {
        PACBayesMeta meta(need_num(params, "kl"), need_int(params, "n"),
                          need_vector(params, "sampled_risks"));
        const double delta_prime = params.value("delta_prime", conf.delta);
        return pacbayes_double_kl(meta, loss_from_json(params.value("loss", json::object())),
                                  conf, Confidence(delta_prime));
    }
    if (bound_id == "partition") {
        std::vector<std::int64_t> counts;
        for (const auto& c : params.at("counts")) counts.push_back(c.get<std::int64_t>());
        const double alpha = need_num(params, "alpha");
        const double gamma = params.contains("gamma") ? need_num(params, "gamma")
                                                      : partition_gamma(alpha, conf);
        PartitionParams pp(need_int(params, "K"), std::move(counts), alpha, gamma,
                           need_num(params, "t_upper"), need_num(params, "train_risk"));
        return partition_bound(pp, conf);
    }
    if (bound_id == "partition_grid") {
        std::vector<PartitionCandidate> candidates;
        for (const auto& c : params.at("candidates")) {
            PartitionCandidate cand;
            cand.subsets = need_int(c, "K");
            for (const auto& v : c.at("counts")) cand.counts.push_back(v.get<std::int64_t>());
            cand.alpha_p = need_num(c, "alpha");
            candidates.push_back(std::move(cand));
        }
        return partition_grid_search(candidates, need_num(params, "t_upper"),
                                     need_num(params, "train_risk"), conf);
    }
    if (bound_id == "norm") {
        NormBoundInputs inputs;
        inputs.rho = need_num(params, "rho");
        inputs.margin_risk = need_num(params, "margin_risk");
        inputs.gamma_margin = params.value("gamma_margin", 1.0);
        inputs.depth = static_cast<int>(need_int(params, "depth"));
        inputs.pred_counts = need_vector(params, "pred_counts");
        inputs.num_classes = static_cast<int>(need_int(params, "num_classes"));
        inputs.sq_pixel_norm_sum = need_num(params, "sq_pixel_norm_sum");
        inputs.n = need_int(params, "n");
        return norm_bound(inputs, conf);
    }
    throw UsageError("unknown bound formula '" + bound_id + "'");
}

std::vector<CompareRow> compare_bounds(const std::vector<std::pair<std::string, json>>& scenario,
                                       Confidence conf) {
    std::vector<CompareRow> rows;
    rows.reserve(scenario.size());
    for (const auto& [bound_id, params] : scenario) {
        const auto res = evaluate_bound(bound_id, params, conf);
        rows.push_back({bound_id, res.risk_bound, res.delta_spent, res.vacuous});
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const CompareRow& a, const CompareRow& b) { return a.value < b.value; });
    return rows;
}

std::string compare_csv(const std::vector<CompareRow>& rows) {
    std::ostringstream out;
    out << "bound,value,delta_spent,vacuous\n";
    for (const auto& row : rows) {
        out << row.bound_id << ',' << format_double(row.value) << ','
            << format_double(row.delta_spent) << ',' << (row.vacuous ? 1 : 0) << '\n';
    }
    return out.str();
}

}  // namespace riskcert
