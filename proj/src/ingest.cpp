#include "riskcert/ingest.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "riskcert/errors.hpp"
#include "riskcert/format.hpp"

namespace riskcert {

using ordered_json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail_line(std::size_t line_no, const std::string& what) {
    throw DataError("line " + std::to_string(line_no) + ": " + what);
}

ordered_json parse_json_line(const std::string& line, std::size_t line_no) {
    ordered_json parsed = ordered_json::parse(line, nullptr, false);
    if (parsed.is_discarded()) fail_line(line_no, "malformed JSON");
    if (!parsed.is_object()) fail_line(line_no, "expected a JSON object");
    return parsed;
}

std::vector<double> logit_vector(const ordered_json& value, int num_classes, std::size_t line_no,
                                 const char* field) {
    if (!value.is_array() || static_cast<int>(value.size()) != num_classes) {
        fail_line(line_no, std::string(field) + " must be an array of " +
                               std::to_string(num_classes) + " floats");
    }
    std::vector<double> out;
    out.reserve(value.size());
    for (const auto& entry : value) {
        if (!entry.is_number()) fail_line(line_no, std::string(field) + " holds a non-number");
        out.push_back(entry.get<double>());
    }
    return out;
}

ordered_json bound_to_json(const BoundResult& bound) {
    ordered_json terms = ordered_json::array();
    for (const auto& [name, value] : bound.terms) terms.push_back({{"name", name}, {"value", value}});
    return {{"risk_bound", bound.risk_bound},
            {"delta_spent", bound.delta_spent},
            {"vacuous", bound.vacuous},
            {"terms", std::move(terms)}};
}

BoundResult bound_from_json(const ordered_json& j) {
    BoundResult bound;
    bound.risk_bound = j.at("risk_bound").get<double>();
    bound.delta_spent = j.at("delta_spent").get<double>();
    bound.vacuous = j.at("vacuous").get<bool>();
    for (const auto& term : j.at("terms")) {
        bound.terms.emplace_back(term.at("name").get<std::string>(),
                                 term.at("value").get<double>());
    }
    return bound;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw DataError("sha256: digest computation failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * length);
    for (unsigned int i = 0; i < length; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

ParsedLog parse_log_text(const std::string& text) {
    ParsedLog log;
    log.digest = sha256_hex(text);

    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::set<std::string> seen_ids;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto parsed = parse_json_line(line, line_no);

        if (!header_seen) {
            if (!parsed.contains("num_classes") || !parsed.contains("v_samples")) {
                fail_line(line_no, "header must declare num_classes and v_samples");
            }
            log.header.schema_version = parsed.value("schema_version", kSchemaVersion);
            if (log.header.schema_version != kSchemaVersion) {
                fail_line(line_no, "unsupported schema_version " +
                                       std::to_string(log.header.schema_version));
            }
            log.header.num_classes = parsed.at("num_classes").get<int>();
            log.header.v_samples = parsed.at("v_samples").get<int>();
            if (log.header.num_classes < 2) fail_line(line_no, "num_classes must be >= 2");
            if (log.header.v_samples < 1) fail_line(line_no, "v_samples must be >= 1");
            header_seen = true;
            continue;
        }

        PredictionRecord rec;
        if (!parsed.contains("id") || !parsed.at("id").is_string()) {
            fail_line(line_no, "record needs a string id");
        }
        rec.id = parsed.at("id").get<std::string>();
        if (!seen_ids.insert(rec.id).second) fail_line(line_no, "duplicate id '" + rec.id + "'");

        const std::string split = parsed.value("split", "");
        if (split.size() != 1 || (split[0] != 'S' && split[0] != 'U' && split[0] != 'L')) {
            fail_line(line_no, "split must be one of S, U, L");
        }
        rec.split = split[0];

        if (parsed.contains("y") && !parsed.at("y").is_null()) {
            if (!parsed.at("y").is_number_integer()) fail_line(line_no, "y must be an integer");
            const int y = parsed.at("y").get<int>();
            if (y < 1 || y > log.header.num_classes) {
                fail_line(line_no, "label " + std::to_string(y) + " outside [1.." +
                                       std::to_string(log.header.num_classes) + "]");
            }
            rec.label = y;
        }
        if (rec.split == 'L' && !rec.label.has_value()) {
            fail_line(line_no, "split L requires a label");
        }

        if (!parsed.contains("f")) fail_line(line_no, "record needs target logits f");
        rec.f_logits = logit_vector(parsed.at("f"), log.header.num_classes, line_no, "f");

        if (!parsed.contains("h") || !parsed.at("h").is_array() ||
            static_cast<int>(parsed.at("h").size()) != log.header.v_samples) {
            fail_line(line_no, "h must hold v_samples = " +
                                   std::to_string(log.header.v_samples) + " logit vectors");
        }
        for (const auto& sample : parsed.at("h")) {
            rec.h_logits.push_back(logit_vector(sample, log.header.num_classes, line_no, "h"));
        }

        ++log.header.count_per_split[rec.split];
        log.records.push_back(std::move(rec));
    }

    if (!header_seen) throw DataError("log has no header line");
    return log;
}

ParsedLog parse_log(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open log file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_log_text(buf.str());
}

std::string write_log_text(const LogHeader& header, std::span<const PredictionRecord> records) {
    ordered_json head = {{"schema_version", header.schema_version},
                         {"num_classes", header.num_classes},
                         {"v_samples", header.v_samples}};
    std::string out = head.dump();
    out.push_back('\n');
    for (const auto& rec : records) {
        ordered_json j;
        j["id"] = rec.id;
        j["split"] = std::string(1, rec.split);
        if (rec.label.has_value()) {
            j["y"] = *rec.label;
        } else {
            j["y"] = nullptr;
        }
        j["f"] = rec.f_logits;
        j["h"] = rec.h_logits;
        out += j.dump();
        out.push_back('\n');
    }
    return out;
}

ReportDocument make_report(CertificateReport certificate, std::uint64_t seed) {
    ReportDocument doc;
    doc.metadata.seed = seed;
    if (certificate.surrogate_bound.has_value()) {
        doc.term_table.push_back({"surrogate", certificate.surrogate_bound->risk_bound,
                                  certificate.surrogate_bound->delta_spent});
        doc.term_table.push_back(
            {"disagreement", certificate.disagreement_term,
             certificate.budget.total() - certificate.surrogate_bound->delta_spent});
    } else {
        doc.term_table.push_back(
            {"disagreement", certificate.disagreement_term, certificate.budget.total()});
    }
    doc.certificate = std::move(certificate);
    return doc;
}

std::string emit_report(const ReportDocument& doc, ReportFormat format) {
    if (format == ReportFormat::csv) {
        std::ostringstream out;
        out << "term,value,delta_share\n";
        for (const auto& row : doc.term_table) {
            out << row.name << ',' << format_double(row.value) << ','
                << format_double(row.delta_share) << '\n';
        }
        out << "total," << format_double(doc.certificate.target_bound) << ','
            << format_double(doc.certificate.budget.total()) << '\n';
        return out.str();
    }

    ordered_json budget = ordered_json::array();
    for (const auto& [name, delta] : doc.certificate.budget.allocation) {
        budget.push_back({{"term", name}, {"delta", delta}});
    }
    ordered_json cert = {{"use_case", to_string(doc.certificate.use_case)},
                         {"target_bound", doc.certificate.target_bound},
                         {"disagreement_term", doc.certificate.disagreement_term},
                         {"vacuous", doc.certificate.vacuous},
                         {"inputs_digest", doc.certificate.inputs_digest},
                         {"budget", std::move(budget)}};
    if (doc.certificate.surrogate_bound.has_value()) {
        cert["surrogate_bound"] = bound_to_json(*doc.certificate.surrogate_bound);
    } else {
        cert["surrogate_bound"] = nullptr;
    }
    ordered_json terms = ordered_json::array();
    for (const auto& row : doc.term_table) {
        terms.push_back(
            {{"term", row.name}, {"value", row.value}, {"delta_share", row.delta_share}});
    }
    ordered_json j = {{"certificate", std::move(cert)},
                      {"term_table", std::move(terms)},
                      {"metadata",
                       {{"generated", doc.metadata.generated},
                        {"seed", doc.metadata.seed},
                        {"tool_version", doc.metadata.tool_version}}}};
    return j.dump(2) + "\n";
}

ReportDocument parse_report(const std::string& json_text) {
    ordered_json j = ordered_json::parse(json_text, nullptr, false);
    if (j.is_discarded()) throw DataError("report: malformed JSON");
    ReportDocument doc;
    const auto& cert = j.at("certificate");
    doc.certificate.use_case = use_case_from_string(cert.at("use_case").get<std::string>());
    doc.certificate.target_bound = cert.at("target_bound").get<double>();
    doc.certificate.disagreement_term = cert.at("disagreement_term").get<double>();
    doc.certificate.vacuous = cert.at("vacuous").get<bool>();
    doc.certificate.inputs_digest = cert.at("inputs_digest").get<std::string>();
    for (const auto& entry : cert.at("budget")) {
        doc.certificate.budget.allocation.emplace_back(entry.at("term").get<std::string>(),
                                                       entry.at("delta").get<double>());
    }
    if (!cert.at("surrogate_bound").is_null()) {
        doc.certificate.surrogate_bound = bound_from_json(cert.at("surrogate_bound"));
    }
    for (const auto& row : j.at("term_table")) {
        doc.term_table.push_back({row.at("term").get<std::string>(),
                                  row.at("value").get<double>(),
                                  row.at("delta_share").get<double>()});
    }
    const auto& meta = j.at("metadata");
    doc.metadata.generated = meta.at("generated").get<std::string>();
    doc.metadata.seed = meta.at("seed").get<std::uint64_t>();
    doc.metadata.tool_version = meta.at("tool_version").get<std::string>();
    return doc;
}

}  // namespace riskcert
