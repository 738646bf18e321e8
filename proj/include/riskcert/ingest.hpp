#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "riskcert/certify.hpp"
#include "riskcert/losses.hpp"

namespace riskcert {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "riskcert 0.1.0";

struct LogHeader {
    int schema_version = kSchemaVersion;
    int num_classes = 2;
    int v_samples = 1;
    std::map<char, std::int64_t> count_per_split;

    bool has_split(char split) const { return count_per_split.count(split) > 0; }
};

struct ParsedLog {
    LogHeader header;
    std::vector<PredictionRecord> records;
    std::string digest;  // hex SHA-256 of the raw bytes
};

// Line-delimited log: a JSON header line, then one JSON record per line
// with fields id, split, y (nullable), f (C floats), h (V x C floats).
ParsedLog parse_log(const std::string& path);
ParsedLog parse_log_text(const std::string& text);

std::string write_log_text(const LogHeader& header, std::span<const PredictionRecord> records);

std::string sha256_hex(std::string_view bytes);

struct TermRow {
    std::string name;
    double value = 0.0;
    double delta_share = 0.0;
};

struct ReportMetadata {
    std::string generated;  // empty unless the caller asks for a wall-clock stamp
    std::uint64_t seed = 0;
    std::string tool_version = kToolVersion;
};

struct ReportDocument {
    CertificateReport certificate;
    std::vector<TermRow> term_table;
    ReportMetadata metadata;
};

enum class ReportFormat { json, csv };

ReportDocument make_report(CertificateReport certificate, std::uint64_t seed);
std::string emit_report(const ReportDocument& doc, ReportFormat format);
ReportDocument parse_report(const std::string& json_text);

}  // namespace riskcert
