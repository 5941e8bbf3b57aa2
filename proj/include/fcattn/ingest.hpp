#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fcattn/dates.hpp"

namespace fcattn::ingest {

enum class Rating { False, Misleading, PartlyFalse, NoEvidence, Other };

std::string to_string(Rating r);
Rating rating_from_string(const std::string& s);

struct FactCheckRecord {
    int id = 0;  // stable record id, assigned at parse time
    Date date;
    std::string country_code;  // ISO alpha-2 or region tag
    std::string organization;
    std::string claim_text;
    std::string source_platform;
    std::string article_url;
    std::string language;
    Rating rating = Rating::Other;
    std::string explanation;
};

struct ScopeConfig {
    Date window_start;
    Date window_end;
    std::vector<std::string> excluded_regions;
    std::vector<std::string> excluded_countries;
};

// Maps logical field names to source column headers. Required fields:
// date, country_code, claim_text, rating. Optional entries:
// organization, source_platform, article_url, language, explanation,
// plus "country_delimiter" when one row lists several countries.
struct ColumnMap {
    std::map<std::string, std::string> columns;
    std::string country_delimiter;  // empty = single country per row
};

struct RowError {
    std::size_t row_index = 0;  // 0-based data row index
    std::string reason;
};

struct ParseResult {
    std::vector<FactCheckRecord> records;
    std::vector<RowError> errors;
};

// True for ISO-3166 alpha-2 codes; anything else is treated as a region tag.
bool is_iso_country(const std::string& code);

// Throws std::runtime_error when a mapped required column is absent.
ParseResult parse_factchecks(std::istream& source, const ColumnMap& column_map);

struct ScopeResult {
    std::vector<FactCheckRecord> kept;
    std::vector<std::pair<FactCheckRecord, std::string>> dropped;  // record, reason
};

ScopeResult filter_scope(const std::vector<FactCheckRecord>& records, const ScopeConfig& scope);

// JSONL serialization (one object per line).
void write_records_jsonl(std::ostream& out, const std::vector<FactCheckRecord>& records);
std::vector<FactCheckRecord> read_records_jsonl(std::istream& in);

ColumnMap load_column_map(const std::string& path);
ScopeConfig load_scope_config(const std::string& path);

}  // namespace fcattn::ingest
