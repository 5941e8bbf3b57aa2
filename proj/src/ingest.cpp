#include "fcattn/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "fcattn/delimited.hpp"

namespace fcattn::ingest {

using nlohmann::json;

std::string to_string(Rating r) {
    switch (r) {
        case Rating::False: return "false";
        case Rating::Misleading: return "misleading";
        case Rating::PartlyFalse: return "partly_false";
        case Rating::NoEvidence: return "no_evidence";
        case Rating::Other: return "other";
    }
    return "other";
}

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

Rating rating_from_string(const std::string& s) {
    std::string v = lower(trim(s));
    std::replace(v.begin(), v.end(), '-', ' ');
    std::replace(v.begin(), v.end(), '_', ' ');
    if (v == "false") return Rating::False;
    if (v == "misleading") return Rating::Misleading;
    if (v == "partly false" || v == "partially false") return Rating::PartlyFalse;
    if (v == "no evidence") return Rating::NoEvidence;
    return Rating::Other;
}

bool is_iso_country(const std::string& code) {
    // ISO-3166-1 alpha-2, officially assigned.
    static const std::set<std::string> codes = {
        "AD","AE","AF","AG","AI","AL","AM","AO","AQ","AR","AS","AT","AU","AW","AX","AZ",
        "BA","BB","BD","BE","BF","BG","BH","BI","BJ","BL","BM","BN","BO","BQ","BR","BS",
        "BT","BV","BW","BY","BZ","CA","CC","CD","CF","CG","CH","CI","CK","CL","CM","CN",
        "CO","CR","CU","CV","CW","CX","CY","CZ","DE","DJ","DK","DM","DO","DZ","EC","EE",
        "EG","EH","ER","ES","ET","FI","FJ","FK","FM","FO","FR","GA","GB","GD","GE","GF",
        "GG","GH","GI","GL","GM","GN","GP","GQ","GR","GS","GT","GU","GW","GY","HK","HM",
        "HN","HR","HT","HU","ID","IE","IL","IM","IN","IO","IQ","IR","IS","IT","JE","JM",
        "JO","JP","KE","KG","KH","KI","KM","KN","KP","KR","KW","KY","KZ","LA","LB","LC",
        "LI","LK","LR","LS","LT","LU","LV","LY","MA","MC","MD","ME","MF","MG","MH","MK",
        "ML","MM","MN","MO","MP","MQ","MR","MS","MT","MU","MV","MW","MX","MY","MZ","NA",
        "NC","NE","NF","NG","NI","NL","NO","NP","NR","NU","NZ","OM","PA","PE","PF","PG",
        "PH","PK","PL","PM","PN","PR","PS","PT","PW","PY","QA","RE","RO","RS","RU","RW",
        "SA","SB","SC","SD","SE","SG","SH","SI","SJ","SK","SL","SM","SN","SO","SR","SS",
        "ST","SV","SX","SY","SZ","TC","TD","TF","TG","TH","TJ","TK","TL","TM","TN","TO",
        "TR","TT","TV","TW","TZ","UA","UG","UM","US","UY","UZ","VA","VC","VE","VG","VI",
        "VN","VU","WF","WS","YE","YT","ZA","ZM","ZW"};
    return codes.count(code) > 0;
}

ParseResult parse_factchecks(std::istream& source, const ColumnMap& column_map) {
    DelimitedTable table = read_delimited(source);

    auto col = [&](const std::string& field) -> int {
        auto it = column_map.columns.find(field);
        if (it == column_map.columns.end()) return -1;
        return table.column_index(it->second);
    };

    for (const std::string& required : {"date", "country_code", "claim_text", "rating"}) {
        auto it = column_map.columns.find(required);
        if (it == column_map.columns.end())
            throw std::runtime_error("column map missing required field: " + required);
        if (!table.header.empty() && table.column_index(it->second) < 0)
            throw std::runtime_error("input lacks mapped column '" + it->second + "' for field " +
                                     required);
    }

    const int c_date = col("date");
    const int c_country = col("country_code");
    const int c_claim = col("claim_text");
    const int c_rating = col("rating");
    const int c_org = col("organization");
    const int c_platform = col("source_platform");
    const int c_url = col("article_url");
    const int c_lang = col("language");
    const int c_expl = col("explanation");

    ParseResult out;
    int next_id = 0;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        auto get = [&](int c) { return c >= 0 ? trim(row[static_cast<std::size_t>(c)]) : ""; };

        auto date = parse_date_lenient(get(c_date));
        if (!date) {
            out.errors.push_back({i, "unparseable date: '" + get(c_date) + "'"});
            continue;
        }
        std::string claim = get(c_claim);
        if (claim.empty()) {
            out.errors.push_back({i, "empty claim"});
            continue;
        }

        std::vector<std::string> countries;
        std::string raw_country = get(c_country);
        if (!column_map.country_delimiter.empty()) {
            std::size_t pos = 0;
            while (pos <= raw_country.size()) {
                std::size_t next = raw_country.find(column_map.country_delimiter, pos);
                std::string part =
                    trim(raw_country.substr(pos, next == std::string::npos ? next : next - pos));
                if (!part.empty()) countries.push_back(part);
                if (next == std::string::npos) break;
                pos = next + column_map.country_delimiter.size();
            }
        } else {
            countries.push_back(raw_country);
        }
        if (countries.empty()) {
            out.errors.push_back({i, "empty country"});
            continue;
        }

        for (const std::string& country : countries) {
            FactCheckRecord r;
            r.id = next_id++;
            r.date = *date;
            r.country_code = country;
            r.organization = get(c_org);
            r.claim_text = claim;
            r.source_platform = get(c_platform);
            r.article_url = get(c_url);
            r.language = get(c_lang);
            r.rating = rating_from_string(get(c_rating));
            r.explanation = get(c_expl);
            out.records.push_back(std::move(r));
        }
    }
    return out;
}

ScopeResult filter_scope(const std::vector<FactCheckRecord>& records, const ScopeConfig& scope) {
    ScopeResult out;
    for (const auto& r : records) {
        if (r.date < scope.window_start || scope.window_end < r.date) {
            out.dropped.emplace_back(r, "outside window");
        } else if (!is_iso_country(r.country_code)) {
            out.dropped.emplace_back(r, "region");
        } else if (std::find(scope.excluded_countries.begin(), scope.excluded_countries.end(),
                             r.country_code) != scope.excluded_countries.end()) {
            out.dropped.emplace_back(r, "excluded country");
        } else {
            out.kept.push_back(r);
        }
    }
    return out;
}

namespace {

json record_to_json(const FactCheckRecord& r) {
    json j;
    j["id"] = r.id;
    j["date"] = r.date.to_iso();
    j["country_code"] = r.country_code;
    j["organization"] = r.organization;
    j["claim_text"] = r.claim_text;
    j["source_platform"] = r.source_platform;
    j["article_url"] = r.article_url;
    j["language"] = r.language;
    j["rating"] = to_string(r.rating);
    j["explanation"] = r.explanation;
    return j;
}

FactCheckRecord record_from_json(const json& j) {
    FactCheckRecord r;
    r.id = j.at("id").get<int>();
    auto d = parse_iso_date(j.at("date").get<std::string>());
    if (!d) throw std::runtime_error("bad date in records jsonl");
    r.date = *d;
    r.country_code = j.at("country_code").get<std::string>();
    r.organization = j.value("organization", "");
    r.claim_text = j.at("claim_text").get<std::string>();
    r.source_platform = j.value("source_platform", "");
    r.article_url = j.value("article_url", "");
    r.language = j.value("language", "");
    r.rating = rating_from_string(j.at("rating").get<std::string>());
    r.explanation = j.value("explanation", "");
    return r;
}

}  // namespace

void write_records_jsonl(std::ostream& out, const std::vector<FactCheckRecord>& records) {
    for (const auto& r : records) out << record_to_json(r).dump() << "\n";
}

std::vector<FactCheckRecord> read_records_jsonl(std::istream& in) {
    std::vector<FactCheckRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        out.push_back(record_from_json(json::parse(line)));
    }
    return out;
}

ColumnMap load_column_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open column map: " + path);
    json j = json::parse(in);
    ColumnMap m;
    for (auto& [k, v] : j.items()) {
        if (k == "country_delimiter") m.country_delimiter = v.get<std::string>();
        else m.columns[k] = v.get<std::string>();
    }
    return m;
}

ScopeConfig load_scope_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scope config: " + path);
    json j = json::parse(in);
    ScopeConfig s;
    auto ws = parse_iso_date(j.at("window_start").get<std::string>());
    auto we = parse_iso_date(j.at("window_end").get<std::string>());
    if (!ws || !we) throw std::runtime_error("scope config: bad window dates");
    if (!(*ws < *we)) throw std::runtime_error("scope config: window_start must precede window_end");
    s.window_start = *ws;
    s.window_end = *we;
    if (j.contains("excluded_regions"))
        s.excluded_regions = j["excluded_regions"].get<std::vector<std::string>>();
    if (j.contains("excluded_countries"))
        s.excluded_countries = j["excluded_countries"].get<std::vector<std::string>>();
    return s;
}

}  // namespace fcattn::ingest
