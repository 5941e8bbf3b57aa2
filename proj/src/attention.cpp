#include "fcattn/attention.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace fcattn::attention {

using nlohmann::json;

double baseline(const std::vector<double>& series_year1) {
    if (series_year1.empty()) throw std::invalid_argument("baseline: empty baseline-year series");
    return std::accumulate(series_year1.begin(), series_year1.end(), 0.0) /
           static_cast<double>(series_year1.size());
}

std::vector<double> attention_curve(const std::vector<double>& series_year2, double b, double r) {
    if (!(r > 0.0)) throw std::invalid_argument("attention_curve: reference volume must be > 0");
    std::vector<double> curve(series_year2.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < series_year2.size(); ++k) {
        acc += std::max(series_year2[k] - b, 0.0) / r;
        curve[k] = acc;
    }
    return curve;
}

double relative_attention_at(const AttentionProfile& profile, const WeekGrid& grid,
                             const Date& date) {
    if (!(profile.total > 0.0))
        throw std::invalid_argument("relative_attention_at: zero total attention");
    if (profile.curve.size() != grid.second_year_weeks())
        throw std::invalid_argument("relative_attention_at: curve/grid mismatch");

    Date monday = week_monday(date);
    const Date& first = grid.mondays[grid.split];
    if (monday < first) return 0.0;
    if (grid.mondays.back() < monday) return 1.0;
    auto idx = grid.week_index(date);
    if (!idx || *idx < grid.split) return 0.0;
    return profile.curve[*idx - grid.split] / profile.total;
}

BuildReport build_profiles(const trends::SeriesCache& cache,
                           const std::vector<cluster::ClaimCluster>& linked,
                           const std::vector<ingest::FactCheckRecord>& records,
                           const std::vector<std::string>& countries,
                           const std::string& reference_entity, const WeekGrid& grid) {
    // record id -> record, for cluster membership joins.
    std::map<int, const ingest::FactCheckRecord*> by_id;
    for (const auto& r : records) by_id[r.id] = &r;

    BuildReport out;
    for (const auto& country : countries) {
        auto ref = cache.get(reference_entity, country);
        if (!ref)
            throw std::runtime_error("build_profiles: missing reference series for country " +
                                     country);
        if (ref->values.size() != grid.size())
            throw std::runtime_error("build_profiles: reference series length mismatch for " +
                                     country);
        std::vector<double> ref_year2(ref->values.begin() + static_cast<long>(grid.split),
                                      ref->values.end());
        double r = std::accumulate(ref_year2.begin(), ref_year2.end(), 0.0) /
                   static_cast<double>(ref_year2.size());

        for (const auto& cl : linked) {
            if (!cl.entity_id) continue;
            auto series = cache.get(*cl.entity_id, country);
            if (!series) {
                ++out.no_signal_pairs;
                continue;
            }
            if (series->values.size() != grid.size()) {
                out.skipped_pairs.push_back(*cl.entity_id + "/" + country +
                                            ": series length mismatch");
                continue;
            }

            std::vector<double> year1(series->values.begin(),
                                      series->values.begin() + static_cast<long>(grid.split));
            std::vector<double> year2(series->values.begin() + static_cast<long>(grid.split),
                                      series->values.end());
            if (year1.empty()) {
                out.skipped_pairs.push_back(*cl.entity_id + "/" + country +
                                            ": missing baseline year");
                continue;
            }

            AttentionProfile p;
            p.entity_id = *cl.entity_id;
            p.entity_name = cl.entity_name.value_or("");
            p.country = country;
            p.baseline = baseline(year1);
            p.reference_volume = r;
            p.curve = attention_curve(year2, p.baseline, r);
            p.total = p.curve.empty() ? 0.0 : p.curve.back();

            for (int id : cl.member_ids) {
                auto it = by_id.find(id);
                if (it != by_id.end() && it->second->country_code == country)
                    p.factcheck_dates.push_back(it->second->date);
            }
            std::sort(p.factcheck_dates.begin(), p.factcheck_dates.end());
            out.profiles.push_back(std::move(p));
        }
    }
    return out;
}

void write_profiles_json(const std::string& path, const std::vector<AttentionProfile>& profiles) {
    json arr = json::array();
    for (const auto& p : profiles) {
        json j;
        j["entity_id"] = p.entity_id;
        j["entity_name"] = p.entity_name;
        j["country"] = p.country;
        j["baseline"] = p.baseline;
        j["reference_volume"] = p.reference_volume;
        j["curve"] = p.curve;
        j["total"] = p.total;
        json dates = json::array();
        for (const auto& d : p.factcheck_dates) dates.push_back(d.to_iso());
        j["factcheck_dates"] = std::move(dates);
        arr.push_back(std::move(j));
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write profiles file: " + path);
    out << arr.dump() << "\n";
}

std::vector<AttentionProfile> read_profiles_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open profiles file: " + path);
    json arr = json::parse(in);
    std::vector<AttentionProfile> out;
    for (const auto& j : arr) {
        AttentionProfile p;
        p.entity_id = j.at("entity_id").get<std::string>();
        p.entity_name = j.value("entity_name", "");
        p.country = j.at("country").get<std::string>();
        p.baseline = j.at("baseline").get<double>();
        p.reference_volume = j.at("reference_volume").get<double>();
        p.curve = j.at("curve").get<std::vector<double>>();
        p.total = j.at("total").get<double>();
        for (const auto& d : j.at("factcheck_dates")) {
            auto date = parse_iso_date(d.get<std::string>());
            if (!date) throw std::runtime_error("profiles: bad fact-check date");
            p.factcheck_dates.push_back(*date);
        }
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace fcattn::attention
