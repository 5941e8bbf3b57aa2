#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fcattn/cluster.hpp"
#include "fcattn/dates.hpp"
#include "fcattn/ingest.hpp"
#include "fcattn/trends.hpp"

namespace fcattn::attention {

struct AttentionProfile {
    std::string entity_id;
    std::string entity_name;
    std::string country;
    double baseline = 0;          // b: mean weekly volume in the baseline year
    double reference_volume = 0;  // r: mean weekly volume of the reference entity
    std::vector<double> curve;    // cumulative attention per analysis-year week
    double total = 0;             // curve.back()
    std::vector<Date> factcheck_dates;  // sorted ascending

    bool fact_checked() const { return !factcheck_dates.empty(); }
};

// Arithmetic mean of the baseline-year weekly values.
double baseline(const std::vector<double>& series_year1);

// curve[i] = (1/r) * sum_{k<=i} max(v_k - b, 0).
std::vector<double> attention_curve(const std::vector<double>& series_year2, double b, double r);

// curve[week(date)] / total, clamped to 0 before the analysis year and 1
// after it. Requires total > 0.
double relative_attention_at(const AttentionProfile& profile, const WeekGrid& grid,
                             const Date& date);

struct BuildReport {
    std::vector<AttentionProfile> profiles;
    int no_signal_pairs = 0;                 // cache misses (provider had no signal)
    std::vector<std::string> skipped_pairs;  // named exclusions (e.g. missing baseline year)
};

// Joins calibrated series, linked clusters and fact-check records into one
// profile per <entity, country> with data. The reference entity's series
// must be present for every country.
BuildReport build_profiles(const trends::SeriesCache& cache,
                           const std::vector<cluster::ClaimCluster>& linked,
                           const std::vector<ingest::FactCheckRecord>& records,
                           const std::vector<std::string>& countries,
                           const std::string& reference_entity, const WeekGrid& grid);

void write_profiles_json(const std::string& path, const std::vector<AttentionProfile>& profiles);
std::vector<AttentionProfile> read_profiles_json(const std::string& path);

}  // namespace fcattn::attention
