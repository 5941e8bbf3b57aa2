#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fcattn/attention.hpp"
#include "fcattn/stats.hpp"

namespace fcattn::analysis {

using attention::AttentionProfile;

// log2( sum of top-k fact-checked totals / sum of top-k non-fact-checked
// totals ) for one country. nullopt when the country lacks k profiles on
// either side or the denominator sum is zero.
std::optional<double> topk_log_ratio(const std::vector<AttentionProfile>& country_profiles, int k);

struct Table2Row {
    std::string country;
    double pct = 0;   // share of the top totals that were fact-checked
    int n_top = 0;    // profiles actually used (10 unless fewer have positive totals)
};

Table2Row table2_pct(const std::string& country,
                     const std::vector<AttentionProfile>& country_profiles);

// Buckets by fact-check count: 0, 1, 2-5, >=6.
std::map<std::string, stats::DistributionSummary> bucket_by_fc_count(
    const std::vector<AttentionProfile>& profiles);

// log2( sum of totals of the k most fact-checked / sum of the k largest
// totals among fact-checked ). Always <= 0.
std::optional<double> most_fc_vs_most_attention_ratio(
    const std::vector<AttentionProfile>& country_profiles, int k);

struct KthRow {
    int k = 0;
    double mean = 0;
    double se = 0;
    std::size_t n = 0;
};

// Mean relative attention at the k-th fact-check over all eligible
// profiles (>= k fact-checks, total > 0).
KthRow rel_attention_at_kth(const std::vector<AttentionProfile>& profiles, const WeekGrid& grid,
                            int k);

struct CiRow {
    int k = 0;
    double mean = 0;
    double ci_lo = 0, ci_hi = 0;
    std::size_t n = 0;
};

struct AggregateRow {
    std::string key;  // entity id or country code
    std::string name;
    std::size_t n = 0;
    double rel_mean = 0, rel_lo = 0, rel_hi = 0;
    double total_mean = 0, total_lo = 0, total_hi = 0;
    double day_mean = 0;  // mean day of first fact-check (days since Jan 1)
};

struct ReportParams {
    int min_fc_claims = 10;    // "countries with >= N fact-checked claims" scenario
    int min_fc_countries = 10; // per-claim rows need the claim fact-checked in >= N countries
    int kmax = 10;
};

struct SpearmanRow {
    double rho = 0;
    double p_value = 1;
    std::size_t n = 0;
    std::string error;  // non-empty when undefined (constant input, n too small)
};

struct AncovaRow {
    stats::AncovaResult result;
    std::size_t n = 0;
    std::string error;
};

struct AnalysisReport {
    ReportParams params;
    // RQ1
    stats::DistributionSummary fc_summary;
    stats::DistributionSummary nonfc_summary;
    std::map<std::string, std::vector<CiRow>> topk_log_ratios;  // scenario -> rows
    std::vector<Table2Row> table2;
    std::map<std::string, stats::DistributionSummary> buckets;
    std::map<std::string, std::vector<CiRow>> most_fc_ratios;   // scenario -> rows
    // RQ2
    std::vector<KthRow> relative_attention_at_k;
    std::vector<AggregateRow> per_claim;
    std::vector<AggregateRow> per_country;
    std::map<std::string, SpearmanRow> spearman;  // named correlations
    std::map<std::string, AncovaRow> ancova;      // "by_claim", "by_country"
    std::size_t zero_total_excluded = 0;  // flagged pairs left out of relative-attention stats
};

AnalysisReport build_report(const std::vector<AttentionProfile>& profiles, const WeekGrid& grid,
                            const ReportParams& params);

void write_report_json(const std::string& path, const AnalysisReport& report);
void write_tables_csv(const std::string& dir, const AnalysisReport& report);
void write_plot_series(const std::string& dir, const AnalysisReport& report);

}  // namespace fcattn::analysis
