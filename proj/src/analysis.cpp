#include "fcattn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace fcattn::analysis {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Descending by total attention, ties by entity id (deterministic top-k).
bool by_total_desc(const AttentionProfile* a, const AttentionProfile* b) {
    if (a->total != b->total) return a->total > b->total;
    return a->entity_id < b->entity_id;
}

std::vector<const AttentionProfile*> sorted_by_total(
    const std::vector<AttentionProfile>& profiles, bool fact_checked) {
    std::vector<const AttentionProfile*> out;
    for (const auto& p : profiles)
        if (p.fact_checked() == fact_checked) out.push_back(&p);
    std::sort(out.begin(), out.end(), by_total_desc);
    return out;
}

double top_sum(const std::vector<const AttentionProfile*>& sorted, int k) {
    double s = 0;
    for (int i = 0; i < k; ++i) s += sorted[static_cast<std::size_t>(i)]->total;
    return s;
}

}  // namespace

std::optional<double> topk_log_ratio(const std::vector<AttentionProfile>& country_profiles,
                                     int k) {
    auto fc = sorted_by_total(country_profiles, true);
    auto nonfc = sorted_by_total(country_profiles, false);
    if (static_cast<int>(fc.size()) < k || static_cast<int>(nonfc.size()) < k) return std::nullopt;
    double num = top_sum(fc, k);
    double den = top_sum(nonfc, k);
    if (den <= 0.0) return std::nullopt;
    return std::log2(num / den);
}

Table2Row table2_pct(const std::string& country,
                     const std::vector<AttentionProfile>& country_profiles) {
    std::vector<const AttentionProfile*> all;
    for (const auto& p : country_profiles)
        if (p.total > 0.0) all.push_back(&p);
    std::sort(all.begin(), all.end(), by_total_desc);

    Table2Row row;
    row.country = country;
    row.n_top = std::min<int>(10, static_cast<int>(all.size()));
    if (row.n_top == 0) return row;
    int fc = 0;
    for (int i = 0; i < row.n_top; ++i)
        if (all[static_cast<std::size_t>(i)]->fact_checked()) ++fc;
    row.pct = 100.0 * fc / row.n_top;
    return row;
}

std::map<std::string, stats::DistributionSummary> bucket_by_fc_count(
    const std::vector<AttentionProfile>& profiles) {
    std::map<std::string, std::vector<double>> values;
    for (const auto& p : profiles) {
        std::size_t c = p.factcheck_dates.size();
        const char* bucket = c == 0 ? "0" : c == 1 ? "1" : c <= 5 ? "2-5" : "6+";
        values[bucket].push_back(p.total);
    }
    std::map<std::string, stats::DistributionSummary> out;
    for (auto& [bucket, v] : values) out[bucket] = stats::summarize(v);
    return out;
}

std::optional<double> most_fc_vs_most_attention_ratio(
    const std::vector<AttentionProfile>& country_profiles, int k) {
    std::vector<const AttentionProfile*> fc;
    for (const auto& p : country_profiles)
        if (p.fact_checked()) fc.push_back(&p);
    if (static_cast<int>(fc.size()) < k) return std::nullopt;

    auto by_count = fc;
    std::sort(by_count.begin(), by_count.end(),
              [](const AttentionProfile* a, const AttentionProfile* b) {
                  if (a->factcheck_dates.size() != b->factcheck_dates.size())
                      return a->factcheck_dates.size() > b->factcheck_dates.size();
                  return by_total_desc(a, b);
              });
    std::sort(fc.begin(), fc.end(), by_total_desc);

    double num = top_sum(by_count, k);
    double den = top_sum(fc, k);
    if (den <= 0.0) return std::nullopt;
    return std::log2(num / den);
}

KthRow rel_attention_at_kth(const std::vector<AttentionProfile>& profiles, const WeekGrid& grid,
                            int k) {
    if (k < 1) throw std::invalid_argument("rel_attention_at_kth: k must be >= 1");
    std::vector<double> vals;
    for (const auto& p : profiles) {
        if (static_cast<int>(p.factcheck_dates.size()) < k || !(p.total > 0.0)) continue;
        vals.push_back(
            attention::relative_attention_at(p, grid, p.factcheck_dates[static_cast<std::size_t>(k - 1)]));
    }
    KthRow row;
    row.k = k;
    row.n = vals.size();
    if (!vals.empty()) {
        auto s = stats::summarize(vals);
        row.mean = s.mean;
        row.se = s.standard_error;
    }
    return row;
}

namespace {

CiRow ci_row_from(int k, const std::vector<double>& vals) {
    CiRow row;
    row.k = k;
    row.n = vals.size();
    if (vals.size() >= 2) {
        auto ci = stats::mean_ci(vals);
        row.mean = ci.mean;
        row.ci_lo = ci.lower;
        row.ci_hi = ci.upper;
    } else if (vals.size() == 1) {
        row.mean = row.ci_lo = row.ci_hi = vals[0];
    }
    return row;
}

int day_of_year(const WeekGrid& grid, const Date& d) {
    // Days since Jan 1 of the analysis year (the year of the first
    // analysis week's Thursday).
    Date thursday = civil_from_days(days_from_civil(grid.mondays[grid.split]) + 3);
    return static_cast<int>(days_from_civil(d) - days_from_civil(Date{thursday.year, 1, 1}));
}

}  // namespace

AnalysisReport build_report(const std::vector<AttentionProfile>& profiles, const WeekGrid& grid,
                            const ReportParams& params) {
    AnalysisReport rep;
    rep.params = params;

    std::map<std::string, std::vector<AttentionProfile>> by_country;
    for (const auto& p : profiles) by_country[p.country].push_back(p);

    // RQ1: fact-checked vs non-fact-checked totals.
    std::vector<double> fc_totals, nonfc_totals;
    for (const auto& p : profiles)
        (p.fact_checked() ? fc_totals : nonfc_totals).push_back(p.total);
    if (!fc_totals.empty()) rep.fc_summary = stats::summarize(fc_totals);
    if (!nonfc_totals.empty()) rep.nonfc_summary = stats::summarize(nonfc_totals);

    auto country_in_min_scenario = [&](const std::vector<AttentionProfile>& ps) {
        int fc = 0;
        for (const auto& p : ps) fc += p.fact_checked() ? 1 : 0;
        return fc >= params.min_fc_claims;
    };

    for (const char* scenario : {"all", "min_fc"}) {
        bool restrict = std::string(scenario) == "min_fc";
        std::vector<CiRow>& topk_rows = rep.topk_log_ratios[scenario];
        std::vector<CiRow>& mfc_rows = rep.most_fc_ratios[scenario];
        for (int k = 1; k <= params.kmax; ++k) {
            std::vector<double> ratios, mfc;
            for (const auto& [country, ps] : by_country) {
                if (restrict && !country_in_min_scenario(ps)) continue;
                if (auto r = topk_log_ratio(ps, k)) ratios.push_back(*r);
                if (auto r = most_fc_vs_most_attention_ratio(ps, k)) mfc.push_back(*r);
            }
            topk_rows.push_back(ci_row_from(k, ratios));
            mfc_rows.push_back(ci_row_from(k, mfc));
        }
    }

    for (const auto& [country, ps] : by_country)
        if (country_in_min_scenario(ps)) rep.table2.push_back(table2_pct(country, ps));

    rep.buckets = bucket_by_fc_count(profiles);

    // RQ2.
    for (const auto& p : profiles)
        if (p.fact_checked() && !(p.total > 0.0)) ++rep.zero_total_excluded;

    for (int k = 1; k <= params.kmax; ++k)
        rep.relative_attention_at_k.push_back(rel_attention_at_kth(profiles, grid, k));

    // Eligible pairs for relative-attention analyses.
    struct PairObs {
        const AttentionProfile* p;
        double rel_first;
        int day_first;
    };
    std::vector<PairObs> pairs;
    for (const auto& p : profiles) {
        if (!p.fact_checked() || !(p.total > 0.0)) continue;
        pairs.push_back({&p, attention::relative_attention_at(p, grid, p.factcheck_dates.front()),
                         day_of_year(grid, p.factcheck_dates.front())});
    }

    auto aggregate = [&](auto key_of, auto name_of, int min_n) {
        std::map<std::string, std::vector<const PairObs*>> groups;
        for (const auto& obs : pairs) groups[key_of(*obs.p)].push_back(&obs);
        std::vector<AggregateRow> rows;
        for (const auto& [key, obs] : groups) {
            if (static_cast<int>(obs.size()) < min_n) continue;
            std::vector<double> rels, totals, days;
            for (const auto* o : obs) {
                rels.push_back(o->rel_first);
                totals.push_back(o->p->total);
                days.push_back(o->day_first);
            }
            AggregateRow row;
            row.key = key;
            row.name = name_of(*obs.front()->p);
            row.n = obs.size();
            auto ci_of = [](const std::vector<double>& v) {
                if (v.size() >= 2) return stats::mean_ci(v);
                return stats::MeanCI{v[0], v[0], v[0]};  // single observation: degenerate interval
            };
            auto rci = ci_of(rels);
            auto tci = ci_of(totals);
            row.rel_mean = rci.mean;
            row.rel_lo = rci.lower;
            row.rel_hi = rci.upper;
            row.total_mean = tci.mean;
            row.total_lo = tci.lower;
            row.total_hi = tci.upper;
            row.day_mean = std::accumulate(days.begin(), days.end(), 0.0) /
                           static_cast<double>(days.size());
            rows.push_back(std::move(row));
        }
        return rows;
    };

    rep.per_claim = aggregate([](const AttentionProfile& p) { return p.entity_id; },
                              [](const AttentionProfile& p) { return p.entity_name; },
                              params.min_fc_countries);
    rep.per_country = aggregate([](const AttentionProfile& p) { return p.country; },
                                [](const AttentionProfile& p) { return p.country; }, 1);
    // Country rows follow the min-fc-claims scenario.
    std::erase_if(rep.per_country, [&](const AggregateRow& row) {
        return !country_in_min_scenario(by_country[row.key]);
    });

    auto run_spearman = [&](const std::vector<double>& x, const std::vector<double>& y) {
        SpearmanRow row;
        row.n = x.size();
        try {
            auto r = stats::spearman(x, y);
            row.rho = r.rho;
            row.p_value = r.p_value;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        return row;
    };

    {
        std::vector<double> rel, total, day;
        for (const auto& row : rep.per_claim) {
            rel.push_back(row.rel_mean);
            total.push_back(row.total_mean);
            day.push_back(row.day_mean);
        }
        rep.spearman["claim_rel_vs_total"] = run_spearman(total, rel);
        rep.spearman["claim_rel_vs_first_fc_day"] = run_spearman(day, rel);
    }
    {
        std::vector<double> rel, total;
        for (const auto& row : rep.per_country) {
            rel.push_back(row.rel_mean);
            total.push_back(row.total_mean);
        }
        rep.spearman["country_rel_vs_total"] = run_spearman(total, rel);
    }

    auto run_ancova = [&](auto key_of) {
        AncovaRow row;
        std::vector<double> response, total, day;
        std::vector<std::string> group;
        for (const auto& obs : pairs) {
            response.push_back(obs.rel_first);
            group.push_back(key_of(*obs.p));
            total.push_back(obs.p->total);
            day.push_back(obs.day_first);
        }
        row.n = response.size();
        try {
            row.result = stats::ancova(response, group, {total, day});
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        return row;
    };
    rep.ancova["by_claim"] = run_ancova([](const AttentionProfile& p) { return p.entity_id; });
    rep.ancova["by_country"] = run_ancova([](const AttentionProfile& p) { return p.country; });

    return rep;
}

namespace {

json summary_to_json(const stats::DistributionSummary& s) {
    return {{"n", s.n},        {"mean", s.mean},     {"se", s.standard_error},
            {"q1", s.q1},      {"median", s.median}, {"q3", s.q3},
            {"p5", s.p5},      {"p95", s.p95}};
}

json ci_rows_to_json(const std::vector<CiRow>& rows) {
    json arr = json::array();
    for (const auto& r : rows)
        arr.push_back({{"k", r.k}, {"mean", r.mean}, {"ci_lo", r.ci_lo}, {"ci_hi", r.ci_hi},
                       {"n", r.n}});
    return arr;
}

json aggregate_rows_to_json(const std::vector<AggregateRow>& rows) {
    json arr = json::array();
    for (const auto& r : rows)
        arr.push_back({{"key", r.key},
                       {"name", r.name},
                       {"n", r.n},
                       {"rel_mean", r.rel_mean},
                       {"rel_ci_lo", r.rel_lo},
                       {"rel_ci_hi", r.rel_hi},
                       {"total_mean", r.total_mean},
                       {"total_ci_lo", r.total_lo},
                       {"total_ci_hi", r.total_hi},
                       {"first_fc_day_mean", r.day_mean}});
    return arr;
}

}  // namespace

void write_report_json(const std::string& path, const AnalysisReport& rep) {
    json j;
    j["params"] = {{"min_fc_claims", rep.params.min_fc_claims},
                   {"min_fc_countries", rep.params.min_fc_countries},
                   {"kmax", rep.params.kmax}};

    json rq1;
    rq1["fc_summary"] = summary_to_json(rep.fc_summary);
    rq1["nonfc_summary"] = summary_to_json(rep.nonfc_summary);
    json ratios;
    for (const auto& [scenario, rows] : rep.topk_log_ratios)
        ratios[scenario] = ci_rows_to_json(rows);
    rq1["topk_log_ratios"] = std::move(ratios);
    json t2 = json::array();
    for (const auto& row : rep.table2)
        t2.push_back({{"country", row.country}, {"pct", row.pct}, {"n_top", row.n_top}});
    rq1["table2"] = std::move(t2);
    json buckets;
    for (const auto& [b, s] : rep.buckets) buckets[b] = summary_to_json(s);
    rq1["buckets"] = std::move(buckets);
    json mfc;
    for (const auto& [scenario, rows] : rep.most_fc_ratios) mfc[scenario] = ci_rows_to_json(rows);
    rq1["most_fc_vs_most_attention"] = std::move(mfc);
    j["rq1"] = std::move(rq1);

    json rq2;
    json katt = json::array();
    for (const auto& r : rep.relative_attention_at_k)
        katt.push_back({{"k", r.k}, {"mean", r.mean}, {"se", r.se}, {"n", r.n}});
    rq2["relative_attention_at_k"] = std::move(katt);
    rq2["per_claim"] = aggregate_rows_to_json(rep.per_claim);
    rq2["per_country"] = aggregate_rows_to_json(rep.per_country);
    json sp;
    for (const auto& [name, row] : rep.spearman) {
        json r = {{"rho", row.rho}, {"p", row.p_value}, {"n", row.n}};
        if (!row.error.empty()) r["error"] = row.error;
        sp[name] = std::move(r);
    }
    rq2["spearman"] = std::move(sp);
    json an;
    for (const auto& [name, row] : rep.ancova) {
        json r = {{"F", row.result.saturated ? json("inf") : json(row.result.f)},
                  {"p", row.result.p_value},
                  {"df_between", row.result.df_between},
                  {"df_resid", row.result.df_resid},
                  {"saturated", row.result.saturated},
                  {"n", row.n}};
        if (!row.error.empty()) r["error"] = row.error;
        an[name] = std::move(r);
    }
    rq2["ancova"] = std::move(an);
    rq2["zero_total_excluded"] = rep.zero_total_excluded;
    j["rq2"] = std::move(rq2);

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << j.dump(2) << "\n";
}

void write_tables_csv(const std::string& dir, const AnalysisReport& rep) {
    fs::create_directories(dir);
    std::ofstream out(dir + "/table2.csv");
    out << "country,pct_top10_fact_checked,n_top\n";
    for (const auto& row : rep.table2)
        out << row.country << "," << row.pct << "," << row.n_top << "\n";
}

void write_plot_series(const std::string& dir, const AnalysisReport& rep) {
    fs::create_directories(dir);
    auto dump_ci = [&](const std::string& name, const std::vector<CiRow>& rows) {
        std::ofstream out(dir + "/" + name + ".csv");
        out << "x,y,ci_lo,ci_hi,n\n";
        for (const auto& r : rows)
            out << r.k << "," << r.mean << "," << r.ci_lo << "," << r.ci_hi << "," << r.n << "\n";
    };
    for (const auto& [scenario, rows] : rep.topk_log_ratios)
        dump_ci("topk_log_ratio_" + scenario, rows);
    for (const auto& [scenario, rows] : rep.most_fc_ratios)
        dump_ci("most_fc_ratio_" + scenario, rows);
    {
        std::ofstream out(dir + "/relative_attention_at_k.csv");
        out << "x,y,ci_lo,ci_hi,n\n";
        for (const auto& r : rep.relative_attention_at_k) {
            double half = r.n >= 2
                              ? stats::t_quantile(0.975, static_cast<double>(r.n - 1)) * r.se
                              : 0.0;
            out << r.k << "," << r.mean << "," << (r.mean - half) << "," << (r.mean + half) << ","
                << r.n << "\n";
        }
    }
    auto dump_agg = [&](const std::string& name, const std::vector<AggregateRow>& rows) {
        std::ofstream out(dir + "/" + name + ".csv");
        out << "key,name,rel_mean,rel_ci_lo,rel_ci_hi,total_mean,total_ci_lo,total_ci_hi,n\n";
        for (const auto& r : rows)
            out << r.key << "," << r.name << "," << r.rel_mean << "," << r.rel_lo << ","
                << r.rel_hi << "," << r.total_mean << "," << r.total_lo << "," << r.total_hi
                << "," << r.n << "\n";
    };
    dump_agg("per_claim", rep.per_claim);
    dump_agg("per_country", rep.per_country);
}

}  // namespace fcattn::analysis
