#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fcattn/analysis.hpp"
#include "fcattn/synth.hpp"

using namespace fcattn;
using attention::AttentionProfile;

namespace {

const WeekGrid& grid() {
    static WeekGrid g = make_week_grid(2019);
    return g;
}

// Profile with a single jump of `total` at week `jump_week` of the analysis year.
AttentionProfile prof(const std::string& entity, const std::string& country, double total,
                      std::vector<Date> fc_dates = {}, std::size_t jump_week = 10) {
    AttentionProfile p;
    p.entity_id = entity;
    p.entity_name = entity + " name";
    p.country = country;
    p.baseline = 0.1;
    p.reference_volume = 1.0;
    p.curve.assign(grid().second_year_weeks(), 0.0);
    for (std::size_t i = jump_week; i < p.curve.size(); ++i) p.curve[i] = total;
    p.total = total;
    p.factcheck_dates = std::move(fc_dates);
    std::sort(p.factcheck_dates.begin(), p.factcheck_dates.end());
    return p;
}

Date d(int m, int day) { return Date{2020, m, day}; }

}  // namespace

TEST_CASE("topk log ratio basics") {
    std::vector<AttentionProfile> ps = {
        prof("/m/f1", "BR", 4.0, {d(3, 1)}),
        prof("/m/f2", "BR", 2.0, {d(4, 1)}),
        prof("/m/n1", "BR", 4.0),
        prof("/m/n2", "BR", 2.0),
    };
    CHECK(*analysis::topk_log_ratio(ps, 1) == doctest::Approx(0.0));
    CHECK(*analysis::topk_log_ratio(ps, 2) == doctest::Approx(0.0));
    CHECK_FALSE(analysis::topk_log_ratio(ps, 3).has_value());  // not enough on each side

    ps[0].total = 8.0;  // fc sum twice the other at k=1
    for (std::size_t i = 10; i < ps[0].curve.size(); ++i) ps[0].curve[i] = 8.0;
    CHECK(*analysis::topk_log_ratio(ps, 1) == doctest::Approx(1.0));

    std::vector<AttentionProfile> zero_den = {prof("/m/f1", "BR", 1.0, {d(3, 1)}),
                                              prof("/m/n1", "BR", 0.0)};
    CHECK_FALSE(analysis::topk_log_ratio(zero_den, 1).has_value());
}

TEST_CASE("a -0.81 log ratio means the fact-checked side is 0.566x the other") {
    std::vector<AttentionProfile> ps = {
        prof("/m/f1", "BR", std::pow(2.0, -0.81), {d(3, 1)}),
        prof("/m/n1", "BR", 1.0),
    };
    double r = *analysis::topk_log_ratio(ps, 1);
    CHECK(r == doctest::Approx(-0.81).epsilon(1e-9));
    CHECK(std::fabs(std::pow(2.0, r) - 0.566) < 0.005);
}

TEST_CASE("topk log ratio is antisymmetric under swapping the groups") {
    synth::SplitMix64 rng{606};
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<AttentionProfile> ps;
        int nfc = rng.uniform_int(2, 6), nnon = rng.uniform_int(2, 6);
        for (int i = 0; i < nfc; ++i)
            ps.push_back(prof("/m/f" + std::to_string(i), "BR", rng.uniform(0.1, 5.0), {d(3, 1)}));
        for (int i = 0; i < nnon; ++i)
            ps.push_back(prof("/m/n" + std::to_string(i), "BR", rng.uniform(0.1, 5.0)));
        auto swapped = ps;
        for (auto& p : swapped)
            p.factcheck_dates = p.fact_checked() ? std::vector<Date>{} : std::vector<Date>{d(3, 1)};
        int k = rng.uniform_int(1, std::min(nfc, nnon));
        auto a = analysis::topk_log_ratio(ps, k);
        auto b = analysis::topk_log_ratio(swapped, k);
        REQUIRE(a.has_value());
        REQUIRE(b.has_value());
        CHECK(*a == doctest::Approx(-*b).epsilon(1e-12));
    }
}

TEST_CASE("table2 percentage of fact-checked among the top ten") {
    std::vector<AttentionProfile> ps;
    for (int i = 0; i < 8; ++i)
        ps.push_back(prof("/m/f" + std::to_string(i), "BR", 10.0 - i, {d(3, 1)}));
    for (int i = 0; i < 4; ++i)
        ps.push_back(prof("/m/n" + std::to_string(i), "BR", 1.0 + 0.1 * i));
    auto row = analysis::table2_pct("BR", ps);
    CHECK(row.country == "BR");
    CHECK(row.n_top == 10);
    CHECK(row.pct == doctest::Approx(80.0));

    std::vector<AttentionProfile> none_fc = {prof("/m/n1", "IN", 2.0), prof("/m/n2", "IN", 1.0)};
    auto r2 = analysis::table2_pct("IN", none_fc);
    CHECK(r2.pct == 0.0);
    CHECK(r2.n_top == 2);  // fewer than 10 positive totals, noted

    std::vector<AttentionProfile> all_fc = {prof("/m/f1", "ZA", 2.0, {d(3, 1)}),
                                            prof("/m/f2", "ZA", 1.0, {d(4, 1)})};
    CHECK(analysis::table2_pct("ZA", all_fc).pct == 100.0);

    // zero-total profiles never count toward the top list
    std::vector<AttentionProfile> with_zero = {prof("/m/f1", "US", 1.0, {d(3, 1)}),
                                               prof("/m/z", "US", 0.0)};
    CHECK(analysis::table2_pct("US", with_zero).n_top == 1);
}

TEST_CASE("fact-check count buckets split at 0, 1, 2-5, 6+") {
    std::vector<Date> five(5, d(3, 1)), six(6, d(3, 1)), many(23, d(3, 1));
    std::vector<AttentionProfile> ps = {
        prof("/m/a", "BR", 1.0), prof("/m/b", "BR", 2.0, {d(3, 1)}),
        prof("/m/c", "BR", 3.0, five), prof("/m/d", "BR", 4.0, six),
        prof("/m/e", "BR", 5.0, many)};
    auto buckets = analysis::bucket_by_fc_count(ps);
    REQUIRE(buckets.count("0"));
    REQUIRE(buckets.count("1"));
    REQUIRE(buckets.count("2-5"));
    REQUIRE(buckets.count("6+"));
    CHECK(buckets["0"].n == 1);
    CHECK(buckets["0"].mean == 1.0);
    CHECK(buckets["1"].n == 1);
    CHECK(buckets["2-5"].n == 1);
    CHECK(buckets["2-5"].mean == 3.0);
    CHECK(buckets["6+"].n == 2);
}

TEST_CASE("most-fact-checked vs most-attended ratio") {
    std::vector<Date> three(3, d(3, 1));
    std::vector<AttentionProfile> ps = {
        prof("/m/a", "BR", 1.0, three),          // most fact-checked, small attention
        prof("/m/b", "BR", 4.0, {d(3, 1)}),      // most attention
        prof("/m/c", "BR", 2.0, {d(3, 1), d(4, 1)}),
    };
    auto r = analysis::most_fc_vs_most_attention_ratio(ps, 1);
    REQUIRE(r.has_value());
    CHECK(*r == doctest::Approx(std::log2(1.0 / 4.0)));

    // sets coincide -> 0
    std::vector<AttentionProfile> same = {prof("/m/a", "BR", 4.0, three),
                                          prof("/m/b", "BR", 1.0, {d(3, 1)})};
    CHECK(*analysis::most_fc_vs_most_attention_ratio(same, 1) == doctest::Approx(0.0));

    CHECK_FALSE(analysis::most_fc_vs_most_attention_ratio(ps, 4).has_value());
}

TEST_CASE("a -1.12 ratio is a 0.46 multiplier") {
    std::vector<Date> three(3, d(3, 1));
    std::vector<AttentionProfile> ps = {
        prof("/m/a", "BR", std::pow(2.0, -1.12), three),
        prof("/m/b", "BR", 1.0, {d(3, 1)}),
    };
    double r = *analysis::most_fc_vs_most_attention_ratio(ps, 1);
    CHECK(r == doctest::Approx(-1.12).epsilon(1e-9));
    CHECK(std::fabs(std::pow(2.0, r) - 0.46) < 0.005);
}

TEST_CASE("most-fc ratio is never positive") {
    synth::SplitMix64 rng{71};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<AttentionProfile> ps;
        int n = rng.uniform_int(2, 10);
        for (int i = 0; i < n; ++i) {
            std::vector<Date> dates(static_cast<std::size_t>(rng.uniform_int(1, 8)), d(3, 1));
            ps.push_back(
                prof("/m/x" + std::to_string(i), "BR", rng.uniform(0.0, 5.0), dates));
        }
        int k = rng.uniform_int(1, n);
        auto r = analysis::most_fc_vs_most_attention_ratio(ps, k);
        if (r) CHECK(*r <= 1e-12);
    }
}

TEST_CASE("relative attention at the k-th fact-check") {
    // jump at week 10 (2020-03-09); fc before the jump -> 0, at/after -> 1
    std::vector<AttentionProfile> ps = {
        prof("/m/a", "BR", 2.0, {d(1, 15), d(6, 1)}),   // k=1 -> 0.0, k=2 -> 1.0
        prof("/m/b", "BR", 3.0, {d(12, 20)}),           // k=1 -> 1.0
        prof("/m/z", "BR", 0.0, {d(3, 1)}),             // zero total, excluded
        prof("/m/n", "BR", 5.0),                        // never fact-checked
    };
    auto k1 = analysis::rel_attention_at_kth(ps, grid(), 1);
    CHECK(k1.k == 1);
    CHECK(k1.n == 2);
    CHECK(k1.mean == doctest::Approx(0.5));
    auto k2 = analysis::rel_attention_at_kth(ps, grid(), 2);
    CHECK(k2.n == 1);
    CHECK(k2.mean == doctest::Approx(1.0));
    auto k3 = analysis::rel_attention_at_kth(ps, grid(), 3);
    CHECK(k3.n == 0);
    CHECK_THROWS_AS(analysis::rel_attention_at_kth(ps, grid(), 0), std::invalid_argument);
}

namespace {

std::vector<AttentionProfile> report_fixture() {
    std::vector<AttentionProfile> ps;
    // 3 countries; BR and IN pass the min-fc scenario with min_fc_claims=2.
    ps.push_back(prof("/m/a", "BR", 3.0, {d(2, 10)}, 5));
    ps.push_back(prof("/m/b", "BR", 2.0, {d(3, 10), d(5, 5)}, 8));
    ps.push_back(prof("/m/c", "BR", 1.0, {}, 12));
    ps.push_back(prof("/m/a", "IN", 2.5, {d(4, 2)}, 6));
    ps.push_back(prof("/m/b", "IN", 1.5, {d(6, 6)}, 20));
    ps.push_back(prof("/m/c", "IN", 0.5, {}, 30));
    ps.push_back(prof("/m/a", "ZA", 4.0, {d(7, 7)}, 9));
    ps.push_back(prof("/m/b", "ZA", 0.0, {d(8, 8)}, 9));  // zero-total fact-checked
    ps.push_back(prof("/m/c", "ZA", 2.0, {}, 9));
    return ps;
}

}  // namespace

TEST_CASE("build_report assembles both scenarios and carries n everywhere") {
    analysis::ReportParams params;
    params.min_fc_claims = 2;
    params.min_fc_countries = 2;
    params.kmax = 3;
    auto rep = analysis::build_report(report_fixture(), grid(), params);

    CHECK(rep.fc_summary.n == 6);
    CHECK(rep.nonfc_summary.n == 3);
    REQUIRE(rep.topk_log_ratios.count("all"));
    REQUIRE(rep.topk_log_ratios.count("min_fc"));
    CHECK(rep.topk_log_ratios["all"].size() == 3);
    // every country has 2 fact-checked claims, so all pass the min-fc gate
    REQUIRE(rep.table2.size() == 3);
    CHECK(rep.table2[0].country == "BR");
    CHECK(rep.table2[2].country == "ZA");

    CHECK(rep.zero_total_excluded == 1);
    REQUIRE(rep.relative_attention_at_k.size() == 3);
    CHECK(rep.relative_attention_at_k[0].k == 1);
    CHECK(rep.relative_attention_at_k[0].n == 5);  // 6 fc pairs minus the zero-total one

    // per-claim rows need >= 2 countries: /m/a (3 countries), /m/b (2 with signal)
    REQUIRE(rep.per_claim.size() == 2);
    CHECK(rep.per_claim[0].key == "/m/a");
    CHECK(rep.per_claim[0].n == 3);
    CHECK(rep.per_claim[1].key == "/m/b");
    CHECK(rep.per_claim[1].n == 2);

    // per-country rows follow the min-fc scenario; ZA has a single eligible
    // pair and gets a degenerate interval rather than being dropped
    REQUIRE(rep.per_country.size() == 3);
    CHECK(rep.per_country[0].key == "BR");
    CHECK(rep.per_country[2].key == "ZA");
    CHECK(rep.per_country[2].n == 1);
    CHECK(rep.per_country[2].rel_lo == rep.per_country[2].rel_mean);

    CHECK(rep.spearman.count("claim_rel_vs_total") == 1);
    CHECK(rep.spearman.count("claim_rel_vs_first_fc_day") == 1);
    CHECK(rep.spearman.count("country_rel_vs_total") == 1);
    // 2 claims only: spearman needs n >= 3, so the claim rows carry errors
    CHECK_FALSE(rep.spearman["claim_rel_vs_total"].error.empty());
    CHECK(rep.ancova.count("by_claim") == 1);
    CHECK(rep.ancova.count("by_country") == 1);
    CHECK(rep.ancova["by_claim"].n == 5);
}

TEST_CASE("report writing is deterministic across runs") {
    analysis::ReportParams params;
    params.min_fc_claims = 2;
    params.min_fc_countries = 2;
    params.kmax = 3;
    auto ps = report_fixture();
    auto r1 = analysis::build_report(ps, grid(), params);
    auto r2 = analysis::build_report(ps, grid(), params);
    analysis::write_report_json("report_a.json", r1);
    analysis::write_report_json("report_b.json", r2);
    std::ifstream a("report_a.json"), b("report_b.json");
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
    CHECK(sa.str().find("rq1") != std::string::npos);
    std::remove("report_a.json");
    std::remove("report_b.json");
}

TEST_CASE("csv and plot series emitters produce the expected files") {
    analysis::ReportParams params;
    params.min_fc_claims = 2;
    params.min_fc_countries = 2;
    params.kmax = 3;
    auto rep = analysis::build_report(report_fixture(), grid(), params);

    std::string dir = "analysis_out_test";
    std::filesystem::remove_all(dir);
    analysis::write_tables_csv(dir + "/tables", rep);
    analysis::write_plot_series(dir + "/plots", rep);

    std::ifstream t2(dir + "/tables/table2.csv");
    REQUIRE(t2.good());
    std::string header;
    std::getline(t2, header);
    CHECK(header == "country,pct_top10_fact_checked,n_top");

    for (const char* name :
         {"topk_log_ratio_all", "topk_log_ratio_min_fc", "most_fc_ratio_all",
          "most_fc_ratio_min_fc", "relative_attention_at_k", "per_claim", "per_country"}) {
        std::ifstream f(dir + "/plots/" + name + ".csv");
        CHECK_MESSAGE(f.good(), name);
    }
    std::ifstream katt(dir + "/plots/relative_attention_at_k.csv");
    std::getline(katt, header);
    CHECK(header == "x,y,ci_lo,ci_hi,n");

    std::filesystem::remove_all(dir);
}
