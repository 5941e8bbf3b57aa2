#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "fcattn/attention.hpp"
#include "fcattn/synth.hpp"
#include "fcattn/trends.hpp"

using namespace fcattn;

namespace {

// A hand-built world with constant series for exact normalization checks.
synth::SynthWorld constant_world(std::map<std::string, double> levels) {
    synth::SynthWorld w;
    w.config.countries = {"US"};
    w.config.reference = "ref";
    w.grid = make_week_grid(2019);
    for (const auto& [q, level] : levels)
        w.true_popularity["US"][q] = std::vector<double>(w.grid.size(), level);
    return w;
}

int max_of(const std::vector<int>& v) { return *std::max_element(v.begin(), v.end()); }

double total_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0);
}

}  // namespace

TEST_CASE("group normalization: maxima 200 and 100 come back as 100 and 50") {
    auto w = constant_world({{"a", 200.0}, {"b", 100.0}, {"ref", 1000.0}});
    synth::SimTrendsProvider p(w);
    auto resp = p.fetch_group({"a", "b"}, "US", w.grid);
    REQUIRE(resp.series.size() == 2);
    REQUIRE(resp.find("a")->values.has_value());
    REQUIRE(resp.find("b")->values.has_value());
    CHECK(max_of(*resp.find("a")->values) == 100);
    CHECK(max_of(*resp.find("b")->values) == 50);
}

TEST_CASE("group normalization: 300 and 60 come back as 100 and 20") {
    auto w = constant_world({{"a", 300.0}, {"b", 60.0}, {"ref", 1000.0}});
    synth::SimTrendsProvider p(w);
    auto resp = p.fetch_group({"a", "b"}, "US", w.grid);
    CHECK(max_of(*resp.find("a")->values) == 100);
    CHECK(max_of(*resp.find("b")->values) == 20);
}

TEST_CASE("single query self-normalizes to max 100") {
    auto w = constant_world({{"a", 123.0}});
    synth::SimTrendsProvider p(w);
    auto resp = p.fetch_group({"a"}, "US", w.grid);
    CHECK(max_of(*resp.find("a")->values) == 100);
}

TEST_CASE("below-threshold and unknown queries come back empty") {
    auto w = constant_world({{"big", 1000.0}, {"tiny", 1.0}});
    synth::SimTrendsProvider p(w);
    auto resp = p.fetch_group({"big", "tiny", "ghost"}, "US", w.grid);
    CHECK(resp.find("big")->values.has_value());
    CHECK_FALSE(resp.find("tiny")->values.has_value());  // mean < 1% of group max
    CHECK_FALSE(resp.find("ghost")->values.has_value());
    CHECK_FALSE(resp.all_empty());

    auto none = p.fetch_group({"ghost"}, "US", w.grid);
    CHECK(none.all_empty());
}

TEST_CASE("group size limits are enforced") {
    auto w = constant_world({{"a", 10.0}});
    synth::SimTrendsProvider p(w);
    CHECK_THROWS_AS(p.fetch_group({}, "US", w.grid), std::invalid_argument);
    CHECK_THROWS_AS(p.fetch_group({"a", "a", "a", "a", "a", "a"}, "US", w.grid),
                    std::invalid_argument);
}

TEST_CASE("anchor bank from a two-candidate chain carries interval error bounds") {
    auto w = constant_world({{"ref", 1000.0}, {"a", 200.0}});
    synth::SimTrendsProvider p(w);
    auto bank = trends::build_anchor_bank(p, {"ref", "a"}, "ref", "US", w.grid);
    REQUIRE(bank.anchors.size() == 2);
    CHECK(bank.anchors[0].query == "ref");
    CHECK(bank.anchors[0].ratio_to_reference == 1.0);
    CHECK(bank.anchors[0].error_bound == 0.0);
    CHECK(bank.anchors[1].query == "a");
    CHECK(bank.anchors[1].ratio_to_reference == doctest::Approx(0.2));
    CHECK(bank.anchors[1].ratio_lo == doctest::Approx(19.5 / 100.5));
    CHECK(bank.anchors[1].ratio_hi == doctest::Approx(20.5 / 99.5));
    CHECK(bank.anchors[1].error_bound > 0.0);
    CHECK(std::isfinite(bank.anchors[1].error_bound));
    // strictly decreasing ratios
    for (std::size_t i = 1; i < bank.anchors.size(); ++i)
        CHECK(bank.anchors[i].ratio_to_reference < bank.anchors[i - 1].ratio_to_reference);
}

TEST_CASE("degenerate bank holds the reference alone") {
    auto w = constant_world({{"ref", 1000.0}});
    synth::SimTrendsProvider p(w);
    auto bank = trends::build_anchor_bank(p, {"ref"}, "ref", "US", w.grid);
    REQUIRE(bank.anchors.size() == 1);
    CHECK(bank.anchors[0].query == "ref");
}

TEST_CASE("candidates empty in every pairing are excluded") {
    auto w = constant_world({{"ref", 1000.0}, {"a", 300.0}, {"dust", 0.5}});
    synth::SimTrendsProvider p(w);
    auto bank = trends::build_anchor_bank(p, {"ref", "a", "dust"}, "ref", "US", w.grid);
    CHECK(bank.anchors.size() == 2);
    for (const auto& a : bank.anchors) CHECK(a.query != "dust");
}

TEST_CASE("bank construction fails when nothing can chain to the reference") {
    auto w = constant_world({{"ref", 1000.0}, {"dust", 0.5}});
    synth::SimTrendsProvider p(w);
    CHECK_THROWS_AS(trends::build_anchor_bank(p, {"ref", "dust"}, "ref", "US", w.grid),
                    trends::BankBuildError);
}

TEST_CASE("calibrating the reference itself yields its self-normalized shape") {
    auto w = constant_world({{"ref", 1000.0}});
    synth::SimTrendsProvider p(w);
    auto bank = trends::build_anchor_bank(p, {"ref"}, "ref", "US", w.grid);
    auto s = trends::calibrate(p, bank, "ref", "US", w.grid);
    REQUIRE(s.has_value());
    CHECK(s->values.size() == w.grid.size());
    CHECK(*std::max_element(s->values.begin(), s->values.end()) == doctest::Approx(1.0));
}

TEST_CASE("direct co-query with the reference recovers a 0.5 ratio") {
    auto w = constant_world({{"ref", 1000.0}, {"e", 500.0}});
    synth::SimTrendsProvider p(w);
    auto bank = trends::build_anchor_bank(p, {"ref"}, "ref", "US", w.grid);
    auto s = trends::calibrate(p, bank, "e", "US", w.grid);
    REQUIRE(s.has_value());
    for (double v : s->values) CHECK(v == doctest::Approx(0.5).epsilon(0.02));
    double true_total = total_of(w.true_series_ref_units("US", "e"));
    double got_total = total_of(s->values);
    CHECK(std::fabs(got_total / true_total - 1.0) <= s->error_bound);
}

TEST_CASE("entity with no signal against any anchor returns nullopt") {
    auto w = constant_world({{"ref", 1000.0}, {"tiny", 0.5}});
    synth::SimTrendsProvider p(w);
    auto bank = trends::build_anchor_bank(p, {"ref"}, "ref", "US", w.grid);
    CHECK_FALSE(trends::calibrate(p, bank, "tiny", "US", w.grid).has_value());
    CHECK_FALSE(trends::calibrate(p, bank, "ghost", "US", w.grid).has_value());
}

namespace {

synth::WorldConfig small_config() {
    synth::WorldConfig c;
    c.countries = {"US", "BR", "IN"};
    c.entities = {"/m/e01", "/m/e02", "/m/e03", "/m/e04", "/m/e05", "/m/e06"};
    c.reference = "/m/045c7b";
    c.anchor_candidates = {{"anchor_a", 0.55}, {"anchor_b", 0.30}};
    c.baseline_min = 0.05;
    c.baseline_max = 0.30;
    c.noise_amplitude = 0.05;
    c.missing_rate = 0.0;
    return c;
}

}  // namespace

TEST_CASE("world generation is deterministic and order-independent") {
    auto cfg = small_config();
    auto w1 = synth::generate_world(cfg, 99);
    auto w2 = synth::generate_world(cfg, 99);
    CHECK(w1.true_popularity == w2.true_popularity);

    auto reordered = cfg;
    std::reverse(reordered.countries.begin(), reordered.countries.end());
    std::reverse(reordered.entities.begin(), reordered.entities.end());
    auto w3 = synth::generate_world(reordered, 99);
    CHECK(w3.true_popularity == w1.true_popularity);

    auto w4 = synth::generate_world(cfg, 100);
    CHECK(w4.true_popularity != w1.true_popularity);
}

TEST_CASE("world save/load round-trips the popularity tables") {
    auto w = synth::generate_world(small_config(), 5);
    std::string path = "world_roundtrip_test.json";
    synth::save_world(path, w);
    auto back = synth::load_world(path);
    std::remove(path.c_str());
    CHECK(back.true_popularity == w.true_popularity);
    CHECK(back.grid.size() == w.grid.size());
    CHECK(back.config.countries == w.config.countries);
    CHECK(back.true_events.at("US").size() == w.true_events.at("US").size());
}

TEST_CASE("rectangular burst with exact baseline gives closed-form attention") {
    auto cfg = small_config();
    cfg.countries = {"US"};
    cfg.entities = {"/m/e01"};
    cfg.noise_amplitude = 0.0;
    cfg.exp_decay_probability = 0.0;  // force rectangular
    auto w = synth::generate_world(cfg, 7);

    const auto& series = w.true_popularity.at("US").at("/m/e01");
    const auto& burst = w.true_events.at("US").at("/m/e01").at(0);
    double base = series[0];

    std::vector<double> y2(series.begin() + static_cast<long>(w.grid.split), series.end());
    std::vector<double> y1(series.begin(), series.begin() + static_cast<long>(w.grid.split));
    double b = attention::baseline(y1);
    CHECK(b == doctest::Approx(base));
    auto curve = attention::attention_curve(y2, b, 1.0);
    CHECK(curve.back() == doctest::Approx(burst.magnitude * burst.duration).epsilon(1e-9));
}

TEST_CASE("burst magnitude zero makes every true total near zero") {
    auto cfg = small_config();
    cfg.burst_magnitude_min = cfg.burst_magnitude_max = 0.0;
    cfg.noise_amplitude = 0.01;
    auto w = synth::generate_world(cfg, 3);
    for (const auto& country : cfg.countries) {
        for (const auto& e : cfg.entities) {
            const auto& s = w.true_popularity.at(country).at(e);
            std::vector<double> y1(s.begin(), s.begin() + static_cast<long>(w.grid.split));
            std::vector<double> y2(s.begin() + static_cast<long>(w.grid.split), s.end());
            double b = attention::baseline(y1);
            auto curve = attention::attention_curve(y2, b, 1.0);
            // bounded by noise: each week's excess is at most 2% of baseline
            CHECK(curve.back() <= 0.02 * b * static_cast<double>(y2.size()));
        }
    }
}

TEST_CASE("calibration recovery: totals covered by the error bound on random worlds") {
    int checked = 0, tight_checked = 0;
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        auto cfg = small_config();
        auto w = synth::generate_world(cfg, seed);
        synth::SimTrendsProvider p(w);
        std::vector<std::string> candidates = {cfg.reference};
        for (const auto& [q, _] : cfg.anchor_candidates) candidates.push_back(q);
        for (const auto& country : cfg.countries) {
            auto bank = trends::build_anchor_bank(p, candidates, cfg.reference, country, w.grid);
            for (const auto& e : cfg.entities) {
                auto s = trends::calibrate(p, bank, e, country, w.grid);
                REQUIRE(s.has_value());
                double true_total = total_of(w.true_series_ref_units(country, e));
                double got_total = total_of(s->values);
                double rel = std::fabs(got_total / true_total - 1.0);
                CHECK(rel <= s->error_bound);
                ++checked;
                if (s->min_observed >= 20 && s->chain_length <= 4) {
                    CHECK(s->error_bound <= 0.05);
                    CHECK(rel <= 0.05);
                    ++tight_checked;
                }
            }
        }
    }
    CHECK(checked >= 500);
    CHECK(tight_checked > 0);
}

TEST_CASE("calibration is scale-free: a uniformly scaled country changes nothing") {
    auto cfg = small_config();
    auto w = synth::generate_world(cfg, 17);
    auto scaled = w;
    for (auto& [q, s] : scaled.true_popularity.at("BR"))
        for (double& v : s) v *= 37.5;

    synth::SimTrendsProvider p1(w), p2(scaled);
    std::vector<std::string> candidates = {cfg.reference};
    for (const auto& [q, _] : cfg.anchor_candidates) candidates.push_back(q);

    // provider responses never leak absolute scale
    auto r1 = p1.fetch_group({cfg.reference, "anchor_a"}, "BR", w.grid);
    auto r2 = p2.fetch_group({cfg.reference, "anchor_a"}, "BR", w.grid);
    for (std::size_t i = 0; i < r1.series.size(); ++i) {
        CHECK(r1.series[i].values == r2.series[i].values);
    }

    auto b1 = trends::build_anchor_bank(p1, candidates, cfg.reference, "BR", w.grid);
    auto b2 = trends::build_anchor_bank(p2, candidates, cfg.reference, "BR", w.grid);
    for (const auto& e : cfg.entities) {
        auto s1 = trends::calibrate(p1, b1, e, "BR", w.grid);
        auto s2 = trends::calibrate(p2, b2, e, "BR", w.grid);
        REQUIRE(s1.has_value());
        REQUIRE(s2.has_value());
        CHECK(s1->values == s2->values);
        CHECK(s1->error_bound == s2->error_bound);
    }
}

TEST_CASE("simulated responses always honor the group-max invariant") {
    auto cfg = small_config();
    auto w = synth::generate_world(cfg, 23);
    synth::SimTrendsProvider p(w);
    synth::SplitMix64 rng{8};
    std::vector<std::string> pool = {cfg.reference, "anchor_a", "anchor_b"};
    pool.insert(pool.end(), cfg.entities.begin(), cfg.entities.end());
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::string> group;
        int k = rng.uniform_int(1, 5);
        for (int i = 0; i < k; ++i)
            group.push_back(pool[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<int>(pool.size()) - 1))]);
        const std::string& country =
            cfg.countries[static_cast<std::size_t>(rng.uniform_int(0, 2))];
        auto resp = p.fetch_group(group, country, w.grid);
        int gmax = 0;
        for (const auto& s : resp.series) {
            if (!s.values) continue;
            for (int v : *s.values) {
                CHECK(v >= 0);
                CHECK(v <= 100);
                gmax = std::max(gmax, v);
            }
        }
        if (!resp.all_empty()) CHECK(gmax == 100);
    }
}

TEST_CASE("series cache round-trips, misses, and overwrites") {
    std::string dir = "cache_test_dir";
    std::filesystem::remove_all(dir);
    trends::SeriesCache cache(dir);

    trends::CalibratedSeries s;
    s.entity_id = "/m/e01";
    s.country = "BR";
    s.weeks = {"2018-12-31", "2019-01-07"};
    s.values = {0.5, 0.25};
    s.error_bound = 0.03;
    s.fetched_at = "2026-01-01T00:00:00Z";
    s.chain_length = 2;
    s.min_observed = 40;
    cache.put(s);

    auto got = cache.get("/m/e01", "BR");
    REQUIRE(got.has_value());
    CHECK(got->values == s.values);
    CHECK(got->weeks == s.weeks);
    CHECK(got->error_bound == s.error_bound);
    CHECK(got->chain_length == 2);
    CHECK(got->min_observed == 40);

    CHECK_FALSE(cache.get("/m/e01", "US").has_value());
    CHECK_FALSE(cache.get("/m/e99", "BR").has_value());

    s.values = {0.9, 0.9};
    cache.put(s);
    CHECK(cache.get("/m/e01", "BR")->values == std::vector<double>{0.9, 0.9});

    std::filesystem::remove_all(dir);
}

TEST_CASE("corrupt cache entries name the key, or miss under repair") {
    std::string dir = "cache_corrupt_test_dir";
    std::filesystem::remove_all(dir);
    trends::SeriesCache cache(dir);
    std::filesystem::create_directories(dir + "/BR");
    {
        std::ofstream out(cache.path_for("/m/bad", "BR"));
        out << "{not json";
    }
    CHECK_THROWS_WITH_AS(cache.get("/m/bad", "BR"), doctest::Contains("/m/bad"),
                         std::runtime_error);

    trends::SeriesCache repairing(dir, true);
    CHECK_FALSE(repairing.get("/m/bad", "BR").has_value());
    std::filesystem::remove_all(dir);
}
