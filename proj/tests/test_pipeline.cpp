#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fcattn/attention.hpp"
#include "fcattn/pipeline.hpp"

using namespace fcattn;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempTree {
    fs::path root;

    TempTree() {
        static int counter = 0;
        root = fs::temp_directory_path() / ("fcattn_pipeline_" + std::to_string(counter++));
        fs::remove_all(root);
        fs::create_directories(root);
    }
    ~TempTree() {
        std::error_code ec;
        fs::remove_all(root, ec);
    }

    std::string file(const std::string& name, const std::string& content) const {
        fs::path p = root / name;
        std::ofstream out(p);
        out << content;
        return p.string();
    }
};

// Two claim topics (3 + 2 near-duplicate claims), one sarcasm row that
// never clusters, plus three rows the ingest stage must reject or drop.
const char* kRecordsCsv =
    "when,where,claim,verdict\n"
    "2020-03-02,US,drinking hot water cures the virus,false\n"
    "2020-03-09,US,drinking hot water cures the virus completely,misleading\n"
    "2020-04-06,GB,hot water drinking cures virus,false\n"
    "2020-05-04,US,garlic soup prevents infection disease,false\n"
    "2020-06-01,GB,garlic soup prevents the infection disease,partly_false\n"
    "2020-07-06,US,bananas contain miracle vaccine,sarcasm\n"
    "2018-05-01,US,ancient rumor outside the window,false\n"
    "2020-08-03,LATAM,some regional claim thing,false\n"
    "not-a-date,US,claim with a broken date,false\n";

std::string write_fixture(const TempTree& t) {
    t.file("records.csv", kRecordsCsv);
    t.file("column_map.json", R"({
        "date": "when", "country_code": "where", "claim_text": "claim", "rating": "verdict"
    })");
    t.file("scope.json", R"({"window_start": "2019-01-01", "window_end": "2020-12-31"})");
    t.file("entity_map.json", R"({
        "c001": {"entity_id": "/m/e01", "display_name": "hot water"},
        "c002": {"entity_id": "/m/e02", "display_name": "garlic soup"}
    })");
    t.file("world_config.json", R"({
        "year1": 2019,
        "countries": ["FR", "GB", "US"],
        "entities": ["/m/e01", "/m/e02"],
        "reference": "/m/045c7b",
        "anchor_candidates": [
            {"query": "anchor_a", "popularity": 0.55},
            {"query": "anchor_b", "popularity": 0.30}
        ],
        "baseline_min": 0.05,
        "baseline_max": 0.30,
        "noise_amplitude": 0.05
    })");
    return t.file("pipeline.toml",
                  "# end-to-end fixture\n"
                  "[paths]\n"
                  "input = \"records.csv\"    # raw table\n"
                  "column_map = \"column_map.json\"\n"
                  "scope = \"scope.json\"\n"
                  "entity_map = \"entity_map.json\"\n"
                  "world = \"world_config.json\"\n"
                  "workdir = \"work\"\n"
                  "\n"
                  "[cluster]\n"
                  "eps = 0.5\n"
                  "min_pts = 2\n"
                  "\n"
                  "[provider]\n"
                  "kind = \"sim\"\n"
                  "seed = 42\n"
                  "fetch_threads = 2\n"
                  "\n"
                  "[analysis]\n"
                  "min_fc_claims = 1\n"
                  "min_fc_countries = 1\n"
                  "kmax = 3\n");
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t line_count(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++n;
    return n;
}

}  // namespace

TEST_CASE("pipeline config resolves paths relative to the config file") {
    TempTree t;
    auto cfg_path = write_fixture(t);
    auto c = pipeline::load_pipeline_config(cfg_path);
    CHECK(c.input == (t.root / "records.csv").lexically_normal().string());
    CHECK(c.workdir == (t.root / "work").lexically_normal().string());
    CHECK(c.stopwords.empty());
    CHECK(c.splits.empty());
    CHECK(c.eps == 0.5);
    CHECK(c.min_pts == 2);
    CHECK(c.provider == "sim");
    CHECK(c.seed == 42);
    CHECK(c.fetch_threads == 2);
    CHECK(c.reference_entity == "/m/045c7b");
    CHECK(c.year1 == 2019);
    CHECK(c.min_fc_claims == 1);
    CHECK(c.min_fc_countries == 1);
    CHECK(c.kmax == 3);
}

TEST_CASE("config hash changes exactly when an output-relevant field changes") {
    pipeline::PipelineConfig base;
    base.input = "a.csv";
    std::string h0 = pipeline::config_hash(base);
    CHECK(pipeline::config_hash(base) == h0);  // stable

    auto differs = [&](auto mutate) {
        pipeline::PipelineConfig c = base;
        mutate(c);
        return pipeline::config_hash(c) != h0;
    };
    CHECK(differs([](auto& c) { c.input = "b.csv"; }));
    CHECK(differs([](auto& c) { c.column_map = "cm.json"; }));
    CHECK(differs([](auto& c) { c.scope = "s.json"; }));
    CHECK(differs([](auto& c) { c.stopwords = "sw.txt"; }));
    CHECK(differs([](auto& c) { c.splits = "sp.json"; }));
    CHECK(differs([](auto& c) { c.expand = "ex.json"; }));
    CHECK(differs([](auto& c) { c.entity_map = "em.json"; }));
    CHECK(differs([](auto& c) { c.world = "w.json"; }));
    CHECK(differs([](auto& c) { c.workdir = "elsewhere"; }));
    CHECK(differs([](auto& c) { c.eps = 0.4; }));
    CHECK(differs([](auto& c) { c.min_pts = 3; }));
    CHECK(differs([](auto& c) { c.provider = "live"; }));
    CHECK(differs([](auto& c) { c.seed = 7; }));
    CHECK(differs([](auto& c) { c.reference_entity = "/m/other"; }));
    CHECK(differs([](auto& c) { c.year1 = 2020; }));
    CHECK(differs([](auto& c) { c.min_fc_claims = 3; }));
    CHECK(differs([](auto& c) { c.min_fc_countries = 3; }));
    CHECK(differs([](auto& c) { c.kmax = 5; }));

    // thread count is an execution knob, not part of the result identity
    pipeline::PipelineConfig threads = base;
    threads.fetch_threads = 16;
    CHECK(pipeline::config_hash(threads) == h0);
}

TEST_CASE("pipeline runs end to end, skips fresh stages, reruns on force") {
    TempTree t;
    auto c = pipeline::load_pipeline_config(write_fixture(t));

    auto res = pipeline::run_pipeline(c);
    REQUIRE(res.stages.size() == 7);
    for (const auto& s : res.stages) CHECK_FALSE(s.skipped);
    CHECK(res.report_path == c.path("report.json"));

    for (const char* f : {"records.jsonl", "record_errors.jsonl", "clusters.json", "linked.json",
                          "world.json", "profiles.json", "report.json", "manifest.json"})
        CHECK_MESSAGE(fs::exists(c.path(f)), f);
    CHECK(fs::is_directory(c.path("cache")));

    // 6 rows survive ingest; 1 parse error + 2 scope drops are logged
    CHECK(line_count(c.path("records.jsonl")) == 6);
    CHECK(line_count(c.path("record_errors.jsonl")) == 3);

    {
        std::ifstream in(c.path("clusters.json"));
        json clusters = json::parse(in);
        REQUIRE(clusters.size() == 2);  // the sarcasm row never clusters
    }

    auto profiles = attention::read_profiles_json(c.path("profiles.json"));
    {
        std::ifstream in(c.path("profiles_meta.json"));
        json meta = json::parse(in);
        CHECK(profiles.size() + meta.at("no_signal_pairs").get<std::size_t>() == 6);
    }
    bool saw_us_e01 = false, saw_fr = false;
    for (const auto& p : profiles) {
        if (p.entity_id == "/m/e01" && p.country == "US") {
            saw_us_e01 = true;
            CHECK(p.factcheck_dates.size() == 2);
            CHECK(p.entity_name == "hot water");
        }
        if (p.country == "FR") {
            saw_fr = true;
            CHECK(p.factcheck_dates.empty());  // no fixture fact-check mentions FR
        }
    }
    CHECK(saw_us_e01);
    CHECK(saw_fr);

    {
        std::ifstream in(c.path("manifest.json"));
        json manifest = json::parse(in);
        CHECK(manifest.at("config_hash") == pipeline::config_hash(c));
        CHECK(manifest.at("stages").size() == 7);
        CHECK(manifest["stages"]["fetch"]["skipped"] == false);
    }
    {
        std::ifstream in(c.path("report.json"));
        json report = json::parse(in);
        CHECK(report.contains("rq1"));
        CHECK(report.contains("rq2"));
        CHECK(report["rq2"]["spearman"].contains("country_rel_vs_total"));
    }

    // everything is fresh now, so a second run skips every stage
    auto again = pipeline::run_pipeline(c);
    REQUIRE(again.stages.size() == 7);
    for (const auto& s : again.stages) CHECK_MESSAGE(s.skipped, s.name);
    {
        std::ifstream in(c.path("manifest.json"));
        json manifest = json::parse(in);
        CHECK(manifest["stages"]["analyze"]["skipped"] == true);
    }

    auto forced = pipeline::run_pipeline(c, true);
    for (const auto& s : forced.stages) CHECK_FALSE(s.skipped);

    // a single-stage run executes just that stage, freshness aside
    auto only = pipeline::run_pipeline(c, false, "analyze");
    REQUIRE(only.stages.size() == 1);
    CHECK(only.stages[0].name == "analyze");
    CHECK_FALSE(only.stages[0].skipped);
}

TEST_CASE("a corrupt intermediate names the failing stage and leaves other artifacts alone") {
    TempTree t;
    auto c = pipeline::load_pipeline_config(write_fixture(t));
    pipeline::run_pipeline(c);

    {
        std::ofstream bad(c.path("records.jsonl"));
        bad << "{\"id\": 0, this is not json\n";
    }
    try {
        pipeline::run_pipeline(c, false, "cluster");
        FAIL("expected StageError");
    } catch (const pipeline::StageError& e) {
        CHECK(e.stage == "cluster");
        CHECK(std::string(e.what()).find("corrupt") != std::string::npos);
        CHECK(pipeline::stage_exit_code(e.stage) == 11);
    }
    CHECK(fs::exists(c.path("linked.json")));
    CHECK(fs::exists(c.path("report.json")));
}

TEST_CASE("a missing input fails in ingest with its exit code") {
    TempTree t;
    auto c = pipeline::load_pipeline_config(write_fixture(t));
    c.input = (t.root / "no_such_file.csv").string();
    try {
        pipeline::run_pipeline(c, true);
        FAIL("expected StageError");
    } catch (const pipeline::StageError& e) {
        CHECK(e.stage == "ingest");
        CHECK(pipeline::stage_exit_code(e.stage) == 10);
    }
}

TEST_CASE("stage exit codes are distinct and stable") {
    CHECK(pipeline::stage_exit_code("ingest") == 10);
    CHECK(pipeline::stage_exit_code("cluster") == 11);
    CHECK(pipeline::stage_exit_code("link") == 12);
    CHECK(pipeline::stage_exit_code("synth") == 13);
    CHECK(pipeline::stage_exit_code("fetch") == 14);
    CHECK(pipeline::stage_exit_code("attention") == 15);
    CHECK(pipeline::stage_exit_code("analyze") == 16);
    CHECK(pipeline::stage_exit_code("nonsense") == 1);
}

TEST_CASE("the same seed gives byte-identical reports in different directories") {
    TempTree t1, t2;
    auto c1 = pipeline::load_pipeline_config(write_fixture(t1));
    auto c2 = pipeline::load_pipeline_config(write_fixture(t2));
    pipeline::run_pipeline(c1);
    pipeline::run_pipeline(c2);
    CHECK(slurp(c1.path("report.json")) == slurp(c2.path("report.json")));
    CHECK(slurp(c1.path("profiles.json")) == slurp(c2.path("profiles.json")));
}
