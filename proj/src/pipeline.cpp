#include "fcattn/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fcattn/analysis.hpp"
#include "fcattn/attention.hpp"
#include "fcattn/cluster.hpp"
#include "fcattn/ingest.hpp"
#include "fcattn/kglink.hpp"
#include "fcattn/synth.hpp"
#include "fcattn/trends.hpp"

namespace fcattn::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

// Flat TOML subset: [sections], scalar keys (strings, numbers, booleans),
// comments with '#'. Enough for pipeline configs; no nested tables.
std::map<std::string, std::map<std::string, std::string>> parse_toml(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::map<std::string, std::map<std::string, std::string>> out;
    std::string section, line;
    while (std::getline(in, line)) {
        // strip comments outside quotes
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            else if (line[i] == '#' && !quoted) {
                line = line.substr(0, i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: malformed line '" + line + "' in " + path);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        out[section][key] = value;
    }
    return out;
}

std::string resolve_relative(const std::string& base_dir, const std::string& p) {
    if (p.empty() || fs::path(p).is_absolute()) return p;
    return (fs::path(base_dir) / p).lexically_normal().string();
}

}  // namespace

PipelineConfig load_pipeline_config(const std::string& toml_path) {
    auto t = parse_toml(toml_path);
    std::string base = fs::path(toml_path).parent_path().string();
    if (base.empty()) base = ".";

    PipelineConfig c;
    auto get = [&](const std::string& sec, const std::string& key,
                   const std::string& fallback) -> std::string {
        auto sit = t.find(sec);
        if (sit == t.end()) return fallback;
        auto kit = sit->second.find(key);
        return kit == sit->second.end() ? fallback : kit->second;
    };

    c.input = resolve_relative(base, get("paths", "input", ""));
    c.column_map = resolve_relative(base, get("paths", "column_map", ""));
    c.scope = resolve_relative(base, get("paths", "scope", ""));
    c.stopwords = resolve_relative(base, get("paths", "stopwords", ""));
    c.splits = resolve_relative(base, get("paths", "splits", ""));
    c.expand = resolve_relative(base, get("paths", "expand", ""));
    c.entity_map = resolve_relative(base, get("paths", "entity_map", ""));
    c.world = resolve_relative(base, get("paths", "world", ""));
    c.workdir = resolve_relative(base, get("paths", "workdir", "work"));
    c.eps = std::stod(get("cluster", "eps", "0.5"));
    c.min_pts = std::stoi(get("cluster", "min_pts", "2"));
    c.provider = get("provider", "kind", "sim");
    c.seed = std::stoull(get("provider", "seed", "0"));
    c.reference_entity = get("attention", "reference_entity", "/m/045c7b");
    c.year1 = std::stoi(get("attention", "year1", "2019"));
    c.min_fc_claims = std::stoi(get("analysis", "min_fc_claims", "10"));
    c.min_fc_countries = std::stoi(get("analysis", "min_fc_countries", "10"));
    c.kmax = std::stoi(get("analysis", "kmax", "10"));
    c.fetch_threads = std::stoi(get("provider", "fetch_threads", "4"));
    return c;
}

namespace {

json config_to_json(const PipelineConfig& c) {
    json j;
    j["input"] = c.input;
    j["column_map"] = c.column_map;
    j["scope"] = c.scope;
    j["stopwords"] = c.stopwords;
    j["splits"] = c.splits;
    j["expand"] = c.expand;
    j["entity_map"] = c.entity_map;
    j["world"] = c.world;
    j["workdir"] = c.workdir;
    j["eps"] = c.eps;
    j["min_pts"] = c.min_pts;
    j["provider"] = c.provider;
    j["seed"] = c.seed;
    j["reference_entity"] = c.reference_entity;
    j["year1"] = c.year1;
    j["min_fc_claims"] = c.min_fc_claims;
    j["min_fc_countries"] = c.min_fc_countries;
    j["kmax"] = c.kmax;
    return j;
}

}  // namespace

std::string config_hash(const PipelineConfig& config) {
    std::string canon = config_to_json(config).dump();
    std::uint64_t h = synth::fnv1a64(canon);
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void stage_ingest(const PipelineConfig& c) {
    std::ifstream in(c.input);
    if (!in) throw StageError("ingest", "cannot open input " + c.input);
    auto column_map = ingest::load_column_map(c.column_map);
    auto scope = ingest::load_scope_config(c.scope);
    auto parsed = ingest::parse_factchecks(in, column_map);
    auto scoped = ingest::filter_scope(parsed.records, scope);

    std::ofstream recs(c.path("records.jsonl"));
    ingest::write_records_jsonl(recs, scoped.kept);

    std::ofstream errs(c.path("record_errors.jsonl"));
    for (const auto& e : parsed.errors)
        errs << json{{"row", e.row_index}, {"reason", e.reason}}.dump() << "\n";
    for (const auto& [rec, reason] : scoped.dropped)
        errs << json{{"record_id", rec.id}, {"country", rec.country_code}, {"reason", reason}}
                    .dump()
             << "\n";
}

namespace {

std::vector<cluster::BowVector> clusterable_vectors(
    const std::vector<ingest::FactCheckRecord>& records, const std::set<std::string>& stopwords) {
    std::vector<cluster::BowVector> out;
    for (const auto& r : records) {
        if (r.rating == ingest::Rating::Other) continue;  // only debunked-claim ratings cluster
        cluster::BowVector v;
        v.record_id = r.id;
        v.tokens = cluster::tokenize(r.claim_text, stopwords);
        if (!v.tokens.empty()) out.push_back(std::move(v));
    }
    return out;
}

std::vector<ingest::FactCheckRecord> load_stage_records(const PipelineConfig& c,
                                                        const std::string& stage) {
    std::ifstream in(c.path("records.jsonl"));
    if (!in) throw StageError(stage, "missing records.jsonl (run ingest first)");
    try {
        return ingest::read_records_jsonl(in);
    } catch (const std::exception& e) {
        throw StageError(stage, std::string("corrupt records.jsonl: ") + e.what());
    }
}

}  // namespace

void stage_cluster(const PipelineConfig& c) {
    auto records = load_stage_records(c, "cluster");
    auto stopwords =
        c.stopwords.empty() ? cluster::default_stopwords() : cluster::load_stopwords(c.stopwords);
    auto vectors = clusterable_vectors(records, stopwords);

    auto matrix = cluster::pairwise_jaccard(vectors);
    auto labels = cluster::dbscan(matrix, c.eps, c.min_pts);
    auto clusters = cluster::clusters_from_labels(vectors, labels);

    // Optional keyword splits: {cluster_id: [{label, keywords}]}.
    if (!c.splits.empty() && fs::exists(c.splits)) {
        std::ifstream in(c.splits);
        json rules = json::parse(in);
        std::vector<cluster::ClaimCluster> next;
        for (const auto& cl : clusters) {
            auto it = rules.find(cl.cluster_id);
            if (it == rules.end()) {
                next.push_back(cl);
                continue;
            }
            cluster::SplitRule rule;
            for (const auto& g : *it) {
                std::set<std::string> kws;
                for (const auto& k : g.at("keywords")) kws.insert(k.get<std::string>());
                rule.groups.emplace_back(g.at("label").get<std::string>(), std::move(kws));
            }
            for (auto& sub : cluster::split_cluster(cl, vectors, rule))
                if (!sub.member_ids.empty()) next.push_back(std::move(sub));
        }
        clusters = std::move(next);
    }

    // Optional back-search expansion: {cluster_id: [keywords]}.
    if (!c.expand.empty() && fs::exists(c.expand)) {
        std::ifstream in(c.expand);
        json rules = json::parse(in);
        for (auto& cl : clusters) {
            auto it = rules.find(cl.cluster_id);
            if (it == rules.end()) continue;
            std::set<std::string> kws;
            for (const auto& k : *it) kws.insert(k.get<std::string>());
            cl = cluster::expand_cluster_by_keyword(cl, vectors, clusters, kws);
        }
    }

    cluster::write_clusters_json(c.path("clusters.json"), clusters);
}

void stage_link(const PipelineConfig& c) {
    auto clusters = cluster::read_clusters_json(c.path("clusters.json"));
    auto mapping = kglink::load_entity_map(c.entity_map);
    auto linked = kglink::apply_entity_map(clusters, mapping);
    cluster::write_clusters_json(c.path("linked.json"), linked);
}

void stage_synth(const PipelineConfig& c) {
    if (c.provider != "sim") return;
    auto world = synth::load_world_or_config(c.world, c.seed);
    synth::save_world(c.path("world.json"), world);
}

void stage_fetch(const PipelineConfig& c) {
    if (c.provider != "sim")
        throw StageError("fetch", "live provider is not available in pipeline runs");
    auto world = synth::load_world(c.path("world.json"));
    synth::SimTrendsProvider provider(world);
    auto linked = cluster::read_clusters_json(c.path("linked.json"));
    trends::SeriesCache cache(c.path("cache"));

    std::vector<std::string> entities;
    for (const auto& cl : linked)
        if (cl.entity_id) entities.push_back(*cl.entity_id);

    std::vector<std::string> candidates;
    candidates.push_back(world.config.reference);
    for (const auto& [q, _] : world.config.anchor_candidates) candidates.push_back(q);

    const auto& countries = world.config.countries;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex error_mu;

    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= countries.size() || failed.load()) return;
            const std::string& country = countries[i];
            try {
                auto bank = trends::build_anchor_bank(provider, candidates,
                                                      world.config.reference, country, world.grid);
                if (auto ref = trends::calibrate(provider, bank, world.config.reference, country,
                                                 world.grid))
                    cache.put(*ref);
                for (const auto& e : entities)
                    if (auto s = trends::calibrate(provider, bank, e, country, world.grid))
                        cache.put(*s);
            } catch (const std::exception& ex) {
                std::scoped_lock lock(error_mu);
                if (!failed.exchange(true)) first_error = country + ": " + ex.what();
            }
        }
    };
    std::vector<std::thread> threads;
    int nthreads = std::max(1, c.fetch_threads);
    for (int i = 0; i < nthreads; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (failed.load()) throw StageError("fetch", first_error);
}

void stage_attention(const PipelineConfig& c) {
    auto world = synth::load_world(c.path("world.json"));
    auto linked = cluster::read_clusters_json(c.path("linked.json"));
    auto records = load_stage_records(c, "attention");
    trends::SeriesCache cache(c.path("cache"));

    auto built = attention::build_profiles(cache, linked, records, world.config.countries,
                                           c.reference_entity, world.grid);
    attention::write_profiles_json(c.path("profiles.json"), built.profiles);

    std::ofstream meta(c.path("profiles_meta.json"));
    meta << json{{"profiles", built.profiles.size()},
                 {"no_signal_pairs", built.no_signal_pairs},
                 {"skipped", built.skipped_pairs}}
                .dump(2)
         << "\n";
}

void stage_analyze(const PipelineConfig& c) {
    auto profiles = attention::read_profiles_json(c.path("profiles.json"));
    WeekGrid grid = make_week_grid(c.year1);
    analysis::ReportParams params;
    params.min_fc_claims = c.min_fc_claims;
    params.min_fc_countries = c.min_fc_countries;
    params.kmax = c.kmax;
    auto report = analysis::build_report(profiles, grid, params);
    analysis::write_report_json(c.path("report.json"), report);
    analysis::write_tables_csv(c.path("tables"), report);
    analysis::write_plot_series(c.path("plots"), report);
}

int stage_exit_code(const std::string& stage) {
    static const std::map<std::string, int> codes = {
        {"ingest", 10}, {"cluster", 11}, {"link", 12},      {"synth", 13},
        {"fetch", 14},  {"attention", 15}, {"analyze", 16}};
    auto it = codes.find(stage);
    return it == codes.end() ? 1 : it->second;
}

namespace {

struct StageSpec {
    std::string name;
    std::vector<std::string> inputs;   // absolute paths
    std::vector<std::string> outputs;
    void (*run)(const PipelineConfig&);
};

bool outputs_fresh(const StageSpec& s) {
    fs::file_time_type newest_input = fs::file_time_type::min();
    for (const auto& in : s.inputs) {
        if (in.empty()) continue;
        if (!fs::exists(in)) return false;
        newest_input = std::max(newest_input, fs::last_write_time(in));
    }
    for (const auto& out : s.outputs) {
        if (!fs::exists(out)) return false;
        if (fs::last_write_time(out) < newest_input) return false;
    }
    return true;
}

}  // namespace

PipelineRunResult run_pipeline(const PipelineConfig& c, bool force,
                               const std::string& only_stage) {
    fs::create_directories(c.workdir);

    std::vector<StageSpec> stages = {
        {"ingest",
         {c.input, c.column_map, c.scope},
         {c.path("records.jsonl"), c.path("record_errors.jsonl")},
         &stage_ingest},
        {"cluster",
         {c.path("records.jsonl"), c.stopwords, c.splits, c.expand},
         {c.path("clusters.json")},
         &stage_cluster},
        {"link", {c.path("clusters.json"), c.entity_map}, {c.path("linked.json")}, &stage_link},
        {"synth", {c.world}, {c.path("world.json")}, &stage_synth},
        {"fetch",
         {c.path("world.json"), c.path("linked.json")},
         {c.path("cache")},
         &stage_fetch},
        {"attention",
         {c.path("cache"), c.path("linked.json"), c.path("records.jsonl"), c.path("world.json")},
         {c.path("profiles.json")},
         &stage_attention},
        {"analyze", {c.path("profiles.json")}, {c.path("report.json")}, &stage_analyze},
    };

    PipelineRunResult result;
    result.report_path = c.path("report.json");

    for (const auto& s : stages) {
        if (!only_stage.empty() && s.name != only_stage) continue;
        StageStatus status;
        status.name = s.name;
        bool skip = !force && only_stage.empty() && outputs_fresh(s);
        if (skip) {
            status.skipped = true;
        } else {
            auto t0 = std::chrono::steady_clock::now();
            try {
                s.run(c);
            } catch (const StageError&) {
                throw;
            } catch (const std::exception& e) {
                throw StageError(s.name, e.what());
            }
            status.duration_ms = static_cast<long>(
                std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - t0)
                    .count());
        }
        result.stages.push_back(std::move(status));
    }

    json manifest;
    manifest["config_hash"] = config_hash(c);
    json stages_json;
    for (const auto& s : result.stages)
        stages_json[s.name] = {{"skipped", s.skipped}, {"duration_ms", s.duration_ms}};
    manifest["stages"] = std::move(stages_json);
    std::ofstream m(c.path("manifest.json"));
    m << manifest.dump(2) << "\n";
    return result;
}

}  // namespace fcattn::pipeline
