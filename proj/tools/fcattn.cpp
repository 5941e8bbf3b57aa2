#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fcattn/analysis.hpp"
#include "fcattn/attention.hpp"
#include "fcattn/cluster.hpp"
#include "fcattn/ingest.hpp"
#include "fcattn/kglink.hpp"
#include "fcattn/pipeline.hpp"
#include "fcattn/synth.hpp"
#include "fcattn/trends.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fcattn;

namespace {

std::vector<std::string> split_csv_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

int cmd_ingest(const std::string& input, const std::string& column_map, const std::string& scope,
               const std::string& out, const std::string& errors) {
    std::ifstream in(input);
    if (!in) throw std::runtime_error("cannot open input " + input);
    auto cm = ingest::load_column_map(column_map);
    auto sc = ingest::load_scope_config(scope);
    auto parsed = ingest::parse_factchecks(in, cm);
    auto scoped = ingest::filter_scope(parsed.records, sc);

    std::ofstream recs(out);
    ingest::write_records_jsonl(recs, scoped.kept);
    if (!errors.empty()) {
        std::ofstream errf(errors);
        for (const auto& e : parsed.errors)
            errf << json{{"row", e.row_index}, {"reason", e.reason}}.dump() << "\n";
        for (const auto& [rec, reason] : scoped.dropped)
            errf << json{{"record_id", rec.id}, {"country", rec.country_code}, {"reason", reason}}
                        .dump()
                 << "\n";
    }
    std::cerr << "kept " << scoped.kept.size() << " records, dropped " << scoped.dropped.size()
              << ", parse errors " << parsed.errors.size() << "\n";
    return 0;
}

std::vector<cluster::BowVector> make_vectors(const std::vector<ingest::FactCheckRecord>& records,
                                             const std::set<std::string>& stopwords) {
    std::vector<cluster::BowVector> out;
    for (const auto& r : records) {
        if (r.rating == ingest::Rating::Other) continue;
        cluster::BowVector v;
        v.record_id = r.id;
        v.tokens = cluster::tokenize(r.claim_text, stopwords);
        if (!v.tokens.empty()) out.push_back(std::move(v));
    }
    return out;
}

int cmd_cluster(const std::string& records_path, double eps, int min_pts,
                const std::string& sweep, const std::string& stopwords_path,
                const std::string& splits_path, const std::string& out) {
    std::ifstream in(records_path);
    if (!in) throw std::runtime_error("cannot open " + records_path);
    auto records = ingest::read_records_jsonl(in);
    auto stopwords = stopwords_path.empty() ? cluster::default_stopwords()
                                            : cluster::load_stopwords(stopwords_path);
    auto vectors = make_vectors(records, stopwords);
    auto matrix = cluster::pairwise_jaccard(vectors);

    if (!sweep.empty()) {
        double a = 0, b = 0, step = 0;
        char c1 = 0, c2 = 0;
        std::stringstream ss(sweep);
        if (!(ss >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0)
            throw std::runtime_error("bad --sweep, expected start:stop:step");
        std::vector<double> eps_values;
        for (double e = a; e <= b + 1e-12; e += step) eps_values.push_back(e);
        for (const auto& s : cluster::sweep_eps(matrix, eps_values, min_pts)) {
            std::cout << "eps=" << s.eps << " clusters=" << s.cluster_count
                      << " noise=" << s.noise_count << " (" << s.noise_fraction << ")";
            for (const auto& [size, count] : s.size_histogram)
                std::cout << " " << size << "x" << count;
            std::cout << "\n";
        }
        return 0;
    }

    auto labels = cluster::dbscan(matrix, eps, min_pts);
    auto clusters = cluster::clusters_from_labels(vectors, labels);

    if (!splits_path.empty()) {
        std::ifstream sin(splits_path);
        if (!sin) throw std::runtime_error("cannot open " + splits_path);
        json rules = json::parse(sin);
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

    cluster::write_clusters_json(out, clusters);
    std::cerr << clusters.size() << " clusters from " << vectors.size() << " records\n";
    return 0;
}

int cmd_link(const std::string& clusters_path, const std::string& map_path,
             const std::string& provider, const std::string& catalog, const std::string& host,
             const std::string& suggest, int limit, const std::string& out) {
    if (!suggest.empty()) {
        std::unique_ptr<kglink::EntitySearchProvider> p;
        if (provider == "fixture") p = std::make_unique<kglink::FixtureEntityProvider>(catalog);
        else if (provider == "live") p = std::make_unique<kglink::LiveEntityProvider>(host);
        else throw std::runtime_error("unknown provider " + provider);
        auto list = kglink::search_entities(*p, suggest, limit);
        for (const auto& c : list.candidates)
            std::cout << c.entity.entity_id << "\t" << c.entity.display_name << "\t" << c.score
                      << "\n";
        return 0;
    }
    auto clusters = cluster::read_clusters_json(clusters_path);
    auto mapping = kglink::load_entity_map(map_path);
    auto linked = kglink::apply_entity_map(clusters, mapping);
    cluster::write_clusters_json(out, linked);
    std::size_t bound = 0;
    for (const auto& c : linked)
        if (c.entity_id) ++bound;
    std::cerr << bound << " of " << linked.size() << " clusters linked to entities\n";
    return 0;
}

int cmd_fetch(const std::string& linked_path, const std::string& countries_arg,
              const std::string& provider, std::uint64_t seed, const std::string& world_path,
              const std::string& cache_dir) {
    if (provider != "sim")
        throw std::runtime_error("only the sim provider is available offline");
    auto world = synth::load_world_or_config(world_path, seed);
    synth::SimTrendsProvider sim(world);
    auto linked = cluster::read_clusters_json(linked_path);
    trends::SeriesCache cache(cache_dir);

    std::vector<std::string> countries = countries_arg == "all"
                                             ? world.config.countries
                                             : split_csv_list(countries_arg);
    std::vector<std::string> entities;
    for (const auto& cl : linked)
        if (cl.entity_id) entities.push_back(*cl.entity_id);

    std::vector<std::string> candidates;
    candidates.push_back(world.config.reference);
    for (const auto& [q, _] : world.config.anchor_candidates) candidates.push_back(q);

    int stored = 0, empty = 0;
    for (const auto& country : countries) {
        auto bank =
            trends::build_anchor_bank(sim, candidates, world.config.reference, country, world.grid);
        if (auto ref = trends::calibrate(sim, bank, world.config.reference, country, world.grid))
            cache.put(*ref), ++stored;
        for (const auto& e : entities) {
            if (auto s = trends::calibrate(sim, bank, e, country, world.grid))
                cache.put(*s), ++stored;
            else
                ++empty;
        }
    }
    std::cerr << "stored " << stored << " series, " << empty << " empty pairs\n";
    return 0;
}

int cmd_attention(const std::string& cache_dir, const std::string& linked_path,
                  const std::string& records_path, const std::string& reference_entity, int year1,
                  const std::string& out) {
    trends::SeriesCache cache(cache_dir);
    auto linked = cluster::read_clusters_json(linked_path);
    std::ifstream rin(records_path);
    if (!rin) throw std::runtime_error("cannot open " + records_path);
    auto records = ingest::read_records_jsonl(rin);

    std::vector<std::string> countries;
    for (const auto& entry : fs::directory_iterator(cache_dir))
        if (entry.is_directory()) countries.push_back(entry.path().filename().string());
    std::sort(countries.begin(), countries.end());

    WeekGrid grid = make_week_grid(year1);
    auto built =
        attention::build_profiles(cache, linked, records, countries, reference_entity, grid);
    attention::write_profiles_json(out, built.profiles);
    std::cerr << built.profiles.size() << " profiles, " << built.no_signal_pairs
              << " no-signal pairs, " << built.skipped_pairs.size() << " skipped\n";
    return 0;
}

int cmd_analyze(const std::string& profiles_path, int min_fc_claims, int min_fc_countries,
                int kmax, int year1, const std::string& out, const std::string& tables_csv,
                const std::string& plot_series) {
    auto profiles = attention::read_profiles_json(profiles_path);
    WeekGrid grid = make_week_grid(year1);
    analysis::ReportParams params;
    params.min_fc_claims = min_fc_claims;
    params.min_fc_countries = min_fc_countries;
    params.kmax = kmax;
    auto report = analysis::build_report(profiles, grid, params);
    analysis::write_report_json(out, report);
    if (!tables_csv.empty()) analysis::write_tables_csv(tables_csv, report);
    if (!plot_series.empty()) analysis::write_plot_series(plot_series, report);
    return 0;
}

int cmd_synth(const std::string& config_path, std::uint64_t seed, const std::string& out) {
    auto config = synth::load_world_config(config_path);
    auto world = synth::generate_world(config, seed);
    synth::save_world(out, world);
    std::cerr << "world: " << config.countries.size() << " countries x "
              << config.entities.size() << " entities, " << world.grid.size() << " weeks\n";
    return 0;
}

int cmd_pipeline(const std::string& config_path, bool force, const std::string& stage) {
    auto config = pipeline::load_pipeline_config(config_path);
    try {
        auto result = pipeline::run_pipeline(config, force, stage);
        for (const auto& s : result.stages) {
            std::cerr << s.name << ": "
                      << (s.skipped ? "skipped (up to date)"
                                    : std::to_string(s.duration_ms) + " ms")
                      << "\n";
        }
        std::cerr << "report: " << result.report_path << "\n";
        return 0;
    } catch (const pipeline::StageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return pipeline::stage_exit_code(e.stage);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fact-check attention measurement pipeline"};
    app.require_subcommand(1);

    // ingest
    std::string in_input, in_colmap, in_scope, in_out = "records.jsonl", in_errors;
    auto* ingest_cmd = app.add_subcommand("ingest", "parse and scope-filter fact-check records");
    ingest_cmd->add_option("--input", in_input)->required();
    ingest_cmd->add_option("--column-map", in_colmap)->required();
    ingest_cmd->add_option("--scope", in_scope)->required();
    ingest_cmd->add_option("--out", in_out);
    ingest_cmd->add_option("--errors", in_errors);

    // cluster
    std::string cl_records, cl_sweep, cl_stopwords, cl_splits, cl_out = "clusters.json";
    double cl_eps = 0.5;
    int cl_min_pts = 2;
    auto* cluster_cmd = app.add_subcommand("cluster", "group records into claim clusters");
    cluster_cmd->add_option("--records", cl_records)->required();
    cluster_cmd->add_option("--eps", cl_eps);
    cluster_cmd->add_option("--min-pts", cl_min_pts);
    cluster_cmd->add_option("--sweep", cl_sweep, "start:stop:step epsilon sweep, prints summaries");
    cluster_cmd->add_option("--stopwords", cl_stopwords);
    cluster_cmd->add_option("--splits", cl_splits);
    cluster_cmd->add_option("--out", cl_out);

    // link
    std::string lk_clusters, lk_map, lk_provider = "fixture", lk_catalog, lk_host, lk_suggest,
                lk_out = "linked.json";
    int lk_limit = 5;
    auto* link_cmd = app.add_subcommand("link", "bind knowledge-graph entities onto clusters");
    link_cmd->add_option("--clusters", lk_clusters);
    link_cmd->add_option("--map", lk_map);
    link_cmd->add_option("--provider", lk_provider)->check(CLI::IsMember({"fixture", "live"}));
    link_cmd->add_option("--catalog", lk_catalog, "fixture provider candidate catalog");
    link_cmd->add_option("--host", lk_host, "live provider host");
    link_cmd->add_option("--suggest", lk_suggest, "print entity candidates for a word and exit");
    link_cmd->add_option("--limit", lk_limit);
    link_cmd->add_option("--out", lk_out);

    // fetch
    std::string ft_linked, ft_countries = "all", ft_provider = "sim", ft_world,
                ft_cache = "cache";
    std::uint64_t ft_seed = 0;
    auto* fetch_cmd = app.add_subcommand("fetch", "calibrate search-interest series per country");
    fetch_cmd->add_option("--linked", ft_linked)->required();
    fetch_cmd->add_option("--countries", ft_countries, "comma list or 'all'");
    fetch_cmd->add_option("--provider", ft_provider)->check(CLI::IsMember({"sim", "live"}));
    fetch_cmd->add_option("--seed", ft_seed);
    fetch_cmd->add_option("--world", ft_world)->required();
    fetch_cmd->add_option("--cache", ft_cache);

    // attention
    std::string at_cache = "cache", at_linked, at_records, at_reference = "/m/045c7b",
                at_out = "profiles.json";
    int at_year1 = 2019;
    auto* attn_cmd = app.add_subcommand("attention", "build per-pair attention profiles");
    attn_cmd->add_option("--cache", at_cache);
    attn_cmd->add_option("--linked", at_linked)->required();
    attn_cmd->add_option("--records", at_records)->required();
    attn_cmd->add_option("--reference-entity", at_reference);
    attn_cmd->add_option("--year1", at_year1);
    attn_cmd->add_option("--out", at_out);

    // analyze
    std::string an_profiles, an_out = "report.json", an_tables, an_plots;
    int an_min_fc = 10, an_min_fc_countries = 10, an_kmax = 10, an_year1 = 2019;
    auto* analyze_cmd = app.add_subcommand("analyze", "compute the analysis report");
    analyze_cmd->add_option("--profiles", an_profiles)->required();
    analyze_cmd->add_option("--min-fc-claims", an_min_fc);
    analyze_cmd->add_option("--min-fc-countries", an_min_fc_countries);
    analyze_cmd->add_option("--kmax", an_kmax);
    analyze_cmd->add_option("--year1", an_year1);
    analyze_cmd->add_option("--out", an_out);
    analyze_cmd->add_option("--tables-csv", an_tables);
    analyze_cmd->add_option("--plot-series", an_plots);

    // synth
    std::string sy_config, sy_out = "world.json";
    std::uint64_t sy_seed = 0;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic interest world");
    synth_cmd->add_option("--config", sy_config)->required();
    synth_cmd->add_option("--seed", sy_seed);
    synth_cmd->add_option("--out", sy_out);

    // pipeline
    std::string pl_config, pl_stage;
    bool pl_force = false;
    auto* pipeline_cmd = app.add_subcommand("pipeline", "run all stages from a config file");
    pipeline_cmd->add_option("--config", pl_config)->required();
    pipeline_cmd->add_flag("--force", pl_force);
    pipeline_cmd->add_option("--stage", pl_stage,
                             "run just this stage (ingest, cluster, link, synth, fetch, "
                             "attention, analyze)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest_cmd->parsed())
            return cmd_ingest(in_input, in_colmap, in_scope, in_out, in_errors);
        if (cluster_cmd->parsed())
            return cmd_cluster(cl_records, cl_eps, cl_min_pts, cl_sweep, cl_stopwords, cl_splits,
                               cl_out);
        if (link_cmd->parsed())
            return cmd_link(lk_clusters, lk_map, lk_provider, lk_catalog, lk_host, lk_suggest,
                            lk_limit, lk_out);
        if (fetch_cmd->parsed())
            return cmd_fetch(ft_linked, ft_countries, ft_provider, ft_seed, ft_world, ft_cache);
        if (attn_cmd->parsed())
            return cmd_attention(at_cache, at_linked, at_records, at_reference, at_year1, at_out);
        if (analyze_cmd->parsed())
            return cmd_analyze(an_profiles, an_min_fc, an_min_fc_countries, an_kmax, an_year1,
                               an_out, an_tables, an_plots);
        if (synth_cmd->parsed()) return cmd_synth(sy_config, sy_seed, sy_out);
        if (pipeline_cmd->parsed()) return cmd_pipeline(pl_config, pl_force, pl_stage);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
