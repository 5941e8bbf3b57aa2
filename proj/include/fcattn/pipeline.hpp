#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace fcattn::pipeline {

struct PipelineConfig {
    // Inputs
    std::string input;           // raw fact-check table
    std::string column_map;
    std::string scope;
    std::string stopwords;       // optional, default list when empty
    std::string splits;          // optional keyword split rules
    std::string expand;          // optional back-search keywords per cluster
    std::string entity_map;
    std::string world;           // synthetic world (config or full dump)
    std::string workdir = "work";
    // Clustering
    double eps = 0.5;
    int min_pts = 2;
    // Provider
    std::string provider = "sim";  // sim | live
    std::uint64_t seed = 0;
    // Attention
    std::string reference_entity = "/m/045c7b";
    int year1 = 2019;
    // Analysis
    int min_fc_claims = 10;
    int min_fc_countries = 10;
    int kmax = 10;
    int fetch_threads = 4;

    std::string path(const std::string& name) const { return workdir + "/" + name; }
};

PipelineConfig load_pipeline_config(const std::string& toml_path);

// FNV-1a over the canonical serialized config; changes iff a field changes.
std::string config_hash(const PipelineConfig& config);

struct StageError : std::runtime_error {
    std::string stage;
    StageError(std::string stage_name, const std::string& what)
        : std::runtime_error("stage " + stage_name + ": " + what), stage(std::move(stage_name)) {}
};

struct StageStatus {
    std::string name;
    bool skipped = false;
    long duration_ms = 0;
    std::map<std::string, std::int64_t> counts;
};

struct PipelineRunResult {
    std::vector<StageStatus> stages;
    std::string report_path;
};

// Runs ingest -> cluster -> link -> synth -> fetch -> attention -> analyze.
// Stages whose outputs are newer than their inputs are skipped unless
// `force`. When `only_stage` is non-empty, runs just that stage.
PipelineRunResult run_pipeline(const PipelineConfig& config, bool force = false,
                               const std::string& only_stage = "");

// Individual stages, shared with the CLI subcommands.
void stage_ingest(const PipelineConfig& config);
void stage_cluster(const PipelineConfig& config);
void stage_link(const PipelineConfig& config);
void stage_synth(const PipelineConfig& config);
void stage_fetch(const PipelineConfig& config);
void stage_attention(const PipelineConfig& config);
void stage_analyze(const PipelineConfig& config);

int stage_exit_code(const std::string& stage);

}  // namespace fcattn::pipeline
