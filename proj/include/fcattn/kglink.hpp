#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fcattn/cluster.hpp"

namespace fcattn::kglink {

struct EntityRef {
    std::string entity_id;  // "/m/..." or "/g/..."
    std::string display_name;
};

bool is_valid_entity_id(const std::string& id);

struct EntityCandidate {
    EntityRef entity;
    double score = 0;
};

struct EntityCandidateList {
    std::string query;
    std::vector<EntityCandidate> candidates;  // scores non-increasing
};

class EntitySearchProvider {
public:
    virtual ~EntitySearchProvider() = default;
    virtual EntityCandidateList search(const std::string& word, int limit) = 0;
};

// Reads a local JSON catalog: { word: [{entity_id, display_name, score}, ...] }.
class FixtureEntityProvider : public EntitySearchProvider {
public:
    explicit FixtureEntityProvider(const std::string& catalog_path);
    EntityCandidateList search(const std::string& word, int limit) override;

private:
    std::map<std::string, std::vector<EntityCandidate>> catalog_;
};

// Minimal JSON-over-HTTPS client for a knowledge-graph search endpoint.
// The API key comes from an environment variable; not used in offline runs.
class LiveEntityProvider : public EntitySearchProvider {
public:
    LiveEntityProvider(std::string host, std::string key_env = "KG_API_KEY");
    EntityCandidateList search(const std::string& word, int limit) override;

private:
    std::string host_;
    std::string api_key_;
};

EntityCandidateList search_entities(EntitySearchProvider& provider, const std::string& word,
                                    int limit);

// cluster_id -> entity, or nullopt for an explicit "none".
using EntityMap = std::map<std::string, std::optional<EntityRef>>;

EntityMap load_entity_map(const std::string& path);

// Binds entities onto clusters. Every cluster id must appear in the map
// (explicit "none" for unlinked clusters); entity ids must be unique.
std::vector<cluster::ClaimCluster> apply_entity_map(
    const std::vector<cluster::ClaimCluster>& clusters, const EntityMap& mapping);

}  // namespace fcattn::kglink
