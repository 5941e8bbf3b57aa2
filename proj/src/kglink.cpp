#include "fcattn/kglink.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <stdexcept>

#include <httplib.h>
#include <json.hpp>

namespace fcattn::kglink {

using nlohmann::json;

bool is_valid_entity_id(const std::string& id) {
    if (id.size() < 4) return false;
    if (id.compare(0, 3, "/m/") != 0 && id.compare(0, 3, "/g/") != 0) return false;
    return std::all_of(id.begin() + 3, id.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_';
    });
}

FixtureEntityProvider::FixtureEntityProvider(const std::string& catalog_path) {
    std::ifstream in(catalog_path);
    if (!in) throw std::runtime_error("cannot open entity catalog: " + catalog_path);
    json j = json::parse(in);
    for (auto& [word, arr] : j.items()) {
        std::vector<EntityCandidate> cands;
        for (const auto& e : arr) {
            EntityCandidate c;
            c.entity.entity_id = e.at("entity_id").get<std::string>();
            c.entity.display_name = e.at("display_name").get<std::string>();
            c.score = e.value("score", 0.0);
            cands.push_back(std::move(c));
        }
        std::stable_sort(cands.begin(), cands.end(),
                         [](const auto& a, const auto& b) { return a.score > b.score; });
        catalog_[word] = std::move(cands);
    }
}

EntityCandidateList FixtureEntityProvider::search(const std::string& word, int limit) {
    EntityCandidateList out;
    out.query = word;
    auto it = catalog_.find(word);
    if (it != catalog_.end()) {
        for (const auto& c : it->second) {
            if (static_cast<int>(out.candidates.size()) >= limit) break;
            out.candidates.push_back(c);
        }
    }
    return out;
}

LiveEntityProvider::LiveEntityProvider(std::string host, std::string key_env)
    : host_(std::move(host)) {
    if (const char* key = std::getenv(key_env.c_str())) api_key_ = key;
}

EntityCandidateList LiveEntityProvider::search(const std::string& word, int limit) {
    httplib::SSLClient client(host_);
    client.set_connection_timeout(10);
    httplib::Params params{{"query", word},
                           {"limit", std::to_string(limit)},
                           {"key", api_key_}};
    auto res = client.Get("/v1/entities:search", params, httplib::Headers{});
    if (!res || res->status != 200)
        throw std::runtime_error("entity search transport error for query '" + word + "'");

    EntityCandidateList out;
    out.query = word;
    json j = json::parse(res->body);
    for (const auto& el : j.value("itemListElement", json::array())) {
        EntityCandidate c;
        const auto& r = el.at("result");
        c.entity.entity_id = r.value("@id", "");
        // The API prefixes ids with "kg:".
        if (c.entity.entity_id.rfind("kg:", 0) == 0) c.entity.entity_id.erase(0, 3);
        c.entity.display_name = r.value("name", "");
        c.score = el.value("resultScore", 0.0);
        out.candidates.push_back(std::move(c));
    }
    std::stable_sort(out.candidates.begin(), out.candidates.end(),
                     [](const auto& a, const auto& b) { return a.score > b.score; });
    return out;
}

EntityCandidateList search_entities(EntitySearchProvider& provider, const std::string& word,
                                    int limit) {
    if (word.empty()) throw std::invalid_argument("search_entities: empty word");
    return provider.search(word, limit);
}

EntityMap load_entity_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open entity map: " + path);
    json j = json::parse(in);
    EntityMap m;
    for (auto& [cid, v] : j.items()) {
        if (v.is_string() && v.get<std::string>() == "none") {
            m[cid] = std::nullopt;
        } else {
            EntityRef e;
            e.entity_id = v.at("entity_id").get<std::string>();
            e.display_name = v.at("display_name").get<std::string>();
            if (!is_valid_entity_id(e.entity_id))
                throw std::runtime_error("entity map: malformed entity id '" + e.entity_id + "'");
            if (e.display_name.empty())
                throw std::runtime_error("entity map: empty display name for " + e.entity_id);
            m[cid] = std::move(e);
        }
    }
    return m;
}

std::vector<cluster::ClaimCluster> apply_entity_map(
    const std::vector<cluster::ClaimCluster>& clusters, const EntityMap& mapping) {
    std::set<std::string> known;
    for (const auto& c : clusters) known.insert(c.cluster_id);
    for (const auto& [cid, _] : mapping)
        if (!known.count(cid))
            throw std::runtime_error("entity map references unknown cluster id: " + cid);

    std::set<std::string> used_entities;
    std::vector<cluster::ClaimCluster> out;
    for (const auto& c : clusters) {
        auto it = mapping.find(c.cluster_id);
        if (it == mapping.end())
            throw std::runtime_error("entity map has no entry for cluster id: " + c.cluster_id);
        cluster::ClaimCluster linked = c;
        if (it->second) {
            if (!used_entities.insert(it->second->entity_id).second)
                throw std::runtime_error("entity " + it->second->entity_id +
                                         " is mapped to more than one cluster");
            linked.entity_id = it->second->entity_id;
            linked.entity_name = it->second->display_name;
        } else {
            linked.entity_id.reset();
            linked.entity_name.reset();
        }
        out.push_back(std::move(linked));
    }
    return out;
}

}  // namespace fcattn::kglink
