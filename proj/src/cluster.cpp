#include "fcattn/cluster.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace fcattn::cluster {

using nlohmann::json;

std::set<std::string> tokenize(const std::string& text, const std::set<std::string>& stopwords) {
    std::set<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty() && !stopwords.count(cur)) tokens.insert(cur);
        cur.clear();
    };
    for (unsigned char c : text) {
        if (std::isalnum(c)) cur.push_back(static_cast<char>(std::tolower(c)));
        else flush();
    }
    flush();
    return tokens;
}

double jaccard_distance(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    if (a.empty() || b.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& t : a) inter += b.count(t);
    std::size_t uni = a.size() + b.size() - inter;
    return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

DistanceMatrix pairwise_jaccard(const std::vector<BowVector>& vectors) {
    DistanceMatrix m;
    m.n = vectors.size();
    m.d.assign(m.n * m.n, 0.0);
    for (std::size_t i = 0; i < m.n; ++i)
        for (std::size_t j = i + 1; j < m.n; ++j)
            m.set(i, j, jaccard_distance(vectors[i].tokens, vectors[j].tokens));
    return m;
}

std::vector<int> dbscan(const DistanceMatrix& d, double eps, int min_pts) {
    if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("dbscan: eps must be in (0,1]");
    if (min_pts < 1) throw std::invalid_argument("dbscan: min_pts must be >= 1");

    const std::size_t n = d.n;
    std::vector<std::vector<std::size_t>> neighbors(n);
    std::vector<bool> core(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            if (d.at(i, j) <= eps) neighbors[i].push_back(j);
        core[i] = neighbors[i].size() >= static_cast<std::size_t>(min_pts);
    }

    std::vector<int> labels(n, kNoise);
    int next = 0;
    // Density-connected components over core points, scanned in index order.
    for (std::size_t i = 0; i < n; ++i) {
        if (!core[i] || labels[i] != kNoise) continue;
        int cid = next++;
        std::deque<std::size_t> queue{i};
        labels[i] = cid;
        while (!queue.empty()) {
            std::size_t p = queue.front();
            queue.pop_front();
            for (std::size_t q : neighbors[p]) {
                if (!core[q] || labels[q] != kNoise) continue;
                labels[q] = cid;
                queue.push_back(q);
            }
        }
    }
    // Border points: lowest-index core neighbor wins.
    for (std::size_t i = 0; i < n; ++i) {
        if (core[i] || labels[i] != kNoise) continue;
        for (std::size_t q : neighbors[i]) {
            if (core[q]) {
                labels[i] = labels[q];
                break;
            }
        }
    }
    return labels;
}

std::vector<EpsSummary> sweep_eps(const DistanceMatrix& d, const std::vector<double>& eps_values,
                                  int min_pts) {
    if (eps_values.empty()) throw std::invalid_argument("sweep_eps: empty eps list");
    std::vector<EpsSummary> out;
    for (double eps : eps_values) {
        auto labels = dbscan(d, eps, min_pts);
        EpsSummary s;
        s.eps = eps;
        std::map<int, std::size_t> sizes;
        for (int l : labels) {
            if (l == kNoise) ++s.noise_count;
            else ++sizes[l];
        }
        s.cluster_count = static_cast<int>(sizes.size());
        s.noise_fraction = d.n ? static_cast<double>(s.noise_count) / static_cast<double>(d.n) : 0.0;
        for (auto& [_, sz] : sizes) ++s.size_histogram[sz];
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

std::string cluster_id_for(int ordinal) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "c%03d", ordinal);
    return buf;
}

}  // namespace

std::vector<ClaimCluster> clusters_from_labels(const std::vector<BowVector>& vectors,
                                               const std::vector<int>& labels) {
    std::map<int, std::set<int>> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] != kNoise) members[labels[i]].insert(vectors[i].record_id);

    std::vector<std::set<int>> ordered;
    for (auto& [_, m] : members) ordered.push_back(std::move(m));
    std::sort(ordered.begin(), ordered.end(),
              [](const auto& a, const auto& b) { return *a.begin() < *b.begin(); });

    std::vector<ClaimCluster> out;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        ClaimCluster c;
        c.cluster_id = cluster_id_for(static_cast<int>(i) + 1);
        c.member_ids = std::move(ordered[i]);
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<ClaimCluster> split_cluster(const ClaimCluster& cluster,
                                        const std::vector<BowVector>& vectors,
                                        const SplitRule& rule) {
    if (rule.groups.empty()) throw std::invalid_argument("split_cluster: empty rule");

    std::map<int, const std::set<std::string>*> tokens_by_id;
    for (const auto& v : vectors) tokens_by_id[v.record_id] = &v.tokens;

    std::vector<ClaimCluster> out(rule.groups.size() + 1);
    for (std::size_t g = 0; g < rule.groups.size(); ++g) {
        out[g].cluster_id = cluster.cluster_id + "/" + rule.groups[g].first;
        out[g].label = rule.groups[g].first;
    }
    out.back().cluster_id = cluster.cluster_id + "/residual";
    out.back().label = "residual";

    for (int id : cluster.member_ids) {
        auto it = tokens_by_id.find(id);
        std::size_t target = rule.groups.size();  // residual
        if (it != tokens_by_id.end()) {
            for (std::size_t g = 0; g < rule.groups.size(); ++g) {
                const auto& kw = rule.groups[g].second;
                bool hit = std::any_of(kw.begin(), kw.end(),
                                       [&](const std::string& k) { return it->second->count(k); });
                if (hit) {
                    target = g;
                    break;
                }
            }
        }
        out[target].member_ids.insert(id);
    }
    return out;
}

ClaimCluster expand_cluster_by_keyword(const ClaimCluster& cluster,
                                       const std::vector<BowVector>& all_vectors,
                                       const std::vector<ClaimCluster>& all_clusters,
                                       const std::set<std::string>& keywords) {
    if (keywords.empty()) throw std::invalid_argument("expand_cluster_by_keyword: empty keywords");

    std::set<int> blocked;  // members of other entity-bound clusters
    for (const auto& c : all_clusters) {
        if (c.cluster_id == cluster.cluster_id || !c.entity_id) continue;
        blocked.insert(c.member_ids.begin(), c.member_ids.end());
    }

    ClaimCluster out = cluster;
    for (const auto& v : all_vectors) {
        if (out.member_ids.count(v.record_id) || blocked.count(v.record_id)) continue;
        bool hit = std::any_of(keywords.begin(), keywords.end(),
                               [&](const std::string& k) { return v.tokens.count(k); });
        if (hit) out.member_ids.insert(v.record_id);
    }
    return out;
}

const std::set<std::string>& default_stopwords() {
    static const std::set<std::string> words = {
        "a",    "about", "after", "all",   "an",   "and",  "any",  "are",  "as",    "at",
        "be",   "been",  "being", "but",   "by",   "can",  "could", "did",  "do",    "does",
        "for",  "from",  "had",   "has",   "have", "he",   "her",  "his",  "how",   "i",
        "if",   "in",    "into",  "is",    "it",   "its",  "may",  "more", "most",  "new",
        "no",   "not",   "of",    "on",    "or",   "our",  "she",  "so",   "some",  "such",
        "than", "that",  "the",   "their", "them", "then", "there", "these", "they", "this",
        "those", "to",   "up",    "was",   "we",   "were", "what", "when", "where", "which",
        "while", "who",  "will",  "with",  "would", "you",  "your"};
    return words;
}

std::set<std::string> load_stopwords(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open stopwords file: " + path);
    std::set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) out.insert(line);
    }
    return out;
}

void write_clusters_json(const std::string& path, const std::vector<ClaimCluster>& clusters) {
    json arr = json::array();
    for (const auto& c : clusters) {
        json j;
        j["cluster_id"] = c.cluster_id;
        j["label"] = c.label;
        j["member_ids"] = c.member_ids;
        if (c.entity_id) {
            j["entity_id"] = *c.entity_id;
            j["entity_name"] = c.entity_name.value_or("");
        }
        arr.push_back(std::move(j));
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write clusters file: " + path);
    out << arr.dump(2) << "\n";
}

std::vector<ClaimCluster> read_clusters_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open clusters file: " + path);
    json arr = json::parse(in);
    std::vector<ClaimCluster> out;
    for (const auto& j : arr) {
        ClaimCluster c;
        c.cluster_id = j.at("cluster_id").get<std::string>();
        c.label = j.value("label", "");
        for (const auto& id : j.at("member_ids")) c.member_ids.insert(id.get<int>());
        if (j.contains("entity_id")) {
            c.entity_id = j["entity_id"].get<std::string>();
            c.entity_name = j.value("entity_name", "");
        }
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace fcattn::cluster
