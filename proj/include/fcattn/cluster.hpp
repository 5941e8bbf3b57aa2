#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fcattn/ingest.hpp"

namespace fcattn::cluster {

struct BowVector {
    int record_id = 0;
    std::set<std::string> tokens;
};

std::set<std::string> tokenize(const std::string& text, const std::set<std::string>& stopwords);

double jaccard_distance(const std::set<std::string>& a, const std::set<std::string>& b);

// Symmetric matrix of pairwise distances in [0,1], zero diagonal.
struct DistanceMatrix {
    std::size_t n = 0;
    std::vector<double> d;  // row-major n*n

    double at(std::size_t i, std::size_t j) const { return d[i * n + j]; }
    void set(std::size_t i, std::size_t j, double v) { d[i * n + j] = d[j * n + i] = v; }
};

DistanceMatrix pairwise_jaccard(const std::vector<BowVector>& vectors);

constexpr int kNoise = -1;

// Standard DBSCAN on a precomputed metric. The neighborhood of a point
// includes the point itself. Border points reachable from several
// clusters attach to the cluster of their lowest-index core neighbor,
// so the labeling is deterministic for a fixed point order.
std::vector<int> dbscan(const DistanceMatrix& d, double eps, int min_pts);

struct EpsSummary {
    double eps = 0;
    int cluster_count = 0;
    int noise_count = 0;
    double noise_fraction = 0;
    std::map<std::size_t, int> size_histogram;  // cluster size -> count
};

std::vector<EpsSummary> sweep_eps(const DistanceMatrix& d, const std::vector<double>& eps_values,
                                  int min_pts);

struct ClaimCluster {
    std::string cluster_id;
    std::set<int> member_ids;
    std::string label;
    std::optional<std::string> entity_id;  // set by kglink
    std::optional<std::string> entity_name;
};

// Groups DBSCAN labels into clusters with stable ids ("c001", ...) ordered
// by smallest member record id. Noise points are omitted.
std::vector<ClaimCluster> clusters_from_labels(const std::vector<BowVector>& vectors,
                                               const std::vector<int>& labels);

struct SplitRule {
    // Ordered: a member matching several groups goes to the first one.
    std::vector<std::pair<std::string, std::set<std::string>>> groups;  // label -> keywords
};

// Routes members to the sub-cluster whose keywords intersect their tokens;
// unmatched members land in "<label>/residual".
std::vector<ClaimCluster> split_cluster(const ClaimCluster& cluster,
                                        const std::vector<BowVector>& vectors,
                                        const SplitRule& rule);

// Adds any record whose tokens intersect `keywords`, unless it already
// belongs to another entity-bound cluster. Idempotent.
ClaimCluster expand_cluster_by_keyword(const ClaimCluster& cluster,
                                       const std::vector<BowVector>& all_vectors,
                                       const std::vector<ClaimCluster>& all_clusters,
                                       const std::set<std::string>& keywords);

const std::set<std::string>& default_stopwords();
std::set<std::string> load_stopwords(const std::string& path);

void write_clusters_json(const std::string& path, const std::vector<ClaimCluster>& clusters);
std::vector<ClaimCluster> read_clusters_json(const std::string& path);

}  // namespace fcattn::cluster
