#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fcattn/dates.hpp"

namespace fcattn::trends {

// One query's weekly values inside a group response. `values` is absent
// when the query fell below the provider's volume threshold ("empty").
struct GroupSeries {
    std::string query;
    std::optional<std::vector<int>> values;  // integers in 0..100
};

// Group-normalized response: the maximum over all non-empty series is 100.
struct RawGroupResponse {
    std::string country;
    std::vector<GroupSeries> series;

    bool all_empty() const;
    const GroupSeries* find(const std::string& query) const;
};

class TrendsProvider {
public:
    virtual ~TrendsProvider() = default;
    // 1..5 queries per group.
    virtual RawGroupResponse fetch_group(const std::vector<std::string>& queries,
                                         const std::string& country, const WeekGrid& period) = 0;
};

struct Anchor {
    std::string query;
    double ratio_to_reference = 1.0;  // point estimate
    double ratio_lo = 1.0;            // rigorous interval from integer rounding
    double ratio_hi = 1.0;
    double error_bound = 0.0;         // max relative deviation covered by [lo, hi]
    int chain_hops = 0;               // co-query hops back to the reference
    int min_observed = 100;           // smallest observed integer along the chain
};

struct AnchorBank {
    std::string country;
    std::string reference;
    std::vector<Anchor> anchors;  // ratio strictly decreasing; anchors[0] is the reference
};

// Observed integers below this carry too much rounding error to be useful.
constexpr int kInformativeBand = 10;

struct BankBuildError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Chains candidates (given in rough popularity order, reference first)
// by co-querying neighbours; each anchor's ratio to the reference is the
// product of pair ratios with rounding uncertainty propagated as an
// interval. Candidates that stay out of the informative band in every
// pairing are dropped; if none survive, throws BankBuildError.
AnchorBank build_anchor_bank(TrendsProvider& provider, const std::vector<std::string>& candidates,
                             const std::string& reference, const std::string& country,
                             const WeekGrid& period);

struct CalibratedSeries {
    std::string entity_id;
    std::string country;
    std::vector<std::string> weeks;  // ISO Monday labels, contiguous
    std::vector<double> values;      // reference units (reference max over period = 1)
    double error_bound = 0.0;        // multiplicative bound on the series total
    std::string fetched_at;          // informational only
    int chain_length = 0;            // rounding factors in the calibration chain
    int min_observed = 0;            // smallest integer that entered the calibration
};

// Walks the anchor ladder by binary search for an anchor whose co-query
// with the entity lands both maxima in the informative band, then rescales
// the entity's weekly values into reference units. Returns nullopt when
// the entity is empty against every anchor ("no signal").
std::optional<CalibratedSeries> calibrate(TrendsProvider& provider, const AnchorBank& bank,
                                          const std::string& entity_query,
                                          const std::string& country, const WeekGrid& period);

// On-disk cache, one JSON document per (entity, country) under
// <dir>/<country>/<entity>.json.
class SeriesCache {
public:
    explicit SeriesCache(std::string dir, bool repair = false);

    void put(const CalibratedSeries& series);
    std::optional<CalibratedSeries> get(const std::string& entity_id,
                                        const std::string& country) const;
    std::string path_for(const std::string& entity_id, const std::string& country) const;

private:
    std::string dir_;
    bool repair_;
};

}  // namespace fcattn::trends
