#include "fcattn/trends.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace fcattn::trends {

namespace fs = std::filesystem;
using nlohmann::json;

bool RawGroupResponse::all_empty() const {
    return std::all_of(series.begin(), series.end(),
                       [](const GroupSeries& s) { return !s.values.has_value(); });
}

const GroupSeries* RawGroupResponse::find(const std::string& query) const {
    for (const auto& s : series)
        if (s.query == query) return &s;
    return nullptr;
}

namespace {

int series_max(const std::vector<int>& v) {
    return v.empty() ? 0 : *std::max_element(v.begin(), v.end());
}

// Observed integer v stands for a true value in [v-0.5, v+0.5] (clamped at 0).
struct Interval {
    double lo = 1.0, hi = 1.0;
    Interval operator*(const Interval& o) const { return {lo * o.lo, hi * o.hi}; }
};

Interval ratio_interval(int num, int den) {
    return {std::max(num - 0.5, 0.0) / (den + 0.5), (num + 0.5) / std::max(den - 0.5, 0.5)};
}

std::string now_iso8601() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&t));
    return buf;
}

}  // namespace

AnchorBank build_anchor_bank(TrendsProvider& provider, const std::vector<std::string>& candidates,
                             const std::string& reference, const std::string& country,
                             const WeekGrid& period) {
    if (candidates.size() < 1 ||
        std::find(candidates.begin(), candidates.end(), reference) == candidates.end())
        throw std::invalid_argument("build_anchor_bank: candidates must include the reference");

    AnchorBank bank;
    bank.country = country;
    bank.reference = reference;
    bank.anchors.push_back(Anchor{reference, 1.0, 1.0, 1.0, 0.0});

    for (const auto& cand : candidates) {
        if (cand == reference) continue;
        bool attached = false;
        // Try the nearest (least popular) accepted anchor first: co-query
        // values stay highest there.
        for (std::size_t ai = bank.anchors.size(); ai-- > 0 && !attached;) {
            const Anchor& a = bank.anchors[ai];
            RawGroupResponse resp = provider.fetch_group({a.query, cand}, country, period);
            const GroupSeries* sa = resp.find(a.query);
            const GroupSeries* sc = resp.find(cand);
            if (!sa || !sc || !sa->values || !sc->values) continue;
            int va = series_max(*sa->values);
            int vc = series_max(*sc->values);
            if (std::min(va, vc) < kInformativeBand) continue;
            Interval pair = ratio_interval(vc, va);
            Anchor na;
            na.query = cand;
            na.ratio_to_reference = a.ratio_to_reference * (static_cast<double>(vc) / va);
            na.ratio_lo = a.ratio_lo * pair.lo;
            na.ratio_hi = a.ratio_hi * pair.hi;
            na.error_bound = std::max(na.ratio_to_reference / na.ratio_lo - 1.0,
                                      1.0 - na.ratio_to_reference / na.ratio_hi);
            na.chain_hops = a.chain_hops + 1;
            na.min_observed = std::min({a.min_observed, va, vc});
            bank.anchors.push_back(std::move(na));
            attached = true;
        }
        // Candidates that never land in the informative band are dropped.
    }

    if (candidates.size() > 1 && bank.anchors.size() == 1)
        throw BankBuildError("anchor bank construction failed for " + country +
                             ": no candidate could be chained to the reference");

    std::stable_sort(bank.anchors.begin(), bank.anchors.end(), [](const Anchor& x, const Anchor& y) {
        return x.ratio_to_reference > y.ratio_to_reference;
    });
    // Strictly decreasing ratios: drop ties beyond the first.
    std::vector<Anchor> dedup;
    for (auto& a : bank.anchors)
        if (dedup.empty() || a.ratio_to_reference < dedup.back().ratio_to_reference ||
            a.query == bank.reference)
            dedup.push_back(std::move(a));
    bank.anchors = std::move(dedup);
    return bank;
}

std::optional<CalibratedSeries> calibrate(TrendsProvider& provider, const AnchorBank& bank,
                                          const std::string& entity_query,
                                          const std::string& country, const WeekGrid& period) {
    if (bank.anchors.empty()) throw std::invalid_argument("calibrate: empty anchor bank");

    const std::size_t n_weeks = period.size();

    auto finish = [&](const std::vector<int>& values, double scale, Interval scale_iv,
                      int chain_length, int min_observed) {
        CalibratedSeries cs;
        cs.entity_id = entity_query;
        cs.country = country;
        cs.weeks = period.labels();
        cs.values.resize(values.size());
        double sum = 0.0, sum_lo = 0.0, sum_hi = 0.0;
        for (std::size_t k = 0; k < values.size(); ++k) {
            cs.values[k] = values[k] * scale;
            sum += values[k];
            sum_lo += std::max(values[k] - 0.5, 0.0);
            sum_hi += values[k] + 0.5;
            min_observed = std::min(min_observed, values[k]);
        }
        // Multiplicative bound on the series total: scale uncertainty plus
        // per-week rounding of the raw integers.
        double total = sum * scale;
        double total_lo = sum_lo * scale_iv.lo;
        double total_hi = sum_hi * scale_iv.hi;
        cs.error_bound =
            total > 0.0 ? std::max(total / total_lo - 1.0, 1.0 - total / total_hi) : 0.0;
        cs.fetched_at = now_iso8601();
        cs.chain_length = chain_length;
        cs.min_observed = min_observed;
        return cs;
    };

    // Self-calibration: the reference defines the unit.
    if (entity_query == bank.reference) {
        RawGroupResponse resp = provider.fetch_group({entity_query}, country, period);
        const GroupSeries* s = resp.find(entity_query);
        if (!s || !s->values) return std::nullopt;
        int m = series_max(*s->values);
        if (m == 0) return std::nullopt;
        // values/m puts the reference max at exactly 1.
        return finish(*s->values, 1.0 / m, Interval{1.0 / (m + 0.5), 1.0 / (m - 0.5)}, 1, m);
    }

    // Binary search the anchor ladder (ratios descending) for a co-query
    // where both maxima sit in the informative band.
    std::size_t lo = 0, hi = bank.anchors.size() - 1;
    bool saw_nonempty = false;
    struct Best {
        int score = -1;  // min(v_entity, v_anchor)
        std::size_t anchor_idx = 0;
        std::vector<int> values;
        int va = 0;
    } best;

    auto probe = [&](std::size_t idx, int& ve, int& va, std::vector<int>& values) -> int {
        // Returns -1: entity too small, +1: anchor too small, 0: in band,
        // -2: entity empty.
        const Anchor& a = bank.anchors[idx];
        RawGroupResponse resp = provider.fetch_group({a.query, entity_query}, country, period);
        const GroupSeries* se = resp.find(entity_query);
        const GroupSeries* sa = resp.find(a.query);
        if (!se || !se->values) return -2;
        saw_nonempty = true;
        values = *se->values;
        ve = series_max(values);
        va = sa && sa->values ? series_max(*sa->values) : 0;
        int score = std::min(ve, va);
        if (score > best.score) best = Best{score, idx, values, va};
        if (ve < kInformativeBand) return -1;
        if (va < kInformativeBand) return +1;
        return 0;
    };

    std::optional<std::size_t> accepted;
    std::vector<int> acc_values;
    int acc_va = 0;
    while (lo <= hi) {
        std::size_t mid = lo + (hi - lo) / 2;
        int ve = 0, va = 0;
        std::vector<int> values;
        int verdict = probe(mid, ve, va, values);
        if (verdict == 0) {
            accepted = mid;
            acc_values = std::move(values);
            acc_va = va;
            break;
        }
        if (verdict == -1 || verdict == -2) {
            // Entity small relative to this anchor: try smaller anchors.
            if (mid == bank.anchors.size() - 1) break;
            lo = mid + 1;
        } else {
            if (mid == 0) break;
            hi = mid - 1;
        }
    }

    if (!accepted) {
        if (!saw_nonempty) return std::nullopt;  // empty against every anchor probed
        // Out-of-band fallback: use the best co-query seen.
        if (best.score < 1 || best.va < 1) return std::nullopt;
        accepted = best.anchor_idx;
        acc_values = best.values;
        acc_va = best.va;
    }

    const Anchor& a = bank.anchors[*accepted];
    double scale = a.ratio_to_reference / acc_va;
    Interval scale_iv{a.ratio_lo / (acc_va + 0.5), a.ratio_hi / std::max(acc_va - 0.5, 0.5)};
    int chain_length = a.chain_hops + 1;  // plus the entity/anchor co-query
    int min_obs = std::min({a.min_observed, acc_va, series_max(acc_values)});
    return finish(acc_values, scale, scale_iv, chain_length, min_obs);
}

SeriesCache::SeriesCache(std::string dir, bool repair) : dir_(std::move(dir)), repair_(repair) {
    fs::create_directories(dir_);
}

std::string SeriesCache::path_for(const std::string& entity_id, const std::string& country) const {
    std::string name = entity_id;
    std::replace(name.begin(), name.end(), '/', '_');
    return dir_ + "/" + country + "/" + name + ".json";
}

void SeriesCache::put(const CalibratedSeries& series) {
    fs::path p = path_for(series.entity_id, series.country);
    fs::create_directories(p.parent_path());
    json j;
    j["entity_id"] = series.entity_id;
    j["country"] = series.country;
    j["weeks"] = series.weeks;
    j["values"] = series.values;
    j["error_bound"] = series.error_bound;
    j["fetched_at"] = series.fetched_at;
    j["chain_length"] = series.chain_length;
    j["min_observed"] = series.min_observed;
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cache: cannot write " + p.string());
    out << j.dump() << "\n";
}

std::optional<CalibratedSeries> SeriesCache::get(const std::string& entity_id,
                                                 const std::string& country) const {
    fs::path p = path_for(entity_id, country);
    std::ifstream in(p);
    if (!in) return std::nullopt;
    try {
        json j = json::parse(in);
        CalibratedSeries cs;
        cs.entity_id = j.at("entity_id").get<std::string>();
        cs.country = j.at("country").get<std::string>();
        cs.weeks = j.at("weeks").get<std::vector<std::string>>();
        cs.values = j.at("values").get<std::vector<double>>();
        cs.error_bound = j.at("error_bound").get<double>();
        cs.fetched_at = j.value("fetched_at", "");
        cs.chain_length = j.value("chain_length", 0);
        cs.min_observed = j.value("min_observed", 0);
        if (cs.weeks.size() != cs.values.size())
            throw std::runtime_error("weeks/values length mismatch");
        return cs;
    } catch (const std::exception& e) {
        if (repair_) return std::nullopt;
        throw std::runtime_error("cache: corrupt entry for <" + entity_id + ", " + country +
                                 "> at " + p.string() + ": " + e.what());
    }
}

}  // namespace fcattn::trends
