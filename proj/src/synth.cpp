#include "fcattn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace fcattn::synth {

using nlohmann::json;

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

std::vector<double> SynthWorld::true_series_ref_units(const std::string& country,
                                                      const std::string& query) const {
    const auto& byq = true_popularity.at(country);
    const auto& series = byq.at(query);
    const auto& ref = byq.at(config.reference);
    double ref_max = *std::max_element(ref.begin(), ref.end());
    std::vector<double> out(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) out[i] = series[i] / ref_max;
    return out;
}

bool SynthWorld::is_missing(const std::string& entity, const std::string& country) const {
    for (const auto& [e, c] : config.missing_pairs)
        if (e == entity && c == country) return true;
    return false;
}

namespace {

// Independent random stream per (seed, country, query); generation order
// therefore never affects the values.
SplitMix64 stream_for(std::uint64_t seed, const std::string& country, const std::string& query) {
    SplitMix64 rng;
    rng.state = seed ^ fnv1a64(country + "\x1f" + query);
    rng.next();  // decorrelate nearby seeds
    return rng;
}

bool pair_listed(const std::vector<std::pair<std::string, std::string>>& pairs,
                 const std::string& entity, const std::string& country) {
    for (const auto& [e, c] : pairs)
        if (e == entity && c == country) return true;
    return false;
}

}  // namespace

SynthWorld generate_world(const WorldConfig& config, std::uint64_t seed) {
    SynthWorld w;
    w.config = config;
    w.seed = seed;
    w.grid = make_week_grid(config.year1);
    const std::size_t n_weeks = w.grid.size();
    if (n_weeks == 0) throw std::invalid_argument("generate_world: degenerate week grid");
    const std::size_t split = w.grid.split;

    // Random missing pairs are drawn deterministically when a rate is set
    // and no explicit list is given.
    auto missing = config.missing_pairs;
    if (missing.empty() && config.missing_rate > 0.0) {
        std::vector<std::pair<std::string, std::string>> all;
        for (const auto& c : config.countries)
            for (const auto& e : config.entities)
                if (!pair_listed(config.damped_pairs, e, c)) all.emplace_back(e, c);
        SplitMix64 rng{seed ^ fnv1a64("missing-pairs")};
        std::size_t want = static_cast<std::size_t>(config.missing_rate *
                                                    static_cast<double>(all.size()));
        // Fisher-Yates prefix.
        for (std::size_t i = 0; i < want && i < all.size(); ++i) {
            std::size_t j = i + static_cast<std::size_t>(
                                    rng.next() % static_cast<std::uint64_t>(all.size() - i));
            std::swap(all[i], all[j]);
            missing.push_back(all[i]);
        }
        w.config.missing_pairs = missing;
    }

    for (const auto& country : config.countries) {
        auto& byq = w.true_popularity[country];

        // Reference: stationary, mildly noisy.
        {
            SplitMix64 rng = stream_for(seed, country, config.reference);
            std::vector<double> s(n_weeks);
            for (std::size_t k = 0; k < n_weeks; ++k)
                s[k] = config.reference_level *
                       (1.0 + 0.02 * (2.0 * rng.next_double() - 1.0));
            byq[config.reference] = std::move(s);
        }

        // Anchor candidates: stationary at their configured popularity.
        for (const auto& [q, frac] : config.anchor_candidates) {
            SplitMix64 rng = stream_for(seed, country, q);
            std::vector<double> s(n_weeks);
            for (std::size_t k = 0; k < n_weeks; ++k)
                s[k] = config.reference_level * frac *
                       (1.0 + config.noise_amplitude * (2.0 * rng.next_double() - 1.0));
            byq[q] = std::move(s);
        }

        // Entities: baseline noise in year one, baseline plus bursts in year two.
        for (const auto& e : config.entities) {
            SplitMix64 rng = stream_for(seed, country, e);
            bool is_missing = pair_listed(missing, e, country);
            bool is_damped = pair_listed(config.damped_pairs, e, country);

            double base = is_missing
                              ? config.reference_level * config.missing_level
                              : config.reference_level *
                                    rng.uniform(config.baseline_min, config.baseline_max);

            std::vector<Burst> bursts;
            if (!is_missing && !is_damped) {
                Burst b;
                b.shape = rng.next_double() < config.exp_decay_probability
                              ? BurstShape::ExpDecay
                              : BurstShape::Rectangular;
                b.start_week = rng.uniform_int(config.burst_week_min, config.burst_week_max);
                b.duration = rng.uniform_int(config.burst_duration_min, config.burst_duration_max);
                b.magnitude =
                    base * rng.uniform(config.burst_magnitude_min, config.burst_magnitude_max);
                b.decay = rng.uniform(0.5, 0.9);
                bursts.push_back(b);
            }

            std::vector<double> s(n_weeks);
            for (std::size_t k = 0; k < n_weeks; ++k) {
                double v = base * (1.0 + config.noise_amplitude * (2.0 * rng.next_double() - 1.0));
                if (is_damped && k >= split) v = base * 0.8;  // always below the 2019 mean
                if (k >= split) {
                    int t = static_cast<int>(k - split);
                    for (const Burst& b : bursts) {
                        int dt = t - b.start_week;
                        if (dt < 0 || dt >= b.duration) continue;
                        v += b.shape == BurstShape::Rectangular
                                 ? b.magnitude
                                 : b.magnitude * std::pow(b.decay, dt);
                    }
                }
                s[k] = v;
            }
            byq[e] = std::move(s);
            w.true_events[country][e] = std::move(bursts);
        }
    }
    return w;
}

trends::RawGroupResponse SimTrendsProvider::fetch_group(const std::vector<std::string>& queries,
                                                        const std::string& country,
                                                        const WeekGrid& period) {
    if (queries.empty() || queries.size() > 5)
        throw std::invalid_argument("fetch_group: group must hold 1..5 queries");

    auto cit = world_.true_popularity.find(country);

    // Map the requested period onto the world grid.
    std::size_t offset = 0, n_weeks = period.size();
    if (n_weeks == 0 || world_.grid.mondays.empty())
        throw std::invalid_argument("fetch_group: empty period");
    {
        auto idx = world_.grid.week_index(period.mondays.front());
        if (!idx || *idx + n_weeks > world_.grid.size())
            throw std::invalid_argument("fetch_group: period outside world grid");
        offset = *idx;
    }

    trends::RawGroupResponse resp;
    resp.country = country;

    double group_max = 0.0;
    std::vector<const std::vector<double>*> sources;
    for (const auto& q : queries) {
        const std::vector<double>* src = nullptr;
        if (cit != world_.true_popularity.end()) {
            auto qit = cit->second.find(q);
            if (qit != cit->second.end()) src = &qit->second;
        }
        sources.push_back(src);
        if (src)
            for (std::size_t k = 0; k < n_weeks; ++k)
                group_max = std::max(group_max, (*src)[offset + k]);
    }

    for (std::size_t i = 0; i < queries.size(); ++i) {
        trends::GroupSeries gs;
        gs.query = queries[i];
        const auto* src = sources[i];
        if (src && group_max > 0.0) {
            double mean = 0.0;
            for (std::size_t k = 0; k < n_weeks; ++k) mean += (*src)[offset + k];
            mean /= static_cast<double>(n_weeks);
            if (mean >= kEmptyThreshold * group_max) {
                std::vector<int> vals(n_weeks);
                for (std::size_t k = 0; k < n_weeks; ++k)
                    vals[k] = static_cast<int>(
                        std::lround(100.0 * (*src)[offset + k] / group_max));
                gs.values = std::move(vals);
            }
        }
        resp.series.push_back(std::move(gs));
    }
    return resp;
}

namespace {

json config_to_json(const WorldConfig& c) {
    json j;
    j["year1"] = c.year1;
    j["countries"] = c.countries;
    j["entities"] = c.entities;
    j["reference"] = c.reference;
    json anchors = json::array();
    for (const auto& [q, f] : c.anchor_candidates) anchors.push_back({{"query", q}, {"popularity", f}});
    j["anchor_candidates"] = anchors;
    j["reference_level"] = c.reference_level;
    j["baseline_min"] = c.baseline_min;
    j["baseline_max"] = c.baseline_max;
    j["noise_amplitude"] = c.noise_amplitude;
    j["burst_magnitude_min"] = c.burst_magnitude_min;
    j["burst_magnitude_max"] = c.burst_magnitude_max;
    j["burst_week_min"] = c.burst_week_min;
    j["burst_week_max"] = c.burst_week_max;
    j["burst_duration_min"] = c.burst_duration_min;
    j["burst_duration_max"] = c.burst_duration_max;
    j["exp_decay_probability"] = c.exp_decay_probability;
    j["missing_rate"] = c.missing_rate;
    j["missing_level"] = c.missing_level;
    auto pairs_json = [](const std::vector<std::pair<std::string, std::string>>& ps) {
        json a = json::array();
        for (const auto& [e, co] : ps) a.push_back({{"entity", e}, {"country", co}});
        return a;
    };
    j["missing_pairs"] = pairs_json(c.missing_pairs);
    j["damped_pairs"] = pairs_json(c.damped_pairs);
    return j;
}

WorldConfig config_from_json(const json& j) {
    WorldConfig c;
    c.year1 = j.value("year1", 2019);
    c.countries = j.at("countries").get<std::vector<std::string>>();
    c.entities = j.at("entities").get<std::vector<std::string>>();
    c.reference = j.value("reference", std::string("/m/045c7b"));
    for (const auto& a : j.value("anchor_candidates", json::array()))
        c.anchor_candidates.emplace_back(a.at("query").get<std::string>(),
                                         a.at("popularity").get<double>());
    c.reference_level = j.value("reference_level", c.reference_level);
    c.baseline_min = j.value("baseline_min", c.baseline_min);
    c.baseline_max = j.value("baseline_max", c.baseline_max);
    c.noise_amplitude = j.value("noise_amplitude", c.noise_amplitude);
    c.burst_magnitude_min = j.value("burst_magnitude_min", c.burst_magnitude_min);
    c.burst_magnitude_max = j.value("burst_magnitude_max", c.burst_magnitude_max);
    c.burst_week_min = j.value("burst_week_min", c.burst_week_min);
    c.burst_week_max = j.value("burst_week_max", c.burst_week_max);
    c.burst_duration_min = j.value("burst_duration_min", c.burst_duration_min);
    c.burst_duration_max = j.value("burst_duration_max", c.burst_duration_max);
    c.exp_decay_probability = j.value("exp_decay_probability", c.exp_decay_probability);
    c.missing_rate = j.value("missing_rate", c.missing_rate);
    c.missing_level = j.value("missing_level", c.missing_level);
    auto pairs_from = [](const json& a) {
        std::vector<std::pair<std::string, std::string>> ps;
        for (const auto& p : a)
            ps.emplace_back(p.at("entity").get<std::string>(), p.at("country").get<std::string>());
        return ps;
    };
    c.missing_pairs = pairs_from(j.value("missing_pairs", json::array()));
    c.damped_pairs = pairs_from(j.value("damped_pairs", json::array()));
    return c;
}

}  // namespace

WorldConfig load_world_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open world config: " + path);
    json j = json::parse(in);
    if (j.contains("config")) return config_from_json(j["config"]);
    return config_from_json(j);
}

void save_world(const std::string& path, const SynthWorld& world) {
    json j;
    j["config"] = config_to_json(world.config);
    j["seed"] = world.seed;
    json pop;
    for (const auto& [country, byq] : world.true_popularity) {
        json cj;
        for (const auto& [q, s] : byq) cj[q] = s;
        pop[country] = std::move(cj);
    }
    j["true_popularity"] = std::move(pop);
    json ev;
    for (const auto& [country, bye] : world.true_events) {
        json cj;
        for (const auto& [e, bursts] : bye) {
            json bs = json::array();
            for (const auto& b : bursts)
                bs.push_back({{"shape", b.shape == BurstShape::Rectangular ? "rect" : "expdecay"},
                              {"start_week", b.start_week},
                              {"duration", b.duration},
                              {"magnitude", b.magnitude},
                              {"decay", b.decay}});
            cj[e] = std::move(bs);
        }
        ev[country] = std::move(cj);
    }
    j["true_events"] = std::move(ev);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write world file: " + path);
    out << j.dump() << "\n";
}

SynthWorld load_world(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open world file: " + path);
    json j = json::parse(in);
    SynthWorld w;
    w.config = config_from_json(j.at("config"));
    w.seed = j.value("seed", 0ull);
    w.grid = make_week_grid(w.config.year1);
    for (auto& [country, cj] : j.at("true_popularity").items())
        for (auto& [q, s] : cj.items())
            w.true_popularity[country][q] = s.get<std::vector<double>>();
    json events = j.value("true_events", json::object());
    for (auto& [country, cj] : events.items())
        for (auto& [e, bs] : cj.items()) {
            std::vector<Burst> bursts;
            for (const auto& bj : bs) {
                Burst b;
                b.shape = bj.at("shape").get<std::string>() == "rect" ? BurstShape::Rectangular
                                                                      : BurstShape::ExpDecay;
                b.start_week = bj.at("start_week").get<int>();
                b.duration = bj.at("duration").get<int>();
                b.magnitude = bj.at("magnitude").get<double>();
                b.decay = bj.at("decay").get<double>();
                bursts.push_back(b);
            }
            w.true_events[country][e] = std::move(bursts);
        }
    return w;
}

SynthWorld load_world_or_config(const std::string& path, std::uint64_t seed) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open world file: " + path);
    json j = json::parse(in);
    if (j.contains("true_popularity")) {
        in.close();
        return load_world(path);
    }
    WorldConfig c = j.contains("config") ? config_from_json(j["config"]) : config_from_json(j);
    std::uint64_t s = j.value("seed", seed);
    return generate_world(c, s);
}

}  // namespace fcattn::synth
