#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fcattn/trends.hpp"

namespace fcattn::synth {

// Portable seedable generator (SplitMix64). Worlds built from the same
// (config, seed) are bit-identical on every platform.
struct SplitMix64 {
    std::uint64_t state = 0;

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
    // Uniform in [0, 1).
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }
    int uniform_int(int lo, int hi) {  // inclusive
        return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
    }
};

std::uint64_t fnv1a64(const std::string& s);

enum class BurstShape { Rectangular, ExpDecay };

struct Burst {
    BurstShape shape = BurstShape::Rectangular;
    int start_week = 0;   // index into the second (analysis) year
    int duration = 0;     // weeks
    double magnitude = 0; // peak height in true volume units
    double decay = 0.5;   // per-week factor for ExpDecay
};

struct WorldConfig {
    int year1 = 2019;
    std::vector<std::string> countries;
    std::vector<std::string> entities;
    std::string reference = "/m/045c7b";
    // Anchor candidate queries with their true popularity as a fraction of
    // the reference, popularity-descending.
    std::vector<std::pair<std::string, double>> anchor_candidates;
    double reference_level = 1000.0;  // true weekly volume scale of the reference
    double baseline_min = 0.02;       // entity baselines, as fractions of reference_level
    double baseline_max = 0.30;
    double noise_amplitude = 0.05;    // relative weekly noise
    double burst_magnitude_min = 0.5; // bursts, as multiples of the pair baseline
    double burst_magnitude_max = 4.0;
    int burst_week_min = 4;
    int burst_week_max = 40;
    int burst_duration_min = 4;
    int burst_duration_max = 16;
    double exp_decay_probability = 0.5;
    double missing_rate = 0.0;        // fraction of pairs forced below the volume threshold
    double missing_level = 1e-4;      // their level, as a fraction of reference_level
    // Explicit overrides used by fixtures; both win over missing_rate.
    std::vector<std::pair<std::string, std::string>> missing_pairs;  // (entity, country)
    std::vector<std::pair<std::string, std::string>> damped_pairs;   // 2020 held below baseline
};

struct SynthWorld {
    WorldConfig config;
    std::uint64_t seed = 0;
    WeekGrid grid;
    // country -> query -> true weekly volumes over the full grid.
    std::map<std::string, std::map<std::string, std::vector<double>>> true_popularity;
    std::map<std::string, std::map<std::string, std::vector<Burst>>> true_events;

    // True series expressed in reference units (reference max over the
    // period = 1) — the ground truth calibration should recover.
    std::vector<double> true_series_ref_units(const std::string& country,
                                              const std::string& query) const;
    bool is_missing(const std::string& entity, const std::string& country) const;
};

SynthWorld generate_world(const WorldConfig& config, std::uint64_t seed);

WorldConfig load_world_config(const std::string& path);
void save_world(const std::string& path, const SynthWorld& world);
SynthWorld load_world(const std::string& path);
// Accepts either a full world dump or a bare config (regenerates from seed).
SynthWorld load_world_or_config(const std::string& path, std::uint64_t seed);

// Group-max normalization to 100 with rounding; series whose true weekly
// mean is below 1% of the group maximum come back empty.
class SimTrendsProvider : public trends::TrendsProvider {
public:
    explicit SimTrendsProvider(const SynthWorld& world) : world_(world) {}
    trends::RawGroupResponse fetch_group(const std::vector<std::string>& queries,
                                         const std::string& country,
                                         const WeekGrid& period) override;

    static constexpr double kEmptyThreshold = 0.01;

private:
    const SynthWorld& world_;
};

}  // namespace fcattn::synth
