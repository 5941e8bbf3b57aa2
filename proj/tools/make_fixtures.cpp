// Regenerates the end-to-end fixture dataset: a synthetic search-interest
// world, a fact-check record table whose dates are steered so the mean
// relative attention at the first fact-check lands on a fixed target, and
// the entity map tying claim clusters to world entities. Run from the
// repository root: build/tools/make_fixtures [output_dir].

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fcattn/attention.hpp"
#include "fcattn/cluster.hpp"
#include "fcattn/delimited.hpp"
#include "fcattn/ingest.hpp"
#include "fcattn/pipeline.hpp"
#include "fcattn/synth.hpp"
#include "fcattn/trends.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fcattn;

namespace {

constexpr std::uint64_t kSeed = 424242;
constexpr double kTargetMean = 0.346;
constexpr double kTolerance = 0.0015;

const std::vector<std::string> kCountries = {
    "AR", "AT", "AU", "BD", "BE", "BG", "BR", "CA", "CH", "CL", "CO", "CZ",
    "DE", "DK", "DZ", "EC", "EG", "ES", "ET", "FI", "FR", "GB", "GE", "GH",
    "GR", "HR", "HU", "ID", "IE", "IL", "IN", "IQ", "IT", "JO", "JP", "KE",
    "KR", "LK", "LT", "MA", "MM", "MX", "MY", "NG", "NL", "NO", "NP", "NZ",
    "PE", "PH", "PK", "PL", "PT", "RO", "RS", "RU", "SA", "SE", "SG", "SI",
    "SK", "TH", "TN", "TR", "TW", "UA", "UG", "US", "UY", "VE", "VN", "ZA"};

const std::vector<std::string> kHotCountries = {"BR", "IN", "US", "ID", "MX", "PH", "NG",
                                                "TR", "FR", "GB", "ES", "IT", "DE"};

struct Topic {
    const char* id;    // nullptr for clusters that map to no entity
    const char* name;
    const char* claim;
};

const std::vector<Topic> kTopics = {
    {"/m/0g6rl", "garlic", "eating raw garlic cloves every morning destroys the virus"},
    {"/m/02lmn4", "lemon water", "hot water with lemon slices flushes the infection from your lungs"},
    {"/m/0blch1", "household bleach", "drinking diluted household bleach disinfects the body from inside"},
    {"/m/0cwur", "cow urine", "cow urine baths shield believers against the outbreak"},
    {"/m/05gtw", "5G network", "5g towers weaken immune systems and spread the disease through radiation"},
    {"/m/0mchp", "microchip implant", "vaccination programs secretly implant tracking microchips into citizens"},
    {"/m/0btsp", "bat soup", "bat soup sold at wet markets started the pandemic"},
    {"/m/0chlq", "chloroquine", "chloroquine tablets guarantee full recovery within three days"},
    {"/m/0ibpf", "ibuprofen", "taking ibuprofen makes the illness dramatically worse"},
    {"/m/0vitc", "vitamin C", "megadoses of vitamin c stop the pathogen before symptoms appear"},
    {"/m/0sln4", "saline rinse", "rinsing your nose with warm saline blocks every germ"},
    {"/m/0msq8", "mosquito", "mosquito bites carry the sickness between neighbourhoods"},
    {"/m/0gngr", "ginger tea", "boiled ginger root tea is a proven ancient remedy"},
    {"/m/0hdry", "hand dryer", "hand dryers in public toilets kill microbes on contact"},
    {"/m/0uvlp", "ultraviolet lamp", "ultraviolet lamps sterilise skin and clothing safely at home"},
    {"/m/0cold", "cold weather", "freezing temperatures and snow naturally eliminate the contagion outdoors"},
    {"/m/0alcl", "alcoholic spirits", "strong spirits consumed daily neutralise anything you swallow"},
    {"/m/0pnmj", "pneumonia vaccine", "the old pneumonia jab shields elderly patients completely"},
    {"/m/0antb", "antibiotics", "a standard course of antibiotics heals viral chest colds fast"},
    {"/m/0mask", "face mask", "wearing face masks all day causes dangerous oxygen deficiency"},
    {"/m/0thsc", "thermal scanner", "airport thermal scanners catch every infected traveller instantly"},
    {"/m/0heli", "disinfectant spraying", "helicopters will spray disinfectant over cities during the night"},
    {"/m/0atmb", "banknotes", "cash banknotes from atms transmit the plague for weeks"},
    {"/m/0petd", "pet dog", "pet dogs pass the coronavirus to their owners"},
    {"/m/0sunb", "sunbathing", "sitting under the midday sun burns away any lingering exposure"},
    {"/m/0pppr", "hot pepper", "adding hot pepper to your soup prevents the illness"},
    {"/m/0stnh", "steam inhalation", "inhaling steam from boiling water clears the airways of particles"},
    {"/m/0ssme", "sesame oil", "rubbing sesame oil on the skin blocks entry of the agent"},
    {"/m/0frzn", "frozen food", "imported frozen seafood packages harbour live traces for months"},
    {"/m/0prcl", "postal parcel", "international parcels deliver contaminated surfaces to your doorstep"},
    {"/m/0pool", "swimming pool", "chlorinated swimming pools are impossible places to catch anything"},
    {"/m/0phns", "smartphone", "smartphone screens host more germs than hospital door handles"},
    {"/m/0vngr", "vinegar", "white vinegar wipes outperform commercial sanitiser products"},
    {"/m/0brds", "beard", "thick beards trap droplets and double transmission risk"},
    {"/m/0blds", "blood donation", "donating blood drains the defences your body needs now"},
    {"/m/0grgl", "salt water gargle", "gargling warm salt water washes the invader down to the stomach"},
    {"/m/0bnn", "banana", "bananas boost antibodies enough to make medicine unnecessary"},
    {"/m/0onin", "onion", "cut onions placed around a room absorb airborne poison"},
    {"/m/0brth", "breath holding test", "holding your breath for ten seconds proves healthy lungs"},
    {nullptr, "", "a 1981 thriller novel predicted this exact outbreak decades ago"},
    {nullptr, "", "leaked ministry memo reveals a total nationwide lockdown next friday"},
    {nullptr, "", "filmed hospital corridors stand empty proving the crisis is exaggerated"},
    {nullptr, "", "death certificates are inflated because clinics receive bonus payments"},
    {nullptr, "", "army trucks moved coffins through the streets at midnight"},
    {nullptr, "", "supermarkets plan to ration essential groceries within a fortnight"},
    {nullptr, "", "famous celebrities faked their diagnoses for publicity and sympathy"},
};

std::string variant_claim(const std::string& base) { return "viral posts say " + base; }

const std::vector<std::string> kOrgs = {"FactWatch", "Checamos", "VerifyDesk", "TruthMeter",
                                        "SahihCheck", "RealidadPress"};
const std::vector<std::string> kRatings = {"false", "misleading", "partly false", "no evidence"};

struct Row {
    std::string date, country, org, claim, rating, url, language;
};

void die(const std::string& msg) {
    std::cerr << "make_fixtures: " << msg << "\n";
    std::exit(1);
}

void check_claim_separation() {
    const auto& sw = cluster::default_stopwords();
    std::vector<std::set<std::string>> toks;
    for (const auto& t : kTopics) {
        toks.push_back(cluster::tokenize(t.claim, sw));
        toks.push_back(cluster::tokenize(variant_claim(t.claim), sw));
    }
    for (std::size_t i = 0; i < toks.size(); ++i)
        for (std::size_t j = i + 1; j < toks.size(); ++j) {
            double d = cluster::jaccard_distance(toks[i], toks[j]);
            bool same_topic = i / 2 == j / 2;
            if (same_topic && d >= 0.5)
                die("claim variants drift apart for topic " + std::to_string(i / 2));
            if (!same_topic && d <= 0.55)
                die("claims for topics " + std::to_string(i / 2) + " and " + std::to_string(j / 2) +
                    " are too close (distance " + std::to_string(d) + ")");
        }
}

json world_config_json(const synth::WorldConfig& c) {
    json anchors = json::array();
    for (const auto& [q, p] : c.anchor_candidates)
        anchors.push_back({{"query", q}, {"popularity", p}});
    json damped = json::array();
    for (const auto& [e, co] : c.damped_pairs) damped.push_back({{"entity", e}, {"country", co}});
    return json{{"year1", c.year1},
                {"countries", c.countries},
                {"entities", c.entities},
                {"reference", c.reference},
                {"anchor_candidates", anchors},
                {"reference_level", c.reference_level},
                {"baseline_min", c.baseline_min},
                {"baseline_max", c.baseline_max},
                {"noise_amplitude", c.noise_amplitude},
                {"missing_rate", c.missing_rate},
                {"damped_pairs", damped}};
}

}  // namespace

int main(int argc, char** argv) {
    fs::path out_dir = argc > 1 ? argv[1] : "fixtures";
    fs::create_directories(out_dir);

    for (const auto& c : kCountries)
        if (!ingest::is_iso_country(c)) die("not an ISO country code: " + c);
    if (kCountries.size() != 72) die("country list must hold 72 codes");
    check_claim_separation();

    std::vector<std::string> entities;
    for (const auto& t : kTopics)
        if (t.id) entities.push_back(t.id);
    if (entities.size() != 39) die("entity list must hold 39 ids");

    synth::WorldConfig wc;
    wc.year1 = 2019;
    wc.countries = kCountries;
    wc.entities = entities;
    wc.anchor_candidates = {{"weather", 0.55}, {"recipes", 0.30}};
    wc.baseline_min = 0.05;
    wc.baseline_max = 0.30;
    wc.noise_amplitude = 0.05;
    wc.missing_rate = 0.0791;  // floor(0.0791 * 2807) = 222 unavailable pairs
    wc.damped_pairs = {{entities[0], "BR"}};

    auto world = synth::generate_world(wc, kSeed);
    if (world.config.missing_pairs.size() != 222)
        die("expected 222 missing pairs, got " +
            std::to_string(world.config.missing_pairs.size()));

    auto usable = [&](const std::string& e, const std::string& c) {
        return !world.is_missing(e, c) && !(e == entities[0] && c == "BR");
    };

    // 410 fact-checked pairs: four hot-country picks per entity keep about
    // a dozen countries above the ten-claim scenario threshold, the rest
    // rotate through the cold countries.
    std::vector<std::string> cold;
    for (const auto& c : kCountries)
        if (std::find(kHotCountries.begin(), kHotCountries.end(), c) == kHotCountries.end())
            cold.push_back(c);

    std::vector<std::pair<std::size_t, std::string>> fc_pairs;  // (topic index, country)
    for (std::size_t i = 0; i < entities.size(); ++i) {
        std::size_t want = i < 20 ? 11 : 10;
        std::set<std::string> picked;
        for (std::size_t j = 0; picked.size() < 4 && j < kHotCountries.size(); ++j) {
            const auto& c = kHotCountries[(i * 4 + j) % kHotCountries.size()];
            if (usable(entities[i], c)) picked.insert(c);
        }
        for (std::size_t j = 0; picked.size() < want && j < cold.size(); ++j) {
            const auto& c = cold[(i * 7 + j) % cold.size()];
            if (usable(entities[i], c)) picked.insert(c);
        }
        if (picked.size() != want) die("could not pick countries for entity " + entities[i]);
        for (const auto& c : picked) fc_pairs.emplace_back(i, c);
    }
    if (fc_pairs.size() != 410) die("expected 410 pairs, got " + std::to_string(fc_pairs.size()));

    // Calibrate the chosen pairs the same way the fetch stage will, and
    // steer each pair's fact-check date so the running mean of relative
    // attention at the first fact-check tracks the target.
    synth::SimTrendsProvider provider(world);
    const WeekGrid& grid = world.grid;
    std::map<std::string, trends::AnchorBank> banks;
    std::map<std::string, double> ref_volume;
    std::vector<std::string> candidates = {wc.reference, "weather", "recipes"};

    auto bank_for = [&](const std::string& country) -> const trends::AnchorBank& {
        auto it = banks.find(country);
        if (it != banks.end()) return it->second;
        auto bank = trends::build_anchor_bank(provider, candidates, wc.reference, country, grid);
        auto ref = trends::calibrate(provider, bank, wc.reference, country, grid);
        if (!ref) die("reference failed to calibrate for " + country);
        double r = 0;
        for (std::size_t k = grid.split; k < ref->values.size(); ++k) r += ref->values[k];
        ref_volume[country] = r / static_cast<double>(grid.second_year_weeks());
        return banks.emplace(country, std::move(bank)).first->second;
    };

    struct PairCurve {
        std::size_t topic;
        std::string country;
        std::vector<double> rel;  // achievable relative attention per analysis week
    };
    std::vector<PairCurve> curves;
    for (const auto& [ti, country] : fc_pairs) {
        const auto& bank = bank_for(country);
        auto series = trends::calibrate(provider, bank, entities[ti], country, grid);
        if (!series) die("no signal for " + entities[ti] + "/" + country);
        std::vector<double> y1(series->values.begin(),
                               series->values.begin() + static_cast<long>(grid.split));
        std::vector<double> y2(series->values.begin() + static_cast<long>(grid.split),
                               series->values.end());
        auto curve = attention::attention_curve(y2, attention::baseline(y1), ref_volume[country]);
        if (!(curve.back() > 0)) die("zero total for " + entities[ti] + "/" + country);
        PairCurve pc{ti, country, {}};
        pc.rel.resize(curve.size());
        for (std::size_t w = 0; w < curve.size(); ++w) pc.rel[w] = curve[w] / curve.back();
        curves.push_back(std::move(pc));
    }

    std::vector<std::size_t> chosen_week(curves.size());
    double sum = 0;
    for (std::size_t i = 0; i < curves.size(); ++i) {
        double want = kTargetMean * static_cast<double>(i + 1) - sum;
        std::size_t best = 0;
        for (std::size_t w = 1; w < curves[i].rel.size(); ++w)
            if (std::fabs(curves[i].rel[w] - want) < std::fabs(curves[i].rel[best] - want))
                best = w;
        chosen_week[i] = best;
        sum += curves[i].rel[best];
    }
    // Refinement: swap single choices while that shrinks the residual.
    for (bool moved = true; moved;) {
        moved = false;
        double residual = sum - kTargetMean * static_cast<double>(curves.size());
        for (std::size_t i = 0; i < curves.size() && std::fabs(residual) > 1e-4; ++i) {
            double cur = curves[i].rel[chosen_week[i]];
            std::size_t best = chosen_week[i];
            for (std::size_t w = 0; w < curves[i].rel.size(); ++w)
                if (std::fabs(residual + curves[i].rel[w] - cur) <
                    std::fabs(residual + curves[i].rel[best] - cur))
                    best = w;
            if (best != chosen_week[i]) {
                sum += curves[i].rel[best] - cur;
                residual = sum - kTargetMean * static_cast<double>(curves.size());
                chosen_week[i] = best;
                moved = true;
            }
        }
    }
    double mean = sum / static_cast<double>(curves.size());
    if (std::fabs(mean - kTargetMean) > kTolerance)
        die("steered mean " + std::to_string(mean) + " misses the target");

    // Assemble the record table.
    std::vector<Row> rows;
    std::map<std::size_t, int> cluster_counter;
    std::size_t org_i = 0, rating_i = 0, url_i = 0;
    auto push_record = [&](std::size_t topic, const std::string& country, const Date& date) {
        int nth = cluster_counter[topic]++;
        Row r;
        r.date = date.to_iso();
        r.country = country;
        r.org = kOrgs[org_i++ % kOrgs.size()];
        r.claim = nth % 2 == 0 ? kTopics[topic].claim : variant_claim(kTopics[topic].claim);
        r.rating = kRatings[rating_i++ % kRatings.size()];
        r.url = "https://factwatch.example/items/" + std::to_string(1000 + url_i++);
        r.language = "en";
        rows.push_back(std::move(r));
    };

    for (std::size_t i = 0; i < curves.size(); ++i)
        push_record(curves[i].topic, curves[i].country,
                    grid.mondays[grid.split + chosen_week[i]]);
    push_record(0, "BR", grid.mondays[grid.split + 20]);  // the damped pair's fact-check
    for (std::size_t t = 39; t < kTopics.size(); ++t) {    // unlinkable clusters, two records each
        push_record(t, kCountries[(t * 5) % kCountries.size()],
                    grid.mondays[grid.split + 6 + (t - 39)]);
        push_record(t, kCountries[(t * 11 + 3) % kCountries.size()],
                    grid.mondays[grid.split + 18 + (t - 39)]);
    }

    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return std::tie(a.date, a.country, a.claim) < std::tie(b.date, b.country, b.claim);
    });

    {
        std::ofstream out(out_dir / "records.csv");
        out << "date,country,organization,claim,rating,url,language\n";
        auto esc = [](const std::string& s) { return escape_delimited_field(s, ','); };
        for (const auto& r : rows)
            out << r.date << "," << r.country << "," << esc(r.org) << "," << esc(r.claim) << ","
                << r.rating << "," << r.url << "," << r.language << "\n";
        // rows the ingest stage must reject or drop
        out << "2020-06-15,LATAM,FactWatch,a regional wire item without a single country,false,"
               "https://factwatch.example/items/9001,es\n";
        out << "2019-01-05,US,VerifyDesk,an old rumor from before the analysis window,false,"
               "https://factwatch.example/items/9002,en\n";
        out << "2020-05-32,US,TruthMeter,a row with an impossible date,false,"
               "https://factwatch.example/items/9003,en\n";
        out << "2020-04-20,IE,TruthMeter,an april fools piece about dancing statues,satire,"
               "https://factwatch.example/items/9004,en\n";
    }

    {
        std::ofstream out(out_dir / "column_map.json");
        out << json{{"date", "date"},           {"country_code", "country"},
                    {"organization", "organization"}, {"claim_text", "claim"},
                    {"rating", "rating"},       {"article_url", "url"},
                    {"language", "language"}}
                   .dump(2)
            << "\n";
    }
    {
        std::ofstream out(out_dir / "scope.json");
        out << json{{"window_start", "2019-12-01"}, {"window_end", "2021-01-15"}}.dump(2) << "\n";
    }
    {
        std::ofstream out(out_dir / "world_config.json");
        out << world_config_json(wc).dump(2) << "\n";
    }
    {
        std::ofstream out(out_dir / "pipeline.toml");
        out << "# end-to-end fixture pipeline\n"
               "[paths]\n"
               "input = \"records.csv\"\n"
               "column_map = \"column_map.json\"\n"
               "scope = \"scope.json\"\n"
               "entity_map = \"entity_map.json\"\n"
               "world = \"world_config.json\"\n"
               "workdir = \"work\"\n"
               "\n"
               "[cluster]\n"
               "eps = 0.5\n"
               "min_pts = 2\n"
               "\n"
               "[provider]\n"
               "kind = \"sim\"\n"
               "seed = "
            << kSeed
            << "\n"
               "fetch_threads = 4\n"
               "\n"
               "[analysis]\n"
               "min_fc_claims = 10\n"
               "min_fc_countries = 10\n"
               "kmax = 10\n";
    }

    // Derive the entity map from an actual cluster run so cluster ids match.
    auto cfg = pipeline::load_pipeline_config((out_dir / "pipeline.toml").string());
    fs::path derive_dir = fs::temp_directory_path() / "fcattn_fixture_derive";
    fs::remove_all(derive_dir);
    cfg.workdir = derive_dir.string();
    fs::create_directories(cfg.workdir);
    pipeline::stage_ingest(cfg);
    pipeline::stage_cluster(cfg);

    std::map<int, std::string> claim_of;
    {
        std::ifstream in(cfg.path("records.jsonl"));
        for (const auto& r : ingest::read_records_jsonl(in)) claim_of[r.id] = r.claim_text;
    }
    std::map<std::string, std::size_t> topic_of_claim;
    for (std::size_t t = 0; t < kTopics.size(); ++t) {
        topic_of_claim[kTopics[t].claim] = t;
        topic_of_claim[variant_claim(kTopics[t].claim)] = t;
    }

    auto clusters = cluster::read_clusters_json(cfg.path("clusters.json"));
    if (clusters.size() != 46)
        die("expected 46 clusters, got " + std::to_string(clusters.size()));
    json entity_map;
    for (const auto& cl : clusters) {
        std::set<std::size_t> topics;
        for (int id : cl.member_ids) topics.insert(topic_of_claim.at(claim_of.at(id)));
        if (topics.size() != 1) die("cluster " + cl.cluster_id + " mixes topics");
        const Topic& t = kTopics[*topics.begin()];
        if (t.id)
            entity_map[cl.cluster_id] = {{"entity_id", t.id}, {"display_name", t.name}};
        else
            entity_map[cl.cluster_id] = "none";
    }
    {
        std::ofstream out(out_dir / "entity_map.json");
        out << entity_map.dump(2) << "\n";
    }
    fs::remove_all(derive_dir);

    // Full verification run.
    fs::path verify_dir = fs::temp_directory_path() / "fcattn_fixture_verify";
    fs::remove_all(verify_dir);
    cfg = pipeline::load_pipeline_config((out_dir / "pipeline.toml").string());
    cfg.workdir = verify_dir.string();
    pipeline::run_pipeline(cfg, true);

    std::ifstream rin(cfg.path("report.json"));
    json report = json::parse(rin);
    const auto& k1 = report["rq2"]["relative_attention_at_k"][0];
    double got_mean = k1["mean"].get<double>();
    std::size_t got_n = k1["n"].get<std::size_t>();
    std::size_t zero_excluded = report["rq2"]["zero_total_excluded"].get<std::size_t>();
    std::cout << "pairs grid: " << kCountries.size() * entities.size()
              << ", missing: " << world.config.missing_pairs.size()
              << ", fact-checked pairs: " << fc_pairs.size() + 1 << "\n";
    std::cout << "rel attention at k=1: mean " << got_mean << ", n " << got_n
              << " (steered plan mean " << mean << ")\n";
    std::cout << "zero-total pairs excluded: " << zero_excluded << "\n";
    std::cout << "table2 countries: " << report["rq1"]["table2"].size() << "\n";
    fs::remove_all(verify_dir);

    if (got_n != 410) die("report n != 410");
    if (std::fabs(got_mean - kTargetMean) > 0.002) die("report mean misses the target");
    if (zero_excluded != 1) die("expected exactly one zero-total exclusion");
    std::cout << "fixtures written to " << out_dir.string() << "\n";
    return 0;
}
