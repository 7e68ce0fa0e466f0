#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "aoisim/errors.hpp"
#include "aoisim/units.hpp"

namespace aoisim {

enum class Discipline { FCFS, LCFS_PR };

inline const char* to_string(Discipline d) {
    return d == Discipline::FCFS ? "fcfs" : "lcfs_pr";
}

inline Discipline discipline_from_string(const std::string& s) {
    if (s == "fcfs") return Discipline::FCFS;
    if (s == "lcfs_pr") return Discipline::LCFS_PR;
    throw ConfigError("discipline must be \"fcfs\" or \"lcfs_pr\", got \"" + s + "\"");
}

/// Raw inputs as they appear in a config file: powers in dBm, threshold in
/// dB, area in km^2. validate() turns this into linear-unit types.
struct RawConfig {
    double lambda_per_m2  = 1e-4;
    double link_distance_m = 15.0;
    double alpha          = 3.8;
    double theta_db       = 0.0;
    double tx_power_dbm   = 17.0;
    double noise_dbm      = -90.0;
    double access_p       = 0.6;
    double xi             = 0.3;
    std::string discipline = "fcfs";
    double area_km2       = 5.0;
    std::int64_t slots    = 20000;
    std::int64_t warmup_slots = -1;   // <0: derived (20% of slots, min 2000)
    std::int64_t realizations = 200;
    std::uint64_t seed    = 1;

    // Optional knobs with documented defaults.
    double culling_radius_m = 0.0;    // 0: derived from the truncation bound
    std::int64_t queue_cap  = 1000000;
    bool peak_all_deliveries = false; // sample peak AoI at stale deliveries too
};

/// Validated physical/protocol parameters, all linear units.
struct NetworkConfig {
    double lambda;          // pairs per m^2
    double link_distance_r; // m
    double alpha;           // > 2
    double theta;           // linear SINR threshold
    double tx_power;        // W
    double noise_power;     // W
    double rho;             // tx_power / noise_power
    double access_p;        // (0,1]
    double xi;              // (0,1]
    Discipline discipline;
    double region_area;     // m^2
    double delta;           // 2/alpha

    double region_side() const { return std::sqrt(region_area); }
    /// theta * r^alpha / rho -- the noise term of the SINR exponent.
    double noise_exponent() const {
        return theta * std::pow(link_distance_r, alpha) / rho;
    }
};

/// Run-shape parameters consumed by the simulator and experiment drivers.
struct SimSettings {
    std::int64_t slots = 20000;
    std::int64_t warmup_slots = 4000;
    std::int64_t realizations = 200;
    std::uint64_t seed = 1;
    double culling_radius_m = 0.0;
    std::int64_t queue_cap = 1000000;
    bool peak_all_deliveries = false;
    bool forced_saturation = false;   // treat every buffer as backlogged
    bool record_deliveries = false;
    std::int64_t min_attempts = 100;  // per-link inclusion for mu-hat pooling
    std::int64_t min_resets = 10;     // per-link inclusion for peak AoI
};

struct ValidatedConfig {
    NetworkConfig net;
    SimSettings sim;
};

inline ValidatedConfig validate(const RawConfig& raw) {
    if (!(raw.alpha > 2.0))
        throw ConfigError("alpha must exceed 2 (got " + std::to_string(raw.alpha) + ")");
    if (!(raw.access_p > 0.0 && raw.access_p <= 1.0))
        throw ConfigError("access_p must lie in (0,1]");
    if (!(raw.xi > 0.0 && raw.xi <= 1.0))
        throw ConfigError("xi must lie in (0,1]");
    if (!(raw.lambda_per_m2 > 0.0))
        throw ConfigError("lambda_per_m2 must be positive");
    if (!(raw.link_distance_m > 0.0))
        throw ConfigError("link_distance_m must be positive");
    if (!(raw.area_km2 > 0.0))
        throw ConfigError("area_km2 must be positive");
    if (raw.slots <= 0)
        throw ConfigError("slots must be positive");
    if (raw.realizations <= 0)
        throw ConfigError("realizations must be positive");

    NetworkConfig net;
    net.lambda = raw.lambda_per_m2;
    net.link_distance_r = raw.link_distance_m;
    net.alpha = raw.alpha;
    net.theta = db_to_linear(raw.theta_db);
    net.tx_power = dbm_to_watt(raw.tx_power_dbm);
    net.noise_power = dbm_to_watt(raw.noise_dbm);
    net.rho = net.tx_power / net.noise_power;
    net.access_p = raw.access_p;
    net.xi = raw.xi;
    net.discipline = discipline_from_string(raw.discipline);
    net.region_area = raw.area_km2 * 1e6;
    net.delta = 2.0 / raw.alpha;

    if (net.region_side() <= 4.0 * net.link_distance_r)
        throw ConfigError("region side must exceed 4x link_distance_m "
                          "(torus wrap would distort own-link geometry)");

    SimSettings sim;
    sim.slots = raw.slots;
    // default warmup: 20% of the horizon, at least 2000 slots, but never
    // more than half of a short run
    sim.warmup_slots = raw.warmup_slots >= 0
        ? raw.warmup_slots
        : std::min(std::max<std::int64_t>(2000, raw.slots / 5), raw.slots / 2);
    if (sim.warmup_slots >= sim.slots)
        throw ConfigError("warmup_slots must be smaller than slots");
    sim.realizations = raw.realizations;
    sim.seed = raw.seed;
    sim.culling_radius_m = raw.culling_radius_m;
    sim.queue_cap = raw.queue_cap;
    sim.peak_all_deliveries = raw.peak_all_deliveries;
    return {net, sim};
}

// ---------------------------------------------------------------------------
// Config file: "key = value" lines, optional [section] headers, '#' comments.

inline std::map<std::string, std::string> read_key_values(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const char* ws = " \t\r\n";
        auto b = s.find_first_not_of(ws);
        auto e = s.find_last_not_of(ws);
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') continue; // section header
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": empty key or value");
        kv[key] = val;
    }
    return kv;
}

inline RawConfig raw_config_from_map(const std::map<std::string, std::string>& kv) {
    RawConfig raw;
    auto num = [&](const char* key, double& out) {
        auto it = kv.find(key);
        if (it == kv.end()) return;
        try {
            std::size_t pos = 0;
            out = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ConfigError(std::string(key) + ": not a number: \"" + it->second + "\"");
        }
    };
    auto integer = [&](const char* key, std::int64_t& out) {
        double d = static_cast<double>(out);
        num(key, d);
        out = static_cast<std::int64_t>(std::llround(d));
    };
    num("lambda_per_m2", raw.lambda_per_m2);
    num("link_distance_m", raw.link_distance_m);
    num("alpha", raw.alpha);
    num("theta_db", raw.theta_db);
    num("tx_power_dbm", raw.tx_power_dbm);
    num("noise_dbm", raw.noise_dbm);
    num("access_p", raw.access_p);
    num("xi", raw.xi);
    num("area_km2", raw.area_km2);
    integer("slots", raw.slots);
    integer("warmup_slots", raw.warmup_slots);
    integer("realizations", raw.realizations);
    if (auto it = kv.find("seed"); it != kv.end())
        raw.seed = static_cast<std::uint64_t>(std::stoull(it->second));
    if (auto it = kv.find("discipline"); it != kv.end())
        raw.discipline = it->second;
    num("culling_radius_m", raw.culling_radius_m);
    integer("queue_cap", raw.queue_cap);
    if (auto it = kv.find("peak_all_deliveries"); it != kv.end())
        raw.peak_all_deliveries = (it->second == "true" || it->second == "1");
    return raw;
}

inline RawConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    return raw_config_from_map(read_key_values(in));
}

/// Canonical serialization used for hashing and manifests.
inline std::string canonical_config_text(const RawConfig& r) {
    std::ostringstream os;
    os.precision(17);
    os << "lambda_per_m2=" << r.lambda_per_m2
       << ";link_distance_m=" << r.link_distance_m
       << ";alpha=" << r.alpha
       << ";theta_db=" << r.theta_db
       << ";tx_power_dbm=" << r.tx_power_dbm
       << ";noise_dbm=" << r.noise_dbm
       << ";access_p=" << r.access_p
       << ";xi=" << r.xi
       << ";discipline=" << r.discipline
       << ";area_km2=" << r.area_km2
       << ";slots=" << r.slots
       << ";warmup_slots=" << r.warmup_slots
       << ";realizations=" << r.realizations
       << ";seed=" << r.seed
       << ";culling_radius_m=" << r.culling_radius_m
       << ";queue_cap=" << r.queue_cap
       << ";peak_all_deliveries=" << r.peak_all_deliveries;
    return os.str();
}

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t config_hash(const RawConfig& r) {
    return fnv1a64(canonical_config_text(r));
}

} // namespace aoisim
