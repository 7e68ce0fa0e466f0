#pragma once

#include <cstdint>
#include <vector>

#include "aoisim/config.hpp"
#include "aoisim/errors.hpp"
#include "aoisim/rng.hpp"

namespace aoisim {

// Discrete-time Geo/Geo/1 queue with Bernoulli(xi) arrivals and Bernoulli(s)
// service, s = p * mu. Arrivals land at the start of a slot and can be served
// in the same slot; a delivered packet is received at the end of its slot, so
// the smallest achievable age is 1.

struct AoiPair {
    double avg = 0.0;
    double peak = 0.0;
};

/// Average/peak AoI of the stable FCFS queue.
inline AoiPair cond_aoi_fcfs(double xi, double service) {
    if (!(xi > 0.0 && service > 0.0 && service <= 1.0))
        throw ConfigError("cond_aoi_fcfs: need xi > 0 and service in (0,1]");
    if (!(xi < service))
        throw ConfigError("unstable queue: xi must be below p*mu under FCFS");
    AoiPair r;
    r.peak = 1.0 / xi + (1.0 - xi) / (service - xi);
    r.avg = r.peak + xi / service - xi / (service * service) - 1.0;
    return r;
}

/// Average/peak AoI of the LCFS-PR queue. Valid for every xi, service in
/// (0,1]: preemption keeps the freshest packet in service, so the age stays
/// bounded even when the backlog of stale packets grows without bound.
inline AoiPair cond_aoi_lcfs(double xi, double service) {
    if (!(xi > 0.0 && xi <= 1.0 && service > 0.0 && service <= 1.0))
        throw ConfigError("cond_aoi_lcfs: need xi and service in (0,1]");
    AoiPair r;
    r.avg = 1.0 / xi + 1.0 / service - 1.0;
    r.peak = 1.0 / xi + 1.0 / service +
             1.0 / (1.0 - (1.0 - xi) * (1.0 - service)) - 2.0;
    return r;
}

/// Steady-state queue-nonempty probability (Little's law).
inline double activity_prob(double xi, double service) {
    if (!(service > 0.0)) throw ConfigError("activity_prob: service must be positive");
    return service <= xi ? 1.0 : xi / service;
}

struct GeoGeo1Result {
    double avg_aoi = 0.0;
    double peak_aoi = 0.0;      // mean age sampled at age-resetting deliveries
    double busy_fraction = 0.0;
    std::int64_t resets = 0;
    std::int64_t deliveries = 0;
    std::int64_t measured_slots = 0;
};

/// Monte Carlo oracle for the closed forms above. Kept deliberately
/// independent of the network simulator: one queue, fixed success
/// probability, no interference machinery.
inline GeoGeo1Result simulate_geo_geo1(double xi, double service, Discipline disc,
                                       std::int64_t slots, std::int64_t warmup,
                                       const CounterRng& rng) {
    std::vector<std::int64_t> queue; // generation timestamps
    std::size_t head = 0;            // FCFS pops from the front
    std::int64_t last_gen = -1;
    double aoi = 0.0;

    double aoi_sum = 0.0, peak_sum = 0.0;
    std::int64_t busy_cnt = 0, resets = 0, deliveries = 0, measured = 0;

    for (std::int64_t t = 0; t < slots; ++t) {
        if (rng.bernoulli(xi, draw::arrival, static_cast<std::uint64_t>(t)))
            queue.push_back(t);

        const bool busy = head < queue.size();
        const bool in_window = t >= warmup;
        if (in_window) {
            ++measured;
            busy_cnt += busy;
            aoi_sum += aoi;
        }

        bool reset = false;
        std::int64_t gen = 0;
        if (busy && rng.bernoulli(service, draw::gate, static_cast<std::uint64_t>(t))) {
            if (disc == Discipline::FCFS) {
                gen = queue[head++];
                if (head > 4096 && head * 2 > queue.size()) {
                    queue.erase(queue.begin(), queue.begin() + static_cast<std::ptrdiff_t>(head));
                    head = 0;
                }
            } else {
                gen = queue.back();
                queue.pop_back();
            }
            ++deliveries;
            if (gen > last_gen) {
                last_gen = gen;
                reset = true;
                if (in_window) {
                    ++resets;
                    peak_sum += aoi;
                }
            }
        }
        aoi = reset ? static_cast<double>(t - gen + 1) : aoi + 1.0;
    }

    GeoGeo1Result r;
    r.measured_slots = measured;
    r.avg_aoi = measured > 0 ? aoi_sum / static_cast<double>(measured) : 0.0;
    // The FCFS peak expression counts the delivery slot itself (inter-arrival
    // plus full sojourn); the LCFS-PR one samples the age at the delivery
    // slot. One uniform sampler, per-discipline offset at reporting time.
    const double peak_offset = disc == Discipline::FCFS ? 1.0 : 0.0;
    r.peak_aoi = resets > 0 ? peak_sum / static_cast<double>(resets) + peak_offset : 0.0;
    r.busy_fraction = measured > 0 ? static_cast<double>(busy_cnt) / static_cast<double>(measured) : 0.0;
    r.resets = resets;
    r.deliveries = deliveries;
    return r;
}

} // namespace aoisim
