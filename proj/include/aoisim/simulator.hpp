#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "aoisim/config.hpp"
#include "aoisim/geometry.hpp"
#include "aoisim/rng.hpp"

namespace aoisim {

// Slot-by-slot network dynamics: Bernoulli(xi) packet generation, ALOHA
// gating with probability p for nonempty buffers, per-slot Rayleigh fades to
// every receiver in the culled neighborhood, SINR decoding against theta,
// FCFS or LCFS-PR service, instantaneous error-free feedback. A packet
// transmitted in slot t is received at the end of slot t, so the smallest
// age is 1.

struct DeliveryRecord {
    std::int64_t slot;
    std::int64_t gen;
    bool caused_reset;
};

struct LinkState {
    std::vector<std::int64_t> queue; // generation timestamps
    std::size_t head = 0;            // FCFS pops here; LCFS-PR serves the back
    bool active_now = false;         // gated and nonempty this slot
    std::int64_t aoi = 0;
    std::int64_t last_delivered_gen = -1;

    std::int64_t arrivals = 0;
    std::int64_t deliveries = 0;

    // measurement-window counters
    std::int64_t busy_slots = 0;
    std::int64_t elapsed_slots = 0;
    std::int64_t attempts = 0;
    std::int64_t successes = 0;
    std::int64_t resets = 0;
    double aoi_sum = 0.0;
    double peak_sum = 0.0;
    std::int64_t peak_samples = 0;

    // queue-length regression over the second half of the run
    double q_n = 0, q_st = 0, q_sq = 0, q_stt = 0, q_stq = 0;

    std::size_t queue_len() const { return queue.size() - head; }
};

struct LinkStats {
    double avg_aoi = 0.0;
    double peak_aoi = 0.0;
    double mu_hat = 0.0;
    double activity = 0.0;
    double queue_slope = 0.0;
    std::int64_t attempts = 0;
    std::int64_t resets = 0;
    bool peak_valid = false;
    bool mu_valid = false;
};

struct SimResults {
    std::vector<LinkStats> links;
    double network_avg_aoi = 0.0;  // mean of per-link averages, all links
    double network_peak_aoi = 0.0; // mean over links with enough resets
    double mean_mu = 0.0;          // over links with enough attempts
    double mean_activity = 0.0;
    double median_queue_slope = 0.0;
    std::int64_t links_total = 0;
    std::int64_t links_excluded_peak = 0;
    std::int64_t links_excluded_mu = 0;
    bool unstable_abort = false;
    std::uint64_t resample_events = 0;
    std::uint64_t seed = 0;
    std::int64_t realization = 0;
    std::int64_t slots = 0;
    std::int64_t warmup = 0;
    std::vector<std::vector<DeliveryRecord>> delivery_log; // when recording
};

class NetworkSim {
public:
    NetworkSim(const NetworkConfig& cfg, const SimSettings& st, Deployment dep,
               const CounterRng& rng)
        : cfg_(cfg), st_(st), dep_(std::move(dep)), rng_(rng),
          links_(dep_.size()), active_(dep_.size(), 0) {
        noise_over_ptx_ = cfg.noise_power / cfg.tx_power;
        if (st_.record_deliveries) log_.resize(dep_.size());
    }

    std::size_t size() const { return links_.size(); }
    const LinkState& link(std::size_t i) const { return links_[i]; }
    const Deployment& deployment() const { return dep_; }

    /// Advance one slot. Order inside the slot: arrivals, gating, fading and
    /// SINR at transmitting receivers, queue/AoI updates.
    void step(std::int64_t t) {
        const std::size_t n = links_.size();
        const SlotStream arrivals(rng_, draw::arrival, static_cast<std::uint64_t>(t));
        const SlotStream gates(rng_, draw::gate, static_cast<std::uint64_t>(t));
        const SlotStream fades(rng_, draw::fade, static_cast<std::uint64_t>(t));

        const bool in_window = t >= st_.warmup_slots;
        const bool in_slope_window = t >= st_.slots / 2;

        for (std::size_t j = 0; j < n; ++j) {
            LinkState& L = links_[j];
            if (!st_.forced_saturation && arrivals.uniform(j) < cfg_.xi) {
                L.queue.push_back(t);
                ++L.arrivals;
            }
            const bool nonempty = st_.forced_saturation || L.head < L.queue.size();
            L.active_now = nonempty && gates.uniform(j) < cfg_.access_p;
            active_[j] = L.active_now ? 1 : 0;
            if (in_window) {
                ++L.elapsed_slots;
                L.busy_slots += nonempty;
                L.aoi_sum += static_cast<double>(L.aoi);
            }
        }

        for (std::size_t i = 0; i < n; ++i) {
            LinkState& L = links_[i];
            bool delivered_fresh = false;
            std::int64_t gen = 0;
            if (L.active_now) {
                if (in_window) ++L.attempts;
                const double signal = fades.exponential(i, i) * dep_.own_coeff;
                double denom = noise_over_ptx_;
                const std::uint32_t b = dep_.nbr_begin[i], e = dep_.nbr_begin[i + 1];
                for (std::uint32_t idx = b; idx < e; ++idx) {
                    const std::uint32_t j = dep_.nbr_tx[idx];
                    if (active_[j])
                        denom += fades.exponential(j, i) * dep_.nbr_coeff[idx];
                }
                if (signal > cfg_.theta * denom) {
                    if (in_window) ++L.successes;
                    if (!st_.forced_saturation) {
                        if (cfg_.discipline == Discipline::FCFS) {
                            gen = L.queue[L.head++];
                            if (L.head > 4096 && 2 * L.head > L.queue.size()) {
                                L.queue.erase(L.queue.begin(),
                                              L.queue.begin() + static_cast<std::ptrdiff_t>(L.head));
                                L.head = 0;
                            }
                        } else {
                            gen = L.queue.back();
                            L.queue.pop_back();
                        }
                        ++L.deliveries;
                        delivered_fresh = gen > L.last_delivered_gen;
                        if (st_.record_deliveries)
                            log_[i].push_back({t, gen, delivered_fresh});
                        if (delivered_fresh) {
                            L.last_delivered_gen = gen;
                            if (in_window) {
                                ++L.resets;
                                L.peak_sum += static_cast<double>(L.aoi);
                                ++L.peak_samples;
                            }
                        } else if (st_.peak_all_deliveries && in_window) {
                            L.peak_sum += static_cast<double>(L.aoi);
                            ++L.peak_samples;
                        }
                    }
                }
            }
            L.aoi = delivered_fresh ? t - gen + 1 : L.aoi + 1;

            if (in_slope_window) {
                const double q = static_cast<double>(L.queue_len());
                const double tt = static_cast<double>(t);
                L.q_n += 1.0;
                L.q_st += tt;
                L.q_sq += q;
                L.q_stt += tt * tt;
                L.q_stq += tt * q;
            }
            if (!st_.forced_saturation &&
                L.queue_len() > static_cast<std::size_t>(st_.queue_cap))
                unstable_abort_ = true;
        }
    }

    /// Run the full horizon (or until the queue cap trips) and reduce.
    SimResults run() {
        for (std::int64_t t = 0; t < st_.slots; ++t) {
            step(t);
            if (unstable_abort_) break;
        }
        return reduce();
    }

    SimResults reduce() const {
        SimResults r;
        r.links_total = static_cast<std::int64_t>(links_.size());
        r.unstable_abort = unstable_abort_;
        r.slots = st_.slots;
        r.warmup = st_.warmup_slots;
        r.links.resize(links_.size());
        const double peak_offset = cfg_.discipline == Discipline::FCFS ? 1.0 : 0.0;
        double avg_sum = 0, peak_sum = 0, mu_sum = 0, act_sum = 0;
        std::int64_t peak_n = 0, mu_n = 0;
        std::vector<double> slopes;
        slopes.reserve(links_.size());
        for (std::size_t i = 0; i < links_.size(); ++i) {
            const LinkState& L = links_[i];
            LinkStats& s = r.links[i];
            s.attempts = L.attempts;
            s.resets = L.resets;
            if (L.elapsed_slots > 0) {
                s.avg_aoi = L.aoi_sum / static_cast<double>(L.elapsed_slots);
                s.activity = static_cast<double>(L.busy_slots) /
                             static_cast<double>(L.elapsed_slots);
            }
            s.peak_valid = L.resets >= st_.min_resets && L.peak_samples > 0;
            if (s.peak_valid)
                s.peak_aoi = L.peak_sum / static_cast<double>(L.peak_samples) + peak_offset;
            s.mu_valid = L.attempts >= st_.min_attempts;
            if (L.attempts > 0)
                s.mu_hat = static_cast<double>(L.successes) / static_cast<double>(L.attempts);
            const double det = L.q_n * L.q_stt - L.q_st * L.q_st;
            s.queue_slope = det > 0 ? (L.q_n * L.q_stq - L.q_st * L.q_sq) / det : 0.0;

            avg_sum += s.avg_aoi;
            act_sum += s.activity;
            if (s.peak_valid) {
                peak_sum += s.peak_aoi;
                ++peak_n;
            }
            if (s.mu_valid) {
                mu_sum += s.mu_hat;
                ++mu_n;
            }
            slopes.push_back(s.queue_slope);
        }
        const double n = static_cast<double>(links_.size());
        r.network_avg_aoi = n > 0 ? avg_sum / n : 0.0;
        r.mean_activity = n > 0 ? act_sum / n : 0.0;
        r.network_peak_aoi = peak_n > 0 ? peak_sum / static_cast<double>(peak_n) : 0.0;
        r.mean_mu = mu_n > 0 ? mu_sum / static_cast<double>(mu_n) : 0.0;
        r.links_excluded_peak = r.links_total - peak_n;
        r.links_excluded_mu = r.links_total - mu_n;
        if (!slopes.empty()) {
            std::nth_element(slopes.begin(), slopes.begin() + slopes.size() / 2, slopes.end());
            r.median_queue_slope = slopes[slopes.size() / 2];
        }
        if (st_.record_deliveries) r.delivery_log = log_;
        return r;
    }

private:
    NetworkConfig cfg_;
    SimSettings st_;
    Deployment dep_;
    CounterRng rng_;
    std::vector<LinkState> links_;
    std::vector<std::uint8_t> active_;
    std::vector<std::vector<DeliveryRecord>> log_;
    double noise_over_ptx_ = 0.0;
    bool unstable_abort_ = false;
};

/// Sample a deployment (resampling empty realizations), build the culled
/// pathloss table, run one realization.
inline SimResults run_realization(const NetworkConfig& cfg, const SimSettings& st,
                                  const CounterRng& master, std::int64_t realization) {
    const CounterRng rng = master.child(static_cast<std::uint64_t>(realization));
    std::uint64_t resamples = 0;
    Deployment dep = sample_deployment(cfg, rng, &resamples);
    const double rc = st.culling_radius_m > 0.0 ? st.culling_radius_m
                                                : default_culling_radius(cfg);
    build_pathloss(dep, cfg, std::min(rc, 0.49999 * dep.side));
    NetworkSim sim(cfg, st, std::move(dep), rng);
    SimResults r = sim.run();
    r.resample_events = resamples;
    r.realization = realization;
    r.seed = master.state();
    return r;
}

/// Pooled empirical CDF of the per-link conditional success probability on
/// the grid {0, 0.01, ..., 1}. Links with too few attempts are excluded and
/// counted.
struct MuCdf {
    std::vector<double> grid_u;
    std::vector<double> grid_F;
    std::int64_t links_used = 0;
    std::int64_t links_excluded = 0;
    double mean_mu = 0.0;
};

inline MuCdf pool_mu_cdf(const std::vector<SimResults>& runs, double grid_step = 0.01) {
    MuCdf out;
    std::vector<double> mus;
    for (const auto& r : runs)
        for (const auto& s : r.links) {
            if (s.mu_valid)
                mus.push_back(s.mu_hat);
            else
                ++out.links_excluded;
        }
    std::sort(mus.begin(), mus.end());
    out.links_used = static_cast<std::int64_t>(mus.size());
    double sum = 0.0;
    for (double m : mus) sum += m;
    out.mean_mu = mus.empty() ? 0.0 : sum / static_cast<double>(mus.size());
    const int npts = static_cast<int>(std::lround(1.0 / grid_step)) + 1;
    for (int i = 0; i < npts; ++i) {
        const double u = i * grid_step;
        out.grid_u.push_back(u);
        const auto it = std::upper_bound(mus.begin(), mus.end(), u);
        out.grid_F.push_back(mus.empty() ? 0.0
                                         : static_cast<double>(it - mus.begin()) /
                                               static_cast<double>(mus.size()));
    }
    return out;
}

/// Per-link queue-growth slopes for the stability probe. Uses a dedicated
/// long horizon and reports the median alongside the per-link values.
struct StabilityProbe {
    std::vector<double> slopes;
    double median_slope = 0.0;
    bool unstable = false; // median slope above threshold or cap tripped
};

inline StabilityProbe stability_probe(const NetworkConfig& cfg, const SimSettings& st,
                                      const CounterRng& master, std::int64_t realization = 0,
                                      double threshold = 1e-3) {
    SimResults r = run_realization(cfg, st, master, realization);
    StabilityProbe p;
    p.slopes.reserve(r.links.size());
    for (const auto& s : r.links) p.slopes.push_back(s.queue_slope);
    p.median_slope = r.median_queue_slope;
    p.unstable = r.unstable_abort || std::fabs(p.median_slope) > threshold;
    return p;
}

} // namespace aoisim
