#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <vector>

#include "aoisim/config.hpp"
#include "aoisim/errors.hpp"
#include "aoisim/rng.hpp"

namespace aoisim {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline double wrap_coord(double x, double side) {
    x = std::fmod(x, side);
    return x < 0.0 ? x + side : x;
}

/// Minimum-image distance on the square torus.
inline double torus_dist(Vec2 a, Vec2 b, double side) {
    double dx = std::fabs(a.x - b.x);
    double dy = std::fabs(a.y - b.y);
    if (dx > 0.5 * side) dx = side - dx;
    if (dy > 0.5 * side) dy = side - dy;
    return std::hypot(dx, dy);
}

/// One spatial realization. Receiver i sits at distance r from transmitter i
/// in a uniform random orientation; the square region wraps around (torus),
/// so every link sees full-plane-like interference with no edge effects.
///
/// Interferer lists are CSR over receivers and hold (transmitter j, |Xj-yi|^-alpha)
/// for j != i within the culling radius. The own-link coefficient r^-alpha is
/// shared by construction and stored once.
struct Deployment {
    double side = 0.0;
    double culling_radius = 0.0;
    double own_coeff = 0.0; // r^-alpha
    std::vector<Vec2> tx;
    std::vector<Vec2> rx;
    std::vector<std::uint32_t> nbr_begin; // size n+1
    std::vector<std::uint32_t> nbr_tx;
    std::vector<double> nbr_coeff;

    std::size_t size() const { return tx.size(); }
};

/// Single sampling attempt; may return an empty deployment.
inline Deployment sample_deployment_raw(const NetworkConfig& cfg, const CounterRng& rng) {
    Deployment d;
    d.side = cfg.region_side();
    d.own_coeff = std::pow(cfg.link_distance_r, -cfg.alpha);
    const auto n = rng.poisson(cfg.lambda * cfg.region_area, draw::point_count);
    d.tx.resize(n);
    d.rx.resize(n);
    const double two_pi = 2.0 * M_PI;
    for (std::uint64_t i = 0; i < n; ++i) {
        d.tx[i] = {rng.uniform(draw::pos_x, i) * d.side,
                   rng.uniform(draw::pos_y, i) * d.side};
        const double ang = rng.uniform(draw::orientation, i) * two_pi;
        d.rx[i] = {wrap_coord(d.tx[i].x + cfg.link_distance_r * std::cos(ang), d.side),
                   wrap_coord(d.tx[i].y + cfg.link_distance_r * std::sin(ang), d.side)};
    }
    return d;
}

/// Sampling with the empty-realization policy: resample from the next
/// sub-stream until at least one link exists. Network metrics are undefined
/// on an empty realization; the event count is reported, not hidden.
inline Deployment sample_deployment(const NetworkConfig& cfg, const CounterRng& rng,
                                    std::uint64_t* resample_events = nullptr) {
    for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
        const CounterRng r = attempt == 0 ? rng : rng.child(0x7e5a3d1eu + attempt);
        Deployment d = sample_deployment_raw(cfg, r);
        if (d.size() > 0) {
            if (resample_events) *resample_events += attempt;
            return d;
        }
    }
    throw ConfigError("deployment stayed empty after 1000 resampling attempts; "
                      "lambda * area is too small");
}

/// Culling radius from the closed-form truncation bound for power-law fields:
/// the expected interference-to-(theta * signal) ratio contributed by
/// transmitters beyond R is p * theta * r^alpha * lambda * 2*pi * R^(2-alpha)/(alpha-2),
/// assuming worst-case (always-on) activity. Chosen so this bias stays below tau.
inline double default_culling_radius(const NetworkConfig& cfg, double tau = 1e-3) {
    const double r = cfg.link_distance_r;
    const double num = cfg.access_p * cfg.theta * std::pow(r, cfg.alpha) *
                       cfg.lambda * 2.0 * M_PI / (cfg.alpha - 2.0);
    double rc = std::pow(num / tau, 1.0 / (cfg.alpha - 2.0));
    rc = std::max(rc, 3.0 * r);
    rc = std::min(rc, 0.49999 * cfg.region_side());
    return rc;
}

/// Fill the CSR interferer lists for every receiver. Uses a uniform cell
/// grid so dense deployments stay O(n * neighbors) instead of O(n^2).
inline void build_pathloss(Deployment& d, const NetworkConfig& cfg, double culling_radius) {
    if (culling_radius <= cfg.link_distance_r)
        throw ConfigError("culling radius must exceed the link distance");
    if (culling_radius > 0.5 * d.side)
        throw ConfigError("culling radius must not exceed half the region side");
    d.culling_radius = culling_radius;

    const std::size_t n = d.size();
    d.nbr_begin.assign(n + 1, 0);
    d.nbr_tx.clear();
    d.nbr_coeff.clear();
    if (n == 0) return;

    const int m = std::max(1, static_cast<int>(d.side / culling_radius));
    const double cell = d.side / m;

    auto cell_of = [&](double v) {
        int c = static_cast<int>(v / cell);
        return c >= m ? m - 1 : c;
    };

    std::vector<std::vector<std::uint32_t>> buckets(static_cast<std::size_t>(m) * m);
    for (std::uint32_t j = 0; j < n; ++j)
        buckets[static_cast<std::size_t>(cell_of(d.tx[j].y)) * m + cell_of(d.tx[j].x)]
            .push_back(j);

    auto consider = [&](std::uint32_t i, std::uint32_t j) {
        if (j == i) return;
        const double dist = torus_dist(d.tx[j], d.rx[i], d.side);
        if (dist <= culling_radius) {
            d.nbr_tx.push_back(j);
            d.nbr_coeff.push_back(std::pow(dist, -cfg.alpha));
        }
    };

    for (std::uint32_t i = 0; i < n; ++i) {
        d.nbr_begin[i] = static_cast<std::uint32_t>(d.nbr_tx.size());
        if (m < 3) {
            for (std::uint32_t j = 0; j < n; ++j) consider(i, j);
        } else {
            const int cx = cell_of(d.rx[i].x);
            const int cy = cell_of(d.rx[i].y);
            const int layers = static_cast<int>(culling_radius / cell) + 1;
            for (int oy = -layers; oy <= layers; ++oy) {
                const int yy = (cy + oy % m + m) % m;
                for (int ox = -layers; ox <= layers; ++ox) {
                    const int xx = (cx + ox % m + m) % m;
                    for (std::uint32_t j : buckets[static_cast<std::size_t>(yy) * m + xx])
                        consider(i, j);
                }
            }
        }
    }
    d.nbr_begin[n] = static_cast<std::uint32_t>(d.nbr_tx.size());
}

inline void write_deployment_csv(const Deployment& d, std::ostream& os) {
    os << "link_id,tx_x,tx_y,rx_x,rx_y\n";
    for (std::size_t i = 0; i < d.size(); ++i)
        os << i << ',' << d.tx[i].x << ',' << d.tx[i].y << ','
           << d.rx[i].x << ',' << d.rx[i].y << '\n';
}

} // namespace aoisim
