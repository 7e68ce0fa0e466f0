#pragma once

#include <cmath>
#include <vector>

#include "aoisim/config.hpp"
#include "aoisim/errors.hpp"
#include "aoisim/quadrature.hpp"

namespace aoisim {

struct StabilityResult {
    double p_s = 0.0;      // success probability of the typical transmission
    double xi_c = 0.0;     // critical update frequency
    double residual = 0.0; // |g(p_s) - p_s| at the returned fixed point
};

/// C(alpha) = int_0^inf dv / (1 + v^(alpha/2)) = (2 pi / alpha) / sin(2 pi / alpha).
inline double power_law_constant(double alpha) {
    const double c = 0.5 * alpha;
    return (M_PI / c) / std::sin(M_PI / c);
}

/// Success probability when every interferer is backlogged (all-active
/// bound); by the PGFL this collapses to a closed form.
inline double dominant_ps(const NetworkConfig& cfg, double access_p) {
    const double load = cfg.lambda * M_PI * cfg.link_distance_r * cfg.link_distance_r *
                        std::pow(cfg.theta, cfg.delta) * power_law_constant(cfg.alpha);
    return std::exp(-cfg.noise_exponent() - access_p * load);
}

/// Fixed-point solver for the typical-link success probability. The
/// activity kernel Z(v, x) = angular avg of min{(xi/x)(1 + 1/D), p} shares
/// its pathloss table with the interference kernel W(v) = angular avg of
/// 1/(1+D), so both are precomputed once and reused across every bisection
/// probe and every xi.
class PsSolver {
public:
    explicit PsSolver(const NetworkConfig& cfg, int radial_n = 96, int angular_n = 192)
        : noise_exp_(cfg.noise_exponent()),
          prefactor_(2.0 * M_PI * cfg.lambda * cfg.link_distance_r * cfg.link_distance_r),
          access_p_(cfg.access_p),
          alpha_(cfg.alpha),
          theta_(cfg.theta),
          radial_n_(radial_n),
          angular_n_(angular_n) {
        if (prefactor_ >= 1e-30) build_tables();
    }

    /// One evaluation of the fixed-point map g at activity scale x.
    double g(double xi, double x) const {
        if (invD_.empty()) return std::exp(-noise_exp_);
        const double p = access_p_;
        const double ratio = xi / x;
        double s = 0.0;
        for (int i = 0; i < radial_n_; ++i) {
            double z;
            if (ratio >= p) {
                z = p; // every neighbor saturated: dominant-system kernel
            } else {
                const double* inv_d = invD_.data() + static_cast<std::size_t>(i) * angular_n_;
                double acc = 0.0;
                for (int j = 0; j < angular_n_; ++j)
                    acc += std::min(ratio * (1.0 + inv_d[j]), p);
                z = acc / angular_n_;
            }
            s += wjac_[static_cast<std::size_t>(i)] * W_[static_cast<std::size_t>(i)] * z;
        }
        return std::exp(-noise_exp_ - prefactor_ * s);
    }

    /// Bisection on g(x) - x over (0, 1].
    double solve(double xi, double* residual = nullptr) const {
        if (invD_.empty()) {
            if (residual) *residual = 0.0;
            return std::exp(-noise_exp_);
        }
        double lo = 1e-14, hi = 1.0;
        if (g(xi, lo) - lo <= 0.0) { // should not happen: g >= dominant bound > 0
            if (residual) *residual = std::fabs(g(xi, lo) - lo);
            return lo;
        }
        for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (g(xi, mid) - mid > 0.0)
                lo = mid;
            else
                hi = mid;
        }
        const double x = 0.5 * (lo + hi);
        if (residual) *residual = std::fabs(g(xi, x) - x);
        return x;
    }

private:
    void build_tables() {
        GaussLegendre gl(radial_n_);
        const double s_half = 0.25 * M_PI;
        wjac_.resize(static_cast<std::size_t>(radial_n_));
        W_.resize(static_cast<std::size_t>(radial_n_));
        invD_.resize(static_cast<std::size_t>(radial_n_) * angular_n_);
        for (int i = 0; i < radial_n_; ++i) {
            const double s = s_half + s_half * gl.x[i];
            const double cs = std::cos(s);
            const double tn = std::sin(s) / cs;
            const double v = tn * tn;
            const double jac = 2.0 * tn / (cs * cs) * s_half;
            wjac_[static_cast<std::size_t>(i)] = gl.w[i] * jac * v;
            double wsum = 0.0;
            for (int j = 0; j < angular_n_; ++j) {
                const double psi = (j + 0.5) * 2.0 * M_PI / angular_n_;
                const double d2 = 1.0 + v * v - 2.0 * v * std::cos(psi);
                const double D = std::pow(std::max(d2, 1e-300), 0.5 * alpha_) / theta_;
                invD_[static_cast<std::size_t>(i) * angular_n_ + j] = 1.0 / D;
                wsum += 1.0 / (1.0 + D);
            }
            W_[static_cast<std::size_t>(i)] = wsum / angular_n_;
        }
    }

    double noise_exp_, prefactor_, access_p_, alpha_, theta_;
    int radial_n_, angular_n_;
    std::vector<double> wjac_, W_, invD_;
};

/// p_s via the exact double-integral fixed point, refined by node doubling.
inline double solve_ps(const NetworkConfig& cfg, double xi, double* residual = nullptr,
                       double rel_tol = 1e-7, int max_doublings = 3) {
    double prev = 0.0;
    int mult = 1;
    double res = 0.0;
    for (int d = 0;; ++d) {
        PsSolver solver(cfg, 96 * mult, 192 * mult);
        const double cur = solver.solve(xi, &res);
        if (d > 0 && std::fabs(cur - prev) <= rel_tol * std::max(cur, 1e-14)) {
            if (residual) *residual = res;
            return cur;
        }
        if (d == max_doublings) {
            if (residual) *residual = res;
            return cur;
        }
        prev = cur;
        mult *= 2;
    }
}

inline double solve_ps(const NetworkConfig& cfg, double* residual = nullptr) {
    return solve_ps(cfg, cfg.xi, residual);
}

/// Faster single-integral approximation (far-field kernel). The prefactor is
/// lambda * pi * r^2 * theta^delta: that constant is fixed by the requirement
/// that the saturated limit reproduce the dominant-system closed form.
inline double solve_ps_fast(const NetworkConfig& cfg, double xi, double* residual = nullptr) {
    const double pref = cfg.lambda * M_PI * cfg.link_distance_r * cfg.link_distance_r *
                        std::pow(cfg.theta, cfg.delta);
    if (pref < 1e-30) {
        if (residual) *residual = 0.0;
        return std::exp(-cfg.noise_exponent());
    }
    const double p = cfg.access_p;
    const double half_alpha = 0.5 * cfg.alpha;
    auto gmap = [&](double x) {
        const double ratio = xi / x;
        const double integral = integrate_half_line(
            [&](double u) {
                const double ua = std::pow(u, half_alpha);
                const double z = ratio >= p ? p : std::min(ratio * (1.0 + 1.0 / ua), p);
                return z / (1.0 + ua);
            },
            512);
        return std::exp(-cfg.noise_exponent() - pref * integral);
    };
    double lo = 1e-14, hi = 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (gmap(mid) - mid > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    const double x = 0.5 * (lo + hi);
    if (residual) *residual = std::fabs(gmap(x) - x);
    return x;
}

/// Critical update frequency: bisection over xi on xi - p * p_s(xi), with
/// p_s re-solved at every probe. The per-axis tolerance is tight enough to
/// hand back the lambda = 0 closed form to 1e-9.
inline double critical_xi(const NetworkConfig& cfg) {
    PsSolver solver(cfg);
    const double p = cfg.access_p;
    auto margin = [&](double xi) { return xi - p * solver.solve(xi); };
    double hi = std::min(p, 1.0);
    if (margin(hi) <= 0.0) return hi;
    double lo = 1e-12;
    if (margin(lo) >= 0.0) return lo;
    for (int it = 0; it < 80 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (margin(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

inline StabilityResult stability_analysis(const NetworkConfig& cfg) {
    StabilityResult r;
    r.p_s = solve_ps(cfg, cfg.xi, &r.residual);
    r.xi_c = critical_xi(cfg);
    return r;
}

} // namespace aoisim
