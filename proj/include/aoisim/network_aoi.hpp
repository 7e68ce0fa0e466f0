#pragma once

#include <cmath>
#include <limits>

#include "aoisim/config.hpp"
#include "aoisim/meta.hpp"
#include "aoisim/quadrature.hpp"
#include "aoisim/queueing.hpp"
#include "aoisim/stability.hpp"

namespace aoisim {

enum class AoiMethod { ExactMeta, BetaMeta, MeanApprox };

inline const char* to_string(AoiMethod m) {
    switch (m) {
        case AoiMethod::ExactMeta: return "exact";
        case AoiMethod::BetaMeta: return "beta";
        case AoiMethod::MeanApprox: return "mean";
    }
    return "?";
}

/// The printed LCFS-PR network peak expression carries (1 - (1-xi)(1-xi t));
/// deconditioning the per-link formula gives (1 - (1-xi)(1-p t)). Both are
/// available; the service form is the default.
enum class LcfsPeakVariant { ServiceForm, XiForm };

/// The FCFS integrand has a pole at t = xi/p, so links below that service
/// level genuinely diverge and the prediction is infinite once they carry
/// mass. The LCFS-PR age stays finite per link at any load (the freshest
/// packet always preempts), so its network average integrates the full meta
/// distribution by default; TailOnly reproduces the printed lower limit.
enum class LcfsSupport { Full, TailOnly };

struct AoiPredictOptions {
    LcfsPeakVariant lcfs_peak_variant = LcfsPeakVariant::ServiceForm;
    LcfsSupport lcfs_support = LcfsSupport::Full;
    // Meta mass below xi/p beyond which the FCFS prediction reports infinity.
    // A moment-matched Beta with mean near 1 always carries ~1e-4 of
    // artifact mass in its left tail (b < 1), so the threshold separates
    // genuine instability from the fit's tail, and the offending mass is
    // reported either way.
    double unstable_mass_tol = 0.05;
    // The FCFS integrand diverges at t = xi/p; any density there makes the
    // raw integral log-divergent (those links' age is genuinely unbounded).
    // The finite reported value integrates from xi/p + margin*(1 - xi/p) and
    // the mass below is reported; at small loads the dependence on the
    // margin is negligible because the density at the pole vanishes.
    double fcfs_pole_margin = 1e-3;
    int nodes = 96;
    double quad_rel_tol = 1e-6;
    int max_quad_doublings = 4;
};

struct AoiPrediction {
    double avg_fcfs = 0.0;
    double peak_fcfs = 0.0;
    double avg_lcfs = 0.0;
    double peak_lcfs = 0.0;
    AoiMethod method = AoiMethod::BetaMeta;
    bool fcfs_stable = true;     // meta mass below xi/p within tolerance
    double unstable_mass = 0.0;  // F(xi/p)
};

namespace detail {

inline double inf() { return std::numeric_limits<double>::infinity(); }

/// integral of w(t) dF(t) over (t0, 1]; tabulated kind is a Stieltjes
/// midpoint sum. For the Beta kind the density's endpoint powers t^(a-1) and
/// (1-t)^(b-1) are absorbed by power substitutions (either exponent may be
/// below 1), and the FCFS pole at t0 > 0 gets sinh-clustered nodes.
template <class W>
double meta_integral(const MetaDistribution& meta, double t0, W&& w,
                     const AoiPredictOptions& opt) {
    switch (meta.kind) {
        case MetaKind::Degenerate:
            return meta.point > t0 ? w(meta.point) : 0.0;
        case MetaKind::Beta: {
            const double a = meta.shape_a, b = meta.shape_b;
            // Extreme concentration (huge total shape, or a boundary spike
            // with b -> 0 and tiny spread): the density front is too sharp
            // for any fixed quadrature while the point evaluation is exact
            // to O(std).
            const double var = meta.c2 - meta.c1 * meta.c1;
            if (a + b > 1e4 || var < 1e-6 || b < 1e-3)
                return meta.c1 > t0 ? w(meta.c1) : 0.0;
            const double lb = log_beta(a, b);
            const double m = 0.5 * (t0 + 1.0);
            auto piece_left = [&](int n) {
                if (t0 > 0.0) {
                    // pole-adjacent endpoint: cluster toward t0
                    auto f = [&](double t) {
                        return w(t) * std::exp((a - 1.0) * std::log(t) +
                                               (b - 1.0) * std::log1p(-t) - lb);
                    };
                    return integrate_sinh_clustered(f, t0, m, n);
                }
                // absorb t^(a-1): t = m * s^(1/a)
                return integrate_gl(
                    [&](double s) {
                        const double t = m * std::pow(s, 1.0 / a);
                        return w(t) * std::pow(m, a) / a *
                               std::exp((b - 1.0) * std::log1p(-t) - lb);
                    },
                    0.0, 1.0, n);
            };
            auto piece_right = [&](int n) {
                // absorb (1-t)^(b-1): 1-t = (1-m) * s^(1/b)
                return integrate_gl(
                    [&](double s) {
                        const double omt = (1.0 - m) * std::pow(s, 1.0 / b);
                        const double t = 1.0 - omt;
                        return w(t) * std::pow(1.0 - m, b) / b *
                               std::exp((a - 1.0) * std::log(t) - lb);
                    },
                    0.0, 1.0, n);
            };
            return refine_until_stable(
                [&](int mult) {
                    return piece_left(opt.nodes * mult) + piece_right(opt.nodes * mult);
                },
                opt.quad_rel_tol, opt.max_quad_doublings, "aoi meta integral");
        }
        case MetaKind::Tabulated: {
            double s = 0.0;
            const auto& u = meta.grid_u;
            const auto& F = meta.grid_F;
            for (std::size_t j = 1; j < u.size(); ++j) {
                if (u[j] <= t0) continue;
                const double lo = std::max(u[j - 1], t0);
                const double Flo = meta.cdf(lo);
                const double mass = F[j] - Flo;
                if (mass <= 0.0) continue;
                s += mass * w(0.5 * (lo + u[j]));
            }
            return s;
        }
    }
    return 0.0;
}

} // namespace detail

/// Network average/peak AoI under both disciplines, by deconditioning the
/// per-link formulas over the meta distribution (or plugging the mean
/// success probability for MeanApprox).
inline AoiPrediction aoi_predict(const NetworkConfig& cfg, const MetaDistribution& meta,
                                 AoiMethod method, const AoiPredictOptions& opt = {}) {
    AoiPrediction out;
    out.method = method;
    const double xi = cfg.xi;
    const double p = cfg.access_p;

    if (method == AoiMethod::MeanApprox) {
        const double ps = solve_ps(cfg, xi);
        const double service = p * ps;
        if (xi < service) {
            const AoiPair f = cond_aoi_fcfs(xi, service);
            out.avg_fcfs = f.avg;
            out.peak_fcfs = f.peak;
        } else {
            out.fcfs_stable = false;
            out.unstable_mass = 1.0;
            out.avg_fcfs = out.peak_fcfs = detail::inf();
        }
        const AoiPair l = cond_aoi_lcfs(xi, service);
        out.avg_lcfs = l.avg;
        out.peak_lcfs = l.peak;
        return out;
    }

    const double t0 = xi / p;
    out.unstable_mass = t0 >= 1.0 ? 1.0 : meta.cdf(t0);
    out.fcfs_stable = out.unstable_mass <= opt.unstable_mass_tol;

    // FCFS: mass at service levels below xi means infinite age.
    if (!out.fcfs_stable) {
        out.avg_fcfs = out.peak_fcfs = detail::inf();
    } else {
        const double t_cut = t0 >= 1.0 ? 1.0 : t0 + opt.fcfs_pole_margin * (1.0 - t0);
        const double peak_int = detail::meta_integral(
            meta, t_cut, [&](double t) { return (1.0 - xi) / (p * t - xi); }, opt);
        const double avg_extra = detail::meta_integral(
            meta, t_cut,
            [&](double t) { return xi / (p * t) - xi / (p * p * t * t); }, opt);
        out.peak_fcfs = 1.0 / xi + peak_int;
        out.avg_fcfs = 1.0 / xi + peak_int + avg_extra - 1.0;
    }

    // LCFS-PR.
    const double lcfs_t0 = opt.lcfs_support == LcfsSupport::Full ? 0.0 : t0;
    if (opt.lcfs_support == LcfsSupport::TailOnly && !out.fcfs_stable) {
        out.avg_lcfs = out.peak_lcfs = detail::inf();
    } else {
        double e_inv; // E[1/(p mu)] over the integration support
        if (opt.lcfs_support == LcfsSupport::Full && meta.kind == MetaKind::Beta) {
            e_inv = meta.mean_inverse() / p; // closed form; inf when shape_a <= 1
        } else {
            e_inv = detail::meta_integral(meta, lcfs_t0,
                                          [&](double t) { return 1.0 / (p * t); }, opt);
        }
        const bool xi_form = opt.lcfs_peak_variant == LcfsPeakVariant::XiForm;
        const double peak_extra = detail::meta_integral(
            meta, lcfs_t0,
            [&](double t) {
                const double srv = xi_form ? xi * t : p * t;
                return 1.0 / (1.0 - (1.0 - xi) * (1.0 - srv));
            },
            opt);
        out.avg_lcfs = 1.0 / xi + e_inv - 1.0;
        out.peak_lcfs = 1.0 / xi + e_inv + peak_extra - 2.0;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Special-case results: dominant system, sparse limit, throughput slope.

struct SpecialCases {
    double dominant_opt_p = 1.0;  // access probability maximizing dominant throughput
    double sparse_avg_fcfs = 0.0; // lambda -> 0 closed forms
    double sparse_peak_fcfs = 0.0;
    double sparse_avg_lcfs = 0.0;
    double sparse_peak_lcfs = 0.0;
};

/// argmax of p * E[mu] in the dominant system: min{1/(lambda pi r^2 theta^delta C), 1}.
inline double dominant_opt_p(const NetworkConfig& cfg) {
    const double load = cfg.lambda * M_PI * cfg.link_distance_r * cfg.link_distance_r *
                        std::pow(cfg.theta, cfg.delta) * power_law_constant(cfg.alpha);
    return load <= 1.0 ? 1.0 : 1.0 / load;
}

inline SpecialCases special_cases(const NetworkConfig& cfg) {
    SpecialCases sc;
    sc.dominant_opt_p = dominant_opt_p(cfg);
    const double ps0 = std::exp(-cfg.noise_exponent()); // interference-free
    const double service = cfg.access_p * ps0;
    if (cfg.xi < service) {
        const AoiPair f = cond_aoi_fcfs(cfg.xi, service);
        sc.sparse_avg_fcfs = f.avg;
        sc.sparse_peak_fcfs = f.peak;
    } else {
        sc.sparse_avg_fcfs = sc.sparse_peak_fcfs = detail::inf();
    }
    const AoiPair l = cond_aoi_lcfs(cfg.xi, service);
    sc.sparse_avg_lcfs = l.avg;
    sc.sparse_peak_lcfs = l.peak;
    return sc;
}

/// Sign of d(p * p_s(p))/dp by central difference; +1, 0, or -1.
inline int throughput_derivative_sign(const NetworkConfig& cfg, double p, double h = 1e-3) {
    auto throughput = [&](double pp) {
        NetworkConfig c = cfg;
        c.access_p = std::clamp(pp, 1e-6, 1.0);
        return c.access_p * solve_ps(c, c.xi);
    };
    const double d = throughput(p + h) - throughput(p - h);
    const double scale = std::max(std::fabs(throughput(p)), 1e-12);
    if (std::fabs(d) < 1e-9 * scale) return 0;
    return d > 0.0 ? 1 : -1;
}

} // namespace aoisim
