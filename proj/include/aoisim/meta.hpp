#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "aoisim/config.hpp"
#include "aoisim/errors.hpp"
#include "aoisim/gil_pelaez.hpp"
#include "aoisim/quadrature.hpp"
#include "aoisim/special_functions.hpp"

namespace aoisim {

// Distribution (over spatial realizations) of the conditional transmission
// success probability mu of the typical link. Two solvers produce it: a
// two-moment Beta fit refined by successive substitution, and the exact
// fixed point recovered frequency-by-frequency from the moment generating
// function of ln(mu). Both share one integral engine below.

enum class MetaKind { Beta, Tabulated, Degenerate };

struct MetaDistribution {
    MetaKind kind = MetaKind::Degenerate;

    // Beta kind: kappa/beta parametrization plus standard shapes
    // a = kappa*beta/(1-kappa), b = beta.
    double beta_kappa = 0.0;
    double beta_beta = 0.0;
    double shape_a = 0.0;
    double shape_b = 0.0;

    double point = 0.0;                 // Degenerate location
    std::vector<double> grid_u, grid_F; // Tabulated kind

    double c1 = 0.0; // first moment of mu
    double c2 = 0.0; // second moment
    int iterations_used = 0;
    double converged_residual = 0.0;
    double inversion_residual = 0.0; // tabulated kind: omega-halving residual
    bool stable_regime = true;

    double cdf(double u) const {
        switch (kind) {
            case MetaKind::Degenerate:
                return u >= point ? 1.0 : 0.0;
            case MetaKind::Beta:
                return incomplete_beta(shape_a, shape_b, u);
            case MetaKind::Tabulated: {
                if (grid_u.empty()) return 0.0;
                if (u <= grid_u.front()) return grid_F.front();
                if (u >= grid_u.back()) return grid_F.back();
                auto it = std::upper_bound(grid_u.begin(), grid_u.end(), u);
                const std::size_t j = static_cast<std::size_t>(it - grid_u.begin());
                const double t0 = grid_u[j - 1], t1 = grid_u[j];
                const double f0 = grid_F[j - 1], f1 = grid_F[j];
                return f0 + (f1 - f0) * (u - t0) / (t1 - t0);
            }
        }
        return 0.0;
    }

    double mean() const { return c1; }

    /// E[1/mu]; +inf for a Beta with shape_a <= 1.
    double mean_inverse() const {
        switch (kind) {
            case MetaKind::Degenerate:
                return point > 0.0 ? 1.0 / point : std::numeric_limits<double>::infinity();
            case MetaKind::Beta:
                if (shape_a <= 1.0) return std::numeric_limits<double>::infinity();
                return (shape_a + shape_b - 1.0) / (shape_a - 1.0);
            case MetaKind::Tabulated: {
                double s = 0.0;
                for (std::size_t j = 1; j < grid_u.size(); ++j) {
                    const double mass = grid_F[j] - grid_F[j - 1];
                    if (mass <= 0.0) continue;
                    const double tm = 0.5 * (grid_u[j - 1] + grid_u[j]);
                    s += mass / std::max(tm, 1e-12);
                }
                return s;
            }
        }
        return 0.0;
    }
};

/// Auxiliary threshold function: the largest service probability at which a
/// neighbor whose transmitter sits at normalized distance geometry (x, y)
/// from the typical receiver still saturates, given access probability z.
inline double h_theta(double x, double y, double z, double xi, double theta, double alpha) {
    const double d2 = 1.0 + x * x - 2.0 * x * std::cos(y);
    const double dterm = std::pow(std::max(d2, 0.0), 0.5 * alpha) / theta;
    const double denom = 1.0 - z + dterm;
    if (denom <= 0.0) return std::numeric_limits<double>::infinity();
    return xi / z + xi / denom;
}

struct MetaParams {
    double xi, p, theta, alpha, delta;
    double noise_exp;  // theta r^alpha / rho
    double prefactor;  // 2 pi lambda r^2

    static MetaParams from(const NetworkConfig& cfg) {
        return {cfg.xi, cfg.access_p, cfg.theta, cfg.alpha, cfg.delta,
                cfg.noise_exponent(),
                2.0 * M_PI * cfg.lambda * cfg.link_distance_r * cfg.link_distance_r};
    }
};

/// Interference-field integrals I_k = int_0^inf A_k(v) * Q_k(v) * v dv with
///   A_k(v) = angular average of [p/(1+D)]^k,     D = (1+v^2-2v cos)^{a/2}/theta,
///   Q_k(v) = angular average of q_k(H(v, .)),
/// where q_k is supplied by the current meta representation:
///   q_k(h) = F(h) + h^k * int_h^1 t^-k dF(t).
/// The qfun callback fills q_k for k = 1..kmax at a given threshold h.
template <class QFun>
std::vector<double> eta_integrals(const MetaParams& mp, int kmax, QFun&& qfun,
                                  int radial_n, int angular_n) {
    std::vector<double> I(kmax, 0.0);
    std::vector<double> acc_a(kmax), acc_q(kmax), qbuf(kmax);

    GaussLegendre gl(radial_n);
    const double s_half = 0.25 * M_PI;
    const double inv_n = 1.0 / angular_n;
    const double ang_h = 2.0 * M_PI * inv_n;

    for (int i = 0; i < radial_n; ++i) {
        const double s = s_half + s_half * gl.x[i];
        const double cs = std::cos(s);
        const double tn = std::sin(s) / cs;
        const double v = tn * tn;                         // v = tan^2(s)
        const double jac = 2.0 * tn / (cs * cs) * s_half; // dv including GL scaling

        std::fill(acc_a.begin(), acc_a.end(), 0.0);
        std::fill(acc_q.begin(), acc_q.end(), 0.0);
        for (int j = 0; j < angular_n; ++j) {
            const double psi = (j + 0.5) * ang_h;
            const double d2 = 1.0 + v * v - 2.0 * v * std::cos(psi);
            const double D = std::pow(std::max(d2, 0.0), 0.5 * mp.alpha) / mp.theta;
            const double afac = mp.p / (1.0 + D); // equals 1 - xi/(p*H)
            const double denom = 1.0 - mp.p + D;
            const double h = denom > 0.0
                ? mp.xi / mp.p + mp.xi / denom
                : std::numeric_limits<double>::infinity();
            qfun(h, std::span<double>(qbuf.data(), static_cast<std::size_t>(kmax)));
            double apow = 1.0;
            for (int k = 0; k < kmax; ++k) {
                apow *= afac;
                acc_a[k] += apow;
                acc_q[k] += qbuf[k];
            }
        }
        for (int k = 0; k < kmax; ++k)
            I[k] += gl.w[i] * jac * v * (acc_a[k] * inv_n) * (acc_q[k] * inv_n);
    }
    return I;
}

/// Closed-form seed: every queue busy with probability xi (unit-service
/// load), for which the radial integral collapses by translation invariance:
///   I_k = (xi p)^k * (theta^delta / 2) * delta * Gamma(delta) Gamma(k-delta) / Gamma(k).
inline std::vector<double> eta_seed(const MetaParams& mp, int kmax) {
    std::vector<double> I(kmax);
    for (int k = 1; k <= kmax; ++k) {
        const double lg = mp.delta * std::log(mp.theta) - std::log(2.0) +
                          std::log(mp.delta) + std::lgamma(mp.delta) +
                          std::lgamma(k - mp.delta) - std::lgamma(static_cast<double>(k)) +
                          k * std::log(mp.xi * mp.p);
        I[k - 1] = std::exp(lg);
    }
    return I;
}

/// Moments of mu from the interference integrals:
///   c_m = exp(-m * noise - pref * sum_{k=1}^m C(m,k) (-1)^{k+1} I_k).
inline double meta_moment(const MetaParams& mp, std::span<const double> I, int m) {
    double series = 0.0;
    double binom = 1.0;
    double sign = 1.0;
    for (int k = 1; k <= m; ++k) {
        binom = binom * (m - k + 1) / k;
        series += sign * binom * I[k - 1];
        sign = -sign;
    }
    return std::exp(-m * mp.noise_exp - mp.prefactor * series);
}

/// Fit Beta(a,b) to (mean, variance); the defining moment system is solved
/// exactly, so both moments are reproduced to machine precision.
inline MetaDistribution moment_match_beta(double c1, double c2) {
    if (!(c1 > 0.0 && c1 <= 1.0))
        throw NumericsError("moment_match_beta: mean outside (0,1]: " + std::to_string(c1));
    MetaDistribution m;
    m.c1 = c1;
    m.c2 = c2;
    const double var = c2 - c1 * c1;
    if (var <= 1e-15 || c1 >= 1.0 - 1e-14) {
        m.kind = MetaKind::Degenerate;
        m.point = c1;
        return m;
    }
    if (var >= c1 * (1.0 - c1))
        throw NumericsError("moment_match_beta: variance too large for a Beta fit");
    const double total = c1 * (1.0 - c1) / var - 1.0; // a + b
    m.kind = MetaKind::Beta;
    m.shape_a = c1 * total;
    m.shape_b = (1.0 - c1) * total;
    m.beta_kappa = c1;
    m.beta_beta = m.shape_b;
    return m;
}

namespace detail {

/// q_k evaluator for a Beta(a,b) meta representation.
struct BetaQFun {
    double a, b;
    void operator()(double h, std::span<double> out) const {
        if (h >= 1.0) {
            std::fill(out.begin(), out.end(), 1.0);
            return;
        }
        const double F = incomplete_beta(a, b, h);
        double hk = 1.0;
        for (std::size_t idx = 0; idx < out.size(); ++idx) {
            const int k = static_cast<int>(idx) + 1;
            hk *= h;
            double tail; // int_h^1 t^-k f(t) dt
            if (a > k + 0.5) {
                double ratio = 1.0; // B(a-k,b)/B(a,b)
                for (int i = 1; i <= k; ++i) ratio *= (a + b - i) / (a - i);
                tail = ratio * (1.0 - incomplete_beta(a - k, b, h));
            } else {
                tail = integrate_gl(
                    [&](double t) { return std::pow(t, -k) * beta_pdf(a, b, t); },
                    h, 1.0, 64);
            }
            out[idx] = std::min(1.0, F + hk * tail);
        }
    }
};

struct DegenerateQFun {
    double m;
    void operator()(double h, std::span<double> out) const {
        if (h >= m) {
            std::fill(out.begin(), out.end(), 1.0);
            return;
        }
        const double r = h / m;
        double rk = 1.0;
        for (double& o : out) {
            rk *= r;
            o = rk;
        }
    }
};

/// q_k evaluator over a tabulated CDF, O(1) per call via per-k suffix sums
/// of cell masses weighted by midpoint powers.
struct TabulatedQFun {
    const std::vector<double>& u;
    const std::vector<double>& F;
    int kmax;
    std::vector<double> suffix; // [k][cell]: sum over cells >= j of dF / t_mid^k

    TabulatedQFun(const std::vector<double>& gu, const std::vector<double>& gF, int km)
        : u(gu), F(gF), kmax(km) {
        const std::size_t cells = u.size() - 1;
        suffix.assign(static_cast<std::size_t>(kmax) * (cells + 1), 0.0);
        for (int k = 1; k <= kmax; ++k) {
            double* row = suffix.data() + static_cast<std::size_t>(k - 1) * (cells + 1);
            row[cells] = 0.0;
            for (std::size_t j = cells; j-- > 0;) {
                const double mass = F[j + 1] - F[j];
                const double tm = std::max(0.5 * (u[j] + u[j + 1]), 1e-12);
                row[j] = row[j + 1] + mass * std::pow(tm, -k);
            }
        }
    }

    void operator()(double h, std::span<double> out) const {
        if (h >= u.back()) {
            std::fill(out.begin(), out.end(), 1.0);
            return;
        }
        auto it = std::upper_bound(u.begin(), u.end(), h);
        std::size_t j = static_cast<std::size_t>(it - u.begin());
        if (j == 0) j = 1;
        const std::size_t cells = u.size() - 1;
        const double t0 = u[j - 1], t1 = u[j];
        const double Fh = F[j - 1] + (F[j] - F[j - 1]) * (h - t0) / std::max(t1 - t0, 1e-300);
        const double part_mass = F[j] - Fh;
        const double part_tm = std::max(0.5 * (h + t1), 1e-12);
        double hk = 1.0;
        for (int k = 1; k <= kmax; ++k) {
            hk *= h;
            const double* row = suffix.data() + static_cast<std::size_t>(k - 1) * (cells + 1);
            const double tail = part_mass * std::pow(part_tm, -k) + row[j];
            out[k - 1] = std::min(1.0, Fh + hk * tail);
        }
    }
};

} // namespace detail

struct BetaMetaOptions {
    double eps = 1e-6;   // stop when 2*pi*|I_n - I_{n-1}| stays below, both k
    int max_iter = 50;
    int radial_n = 96;
    int angular_n = 256;
    double quad_rel_tol = 1e-6;
    int max_quad_doublings = 3;
};

/// Two-moment Beta approximation of the meta distribution, solved by
/// successive substitution from the closed-form seed. Works in saturated
/// regimes too (the activity threshold caps at 1 inside q_k); callers tag
/// stable_regime separately.
inline MetaDistribution beta_meta(const NetworkConfig& cfg, const BetaMetaOptions& opt = {}) {
    const MetaParams mp = MetaParams::from(cfg);
    if (mp.prefactor < 1e-30) {
        MetaDistribution m;
        m.kind = MetaKind::Degenerate;
        m.point = std::exp(-mp.noise_exp);
        m.c1 = m.point;
        m.c2 = m.point * m.point;
        return m;
    }

    auto solve_at = [&](int mult) {
        const int rn = opt.radial_n * mult;
        const int an = opt.angular_n * mult;
        std::vector<double> I = eta_seed(mp, 2);
        MetaDistribution fit;
        std::string trace;
        for (int it = 1; it <= opt.max_iter; ++it) {
            const double c1 = meta_moment(mp, I, 1);
            const double c2 = meta_moment(mp, I, 2);
            fit = moment_match_beta(c1, c2);
            std::vector<double> In;
            if (fit.kind == MetaKind::Degenerate)
                In = eta_integrals(mp, 2, detail::DegenerateQFun{fit.point}, rn, an);
            else
                In = eta_integrals(mp, 2, detail::BetaQFun{fit.shape_a, fit.shape_b}, rn, an);
            const double resid = 2.0 * M_PI *
                std::max(std::fabs(In[0] - I[0]), std::fabs(In[1] - I[1]));
            I = In;
            trace += (trace.empty() ? "" : ", ") + std::to_string(resid);
            if (resid < opt.eps) {
                fit.c1 = meta_moment(mp, I, 1);
                fit.c2 = meta_moment(mp, I, 2);
                fit = moment_match_beta(fit.c1, fit.c2);
                fit.iterations_used = it;
                fit.converged_residual = resid;
                return fit;
            }
        }
        throw NumericsError("beta_meta: no convergence after " +
                            std::to_string(opt.max_iter) +
                            " iterations; residual trace: " + trace);
    };

    MetaDistribution result = solve_at(1);
    int mult = 1;
    for (int d = 0; d < opt.max_quad_doublings; ++d) {
        mult *= 2;
        MetaDistribution finer = solve_at(mult);
        const double move = std::max(std::fabs(finer.c1 - result.c1),
                                     std::fabs(finer.c2 - result.c2));
        const bool ok = move <= opt.quad_rel_tol * std::max(finer.c1, 1e-14);
        result = finer;
        if (ok) return result;
    }
    throw NumericsError("beta_meta: moment integrals kept moving under node doubling");
}

struct ExactMetaOptions {
    int series_k = 128;      // binomial series truncation
    GilPelaezOptions gp{8.0, 64, 24, 1e-10, 1e-4, false};
    double series_guard = 1e12; // cancellation wall: cap omega when a series
                                // term outgrows this (double precision limit)
    int internal_grid = 401;
    double eps = 1e-6;     // stop on 2*pi*sup_k |I_n - I_{n-1}| ...
    double cdf_eps = 1e-3; // ... or on sup_u |F_n - F_{n-1}|, the floor set by
                           // the inversion accuracy the CDF loop runs through
    double accept_dF = 0.02; // after max_iter, accept the best sweep if its
                             // CDF movement stayed below this, else raise
    double snap_floor = 3e-3; // inversion ringing below this snaps to 0: a
                              // false positive floor at small u would destroy
                              // the geometric k-decay of the integrals
    double damping = 0.5;     // mixing of successive integral vectors
    int max_iter = 30;
    int radial_n = 96;
    int angular_n = 256;
};

/// Exact meta-distribution fixed point: per sweep of the Picard iteration the
/// CDF is re-extracted from the truncated moment generating function of
/// ln(mu) at every grid point, then fed back through the interference
/// integrals (Stieltjes against the tabulated CDF).
inline MetaDistribution exact_meta_cdf(const NetworkConfig& cfg,
                                       const std::vector<double>& u_grid,
                                       const ExactMetaOptions& opt = {}) {
    const MetaParams mp = MetaParams::from(cfg);
    if (mp.prefactor < 1e-30) {
        MetaDistribution m;
        m.kind = MetaKind::Degenerate;
        m.point = std::exp(-mp.noise_exp);
        m.c1 = m.point;
        m.c2 = m.point * m.point;
        return m;
    }
    const int K = opt.series_k;

    std::vector<double> us(static_cast<std::size_t>(opt.internal_grid));
    for (int i = 0; i < opt.internal_grid; ++i)
        us[static_cast<std::size_t>(i)] = static_cast<double>(i) / (opt.internal_grid - 1);

    std::vector<double> I = eta_seed(mp, K);
    std::vector<double> F_prev;
    std::vector<double> F;
    std::vector<double> F_best;
    double best_dF = std::numeric_limits<double>::infinity();
    int iterations = 0;
    double residual = 0.0;
    GilPelaezReport gp_report;

    for (int it = 1; it <= opt.max_iter; ++it) {
        iterations = it;
        auto cf = [&](double w) -> cplx {
            std::vector<cplx> binom;
            binom_series(cplx(0.0, w), K, binom);
            cplx series = 0.0;
            double sign = 1.0, maxterm = 0.0;
            for (int k = 1; k <= K; ++k) {
                const cplx term = sign * binom[static_cast<std::size_t>(k)] *
                                  I[static_cast<std::size_t>(k - 1)];
                series += term;
                maxterm = std::max(maxterm, std::abs(term));
                sign = -sign;
            }
            if (maxterm > opt.series_guard)
                return cplx(std::numeric_limits<double>::quiet_NaN(), 0.0);
            return std::exp(cplx(0.0, -w * mp.noise_exp) - mp.prefactor * series);
        };
        F = gil_pelaez_cdf(cf, us, opt.gp, &gp_report);
        F.front() = 0.0;
        for (double& v : F)
            if (v < opt.snap_floor) v = 0.0;
        clip_monotonize(F);

        double dF = 0.0;
        if (!F_prev.empty())
            for (std::size_t i = 0; i < F.size(); ++i)
                dF = std::max(dF, std::fabs(F[i] - F_prev[i]));
        F_prev = F;
        if (it > 1 && dF < best_dF) {
            best_dF = dF;
            F_best = F;
        }

        detail::TabulatedQFun qf(us, F, K);
        std::vector<double> In = eta_integrals(mp, K, qf, opt.radial_n, opt.angular_n);
        residual = 0.0;
        for (int k = 0; k < K; ++k) {
            const auto ks = static_cast<std::size_t>(k);
            In[ks] = opt.damping * In[ks] + (1.0 - opt.damping) * I[ks];
            residual = std::max(residual, 2.0 * M_PI * std::fabs(In[ks] - I[ks]));
        }
        I = In;
        if (residual < opt.eps || (it > 1 && dF < opt.cdf_eps)) break;
        if (it == opt.max_iter) {
            if (best_dF <= opt.accept_dF) {
                F = F_best;
                break;
            }
            throw NumericsError("exact_meta_cdf: fixed point did not settle in " +
                                std::to_string(opt.max_iter) + " sweeps (best CDF "
                                "movement " + std::to_string(best_dF) +
                                "); use the Beta method");
        }
    }

    MetaDistribution m;
    m.kind = MetaKind::Tabulated;
    m.grid_u = u_grid;
    m.grid_F.resize(u_grid.size());
    {
        MetaDistribution internal;
        internal.kind = MetaKind::Tabulated;
        internal.grid_u = us;
        internal.grid_F = F;
        for (std::size_t i = 0; i < u_grid.size(); ++i)
            m.grid_F[i] = internal.cdf(u_grid[i]);
    }
    clip_monotonize(m.grid_F);
    double c1 = 0.0, c2 = 0.0;
    for (std::size_t j = 1; j < us.size(); ++j) {
        const double mass = F[j] - F[j - 1];
        const double tm = 0.5 * (us[j - 1] + us[j]);
        c1 += mass * tm;
        c2 += mass * tm * tm;
    }
    m.c1 = c1;
    m.c2 = c2;
    m.iterations_used = iterations;
    m.converged_residual = residual;
    m.inversion_residual = gp_report.doubling_residual;
    return m;
}

} // namespace aoisim
