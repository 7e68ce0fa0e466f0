#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "aoisim/errors.hpp"
#include "aoisim/quadrature.hpp"
#include "aoisim/special_functions.hpp"

namespace aoisim {

struct GilPelaezOptions {
    double panel_width = 8.0;   // omega extent of one Gauss-Legendre panel
    int panel_nodes = 64;
    int max_panels = 24;        // computed-CF budget: Omega = width * panels
    double tail_tol = 1e-10;    // stop once two consecutive panels fall below
    double doubling_tol = 1e-4; // error if halving the range moves F(u) more
    bool tolerate_slow_tail = false;

    // Power-law tail completion: interference-field characteristic functions
    // decay like exp(-C w^delta) with delta < 1, far too slowly to truncate.
    // When the computed end still carries mass, a model ln phi = -i m1 w -
    // C (iw)^d is anchored to the cached values and integrated onward.
    bool tail_completion = true;
    double completion_min_mag = 1e-6; // skip when |phi| already negligible
    double completion_omega_cap = 4e4;
};

struct GilPelaezReport {
    double omega_used = 0.0;
    double doubling_residual = 0.0; // sup_u |F(Omega) - F(Omega/2)|
    bool hit_series_wall = false;   // cf returned NaN (truncation breakdown)
    bool completed_tail = false;
};

namespace detail_gp {

struct TailFit {
    bool valid = false;
    double omega0 = 0.0; // anchor
    double amp = 0.0;    // -ln|phi| = amp * w^d
    double d = 0.5;
    double m1 = 0.0;     // phase = -m1 w - amp tan(pi d / 2) w^d
    double tan_half = 0.0;

    cplx eval(double w) const {
        const double r = amp * std::pow(w, d);
        const double phase = -m1 * w - tan_half * amp * std::pow(w, d);
        return std::exp(cplx(-r, 0.0)) * cplx(std::cos(phase), std::sin(phase));
    }
};

/// Anchor the power-law model to cached (omega, phi, unwrapped phase) data.
inline TailFit fit_tail(const std::vector<double>& omegas, const std::vector<cplx>& phis,
                        const std::vector<double>& phases, std::size_t end) {
    TailFit fit;
    if (end < 8) return fit;
    const std::size_t ib = end - 1;
    std::size_t ia = ib;
    while (ia > 0 && omegas[ia] > 0.55 * omegas[ib]) --ia;
    const double ra = -std::log(std::abs(phis[ia]));
    const double rb = -std::log(std::abs(phis[ib]));
    if (!(ra > 1e-12 && rb > ra)) return fit;
    fit.d = std::clamp(std::log(rb / ra) / std::log(omegas[ib] / omegas[ia]), 0.05, 0.95);
    fit.amp = rb / std::pow(omegas[ib], fit.d);
    fit.tan_half = std::tan(0.5 * M_PI * fit.d);
    fit.m1 = (-phases[ib] - fit.tan_half * rb) / omegas[ib];
    fit.omega0 = omegas[ib];
    fit.valid = true;
    return fit;
}

} // namespace detail_gp

/// Recover a CDF from the characteristic function of ln X for X supported on
/// (0, 1]:  F(u) = 1/2 - (1/pi) int_0^inf Im[u^{-i w} phi(w)] dw / w.
///
/// phi is evaluated once per node and cached; NaN from phi marks the point
/// where a series representation broke down, and the range is capped there.
/// The convergence diagnostic re-runs the whole scheme from half the range
/// (including a re-anchored tail model) and reports the sup difference.
inline std::vector<double> gil_pelaez_cdf(const std::function<cplx(double)>& phi,
                                          const std::vector<double>& us,
                                          const GilPelaezOptions& opt = {},
                                          GilPelaezReport* report = nullptr) {
    const GaussLegendre gl(opt.panel_nodes);

    std::vector<double> omegas, base_w, phases;
    std::vector<cplx> phis;
    int quiet = 0;
    bool wall = false;
    for (int pnl = 0; pnl < opt.max_panels && !wall; ++pnl) {
        const double mid = (pnl + 0.5) * opt.panel_width;
        const double half = 0.5 * opt.panel_width;
        const std::size_t panel_start = omegas.size();
        double pmax = 0.0;
        for (int q = 0; q < opt.panel_nodes; ++q) {
            const double w = mid + half * gl.x[q];
            const cplx f = phi(w);
            if (std::isnan(std::real(f)) || std::isnan(std::imag(f))) {
                wall = true;
                omegas.resize(panel_start);
                base_w.resize(panel_start);
                phis.resize(panel_start);
                phases.resize(panel_start);
                break;
            }
            omegas.push_back(w);
            base_w.push_back(gl.w[q] * half / w);
            phis.push_back(f);
            double ph = phis.size() > 1
                ? phases.back() + std::arg(f / phis[phis.size() - 2])
                : std::arg(f);
            phases.push_back(ph);
            pmax = std::max(pmax, std::abs(f));
        }
        if (wall) break;
        quiet = pmax < opt.tail_tol ? quiet + 1 : 0;
        if (quiet >= 2 && pnl >= 3) break;
    }
    if (omegas.empty())
        throw NumericsError("gil-pelaez: no usable omega range (series breaks down "
                            "immediately); use the Beta method");
    if (report) {
        report->omega_used = omegas.back();
        report->hit_series_wall = wall;
    }

    // evaluate the scheme with the computed range truncated at `end` nodes
    auto evaluate = [&](std::size_t end) {
        std::vector<double> sum(us.size(), 0.0);
        for (std::size_t n = 0; n < end; ++n) {
            for (std::size_t i = 0; i < us.size(); ++i) {
                if (us[i] <= 0.0) continue;
                const double phase = -omegas[n] * std::log(us[i]);
                sum[i] += base_w[n] *
                          std::imag(cplx(std::cos(phase), std::sin(phase)) * phis[n]);
            }
        }
        const double mag_end = std::abs(phis[end - 1]);
        if (opt.tail_completion && mag_end > opt.completion_min_mag) {
            const auto fit = detail_gp::fit_tail(omegas, phis, phases, end);
            if (fit.valid) {
                if (report) report->completed_tail = true;
                const GaussLegendre gl2(32);
                const double width = 2.0 * opt.panel_width;
                for (double a = fit.omega0; a < opt.completion_omega_cap; a += width) {
                    double panel_mag = 0.0;
                    for (int q = 0; q < 32; ++q) {
                        const double w = a + 0.5 * width * (1.0 + gl2.x[q]);
                        const cplx f = fit.eval(w);
                        panel_mag = std::max(panel_mag, std::abs(f));
                        const double wq = gl2.w[q] * 0.5 * width / w;
                        for (std::size_t i = 0; i < us.size(); ++i) {
                            if (us[i] <= 0.0) continue;
                            const double phase = -w * std::log(us[i]);
                            sum[i] += wq * std::imag(
                                cplx(std::cos(phase), std::sin(phase)) * f);
                        }
                    }
                    if (panel_mag < 1e-9) break;
                }
            }
        }
        return sum;
    };

    const std::vector<double> sum_full = evaluate(omegas.size());
    std::vector<double> sum_half = evaluate(omegas.size() / 2);
    double dmax = 0.0;
    for (std::size_t i = 0; i < us.size(); ++i)
        dmax = std::max(dmax, std::fabs(sum_full[i] - sum_half[i]) / M_PI);
    if (report) report->doubling_residual = dmax;
    if (!opt.tolerate_slow_tail && dmax > opt.doubling_tol)
        throw NumericsError("gil-pelaez: oscillatory integral did not settle "
                            "(halving the omega range moves the CDF by " +
                            std::to_string(dmax) +
                            "); increase the omega budget or use the Beta method");

    std::vector<double> F(us.size());
    for (std::size_t i = 0; i < us.size(); ++i)
        F[i] = us[i] <= 0.0 ? 0.0 : 0.5 - sum_full[i] / M_PI;
    return F;
}

/// Clip to [0,1] and enforce monotonicity (running maximum).
inline void clip_monotonize(std::vector<double>& F) {
    double run = 0.0;
    for (double& v : F) {
        v = std::clamp(v, 0.0, 1.0);
        run = std::max(run, v);
        v = run;
    }
}

} // namespace aoisim
