#pragma once

#include <cmath>
#include <vector>

#include "aoisim/errors.hpp"

namespace aoisim {

/// Gauss-Legendre nodes/weights on [-1,1], Newton iteration on P_n.
struct GaussLegendre {
    std::vector<double> x;
    std::vector<double> w;

    explicit GaussLegendre(int n) : x(n), w(n) {
        const int m = (n + 1) / 2;
        for (int i = 0; i < m; ++i) {
            double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            double pp = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                double p0 = 1.0, p1 = 0.0;
                for (int j = 0; j < n; ++j) {
                    const double p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
                }
                pp = n * (z * p0 - p1) / (z * z - 1.0);
                const double z1 = z;
                z = z1 - p0 / pp;
                if (std::fabs(z - z1) < 1e-15) break;
            }
            x[i] = -z;
            x[n - 1 - i] = z;
            w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
        }
    }

    template <class F>
    double integrate(F&& f, double a, double b) const {
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            s += w[i] * f(mid + half * x[i]);
        return s * half;
    }
};

template <class F>
double integrate_gl(F&& f, double a, double b, int n) {
    return GaussLegendre(n).integrate(f, a, b);
}

/// Average of a 2*pi-periodic function; the uniform grid is spectrally
/// accurate for smooth integrands.
template <class F>
double angular_average(F&& f, int n) {
    double s = 0.0;
    const double h = 2.0 * M_PI / n;
    for (int j = 0; j < n; ++j) s += f((j + 0.5) * h);
    return s / n;
}

/// integral_0^inf f(v) dv via v = tan(s)^2, s in (0, pi/2). The squared map
/// keeps the transformed integrand regular at the far endpoint for power-law
/// tails f ~ v^-c with c > 1.5 (plain tan leaves a cos^(c-2) singularity).
template <class F>
double integrate_half_line(F&& f, int n) {
    return integrate_gl(
        [&](double s) {
            const double c = std::cos(s);
            const double t = std::sin(s) / c;
            return f(t * t) * 2.0 * t / (c * c);
        },
        0.0, 0.5 * M_PI, n);
}

/// integral_{t0}^{t1} f(t) dt with nodes clustered toward t0
/// (t = t0 + (t1-t0) * sinh(c*s)/sinh(c)), for integrands with an
/// endpoint spike or pole-adjacent behavior at t0.
template <class F>
double integrate_sinh_clustered(F&& f, double t0, double t1, int n, double c = 8.0) {
    const double span = t1 - t0;
    if (span <= 0.0) return 0.0;
    const double sh = std::sinh(c);
    return integrate_gl(
        [&](double s) {
            const double t = t0 + span * std::sinh(c * s) / sh;
            return f(t) * span * c * std::cosh(c * s) / sh;
        },
        0.0, 1.0, n);
}

/// Refine by doubling a resolution parameter until the result moves by less
/// than rel_tol (relative, with a small absolute floor). `eval` maps the
/// resolution multiplier (1, 2, 4, ...) to a value.
template <class Eval>
double refine_until_stable(Eval&& eval, double rel_tol = 1e-6, int max_doublings = 5,
                           const char* what = "integral") {
    int mult = 1;
    double prev = eval(mult);
    for (int d = 0; d < max_doublings; ++d) {
        mult *= 2;
        const double cur = eval(mult);
        const double scale = std::max(std::fabs(cur), 1e-14);
        if (std::fabs(cur - prev) <= rel_tol * scale) return cur;
        prev = cur;
    }
    throw NumericsError(std::string(what) + ": no convergence under node doubling");
}

} // namespace aoisim
