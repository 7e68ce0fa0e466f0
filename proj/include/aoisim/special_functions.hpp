#pragma once

#include <cmath>
#include <complex>

#include "aoisim/errors.hpp"
#include "aoisim/quadrature.hpp"

namespace aoisim {

using cplx = std::complex<double>;

/// log Gamma for Re(z) > 0, Lanczos approximation (g = 7, 9 terms).
inline cplx lgamma_complex(cplx z) {
    static const double coef[9] = {
        0.99999999999980993,  676.5203681218851,    -1259.1392167224028,
        771.32342877765313,   -176.61502916214059,  12.507343278686905,
        -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
    z -= 1.0;
    cplx x = coef[0];
    for (int i = 1; i < 9; ++i) x += coef[i] / (z + static_cast<double>(i));
    const cplx t = z + 7.5;
    return 0.5 * std::log(2.0 * M_PI) + (z + 0.5) * std::log(t) - t + std::log(x);
}

inline double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

/// Regularized incomplete beta I_x(a,b), continued fraction (Lentz).
inline double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double lbeta = log_beta(a, b);
    const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - lbeta);

    auto cf = [&](double aa, double bb, double xx) {
        const double tiny = 1e-300;
        double f = 1.0, c = 1.0, d = 0.0;
        for (int m = 0; m <= 300; ++m) {
            double numerator;
            if (m == 0)
                numerator = 1.0;
            else if (m % 2 == 0) {
                const double k = m / 2.0;
                numerator = k * (bb - k) * xx / ((aa + 2.0 * k - 1.0) * (aa + 2.0 * k));
            } else {
                const double k = (m - 1.0) / 2.0;
                numerator = -((aa + k) * (aa + bb + k) * xx) /
                            ((aa + 2.0 * k) * (aa + 2.0 * k + 1.0));
            }
            d = 1.0 + numerator * d;
            if (std::fabs(d) < tiny) d = tiny;
            d = 1.0 / d;
            c = 1.0 + numerator / c;
            if (std::fabs(c) < tiny) c = tiny;
            const double delta = c * d;
            f *= delta;
            if (std::fabs(delta - 1.0) < 1e-15) break;
        }
        return f - 1.0;
    };

    // Use the symmetry that keeps the continued fraction well-conditioned.
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * cf(a, b, x) / a;
    const double front2 = std::exp(b * std::log1p(-x) + a * std::log(x) - lbeta);
    return 1.0 - front2 * cf(b, a, 1.0 - x) / b;
}

inline double beta_cdf(double a, double b, double x) { return incomplete_beta(a, b, x); }

inline double beta_pdf(double a, double b, double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta(a, b));
}

/// E[X^s] for X ~ Beta(a,b) at complex s: B(a+s, b) / B(a, b).
inline cplx beta_power_moment(double a, double b, cplx s) {
    return std::exp(lgamma_complex(a + s) + lgamma_complex(cplx(a + b)) -
                    lgamma_complex(cplx(a)) - lgamma_complex(a + b + s));
}

/// Generalized binomial coefficients C(s, k) for k = 0..kmax via the
/// product recurrence C(s,k) = C(s,k-1) * (s-k+1)/k.
inline void binom_series(cplx s, int kmax, std::vector<cplx>& out) {
    out.resize(kmax + 1);
    out[0] = 1.0;
    for (int k = 1; k <= kmax; ++k)
        out[k] = out[k - 1] * (s - static_cast<double>(k - 1)) / static_cast<double>(k);
}

} // namespace aoisim
