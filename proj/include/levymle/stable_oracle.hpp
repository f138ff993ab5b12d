#pragma once

// Slow reference density: direct inversion of the S1 characteristic function,
//   f(x) = (1/pi) Int_0^inf Re[exp(-i x t) phi(t)] dt,
// by adaptive Gauss-Kronrod over short panels. No grids, no caching, no
// shared code with the production Zolotarev path. Used by the test suites.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "levymle/errors.hpp"
#include "levymle/stable.hpp"

namespace levymle {

struct OracleOptions {
    double abs_tolerance = 1e-12;  ///< on the standardized density
    double rel_tolerance = 1e-6;
};

inline double stable_pdf_oracle(double x, const StableParams& p, OracleOptions opts = {}) {
    p.validate();
    constexpr double pi = std::numbers::pi;
    const double a = p.alpha;
    const double b = p.beta;
    double z = (x - p.delta) / p.gamma;
    if (a == 1.0) z -= 2.0 / pi * b * std::log(p.gamma);

    const double skew = (a == 1.0) ? 0.0 : b * std::tan(pi * a / 2.0);
    auto integrand = [&](double t) -> double {
        if (t == 0.0) return 1.0;
        const double ta = std::pow(t, a);
        const double phase = (a == 1.0) ? z * t + 2.0 / pi * b * t * std::log(t) : skew * ta - z * t;
        return std::exp(-ta) * std::cos(phase);
    };

    // exp(-t^alpha) < 1e-19 beyond t_max.
    const double t_max = std::pow(44.0, 1.0 / a);
    // Panels short enough to hold only a few oscillations of the phase.
    const double freq = std::abs(z) + std::abs(skew) * a * std::pow(t_max, a - 1.0) +
                        (a == 1.0 ? 2.0 / pi * std::abs(b) * (std::log(t_max) + 1.0) : 0.0);
    const double panel = std::min(4.0, 8.0 * pi / std::max(freq, 1e-12));
    double total = 0.0, total_err = 0.0;
    auto add_panel = [&](double lo, double hi) {
        double err = 0.0;
        total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, lo, hi, 5,
                                                                              1e-13, &err);
        total_err += std::abs(err);
    };
    // Geometric panels towards t = 0 absorb the t^alpha cusp.
    const double first = std::min(panel, t_max);
    double edge = first * 1e-14;
    total += edge;  // integrand ~ 1 on [0, edge]
    for (double lo = edge; lo < first; lo *= 10.0) add_panel(lo, std::min(first, lo * 10.0));
    for (double lo = first; lo < t_max; lo += panel) add_panel(lo, std::min(t_max, lo + panel));
    const double f = total / pi;
    const double achieved = total_err / pi;
    if (achieved > std::max(opts.abs_tolerance, opts.rel_tolerance * std::abs(f)))
        throw QuadratureError("oracle characteristic-function inversion did not converge",
                              achieved / std::max(std::abs(f), 1e-300));
    return f / p.gamma;
}

/// P(X <= x) by Gil-Pelaez inversion of the same characteristic function:
///   F(x) = 1/2 - (1/pi) Int_0^inf Im[exp(-i x t) phi(t)] / t dt.
inline double stable_cdf_oracle(double x, const StableParams& p, OracleOptions opts = {}) {
    p.validate();
    constexpr double pi = std::numbers::pi;
    const double a = p.alpha;
    const double b = p.beta;
    double z = (x - p.delta) / p.gamma;
    if (a == 1.0) z -= 2.0 / pi * b * std::log(p.gamma);
    const double skew = (a == 1.0) ? 0.0 : b * std::tan(pi * a / 2.0);
    auto integrand = [&](double t) -> double {
        const double ta = std::pow(t, a);
        const double phase = (a == 1.0) ? -z * t - 2.0 / pi * b * t * std::log(t) : skew * ta - z * t;
        return std::exp(-ta) * std::sin(phase) / t;
    };
    const double t_max = std::pow(44.0, 1.0 / a);
    const double freq = std::abs(z) + std::abs(skew) * a * std::pow(t_max, a - 1.0) +
                        (a == 1.0 ? 2.0 / pi * std::abs(b) * (std::log(t_max) + 1.0) : 0.0);
    const double panel = std::min(4.0, 8.0 * pi / std::max(freq, 1e-12));
    double total = 0.0, total_err = 0.0;
    auto add_panel = [&](double lo, double hi) {
        double err = 0.0;
        total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, lo, hi, 5,
                                                                              1e-13, &err);
        total_err += std::abs(err);
    };
    const double first = std::min(panel, t_max);
    // Near 0 the integrand behaves like skew t^(alpha-1) - z: integrable.
    for (double lo = first * 1e-16; lo < first; lo *= 10.0) add_panel(lo, std::min(first, lo * 10.0));
    for (double lo = first; lo < t_max; lo += panel) add_panel(lo, std::min(t_max, lo + panel));
    const double achieved = total_err / pi;
    if (achieved > std::max(opts.abs_tolerance, 1e-10))
        throw QuadratureError("oracle Gil-Pelaez inversion did not converge", achieved);
    return 0.5 - total / pi;
}

}  // namespace levymle
