#pragma once

// Univariate alpha-stable law in the classical S1 parameterisation:
//   E exp(itX) = exp(-g^a |t|^a (1 - i b sgn(t) tan(pi a / 2)) + i d t)        a != 1
//   E exp(itX) = exp(-g |t| (1 + i b (2/pi) sgn(t) log|t|) + i d t)            a == 1
//
// Densities and distribution functions come from Zolotarev's integral
// representation (Nolan's form), integrated in log-scaled form with the
// integrand peak pinned to a breakpoint. Far tails use the Bergstrom power
// series when it has converged.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "levymle/errors.hpp"
#include "levymle/quadrature.hpp"
#include "levymle/rng.hpp"

namespace levymle {

struct StableParams {
    double alpha = 2.0;  ///< index, (0, 2]
    double beta = 0.0;   ///< skewness, [-1, 1]
    double gamma = 1.0;  ///< scale, > 0
    double delta = 0.0;  ///< shift

    static StableParams standard(double alpha, double beta) { return {alpha, beta, 1.0, 0.0}; }

    bool is_standard() const noexcept { return gamma == 1.0 && delta == 0.0; }

    void validate() const {
        if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(gamma) ||
            !std::isfinite(delta))
            throw ParameterDomainError("stable parameters must be finite");
        if (!(alpha > 0.0 && alpha <= 2.0))
            throw ParameterDomainError("stable index alpha must lie in (0, 2], got " +
                                       std::to_string(alpha));
        if (!(beta >= -1.0 && beta <= 1.0))
            throw ParameterDomainError("stable skewness beta must lie in [-1, 1], got " +
                                       std::to_string(beta));
        if (!(gamma > 0.0))
            throw ParameterDomainError("stable scale gamma must be positive, got " +
                                       std::to_string(gamma));
    }
};

namespace stable_detail {

inline constexpr double pi = std::numbers::pi;
inline constexpr double alpha_floor = 0.1;
/// Half-width of the band around alpha = 1 where beta != 0 is evaluated at the edge.
inline constexpr double near_one_band = 1e-3;
/// Below this |alpha - 1| with beta == 0 the Cauchy closed form is used.
inline constexpr double cauchy_snap = 1e-9;
inline constexpr double quad_rel_tol = 1e-12;
// Beyond this |x| the alpha = 1 law uses its leading power-law tail.
inline constexpr double unit_tail_switch = 1e7;

/// Index actually used for evaluation: clipped to [0.1, 2] and moved out of the
/// alpha ~ 1 band when beta != 0.
inline double effective_alpha(double alpha, double beta) noexcept {
    alpha = std::clamp(alpha, alpha_floor, 2.0);
    const double off = alpha - 1.0;
    if (beta != 0.0 && off != 0.0 && std::abs(off) < near_one_band)
        alpha = off > 0 ? 1.0 + near_one_band : 1.0 - near_one_band;
    if (beta == 0.0 && std::abs(off) < cauchy_snap) alpha = 1.0;
    return alpha;
}

/// S1 -> S0 location offset zeta = -beta tan(pi alpha / 2): a standard S1
/// point x sits at x + zeta in S0 coordinates (zero for alpha == 1, where the
/// two coincide at unit scale).
inline double s0_offset(double alpha, double beta) noexcept {
    if (alpha == 1.0 || alpha == 2.0) return 0.0;
    return -beta * std::tan(pi * alpha / 2.0);
}

inline double gaussian_log_pdf(double x) noexcept {
    // alpha = 2 is Normal(0, 2).
    return -0.25 * x * x - std::log(2.0 * std::sqrt(pi));
}

inline double cauchy_log_pdf(double x) noexcept { return -std::log(pi) - std::log1p(x * x); }

/// log g(s) for alpha != 1, standardized S1 point x > 0, s = theta + theta0 in (0, hi).
/// The three trigonometric factors of g can vanish at either endpoint; each
/// is evaluated through whichever endpoint-relative argument is below pi/2,
/// with the endpoint offsets q = pi/2 - theta0 and p = pi - alpha hi computed
/// without cancellation.
struct KernelGeneral {
    static constexpr double guard = 1e-12;
    double alpha, theta0, hi, q, p, expo, constant;

    KernelGeneral(double a, double b, double x) : alpha(a) {
        const double ha = pi * a / 2.0;
        const double bt = b * std::tan(ha);
        theta0 = std::atan(bt) / a;
        if (a < 1.0) {
            const double t = std::tan(ha);
            q = std::atan2((1.0 - b) * t, 1.0 + b * t * t) / a;
            p = pi - std::atan2((1.0 + b) * t, 1.0 - b * t * t);
        } else {
            const double t = std::tan(pi - ha);
            q = (pi - std::atan2((1.0 - b) * t, 1.0 + b * t * t)) / a;
            p = std::atan2((1.0 + b) * t, 1.0 - b * t * t);
        }
        hi = pi - q;
        expo = a / (a - 1.0);
        const double log_cos_at = -0.5 * std::log1p(bt * bt);
        constant = expo * std::log(x) + log_cos_at / (a - 1.0);
    }

    // log g carries absolute rounding noise proportional to its constant.
    double rel_tol() const noexcept { return std::max(quad_rel_tol, 4e-16 * std::abs(constant)); }

    double operator()(double s) const noexcept {
        const double r = hi - s;
        const double a1 = s + q;
        const double cos_t = a1 <= pi / 2.0 ? std::sin(a1) : std::sin(r);
        const double a2 = alpha * s;
        const double sin_as = a2 <= pi / 2.0 ? std::sin(a2) : std::sin(p + alpha * r);
        // q + (1 - alpha) s == p + (alpha - 1) r; take the sum of two non-negative terms.
        const double c3 = std::sin(alpha < 1.0 ? q + (1.0 - alpha) * s : p + (alpha - 1.0) * r);
        constexpr double tiny = std::numeric_limits<double>::min();
        const double lc = std::log(std::max(cos_t, tiny));
        return constant + expo * (lc - std::log(std::max(sin_as, tiny))) +
               std::log(std::max(c3, tiny)) - lc;
    }
};

/// log g for alpha == 1, beta > 0 as a function of v in (0, pi), where
/// v = pi/2 - theta for x >= 0 and v = pi/2 + theta for x < 0. Either way the
/// peak of g exp(-g) moves towards v = 0 in the far tail, where v keeps
/// full resolution.
struct KernelUnit {
    static constexpr double guard = 1e-300;
    double beta, constant, sign;

    KernelUnit(double b, double x) : beta(b), sign(x >= 0.0 ? 1.0 : -1.0) {
        constant = -pi * x / (2.0 * b) + std::log(2.0 / pi);
    }

    double rel_tol() const noexcept { return std::max(quad_rel_tol, 4e-16 * std::abs(constant)); }

    double operator()(double v) const noexcept {
        constexpr double tiny = std::numeric_limits<double>::min();
        const double sin_v = std::max(std::sin(v <= pi / 2.0 ? v : pi - v), tiny);
        const double tan_t = sign * std::cos(v) / sin_v;
        const double lin = std::max(pi / 2.0 * (1.0 + sign * beta) - sign * beta * v, tiny);
        return constant + std::log(lin) - std::log(sin_v) + lin * tan_t / beta;
    }
};

// Kernels are only evaluated LogG::guard (relative to the range) inside the
// endpoints; closer in, rounding of the endpoint itself can dominate the
// vanishing factors of g.

/// Locates g = 1 (or the endpoint closest to it) and lays geometric
/// breakpoints outward until log g leaves [lower, upper].
struct PeakLayout {
    double center = 0.0;
    std::vector<double> breaks;
};

template <class LogG>
PeakLayout layout_peak(const LogG& log_g, double lo, double hi, double lower, double upper) {
    PeakLayout out;
    const double width = hi - lo;
    const double eps = width * LogG::guard;
    const double g_lo = log_g(lo + eps);
    const double g_hi = log_g(hi - eps);
    const bool increasing = g_hi > g_lo;
    double center;
    if ((g_lo < 0.0) != (g_hi < 0.0)) {
        double a = lo, b = hi;
        for (int it = 0; it < 200; ++it) {
            const double m = 0.5 * (a + b);
            if (!(m > a && m < b)) break;
            const double v = log_g(m);
            if ((v < 0.0) == increasing)
                a = m;
            else
                b = m;
        }
        center = 0.5 * (a + b);
    } else {
        center = std::abs(g_lo) < std::abs(g_hi) ? lo : hi;
    }
    out.center = center;
    const double lc = log_g(std::clamp(center, lo + eps, hi - eps));
    std::vector<double> left, right;
    auto walk = [&](int dir, std::vector<double>& pts) {
        double t = width * 0x1.0p-50;
        for (int k = 0; k < 60; ++k, t *= 2.0) {
            const double s = center + dir * t;
            if (s <= lo || s >= hi) break;
            const double v = log_g(std::clamp(s, lo + eps, hi - eps));
            if (std::abs(v - lc) > 0.05) pts.push_back(s);
            if (!(v >= lower && v <= upper)) break;
        }
    };
    if (center > lo) walk(-1, left);
    if (center < hi) walk(+1, right);
    out.breaks.push_back(lo);
    for (auto it = left.rbegin(); it != left.rend(); ++it) out.breaks.push_back(*it);
    if (center > lo && center < hi) out.breaks.push_back(center);
    for (double s : right) out.breaks.push_back(s);
    out.breaks.push_back(hi);
    return out;
}

/// log of the integral of g exp(-g) over (lo, hi).
template <class LogG>
double log_peak_integral(const LogG& log_g, double lo, double hi) {
    if (!(hi > lo)) return -std::numeric_limits<double>::infinity();
    auto lay = layout_peak(log_g, lo, hi, -80.0, 6.0);
    const double eps = (hi - lo) * LogG::guard;
    const double lc = log_g(std::clamp(lay.center, lo + eps, hi - eps));
    const double peak = lc - std::exp(lc);
    if (!std::isfinite(peak)) return -std::numeric_limits<double>::infinity();
    auto integrand = [&](double s) {
        const double v = log_g(std::clamp(s, lo + eps, hi - eps));
        const double r = v - std::exp(v) - peak;
        return std::isnan(r) ? 0.0 : std::exp(r);
    };
    auto res = quad::integrate(integrand, lay.breaks, log_g.rel_tol(), 1e-300, 4000);
    // Below the double range the density is reported approximately.
    if (!res.converged && res.error > 1e-7 * std::abs(res.value) && peak > -700.0)
        throw QuadratureError("stable density quadrature did not converge",
                              res.error / std::abs(res.value));
    if (!(res.value > 0.0)) return -std::numeric_limits<double>::infinity();
    return peak + std::log(res.value);
}

/// Integral of exp(-g) (complement = false) or 1 - exp(-g) (complement = true).
template <class LogG>
double step_integral(const LogG& log_g, double lo, double hi, bool complement) {
    if (!(hi > lo)) return 0.0;
    auto lay = layout_peak(log_g, lo, hi, -80.0, 4.5);
    const double eps = (hi - lo) * LogG::guard;
    auto integrand = [&](double s) {
        const double g = std::exp(log_g(std::clamp(s, lo + eps, hi - eps)));
        const double r = complement ? -std::expm1(-g) : std::exp(-g);
        return std::isnan(r) ? 0.0 : r;
    };
    auto res = quad::integrate(integrand, lay.breaks, log_g.rel_tol(), 1e-300, 4000);
    if (!res.converged && res.error > 1e-7 * std::abs(res.value) && res.error > 1e-14)
        throw QuadratureError("stable distribution quadrature did not converge",
                              res.error / std::max(std::abs(res.value), 1e-300));
    return res.value;
}

/// Bergstrom power series for the upper tail (x > 0) of the standardized S1
/// law with alpha != 1. Returns log-density and log upper-tail probability.
struct TailSeries {
    double log_pdf = -std::numeric_limits<double>::infinity();
    double log_sf = -std::numeric_limits<double>::infinity();
    bool converged = false;
};

inline TailSeries tail_series(double x, double alpha, double beta, double rel_tol = 1e-13) {
    TailSeries out;
    if (alpha == 2.0 || !(x > 0.0)) return out;
    const double ha = pi * alpha / 2.0;
    // z = rho exp(i (pi alpha / 2 + psi)); Im z carries the exact (1 + beta) factor.
    const std::complex<double> z(std::cos(ha) - beta * std::sin(ha) * std::tan(ha),
                                 std::sin(ha) * (1.0 + beta));
    if (z.imag() == 0.0) return out;
    const std::complex<double> w = z * std::pow(x, -alpha);
    std::complex<double> wk = 1.0;
    double pdf_sum = 0.0, sf_sum = 0.0;
    double prev_mag = std::numeric_limits<double>::infinity();
    double last_mag = 0.0, max_term = 0.0;
    for (int k = 1; k <= 80; ++k) {
        wk *= w;
        const double lg = std::lgamma(k * alpha + 1.0) - std::lgamma(k + 1.0);
        const double mag = std::abs(wk) * std::exp(lg);
        if (k > 2 && mag > prev_mag) break;
        const double sign = (k % 2 == 1) ? 1.0 : -1.0;
        pdf_sum += sign * wk.imag() * std::exp(lg);
        max_term = std::max(max_term, std::abs(wk.imag()) * std::exp(lg));
        sf_sum += sign * wk.imag() * std::exp(lg) / (k * alpha);
        prev_mag = mag;
        last_mag = mag;
        if (mag < rel_tol * std::abs(pdf_sum) && k > 1) break;
    }
    // Reject sums whose terms cancel by more than three digits.
    if (pdf_sum > 0.0 && last_mag < rel_tol * pdf_sum && max_term < 1e3 * pdf_sum) {
        out.converged = true;
        out.log_pdf = std::log(pdf_sum / pi) - std::log(x);
        out.log_sf = sf_sum > 0.0 ? std::log(sf_sum / pi) : -std::numeric_limits<double>::infinity();
    }
    return out;
}

/// Leading Bergstrom constant for the tail on one side:
/// f(x) ~ c |x|^{-alpha-1}, c = sin(pi alpha/2) Gamma(alpha+1) (1 +- beta) / pi.
inline double tail_constant(double alpha, double beta, bool upper) noexcept {
    if (alpha >= 2.0) return 0.0;
    return std::sin(pi * alpha / 2.0) * std::tgamma(alpha + 1.0) * (upper ? 1.0 + beta : 1.0 - beta) /
           pi;
}

/// log f(x) for the standardized S1 law, alpha already effective.
inline double standard_log_pdf(double x, double alpha, double beta) {
    if (alpha == 2.0) return gaussian_log_pdf(x);
    if (alpha == 1.0) {
        if (std::abs(beta) < cauchy_snap) return cauchy_log_pdf(x);
        if (beta < 0.0) {
            x = -x;
            beta = -beta;
        }
        // Far tails: the integrand peak is narrower than the endpoint resolution.
        if (x > unit_tail_switch) return std::log((1.0 + beta) / pi) - 2.0 * std::log(x);
        if (x < -unit_tail_switch) return std::log((1.0 - beta) / pi) - 2.0 * std::log(-x);
        KernelUnit k(beta, x);
        return std::log(1.0 / (2.0 * beta)) + log_peak_integral(k, 0.0, pi);
    }
    if (x < 0.0) {
        x = -x;
        beta = -beta;
    }
    if (x == 0.0) {
        const double bt = beta * std::tan(pi * alpha / 2.0);
        const double theta0 = std::atan(bt) / alpha;
        const double c = std::cos(theta0);
        if (!(c > 1e-300)) return -std::numeric_limits<double>::infinity();
        return std::lgamma(1.0 + 1.0 / alpha) + std::log(c) - std::log(pi) -
               0.5 * std::log1p(bt * bt) / alpha;
    }
    if (x > 8.0) {
        auto ts = tail_series(x, alpha, beta);
        if (ts.converged) return ts.log_pdf;
    }
    KernelGeneral k(alpha, beta, x);
    if (!(k.hi > 0.0)) return -std::numeric_limits<double>::infinity();
    return std::log(alpha / (pi * std::abs(alpha - 1.0))) - std::log(x) +
           log_peak_integral(k, 0.0, k.hi);
}

/// Upper tail probability P(X > x) for x >= 0 of the standardized S1 law (alpha != 1).
inline double standard_sf_positive(double x, double alpha, double beta) {
    if (x == 0.0) {
        const double theta0 = std::atan(beta * std::tan(pi * alpha / 2.0)) / alpha;
        return 1.0 - (pi / 2.0 - theta0) / pi;
    }
    if (x > 8.0) {
        auto ts = tail_series(x, alpha, beta);
        if (ts.converged && std::isfinite(ts.log_sf)) return std::exp(ts.log_sf);
    }
    KernelGeneral k(alpha, beta, x);
    if (!(k.hi > 0.0)) return 0.0;
    return step_integral(k, 0.0, k.hi, alpha < 1.0) / pi;
}

inline double gaussian_cdf(double x) noexcept { return 0.5 * std::erfc(-x / 2.0); }

/// P(X <= x) for the standardized S1 law, alpha already effective.
inline double standard_cdf(double x, double alpha, double beta) {
    if (alpha == 2.0) return gaussian_cdf(x);
    if (alpha == 1.0) {
        if (std::abs(beta) < cauchy_snap) return 0.5 + std::atan(x) / pi;
        bool flip = beta < 0.0;
        if (flip) {
            x = -x;
            beta = -beta;
        }
        if (std::abs(x) > unit_tail_switch) {
            const double lower = x > 0.0 ? 1.0 - (1.0 + beta) / (pi * x) : (1.0 - beta) / (pi * -x);
            return flip ? 1.0 - lower : lower;
        }
        KernelUnit k(beta, x);
        // With beta > 0, g decreases in x: small F for x -> -inf.
        const double lower = step_integral(k, 0.0, pi, false) / pi;
        const double upper = step_integral(k, 0.0, pi, true) / pi;
        return flip ? upper : lower;
    }
    if (x >= 0.0) return 1.0 - standard_sf_positive(x, alpha, beta);
    return standard_sf_positive(-x, alpha, -beta);
}

}  // namespace stable_detail

/// ln f(x; p) in the S1 parameterisation. Returns -inf outside the support.
inline double stable_log_pdf(double x, const StableParams& p) {
    p.validate();
    if (!std::isfinite(x)) throw ParameterDomainError("stable_log_pdf: x must be finite");
    using namespace stable_detail;
    const double a = effective_alpha(p.alpha, p.beta);
    double z = (x - p.delta) / p.gamma;
    if (a == 1.0) z -= 2.0 / pi * p.beta * std::log(p.gamma);
    return standard_log_pdf(z, a, p.beta) - std::log(p.gamma);
}

inline double stable_pdf(double x, const StableParams& p) { return std::exp(stable_log_pdf(x, p)); }

inline double stable_cdf(double x, const StableParams& p) {
    p.validate();
    if (std::isnan(x)) throw ParameterDomainError("stable_cdf: x is NaN");
    if (x == std::numeric_limits<double>::infinity()) return 1.0;
    if (x == -std::numeric_limits<double>::infinity()) return 0.0;
    using namespace stable_detail;
    const double a = effective_alpha(p.alpha, p.beta);
    double z = (x - p.delta) / p.gamma;
    if (a == 1.0) z -= 2.0 / pi * p.beta * std::log(p.gamma);
    return std::clamp(standard_cdf(z, a, p.beta), 0.0, 1.0);
}

/// Chambers-Mallows-Stuck transform of a uniform angle v in (-pi/2, pi/2)
/// and a unit exponential w into a standard S1 variate.
inline double cms_transform(double v, double w, double alpha, double beta) {
    using stable_detail::pi;
    if (alpha == 1.0) {
        const double pb = pi / 2.0 + beta * v;
        return 2.0 / pi * (pb * std::tan(v) - beta * std::log((pi / 2.0) * w * std::cos(v) / pb));
    }
    const double bt = beta * std::tan(pi * alpha / 2.0);
    const double b = std::atan(bt) / alpha;
    const double s = std::pow(1.0 + bt * bt, 1.0 / (2.0 * alpha));
    const double av = alpha * (v + b);
    return s * std::sin(av) / std::pow(std::cos(v), 1.0 / alpha) *
           std::pow(std::cos(v - av) / w, (1.0 - alpha) / alpha);
}

/// One S1 variate; consumes exactly two draws from `rng`.
inline double stable_sample(const StableParams& p, CounterRng& rng) {
    p.validate();
    using stable_detail::pi;
    const double a = stable_detail::effective_alpha(p.alpha, p.beta);
    const double v = pi * (rng.uniform_open() - 0.5);
    const double w = -std::log(rng.uniform_open());
    const double z = cms_transform(v, w, a, p.beta);
    if (a == 1.0) return p.gamma * z + p.delta + 2.0 / pi * p.beta * p.gamma * std::log(p.gamma);
    return p.gamma * z + p.delta;
}

}  // namespace levymle
