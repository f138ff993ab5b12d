#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "levymle/density_grid.hpp"
#include "levymle/errors.hpp"
#include "levymle/likelihood.hpp"
#include "levymle/spline.hpp"
#include "levymle/stable.hpp"

namespace levymle {

// ---------------------------------------------------------------- KDE

/// 1.06 s n^{-1/5}, with s replaced by IQR / 1.349 when that is smaller.
inline double silverman_bandwidth(std::span<const double> sample) {
    const std::size_t n = sample.size();
    if (n < 2) throw DataError("bandwidth: at least two points required");
    double mean = 0.0;
    for (double v : sample) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : sample) ss += (v - mean) * (v - mean);
    const double s = std::sqrt(ss / static_cast<double>(n - 1));
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    auto q = [&](double p) {
        const double pos = p * static_cast<double>(n - 1);
        const auto k = static_cast<std::size_t>(pos);
        const double w = pos - static_cast<double>(k);
        return k + 1 < n ? sorted[k] * (1 - w) + sorted[k + 1] * w : sorted.back();
    };
    const double iqr = (q(0.75) - q(0.25)) / 1.349;
    const double scale = iqr > 0.0 ? std::min(s, iqr) : s;
    if (!(scale > 0.0)) throw DataError("bandwidth: sample has zero spread");
    return 1.06 * scale * std::pow(static_cast<double>(n), -0.2);
}

/// Gaussian kernel density estimate at each point of `x`. Kernels are cut at 9 bandwidths.
inline std::vector<double> kde(std::span<const double> sample, std::span<const double> x, double bandwidth) {
    if (sample.empty()) throw DataError("kde: empty sample");
    if (!(bandwidth > 0.0)) throw ConfigError("kde: bandwidth must be positive");
    std::vector<double> s(sample.begin(), sample.end());
    std::sort(s.begin(), s.end());
    const double norm = 1.0 / (static_cast<double>(s.size()) * bandwidth * std::sqrt(2.0 * std::numbers::pi));
    const double reach = 9.0 * bandwidth;
    std::vector<double> p(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        auto lo = std::lower_bound(s.begin(), s.end(), x[k] - reach);
        auto hi = std::upper_bound(lo, s.end(), x[k] + reach);
        double acc = 0.0;
        for (auto it = lo; it != hi; ++it) {
            const double z = (x[k] - *it) / bandwidth;
            acc += std::exp(-0.5 * z * z);
        }
        p[k] = acc * norm;
    }
    return p;
}

// ---------------------------------------------------------------- potential

struct PotentialCurve {
    std::vector<double> x;
    std::vector<double> U;  ///< -log p, shifted so that min U = 0
    std::vector<double> density;
    double bandwidth = 0.0;
    std::size_t sample_size = 0;
};

/// U(x) = -log p(x) from a Gaussian KDE on `grid_size` points spanning the data range.
inline PotentialCurve effective_potential(std::span<const double> series, std::size_t grid_size = 512,
                                          std::optional<double> bandwidth = std::nullopt) {
    if (series.size() < 100) throw DataError("potential: at least 100 points required");
    if (grid_size < 8) throw ConfigError("potential: grid needs at least 8 points");
    for (double v : series)
        if (!std::isfinite(v)) throw DataError("potential: non-finite sample value");
    const auto [mn, mx] = std::minmax_element(series.begin(), series.end());
    if (!(*mx > *mn)) throw DataError("potential: sample has zero variance");
    PotentialCurve c;
    c.bandwidth = bandwidth ? *bandwidth : silverman_bandwidth(series);
    if (!(c.bandwidth > 0.0)) throw ConfigError("potential: bandwidth must be positive");
    c.sample_size = series.size();
    c.x = equidistant_knots(*mn, *mx, grid_size);
    c.density = kde(series, c.x, c.bandwidth);
    const auto& p = c.density;
    c.U.resize(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) c.U[k] = -std::log(std::max(p[k], std::numeric_limits<double>::min()));
    const double lowest = *std::min_element(c.U.begin(), c.U.end());
    for (double& u : c.U) u -= lowest;
    return c;
}

/// Interior grid indices k with U[k] strictly below every value within
/// `separation` cells on both sides.
inline std::vector<std::size_t> local_minima(std::span<const double> U, std::size_t separation = 3) {
    std::vector<std::size_t> out;
    if (U.size() < 2 * separation + 1) return out;
    for (std::size_t k = separation; k + separation < U.size(); ++k) {
        bool low = true;
        for (std::size_t j = 1; j <= separation && low; ++j) low = U[k] < U[k - j] && U[k] < U[k + j];
        if (low) out.push_back(k);
    }
    return out;
}

/// Local minima that stand for a regime rather than sampling noise: at least
/// `min_count` sample points within a bandwidth (isolated tail points each
/// carve their own well) and at least `min_depth` below the lower of the two
/// barriers that separate it from lower ground.
inline std::vector<std::size_t> significant_minima(const PotentialCurve& c, std::size_t separation = 3,
                                                   double min_count = 50.0, double min_depth = 0.5) {
    std::vector<std::size_t> out;
    const double per_point = static_cast<double>(c.sample_size) * c.bandwidth * std::sqrt(2.0 * std::numbers::pi);
    for (auto k : local_minima(c.U, separation)) {
        if (c.density[k] * per_point < min_count) continue;
        double left = 0.0, right = 0.0;
        for (std::size_t j = k; j-- > 0;) {
            if (c.U[j] < c.U[k]) break;
            left = std::max(left, c.U[j] - c.U[k]);
        }
        for (std::size_t j = k + 1; j < c.U.size(); ++j) {
            if (c.U[j] < c.U[k]) break;
            right = std::max(right, c.U[j] - c.U[k]);
        }
        if (std::min(left, right) >= min_depth) out.push_back(k);
    }
    return out;
}

// ---------------------------------------------------------------- KS

struct KsResult {
    double statistic = 0.0;
    double cutoff = 0.0;   ///< asymptotic critical value at `level`
    double p_value = 1.0;  ///< asymptotic Kolmogorov p-value
    double level = 0.01;
    std::size_t n = 0;
    bool pass = true;
};

/// P(K > lambda) for the Kolmogorov distribution.
inline double kolmogorov_sf(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 0.2) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        s += (k % 2 ? 1.0 : -1.0) * term;
        if (term < 1e-17) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

/// sup |F_n - F| for a sample against a continuous CDF.
inline double ks_statistic(std::span<const double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) throw DataError("ks: empty sample");
    std::vector<double> s(sample.begin(), sample.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double f = cdf(s[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return std::clamp(d, 0.0, 1.0);
}

inline KsResult ks_test(std::span<const double> sample, const std::function<double(double)>& cdf, double level = 0.01) {
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("ks: level must lie in (0, 1)");
    KsResult r;
    r.level = level;
    r.n = sample.size();
    r.statistic = ks_statistic(sample, cdf);
    const double rn = std::sqrt(static_cast<double>(r.n));
    r.cutoff = std::sqrt(-0.5 * std::log(level / 2.0)) / rn;
    r.p_value = kolmogorov_sf(rn * r.statistic);
    r.pass = r.statistic < r.cutoff;
    return r;
}

/// Standard S1 CDF via a tabulated grid (fast for many points).
inline std::function<double(double)> stable_cdf_function(const StableParams& p) {
    p.validate();
    auto grid = std::make_shared<const DensityGrid>(DensityGrid::build(p.alpha, p.beta, 1.0 - 1e-6, true));
    const double a = grid->effective_alpha();
    return [grid, p, a](double x) {
        double z = (x - p.delta) / p.gamma;
        if (a == 1.0) z -= 2.0 / stable_detail::pi * p.beta * std::log(p.gamma);
        return grid->cdf(z);
    };
}

/// KS test of the included residuals of dimension `dim` against the standard law p.
inline KsResult ks_residual_test(const Residuals& res, std::size_t dim, const StableParams& p, double level = 0.01) {
    if (dim >= res.dim) throw ConfigError("ks: dimension out of range");
    const auto sample = res.column(dim);
    if (sample.size() < 100)
        throw DataError("ks: " + std::to_string(sample.size()) + " included residuals, at least 100 required");
    return ks_test(sample, stable_cdf_function(p), level);
}

}  // namespace levymle
