#pragma once

// Nelder-Mead simplex minimisation with the dimension-adaptive coefficients of
// Gao and Han (2012). Non-finite objective values are treated as +inf.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "levymle/errors.hpp"

namespace levymle {

struct NelderMeadOptions {
    /// Stop when max f - min f over the simplex is below tolerance * max(1, |min f|).
    double tolerance = 1e-8;
    std::size_t max_iterations = 0;  ///< 0: 2000 * dimension
    /// Restarts from the best vertex after convergence, kept only while they improve.
    int restarts = 2;
};

struct NelderMeadResult {
    std::vector<double> x;
    double f = std::numeric_limits<double>::infinity();
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    bool converged = false;
};

inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                                    std::vector<double> x0, const std::vector<double>& steps,
                                    NelderMeadOptions opts = {}) {
    const std::size_t n = x0.size();
    if (n == 0) throw OptimizationError("nelder_mead: nothing to optimise");
    if (steps.size() != n) throw ConfigError("nelder_mead: one initial step per coordinate required");
    const std::size_t max_iter = opts.max_iterations ? opts.max_iterations : 2000 * n;
    const double dn = static_cast<double>(n);
    const double c_reflect = 1.0;
    const double c_expand = n > 1 ? 1.0 + 2.0 / dn : 2.0;
    const double c_contract = n > 1 ? 0.75 - 1.0 / (2.0 * dn) : 0.5;
    const double c_shrink = n > 1 ? 1.0 - 1.0 / dn : 0.5;

    NelderMeadResult res;
    auto f = [&](const std::vector<double>& x) {
        ++res.evaluations;
        const double v = objective(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    double prev_best = std::numeric_limits<double>::infinity();
    std::vector<double> start = std::move(x0);
    for (int round = 0; round <= opts.restarts; ++round) {
        std::vector<std::vector<double>> sim(n + 1, start);
        std::vector<double> fv(n + 1);
        for (std::size_t k = 0; k < n; ++k) sim[k + 1][k] += steps[k];
        for (std::size_t k = 0; k <= n; ++k) fv[k] = f(sim[k]);
        if (round == 0 && std::all_of(fv.begin(), fv.end(), [](double v) { return std::isinf(v); }))
            throw OptimizationError("nelder_mead: objective is not finite anywhere on the initial simplex");

        std::vector<std::size_t> order(n + 1);
        std::vector<double> centroid(n), xr(n), xe(n), xc(n);
        bool converged = false;
        for (; res.iterations < max_iter; ++res.iterations) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
            const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
            if (std::isfinite(fv[worst]) &&
                fv[worst] - fv[best] <= opts.tolerance * std::max(1.0, std::abs(fv[best]))) {
                converged = true;
                break;
            }
            std::fill(centroid.begin(), centroid.end(), 0.0);
            for (std::size_t k = 0; k <= n; ++k)
                if (k != worst)
                    for (std::size_t j = 0; j < n; ++j) centroid[j] += sim[k][j] / dn;

            for (std::size_t j = 0; j < n; ++j) xr[j] = centroid[j] + c_reflect * (centroid[j] - sim[worst][j]);
            const double fr = f(xr);
            if (fr < fv[best]) {
                for (std::size_t j = 0; j < n; ++j) xe[j] = centroid[j] + c_expand * (xr[j] - centroid[j]);
                const double fe = f(xe);
                if (fe < fr) {
                    sim[worst] = xe;
                    fv[worst] = fe;
                } else {
                    sim[worst] = xr;
                    fv[worst] = fr;
                }
                continue;
            }
            if (fr < fv[second]) {
                sim[worst] = xr;
                fv[worst] = fr;
                continue;
            }
            const bool outside = fr < fv[worst];
            for (std::size_t j = 0; j < n; ++j)
                xc[j] = outside ? centroid[j] + c_contract * (xr[j] - centroid[j])
                                : centroid[j] - c_contract * (centroid[j] - sim[worst][j]);
            const double fc = f(xc);
            if (fc < (outside ? fr : fv[worst])) {
                sim[worst] = xc;
                fv[worst] = fc;
                continue;
            }
            for (std::size_t k = 0; k <= n; ++k) {
                if (k == best) continue;
                for (std::size_t j = 0; j < n; ++j) sim[k][j] = sim[best][j] + c_shrink * (sim[k][j] - sim[best][j]);
                fv[k] = f(sim[k]);
            }
        }
        const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
        if (fv[best] < res.f) {
            res.f = fv[best];
            res.x = sim[best];
        }
        res.converged = converged;
        if (!converged) break;
        // A restart that no longer improves means the simplex had not collapsed early.
        if (round > 0 && prev_best - res.f <= opts.tolerance * std::max(1.0, std::abs(res.f))) break;
        prev_best = res.f;
        start = res.x;
    }
    if (!std::isfinite(res.f)) throw OptimizationError("nelder_mead: every trial point was rejected");
    return res;
}

}  // namespace levymle
