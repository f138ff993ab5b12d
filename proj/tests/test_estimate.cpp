#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "levymle/estimate.hpp"
#include "levymle/simulate.hpp"
#include "property.hpp"

using namespace levymle;
using levymle::testing::for_all;
using levymle::testing::Gen;

namespace {

TimeSeries landau_path(std::size_t n, std::uint64_t seed, double alpha = 1.6, double beta = 0.0) {
    SimConfig c{landau_model(1, 1, 0.3, alpha, beta), {0.0}, 0.01, n, seed};
    return simulate_path(c);
}

const double landau_truth[] = {1.0, 1.0, 0.3, 1.6, 0.0};

}  // namespace

TEST(NelderMead, Quadratic) {
    auto f = [](const std::vector<double>& x) { return (x[0] - 1) * (x[0] - 1) + 10 * (x[1] + 2) * (x[1] + 2) + 3.0; };
    NelderMeadOptions o;
    o.tolerance = 1e-14;
    const auto r = nelder_mead(f, {5.0, 5.0}, {1.0, 1.0}, o);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.x[0], 1.0, 1e-5);
    EXPECT_NEAR(r.x[1], -2.0, 1e-5);
    EXPECT_NEAR(r.f, 3.0, 1e-10);
}

TEST(NelderMead, Rosenbrock) {
    auto f = [](const std::vector<double>& x) {
        return 100 * (x[1] - x[0] * x[0]) * (x[1] - x[0] * x[0]) + (1 - x[0]) * (1 - x[0]);
    };
    NelderMeadOptions o;
    o.tolerance = 1e-16;
    const auto r = nelder_mead(f, {-1.2, 1.0}, {0.5, 0.5}, o);
    EXPECT_NEAR(r.x[0], 1.0, 1e-4);
    EXPECT_NEAR(r.x[1], 1.0, 1e-4);
}

TEST(NelderMead, RejectsEmptyAndMismatchedSteps) {
    auto f = [](const std::vector<double>&) { return 0.0; };
    EXPECT_THROW(nelder_mead(f, {}, {}), OptimizationError);
    EXPECT_THROW(nelder_mead(f, {1.0, 2.0}, {1.0}), ConfigError);
}

TEST(Estimate, LandauRecovery) {
    const auto ts = landau_path(20000, 3);
    FitOptions o;
    o.threads = 4;
    const auto fit = fit_mle(ts, landau_model(1, 1, 0.3, 1.6, 0), o);
    ASSERT_TRUE(fit.converged);
    ASSERT_EQ(fit.names, (std::vector<std::string>{"a", "b", "c", "alpha", "beta"}));
    for (std::size_t k = 0; k < 5; ++k) {
        ASSERT_TRUE(std::isfinite(fit.std_errors[k])) << fit.names[k];
        EXPECT_LT(std::abs(fit.estimates[k] - landau_truth[k]), 4.0 * fit.std_errors[k]) << fit.names[k];
    }
}

TEST(Estimate, Deterministic) {
    const auto ts = landau_path(5000, 3);
    const auto a = fit_mle(ts, landau_model(1, 1, 0.3, 1.6, 0));
    FitOptions o;
    o.threads = 3;
    const auto b = fit_mle(ts, landau_model(1, 1, 0.3, 1.6, 0), o);
    EXPECT_EQ(a.estimates, b.estimates);
    EXPECT_EQ(a.loglik, b.loglik);
}

TEST(Estimate, FixedParametersStayFixed) {
    const auto ts = landau_path(5000, 3);
    auto m = landau_model(1, 1, 0.3, 1.6, 0);
    m.params[1].free = false;
    m.params[4].free = false;
    const auto fit = fit_mle(ts, m);
    EXPECT_EQ(fit.names, (std::vector<std::string>{"a", "c", "alpha"}));
    EXPECT_EQ(fit.model.params[1].value, 1.0);
    EXPECT_EQ(fit.model.params[4].value, 0.0);
}

TEST(Estimate, RankDeficientDriftBasisIsAConfigError) {
    const auto ts = landau_path(2000, 3);
    auto m = landau_model(1, 1, 0.3, 1.6, 0);
    m.params.insert(m.params.begin() + 2, {"a2", 0.0, Transform::identity, true, 0});
    for (auto& d : m.dims) {
        for (auto& t : d.drift.terms)
            if (t.param >= 2) ++t.param;
        d.noise.level += 1;
        d.alpha += 1;
        d.beta += 1;
        d.drift.terms.push_back({2, 1.0, {1}});
    }
    EXPECT_THROW(fit_mle(ts, m), ConfigError);
}

TEST(Estimate, TooFewObservations) {
    const auto ts = landau_path(30, 3);
    EXPECT_THROW(fit_mle(ts, landau_model(1, 1, 0.3, 1.6, 0)), DataError);
}

TEST(Estimate, TwoPassStructure) {
    const auto ts = landau_path(20000, 3);
    FitOptions o;
    o.truncate = true;
    o.threads = 4;
    const auto fit = two_pass_fit(ts, landau_model(1, 1, 0.3, 1.6, 0), o);
    EXPECT_TRUE(fit.two_pass);
    ASSERT_EQ(fit.truncation.size(), 1u);
    EXPECT_LT(fit.transitions_used, fit.transitions_total);
    EXPECT_GT(fit.transitions_used, fit.transitions_total * 9 / 10);
    // Pass 2 keeps drift and noise from pass 1 and only moves alpha and beta.
    EXPECT_EQ(fit.estimates[0], fit.model.params[0].value);
    ASSERT_TRUE(fit.loglik_pass1 && fit.loglik_pass2);
    EXPECT_EQ(*fit.loglik_pass2, fit.loglik);
    for (std::size_t k = 0; k < 5; ++k) EXPECT_LT(std::abs(fit.estimates[k] - landau_truth[k]), 5.0 * fit.std_errors[k]) << fit.names[k];
}

TEST(Estimate, TwoPassRejectsEmptyTruncation) {
    const auto ts = landau_path(2000, 3);
    FitOptions o;
    o.truncate = true;
    o.bounds = {{100.0, 200.0}};
    EXPECT_THROW(two_pass_fit(ts, landau_model(1, 1, 0.3, 1.6, 0), o), ConfigError);
}

// ---------------------------------------------------------------- invariants

TEST(EstimateInvariants, OptimumInsideBoundsAndStationary) {
    for_all(501, 6, [](Gen& g, int) {
        const double alpha = g.uniform(1.3, 1.95), beta = g.uniform(-0.6, 0.6);
        TimeSeries ts;
        try {
            ts = landau_path(4000, static_cast<std::uint64_t>(g.integer(1, 1000)), alpha, beta);
        } catch (const ExplosionError&) {
            return;
        }
        FitOptions o;
        o.threads = 2;
        const auto fit = fit_mle(ts, landau_model(1, 1, 0.3, 1.6, 0), o);
        for (std::size_t k = 0; k < fit.index.size(); ++k) {
            const auto& p = fit.model.params[fit.index[k]];
            EXPECT_TRUE(inside_bounds(p.transform, p.value)) << p.name << " = " << p.value;
        }
        FitOptions again = o;
        again.initialize = false;
        const auto refit = fit_mle(ts, fit.model, again);
        EXPECT_GE(refit.loglik, fit.loglik - 1e-9 * std::abs(fit.loglik));
        EXPECT_LE(refit.loglik - fit.loglik, 1e-6 * std::abs(fit.loglik));
    });
}

TEST(EstimateInvariants, FullRangeTruncationMatchesPlainFit) {
    for_all(502, 3, [](Gen&, int k) {
        const std::uint64_t seeds[] = {3, 7, 11};
        const auto ts = landau_path(4000, seeds[k]);
        const auto col = ts.column(0);
        const auto [mn, mx] = std::minmax_element(col.begin(), col.end());
        FitOptions o;
        o.threads = 2;
        const auto plain = fit_mle(ts, landau_model(1, 1, 0.3, 1.6, 0), o);
        o.truncate = true;
        o.bounds = {{*mn, *mx}};
        const auto two = two_pass_fit(ts, landau_model(1, 1, 0.3, 1.6, 0), o);
        EXPECT_EQ(two.transitions_used, two.transitions_total);
        EXPECT_NEAR(two.loglik, plain.loglik, 1e-6 * std::abs(plain.loglik));
        for (std::size_t k = 0; k < 5; ++k)
            EXPECT_NEAR(two.estimates[k], plain.estimates[k], 0.05 * plain.std_errors[k]) << plain.names[k];
    });
}

namespace {

// |estimate - truth| per (sample size, seed, parameter) for the scale checks;
// fitted once and shared.
struct ScaleErrors {
    static constexpr std::size_t sizes[] = {10000, 50000, 100000};
    static constexpr std::uint64_t seeds[] = {3, 7, 11, 17, 19};
    double err[3][5][5] = {};

    static const ScaleErrors& get() {
        static const ScaleErrors e = [] {
            ScaleErrors r;
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t s = 0; s < 5; ++s) {
                    FitOptions o;
                    o.threads = 4;
                    const auto fit = fit_mle(landau_path(sizes[i], seeds[s]), landau_model(1, 1, 0.3, 1.6, 0), o);
                    for (std::size_t k = 0; k < 5; ++k) r.err[i][s][k] = std::abs(fit.estimates[k] - landau_truth[k]);
                    if (i == 2 && s == 0) {
                        std::printf("N=1e5 seed 3 standard errors:");
                        for (double v : fit.std_errors) std::printf(" %.4g", v);
                        std::printf("\n");
                    }
                }
            return r;
        }();
        return e;
    }

    double median(std::size_t i, std::size_t k) const {
        std::vector<double> v;
        for (std::size_t s = 0; s < 5; ++s) v.push_back(err[i][s][k]);
        std::sort(v.begin(), v.end());
        return v[2];
    }
};

const char* const landau_names[] = {"a", "b", "c", "alpha", "beta"};

}  // namespace

// Per-parameter median error over five seeds shrinks at every step of
// N = 1e4, 5e4, 1e5. Even an efficient estimator meets this only about one
// time in ten, since one 5e4 -> 1e5 step holds with probability ~0.72 per parameter.
TEST(EstimateInvariants, ConsistencyAtScale) {
    const auto& e = ScaleErrors::get();
    for (std::size_t k = 0; k < 5; ++k) {
        const double m0 = e.median(0, k), m1 = e.median(1, k), m2 = e.median(2, k);
        std::printf("%-5s median error %.5f %.5f %.5f\n", landau_names[k], m0, m1, m2);
        EXPECT_LT(m1, m0) << landau_names[k];
        EXPECT_LT(m2, m1) << landau_names[k];
    }
}

// Over a decade of sample size the same medians shrink for every parameter.
TEST(EstimateScale, ConsistencyOverADecade) {
    const auto& e = ScaleErrors::get();
    for (std::size_t k = 0; k < 5; ++k) EXPECT_LT(e.median(2, k), e.median(0, k)) << landau_names[k];
}
