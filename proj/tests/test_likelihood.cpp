#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "levymle/likelihood.hpp"
#include "levymle/simulate.hpp"
#include "property.hpp"

using namespace levymle;
using levymle::testing::for_all;
using levymle::testing::Gen;

namespace {

ModelSpec lv_truth() {
    const double r[] = {1, 2, 3}, a[] = {0.06, 0.02, 0.04, 0.02, 0.08, 0.02, 0.02, 0.04, 0.1};
    const double s[] = {0.3, 0.3, 0.3}, al[] = {1.7, 1.8, 1.9}, be[] = {-0.1, 0.1, 0.3};
    return lotka_volterra_model(r, a, s, al, be);
}

TimeSeries lv_path(std::size_t n, std::uint64_t seed, std::vector<double>* eta = nullptr) {
    SimConfig c{lv_truth(), {10.87, 8.69, 4.35}, 0.01, n, seed};
    return simulate_path(c, eta);
}

}  // namespace

TEST(Likelihood, GaussianIndexReducesToNormalTransitions) {
    SimConfig c{landau_model(1, 1, 0.3, 2.0, 0.0), {0.0}, 0.01, 5000, 3};
    const auto ts = simulate_path(c);
    double ref = 0.0;
    const double var = 2.0 * 0.3 * 0.3 * 0.01;
    for (std::size_t t = 0; t + 1 < ts.size(); ++t) {
        const double x = ts.at(t, 0);
        const double r = ts.at(t + 1, 0) - x - (x - x * x * x) * 0.01;
        ref += -0.5 * std::log(2.0 * std::numbers::pi * var) - r * r / (2.0 * var);
    }
    const double ll = log_likelihood(ts, c.model);
    EXPECT_NEAR(ll, ref, 1e-8 * std::abs(ref));
}

TEST(Likelihood, FactorizesOverDimensions) {
    const auto ts = lv_path(3000, 1);
    const auto m = lv_truth();
    LikelihoodEvaluator ev(ts);
    double sum = 0.0;
    for (std::size_t i = 0; i < 3; ++i) sum += ev.dimension(m, i);
    EXPECT_EQ(ev(m), sum);
}

TEST(Likelihood, MatchesDirectTransitionDensities) {
    const auto ts = lv_path(2000, 2);
    const auto m = lv_truth();
    double direct = 0.0;
    for (std::size_t t = 0; t + 1 < ts.size(); ++t) direct += transition_log_density(ts.row(t + 1), ts.row(t), m, ts.delta);
    EXPECT_NEAR(log_likelihood(ts, m), direct, 1e-7 * std::abs(direct));
}

TEST(Likelihood, InputErrors) {
    const auto ts = lv_path(100, 1);
    std::vector<char> none(ts.size() - 1, 0), short_mask(10, 1);
    EXPECT_THROW(log_likelihood(ts, lv_truth(), &none), DataError);
    EXPECT_THROW(log_likelihood(ts, lv_truth(), &short_mask), ConfigError);
    EXPECT_THROW(log_likelihood(ts, landau_model(1, 1, 0.3, 1.6, 0)), ConfigError);
    auto bad = lv_truth();
    bad.params[bad.dims[0].alpha].value = 2.5;
    EXPECT_THROW(log_likelihood(ts, bad), ParameterDomainError);
}

// ---------------------------------------------------------------- invariants

TEST(LikelihoodInvariants, ResidualsRecoverDrivingNoise) {
    std::vector<double> eta;
    const auto ts = lv_path(10000, 5, &eta);
    const auto r = compute_residuals(ts, lv_truth());
    ASSERT_EQ(r.eta.size(), eta.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < eta.size(); ++k) worst = std::max(worst, std::abs(r.eta[k] - eta[k]));
    EXPECT_LE(worst, 1e-10);
}

TEST(LikelihoodInvariants, ResidualRoundTripRandomModels) {
    for_all(401, 100, [](Gen& g, int) {
        const double a = g.uniform(0.5, 2.0), b = g.uniform(0.5, 2.0), c = g.uniform(0.05, 0.5);
        const double al = g.uniform(1.3, 2.0), be = g.uniform(-0.9, 0.9);
        SimConfig cfg{landau_model(a, b, c, al, be), {g.uniform(-1, 1)}, 0.01, 500,
                      static_cast<std::uint64_t>(g.integer(0, 1 << 30))};
        std::vector<double> eta;
        TimeSeries ts;
        try {
            ts = simulate_path(cfg, &eta);
        } catch (const ExplosionError&) {
            return;
        }
        const auto r = compute_residuals(ts, cfg.model);
        for (std::size_t k = 0; k < eta.size(); ++k)
            ASSERT_NEAR(r.eta[k], eta[k], 1e-10 * std::max(1.0, std::abs(eta[k]))) << "row " << k;
    });
}

TEST(LikelihoodInvariants, ThreadCountDoesNotChangeTheValue) {
    for_all(402, 100, [](Gen& g, int) {
        auto m = lv_truth();
        for (auto& p : m.params)
            if (p.transform == Transform::identity) p.value *= g.uniform(0.8, 1.2);
        TimeSeries ts;
        try {
            ts = lv_path(9000, static_cast<std::uint64_t>(g.integer(1, 1000)));
        } catch (const ExplosionError&) {
            return;
        }
        const double one = log_likelihood(ts, m, nullptr, LikelihoodOptions{1});
        const double many = log_likelihood(ts, m, nullptr, LikelihoodOptions{static_cast<unsigned>(g.integer(2, 8))});
        EXPECT_EQ(one, many);
    });
}

TEST(LikelihoodInvariants, FiniteAcrossNoiseScales) {
    const auto ts = lv_path(2000, 3);
    for (double s = 0.01; s <= 100.0 + 1e-9; s *= std::pow(10.0, 0.25)) {
        auto m = lv_truth();
        for (std::size_t i = 0; i < 3; ++i) m.params[m.dims[i].noise.level].value = s;
        const double ll = log_likelihood(ts, m);
        EXPECT_TRUE(std::isfinite(ll)) << "sigma " << s;
    }
}

TEST(LikelihoodInvariants, MaskSplitsTheSum) {
    for_all(403, 100, [](Gen& g, int) {
        TimeSeries ts;
        try {
            ts = lv_path(1500, static_cast<std::uint64_t>(g.integer(1, 1000)));
        } catch (const ExplosionError&) {
            return;
        }
        std::vector<char> mask(ts.size() - 1), rest(ts.size() - 1);
        for (std::size_t t = 0; t < mask.size(); ++t) {
            mask[t] = g.coin() ? 1 : 0;
            rest[t] = mask[t] ? 0 : 1;
        }
        mask[0] = 1;
        rest[0] = 0;
        rest[1] = 1;
        mask[1] = 0;
        const auto m = lv_truth();
        const double all = log_likelihood(ts, m);
        const double split = log_likelihood(ts, m, &mask) + log_likelihood(ts, m, &rest);
        EXPECT_NEAR(split, all, 1e-10 * std::abs(all));
    });
}
