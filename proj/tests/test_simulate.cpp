#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "levymle/simulate.hpp"
#include "property.hpp"

using namespace levymle;
using levymle::testing::for_all;
using levymle::testing::Gen;

namespace {

// dX_i = -k_i X_i dt + s_i dL_i for each i, dimensions uncoupled.
ModelSpec ou_model(std::span<const double> k, std::span<const double> s, std::span<const double> alpha,
                   std::span<const double> beta) {
    const std::size_t d = k.size();
    ModelSpec m;
    m.dims.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        const int di = static_cast<int>(i);
        m.params.push_back({"k" + std::to_string(i + 1), k[i], Transform::identity, true, di});
        std::vector<int> pw(d, 0);
        pw[i] = 1;
        m.dims[i].drift.terms.push_back({m.params.size() - 1, -1.0, pw});
        m.params.push_back({"s" + std::to_string(i + 1), s[i], Transform::log, true, di});
        m.dims[i].noise.level = m.params.size() - 1;
        m.dims[i].label = "x" + std::to_string(i + 1);
    }
    model_detail::add_stable(m, alpha, beta);
    return m;
}

}  // namespace

TEST(Simulate, LandauShape) {
    SimConfig c{landau_model(1, 1, 0.3, 1.6, 0), {0.0}, 0.01, 1000, 3};
    const auto ts = simulate_path(c);
    EXPECT_EQ(ts.size(), 1000u);
    EXPECT_EQ(ts.dim, 1u);
    EXPECT_EQ(ts.at(0, 0), 0.0);
}

TEST(Simulate, RejectsBadConfig) {
    SimConfig c{landau_model(1, 1, 0.3, 1.6, 0), {0.0, 1.0}, 0.01, 100, 1};
    EXPECT_THROW(simulate_path(c), ConfigError);
    c.x0 = {0.0};
    c.delta = -1.0;
    EXPECT_THROW(simulate_path(c), ConfigError);
}

TEST(Simulate, ExplosionIsReported) {
    SimConfig c{landau_model(1, 1, 0.3, 1.6, 0), {0.0}, 0.01, 100000, 3};
    c.cap = 0.5;
    EXPECT_THROW(simulate_path(c), ExplosionError);
}

TEST(Simulate, BurnInDropsLeadingRows) {
    SimConfig c{landau_model(1, 1, 0.3, 1.6, 0), {0.0}, 0.01, 50, 9};
    c.n_steps = 150;
    const auto full = simulate_path(c);
    c.n_steps = 50;
    c.burn_in = 100;
    const auto tail = simulate_path(c);
    for (std::size_t t = 0; t < 50; ++t) EXPECT_EQ(tail.at(t, 0), full.at(t + 100, 0));
}

TEST(Simulate, RecordedNoiseDrivesTheStep) {
    SimConfig c{landau_model(1, 1, 0.3, 1.6, 0.2), {0.1}, 0.01, 500, 5};
    std::vector<double> eta;
    const auto ts = simulate_path(c, &eta);
    ASSERT_EQ(eta.size(), 499u);
    for (std::size_t t = 0; t + 1 < ts.size(); ++t) {
        const double x = ts.at(t, 0);
        const double expect = x + (x - x * x * x) * 0.01 + std::pow(0.01, 1.0 / 1.6) * 0.3 * eta[t];
        EXPECT_DOUBLE_EQ(ts.at(t + 1, 0), expect);
    }
}

// ---------------------------------------------------------------- invariants

TEST(SimulateInvariants, Deterministic) {
    for_all(301, levymle::testing::default_cases, [](Gen& g, int) {
        const double k[] = {g.uniform(0.1, 2)}, s[] = {g.uniform(0.1, 1)}, a[] = {g.uniform(1.2, 2)},
                     b[] = {g.uniform(-1, 1)};
        SimConfig c{ou_model(k, s, a, b), {g.uniform(-1, 1)}, 0.01, 200,
                    static_cast<std::uint64_t>(g.integer(0, 1 << 30))};
        const auto x = simulate_path(c), y = simulate_path(c);
        EXPECT_EQ(x.values, y.values);
    });
}

TEST(SimulateInvariants, SubstreamsAreIndependent) {
    for_all(302, 100, [](Gen& g, int) {
        const double k[] = {g.uniform(0.1, 2), g.uniform(0.1, 2), g.uniform(0.1, 2)};
        const double s[] = {0.3, 0.5, 0.2}, a[] = {1.5, 1.7, 1.9}, b[] = {0.0, 0.3, -0.4};
        const auto seed = static_cast<std::uint64_t>(g.integer(0, 1 << 30));
        const std::vector<double> x0 = {0.1, -0.2, 0.3};
        SimConfig c{ou_model(k, s, a, b), x0, 0.01, 300, seed};
        const auto joint = simulate_path(c);
        // Each coordinate regenerated alone from its own derived substream.
        for (std::size_t i = 0; i < 3; ++i) {
            CounterRng rng = CounterRng::substream(seed, i);
            const auto law = StableParams::standard(a[i], b[i]);
            double x = x0[i];
            for (std::size_t t = 0; t < 300; ++t) {
                EXPECT_EQ(joint.at(t, i), x) << "dimension " << i << " step " << t;
                if (::testing::Test::HasFailure()) return;
                const double eta = stable_sample(law, rng);
                x = x + (-k[i] * x) * 0.01 + std::pow(0.01, 1.0 / a[i]) * s[i] * eta;
            }
        }
        // Changing one dimension's law leaves the others untouched.
        const double a2[] = {1.2, 1.7, 1.9};
        SimConfig c2{ou_model(k, s, a2, b), x0, 0.01, 300, seed};
        const auto other = simulate_path(c2);
        for (std::size_t t = 0; t < 300; ++t) {
            EXPECT_EQ(other.at(t, 1), joint.at(t, 1));
            EXPECT_EQ(other.at(t, 2), joint.at(t, 2));
        }
    });
}

TEST(SimulateInvariants, GaussianLimitVariance) {
    const double k[] = {0.0}, s[] = {0.7}, a[] = {2.0}, b[] = {0.0};
    SimConfig c{ou_model(k, s, a, b), {0.0}, 0.01, 1000001, 17};
    const auto ts = simulate_path(c);
    double sum = 0.0, sum2 = 0.0;
    const std::size_t n = ts.size() - 1;
    for (std::size_t t = 0; t < n; ++t) {
        const double d = ts.at(t + 1, 0) - ts.at(t, 0);
        sum += d;
        sum2 += d * d;
    }
    const double mean = sum / n, var = sum2 / n - mean * mean;
    const double expected = 2.0 * 0.01 * 0.7 * 0.7;
    EXPECT_NEAR(var / expected, 1.0, 0.02);
}
