#include <gtest/gtest.h>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "levymle/analysis.hpp"
#include "levymle/density_grid.hpp"
#include "levymle/stable.hpp"
#include "levymle/stable_oracle.hpp"
#include "property.hpp"

using namespace levymle;
using levymle::testing::for_all;
using levymle::testing::Gen;

namespace {

constexpr double pi = std::numbers::pi;

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Gamma(1 + 1/alpha) / pi at 50 digits.
double central_value(double alpha) {
    using big = boost::multiprecision::cpp_bin_float_50;
    const big g = boost::math::tgamma(big(1) + big(1) / big(alpha));
    return static_cast<double>(g / boost::math::constants::pi<big>());
}

}  // namespace

// ---------------------------------------------------------------- examples

TEST(StableLogPdf, GaussianAtZero) {
    EXPECT_NEAR(stable_log_pdf(0.0, StableParams::standard(2.0, 0.0)), -1.265512123484645, 1e-12);
}

TEST(StableLogPdf, CauchyAtOne) {
    EXPECT_NEAR(stable_log_pdf(1.0, StableParams::standard(1.0, 0.0)), std::log(1.0 / (2.0 * pi)), 1e-12);
}

TEST(StableLogPdf, LevyAtOne) {
    EXPECT_NEAR(stable_log_pdf(1.0, StableParams::standard(0.5, 1.0)), -1.4189385332046727, 1e-9);
}

TEST(StableLogPdf, CentralValueIdentity) {
    for (double a : {1.1, 1.3, 1.6, 1.9}) {
        const double f0 = std::exp(stable_log_pdf(0.0, StableParams::standard(a, 0.0)));
        EXPECT_LT(rel(f0, central_value(a)), 1e-9) << "alpha " << a;
    }
}

// Values from the characteristic-function oracle, cross-checked against an
// independent S1 implementation to 1e-13.
TEST(StableLogPdf, FrozenOracleValues) {
    const double xs[] = {-3.0, -0.7, 0.0, 1.2, 4.0};
    const double a13[] = {0.0261720430724082, 0.130746356719873, 0.213074531877209, 0.279400974974946,
                          0.0171209917830391};
    const double a08[] = {0.00353330166159583, 0.0104173504060988, 0.0183409605555838, 0.189241187681681,
                          0.0850235031121988};
    for (int k = 0; k < 5; ++k) {
        EXPECT_LT(rel(stable_pdf(xs[k], StableParams::standard(1.3, -0.4)), a13[k]), 1e-8) << xs[k];
        EXPECT_LT(rel(stable_pdf(xs[k], StableParams::standard(0.8, 0.7)), a08[k]), 1e-8) << xs[k];
    }
}

TEST(StableLogPdf, RejectsInvalidParameters) {
    EXPECT_THROW(stable_log_pdf(0.0, StableParams::standard(2.5, 0.0)), ParameterDomainError);
    EXPECT_THROW(stable_log_pdf(0.0, StableParams::standard(0.0, 0.0)), ParameterDomainError);
    EXPECT_THROW(stable_log_pdf(0.0, StableParams::standard(1.5, 1.2)), ParameterDomainError);
    EXPECT_THROW(stable_log_pdf(0.0, StableParams{1.5, 0.0, -1.0, 0.0}), ParameterDomainError);
    EXPECT_THROW(stable_log_pdf(std::nan(""), StableParams::standard(1.5, 0.0)), ParameterDomainError);
}

TEST(StableLogPdf, OutsideSupportIsMinusInfinity) {
    EXPECT_EQ(stable_log_pdf(-1.0, StableParams::standard(0.5, 1.0)), -std::numeric_limits<double>::infinity());
}

TEST(StableCdf, Examples) {
    EXPECT_NEAR(stable_cdf(0.0, StableParams::standard(1.6, 0.0)), 0.5, 1e-12);
    EXPECT_NEAR(stable_cdf(1.0, StableParams::standard(1.0, 0.0)), 0.75, 1e-12);
    EXPECT_NEAR(stable_cdf(3.0, StableParams::standard(1.4, 0.5)), 0.931412301142357, 1e-9);
    EXPECT_EQ(stable_cdf(std::numeric_limits<double>::infinity(), StableParams::standard(1.4, 0.5)), 1.0);
}

TEST(StableSample, CmsExamples) {
    EXPECT_EQ(cms_transform(0.0, 1.0, 1.6, 0.0), 0.0);
    EXPECT_NEAR(cms_transform(pi / 6.0, 1.0, 2.0, 0.0), 1.0, 1e-14);
}

TEST(StableSample, ConsumesTwoDraws) {
    CounterRng rng(42);
    stable_sample(StableParams::standard(1.5, 0.2), rng);
    EXPECT_EQ(rng.counter(), 2u);
}

TEST(StableOracle, ClosedForms) {
    EXPECT_NEAR(stable_pdf_oracle(0.0, StableParams::standard(2.0, 0.0)), 0.28209479177387814, 1e-8);
    EXPECT_NEAR(stable_pdf_oracle(0.5, StableParams::standard(1.0, 0.0)), 1.0 / (pi * 1.25), 1e-8);
}

TEST(DensityGrid, GaussianBranch) {
    const auto g = build_density_grid(2.0, 0.0);
    for (double x = -8.0; x <= 8.0; x += 0.37) EXPECT_NEAR(g.log_pdf(x), -x * x / 4.0 - std::log(2.0 * std::sqrt(pi)), 1e-6);
}

TEST(DensityGrid, SymmetricAtZeroSkew) {
    const auto g = build_density_grid(1.6, 0.0);
    for (double x = 0.013; x < 200.0; x *= 1.37) EXPECT_NEAR(g.log_pdf(x), g.log_pdf(-x), 1e-10) << x;
}

TEST(DensityGrid, TailBeyondGrid) {
    const auto g = build_density_grid(1.5, 0.3);
    // Oracle value, cross-checked against an independent implementation.
    EXPECT_LT(rel(std::exp(g.log_pdf(50.0)), 2.21422909690002e-05), 1e-6);
    const double far = 3.0 * g.abscissae().back();
    EXPECT_LT(rel(std::exp(g.log_pdf(far)), stable_pdf(far, StableParams::standard(1.5, 0.3))), 1e-6);
    const double c = g.tail_coefficients().second;
    auto ratio = [&](double x) { return std::exp(g.log_pdf(x)) / (c * std::pow(x, -2.5)); };
    EXPECT_LT(std::abs(ratio(50.0) - 1.0), 0.05);
    EXPECT_LT(std::abs(ratio(5000.0) - 1.0), std::abs(ratio(50.0) - 1.0));
    EXPECT_LT(std::abs(ratio(5000.0) - 1.0), 1e-3);
}

TEST(DensityGrid, CoversRequestedMass) {
    const auto g = DensityGrid::build(1.3, -0.4, 1.0 - 1e-6, true);
    const auto xs = g.abscissae();
    const auto p = StableParams::standard(1.3, -0.4);
    EXPECT_GE(stable_cdf(xs.back(), p) - stable_cdf(xs.front(), p), 1.0 - 1e-6);
    for (double v : g.log_pdf_values()) EXPECT_TRUE(std::isfinite(v));
}

// ---------------------------------------------------------------- invariants

TEST(StableInvariants, NonnegativeAndNeverNaN) {
    for_all(101, levymle::testing::default_cases, [](Gen& g, int) {
        const double a = g.uniform(0.1, 2.0), b = g.uniform(-1.0, 1.0);
        const double x = (g.coin() ? 1.0 : -1.0) * std::pow(10.0, g.uniform(-3.0, 8.0));
        const double lp = stable_log_pdf(x, StableParams::standard(a, b));
        EXPECT_FALSE(std::isnan(lp)) << "alpha " << a << " beta " << b << " x " << x;
        EXPECT_GE(std::exp(lp), 0.0);
    });
}

TEST(StableInvariants, NormalizationOverLattice) {
    for (double a : {0.6, 1.0, 1.3, 1.6, 1.9, 2.0}) {
        for (double b : {-0.9, 0.0, 0.5}) {
            const auto g = build_density_grid(a, b);
            // Integrate in u = asinh(x) over |x| <= X, then add the leading tail mass c X^{-alpha} / alpha.
            const double X = 1e6, umax = std::asinh(X);
            const int n = 40000;
            const double h = 2.0 * umax / n;
            double s = 0.0;
            for (int k = 0; k <= n; ++k) {
                const double u = -umax + h * k;
                const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
                s += w * std::exp(g.log_pdf(std::sinh(u))) * std::cosh(u);
            }
            s *= h / 3.0;
            const auto [lo, hi] = g.tail_coefficients();
            if (a < 2.0) s += (lo + hi) * std::pow(X, -a) / a;
            EXPECT_NEAR(s, 1.0, 1e-3) << "alpha " << a << " beta " << b;
        }
    }
}

TEST(StableInvariants, Reflection) {
    for_all(102, levymle::testing::default_cases, [](Gen& g, int) {
        double a = g.uniform(0.3, 2.0);
        if (std::abs(a - 1.0) < 0.01) a += 0.05;
        const double b = g.uniform(-1.0, 1.0), x = g.uniform(-20.0, 20.0);
        const double f1 = stable_pdf(x, StableParams::standard(a, b));
        const double f2 = stable_pdf(-x, StableParams::standard(a, -b));
        EXPECT_LE(std::abs(f1 - f2), 1e-8 * std::max(f1, 1e-300) + 1e-300) << a << " " << b << " " << x;
    });
}

TEST(StableInvariants, ScaleShift) {
    for_all(103, levymle::testing::default_cases, [](Gen& g, int) {
        double a = g.uniform(0.3, 2.0);
        if (std::abs(a - 1.0) < 0.01) a += 0.05;
        const double b = g.uniform(-1.0, 1.0), gam = std::exp(g.uniform(-3.0, 3.0)), del = g.uniform(-5.0, 5.0);
        const double x = del + gam * g.uniform(-15.0, 15.0);
        const double lhs = stable_pdf(x, StableParams{a, b, gam, del});
        const double rhs = stable_pdf((x - del) / gam, StableParams::standard(a, b)) / gam;
        EXPECT_LE(std::abs(lhs - rhs), 1e-8 * rhs + 1e-300);
    });
}

TEST(StableInvariants, SamplerLaw) {
    const std::pair<double, double> cases[] = {{1.6, 0.0}, {1.8, 0.1}, {2.0, 0.0}, {1.2, -0.5}};
    for (auto [a, b] : cases) {
        const auto p = StableParams::standard(a, b);
        CounterRng rng = CounterRng::substream(2024, static_cast<std::uint64_t>(a * 100 + b * 10));
        std::vector<double> s(1000000);
        for (double& v : s) v = stable_sample(p, rng);
        EXPECT_LT(ks_statistic(s, stable_cdf_function(p)), 0.0025) << a << " " << b;
    }
}

TEST(StableInvariants, CdfMonotoneWithDensityAsDerivative) {
    for_all(104, 120, [](Gen& g, int) {
        const double a = g.uniform(0.5, 2.0), b = g.uniform(-1.0, 1.0);
        const auto p = StableParams::standard(a, b);
        const double x = g.uniform(-5.0, 5.0), h = 1e-4;
        const double lo = stable_cdf(x - h, p), mid = stable_cdf(x, p), hi = stable_cdf(x + h, p);
        EXPECT_LE(lo, mid);
        EXPECT_LE(mid, hi);
        const double f = stable_pdf(x, p);
        if (f > 1e-3) EXPECT_LT(rel((hi - lo) / (2.0 * h), f), 1e-3) << a << " " << b << " " << x;
    });
}

TEST(StableInvariants, ProductionMatchesOracle) {
    for_all(105, 120, [](Gen& g, int) {
        const double a = g.uniform(0.5, 2.0), b = g.uniform(-0.95, 0.95), x = g.uniform(-10.0, 10.0);
        const auto p = StableParams::standard(a, b);
        const double f = stable_pdf(x, p);
        if (f < 1e-8) return;
        EXPECT_LT(rel(f, stable_pdf_oracle(x, p)), 1e-4) << a << " " << b << " " << x;
    });
}

TEST(StableInvariants, GridMatchesDirectEvaluation) {
    for_all(106, 120, [](Gen& g, int) {
        const double a = g.uniform(0.3, 2.0), b = g.uniform(-1.0, 1.0);
        const auto grid = build_density_grid(a, b);
        for (int k = 0; k < 20; ++k) {
            const double x = (g.coin() ? 1.0 : -1.0) * std::pow(10.0, g.uniform(-2.0, 4.0));
            const double direct = stable_log_pdf(x, StableParams::standard(a, b));
            if (direct < -500.0) continue;
            EXPECT_NEAR(grid.log_pdf(x), direct, 1e-4 * std::max(1.0, std::abs(direct))) << a << " " << b << " " << x;
        }
    });
}

TEST(StableInvariants, ZeroSkewSymmetry) {
    for_all(107, levymle::testing::default_cases, [](Gen& g, int) {
        const double a = g.uniform(0.2, 2.0), x = g.uniform(0.0, 50.0);
        const auto p = StableParams::standard(a, 0.0);
        EXPECT_NEAR(stable_log_pdf(x, p), stable_log_pdf(-x, p), 1e-10);
        EXPECT_NEAR(stable_cdf(x, p) + stable_cdf(-x, p), 1.0, 1e-10);
    });
}

TEST(StableInvariants, GaussianIndexIsExact) {
    for_all(108, levymle::testing::default_cases, [](Gen& g, int) {
        const double x = g.uniform(-30.0, 30.0), b = g.uniform(-1.0, 1.0);
        EXPECT_NEAR(stable_log_pdf(x, StableParams::standard(2.0, b)), -x * x / 4.0 - std::log(2.0 * std::sqrt(pi)),
                    1e-12 * std::max(1.0, x * x));
    });
}
