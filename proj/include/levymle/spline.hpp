#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "levymle/errors.hpp"

namespace levymle {

/// Natural cubic spline (zero second derivative at the end knots) with
/// linear extrapolation along the end slopes.
class NaturalCubicSpline {
public:
    NaturalCubicSpline() = default;

    NaturalCubicSpline(std::vector<double> knots, std::vector<double> values)
        : x_(std::move(knots)), y_(std::move(values)) {
        if (x_.size() != y_.size())
            throw ConfigError("spline: knot and ordinate counts differ (" + std::to_string(x_.size()) +
                              " vs " + std::to_string(y_.size()) + ")");
        if (x_.size() < 2) throw ConfigError("spline: at least two knots required");
        for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
            if (!(x_[i + 1] > x_[i]))
                throw ConfigError("spline: knots must be strictly increasing (knot " +
                                  std::to_string(i + 1) + ")");
        }
        solve();
    }

    double operator()(double x) const noexcept {
        const std::size_t n = x_.size();
        if (x <= x_.front()) return y_.front() + slope_left_ * (x - x_.front());
        if (x >= x_.back()) {
            if (x == x_.back()) return y_.back();
            return y_.back() + slope_right_ * (x - x_.back());
        }
        const std::size_t i =
            static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), x) - x_.begin()) - 1;
        return piece(std::min(i, n - 2), x);
    }

    double derivative(double x) const noexcept {
        if (x <= x_.front()) return slope_left_;
        if (x >= x_.back()) return slope_right_;
        const std::size_t i =
            static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), x) - x_.begin()) - 1;
        const double h = x_[i + 1] - x_[i];
        const double t = x - x_[i];
        const double b = (y_[i + 1] - y_[i]) / h - h * (2.0 * m_[i] + m_[i + 1]) / 6.0;
        return b + m_[i] * t + (m_[i + 1] - m_[i]) / (2.0 * h) * t * t;
    }

    std::span<const double> knots() const noexcept { return x_; }
    std::span<const double> values() const noexcept { return y_; }
    std::span<const double> second_derivatives() const noexcept { return m_; }

private:
    double piece(std::size_t i, double x) const noexcept {
        const double h = x_[i + 1] - x_[i];
        const double t = x - x_[i];
        const double b = (y_[i + 1] - y_[i]) / h - h * (2.0 * m_[i] + m_[i + 1]) / 6.0;
        return y_[i] + t * (b + t * (0.5 * m_[i] + t * (m_[i + 1] - m_[i]) / (6.0 * h)));
    }

    void solve() {
        const std::size_t n = x_.size();
        m_.assign(n, 0.0);
        if (n > 2) {
            // Thomas algorithm on the interior equations.
            std::vector<double> c(n, 0.0), d(n, 0.0);
            for (std::size_t i = 1; i + 1 < n; ++i) {
                const double h0 = x_[i] - x_[i - 1];
                const double h1 = x_[i + 1] - x_[i];
                const double diag = 2.0 * (h0 + h1);
                const double rhs = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
                const double denom = diag - h0 * c[i - 1];
                c[i] = h1 / denom;
                d[i] = (rhs - h0 * d[i - 1]) / denom;
            }
            for (std::size_t i = n - 2; i >= 1; --i) m_[i] = d[i] - c[i] * m_[i + 1];
        }
        const double h0 = x_[1] - x_[0];
        slope_left_ = (y_[1] - y_[0]) / h0 - h0 * (2.0 * m_[0] + m_[1]) / 6.0;
        const double hn = x_[n - 1] - x_[n - 2];
        slope_right_ = (y_[n - 1] - y_[n - 2]) / hn + hn * (m_[n - 2] + 2.0 * m_[n - 1]) / 6.0;
    }

    std::vector<double> x_, y_, m_;
    double slope_left_ = 0.0, slope_right_ = 0.0;
};

/// Value at `x` of the natural cubic spline through (knots, ordinates).
/// Requires at least four strictly increasing knots.
inline double spline_eval(std::span<const double> knots, std::span<const double> ordinates, double x) {
    if (knots.size() < 4) throw ConfigError("spline_eval: at least four knots required");
    NaturalCubicSpline s({knots.begin(), knots.end()}, {ordinates.begin(), ordinates.end()});
    return s(x);
}

/// `count` equidistant knots spanning [lo, hi].
inline std::vector<double> equidistant_knots(double lo, double hi, std::size_t count) {
    if (count < 2 || !(hi > lo)) throw ConfigError("equidistant_knots: need count >= 2 and hi > lo");
    std::vector<double> k(count);
    for (std::size_t i = 0; i < count; ++i)
        k[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    k.back() = hi;
    return k;
}

}  // namespace levymle
