#pragma once

// Tabulated standard S1 log-density for one (alpha, beta), used to evaluate
// many residuals per likelihood call. Coarse nodes are uniform in
// u = asinh(x0 / w), where x0 is the S0-centred coordinate and w the width of
// the peak, so the table is dense in the body and logarithmic in the tails.
// Coarse intervals whose fourth differences predict too large a spline error
// are split into 2^L equal parts (light tails fall off like exp(-c e^{ku})
// and need it). log f is interpolated by a natural cubic spline in u; beyond
// the table the Bergstrom series takes over on power-law sides and the
// integral is evaluated directly on light sides.

#include <algorithm>
#include <cmath>
#include <complex>
#include <exception>
#include <limits>
#include <list>
#include <memory>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "levymle/errors.hpp"
#include "levymle/stable.hpp"

namespace levymle {

class DensityGrid {
public:
    enum class Kind { gaussian, cauchy, tabulated };

    /// Coarse node spacing in u.
    static constexpr double base_spacing = 0.02;
    static constexpr int max_split_level = 6;
    /// Target interpolation error in log f (relative error of f).
    static constexpr double target_error = 1e-6;

    static DensityGrid build(double alpha, double beta, double coverage = 1.0 - 1e-6,
                             bool with_cdf = false) {
        StableParams::standard(alpha, beta).validate();
        if (!(coverage > 0.0 && coverage < 1.0))
            throw ConfigError("build_density_grid: coverage must lie in (0, 1)");
        DensityGrid g;
        g.alpha_ = alpha;
        g.beta_ = beta;
        g.alpha_eff_ = stable_detail::effective_alpha(alpha, beta);
        g.has_cdf_ = with_cdf;
        if (g.alpha_eff_ == 2.0) {
            g.kind_ = Kind::gaussian;
            return g;
        }
        if (g.alpha_eff_ == 1.0 && std::abs(beta) < stable_detail::cauchy_snap) {
            g.kind_ = Kind::cauchy;
            return g;
        }
        g.kind_ = Kind::tabulated;
        g.tabulate(coverage);
        return g;
    }

    Kind kind() const noexcept { return kind_; }
    double alpha() const noexcept { return alpha_; }
    double beta() const noexcept { return beta_; }
    double effective_alpha() const noexcept { return alpha_eff_; }
    bool has_cdf() const noexcept { return has_cdf_; }

    /// Standardized S1 abscissae of the nodes (strictly increasing).
    std::vector<double> abscissae() const {
        std::vector<double> x(u_.size());
        for (std::size_t k = 0; k < x.size(); ++k) x[k] = scale_ * std::sinh(u_[k]) - zeta_;
        return x;
    }
    std::span<const double> log_pdf_values() const noexcept { return logf_; }

    /// Leading power-law constants (lower side, upper side).
    std::pair<double, double> tail_coefficients() const noexcept {
        return {stable_detail::tail_constant(alpha_eff_, beta_, false),
                stable_detail::tail_constant(alpha_eff_, beta_, true)};
    }

    double log_pdf(double x) const noexcept {
        switch (kind_) {
            case Kind::gaussian: return stable_detail::gaussian_log_pdf(x);
            case Kind::cauchy: return stable_detail::cauchy_log_pdf(x);
            case Kind::tabulated: break;
        }
        const double u = std::asinh((x + zeta_) / scale_);
        if (!(u >= u_.front())) {
            if (std::isnan(u)) return u;
            if (!lower_.heavy) return light_log_pdf(x, u - u_.front(), logf_.front(), lower_.slope);
            return lower_.log_pdf(-x, u - u_.front(), logf_.front());
        }
        if (u > u_.back()) {
            if (!upper_.heavy) return light_log_pdf(x, u - u_.back(), logf_.back(), upper_.slope);
            return upper_.log_pdf(x, u - u_.back(), logf_.back());
        }
        const std::size_t i = interval(u);
        const double h = u_[i + 1] - u_[i];
        const double t = u - u_[i];
        const double b = (logf_[i + 1] - logf_[i]) / h - h * (2.0 * m_[i] + m_[i + 1]) / 6.0;
        return logf_[i] + t * (b + t * (0.5 * m_[i] + t * (m_[i + 1] - m_[i]) / (6.0 * h)));
    }

    double pdf(double x) const noexcept { return std::exp(log_pdf(x)); }

    double cdf(double x) const {
        switch (kind_) {
            case Kind::gaussian: return stable_detail::gaussian_cdf(x);
            case Kind::cauchy: return 0.5 + std::atan(x) / stable_detail::pi;
            case Kind::tabulated: break;
        }
        if (!has_cdf_) throw ConfigError("DensityGrid::cdf: grid was built without a CDF table");
        const double u = std::asinh((x + zeta_) / scale_);
        if (u < u_.front()) return lower_.heavy ? lower_.sf(-x) : stable_detail::standard_cdf(x, alpha_eff_, beta_);
        if (u > u_.back())
            return upper_.heavy ? 1.0 - upper_.sf(x) : stable_detail::standard_cdf(x, alpha_eff_, beta_);
        const std::size_t i = interval(u);
        const double h = u_[i + 1] - u_[i];
        const double t = (u - u_[i]) / h;
        const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
        const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
        const double v = h00 * cdf_[i] + h10 * h * dcdf_[i] + h01 * cdf_[i + 1] + h11 * h * dcdf_[i + 1];
        return std::clamp(v, 0.0, 1.0);
    }

    /// Half-width of the tabulated range in S0 coordinates.
    double half_width() const noexcept { return half_width_; }

private:
    // One side of the law beyond the table, in side coordinates d > 0.
    struct Side {
        bool heavy = false;
        double alpha = 1.0;
        std::vector<double> coef;  // f(d) = (1/d) sum_k coef[k] d^{-alpha (k+1)}
        double slope = 0.0;        // light side: d log f / du at the table end

        double log_pdf(double d, double du, double log_end) const noexcept {
            if (!heavy) return log_end + slope * std::abs(du);
            const double y = std::pow(d, -alpha);
            double s = 0.0;
            for (std::size_t k = coef.size(); k-- > 0;) s = s * y + coef[k];
            s *= y;
            if (!(s > 0.0)) return std::log(coef.front()) - (alpha + 1.0) * std::log(d);
            return std::log(s) - std::log(d);
        }

        double sf(double d) const noexcept {
            const double y = std::pow(d, -alpha);
            double s = 0.0;
            for (std::size_t k = coef.size(); k-- > 0;) s = s * y + coef[k] / (alpha * (k + 1));
            return std::clamp(s * y, 0.0, 1.0);
        }
    };

    // Beyond the end of a light side the density is either below double range
    // or close to a support edge, where log f dives too fast to extrapolate.
    // Both are rare, so evaluate directly.
    double light_log_pdf(double x, double du, double log_end, double slope) const noexcept {
        try {
            return stable_detail::standard_log_pdf(x, alpha_eff_, beta_);
        } catch (const std::exception&) {
            return log_end + slope * std::abs(du);
        }
    }

    // Index i of the interval [u_i, u_{i+1}] holding u (u inside the table).
    std::size_t interval(double u) const noexcept {
        const std::size_t n = u_.size();
        const std::size_t nc = level_.size();
        const double pos = (u - u_.front()) / base_spacing;
        std::size_t j = pos > 0.0 ? static_cast<std::size_t>(pos) : 0;
        if (j > nc - 1) j = nc - 1;
        const int parts = 1 << level_[j];
        const double t = (pos - static_cast<double>(j)) * parts;
        std::size_t sub = t > 0.0 ? static_cast<std::size_t>(t) : 0;
        if (sub > static_cast<std::size_t>(parts - 1)) sub = parts - 1;
        std::size_t i = offset_[j] + sub;
        if (i > n - 2) i = n - 2;
        // Guard against rounding in the divisions.
        while (i > 0 && u < u_[i]) --i;
        while (i + 2 < n && u > u_[i + 1]) ++i;
        return i;
    }

    // Series coefficients for the side whose skewness (seen from that side) is b;
    // empty when the series does not converge at side distance d.
    static std::vector<double> series_coefficients(double a, double b, double d) {
        using stable_detail::pi;
        const double ha = pi * a / 2.0;
        if (a == 1.0) return {(1.0 + b) / pi};
        const std::complex<double> z(std::cos(ha) - b * std::sin(ha) * std::tan(ha),
                                     std::sin(ha) * (1.0 + b));
        std::vector<double> coef;
        std::complex<double> zk = 1.0;
        const double y = std::pow(d, -a);
        double sum = 0.0, prev = std::numeric_limits<double>::infinity(), max_term = 0.0;
        for (int k = 1; k <= 60; ++k) {
            zk *= z;
            const double lg = std::lgamma(k * a + 1.0) - std::lgamma(k + 1.0);
            const double mag = std::abs(zk) * std::exp(lg) * std::pow(y, k);
            if (k > 2 && mag > prev) return {};
            const double sign = (k % 2 == 1) ? 1.0 : -1.0;
            coef.push_back(sign * zk.imag() * std::exp(lg) / pi);
            sum += coef.back() * std::pow(y, k);
            prev = mag;
            max_term = std::max(max_term, std::abs(coef.back()) * std::pow(y, k));
            if (k > 1 && mag < 1e-15 * std::abs(sum))
                return max_term < 1e3 * sum ? coef : std::vector<double>{};
        }
        return {};
    }

    struct Node {
        double logf, cdf;
    };

    Node evaluate(double u) const {
        const double x = scale_ * std::sinh(u) - zeta_;
        Node node{stable_detail::standard_log_pdf(x, alpha_eff_, beta_), 0.0};
        if (!(node.logf > -745.0)) node.logf = -745.0;
        if (has_cdf_) node.cdf = stable_detail::standard_cdf(x, alpha_eff_, beta_);
        return node;
    }

    // Predicted spline error on each coarse interval, from fourth differences
    // of the coarse values. Far below the body only a loose relative error
    // is required.
    static std::vector<double> coarse_errors(const std::vector<double>& v) {
        const std::size_t n = v.size();
        std::vector<double> err(n - 1, 0.0);
        if (n < 5) return err;
        std::vector<double> d4(n - 4);
        for (std::size_t k = 0; k + 4 < n; ++k)
            d4[k] = 5.0 / 384.0 * std::abs(v[k] - 4 * v[k + 1] + 6 * v[k + 2] - 4 * v[k + 3] + v[k + 4]);
        for (std::size_t j = 0; j + 1 < n; ++j) {
            const double level = std::max(v[j], v[j + 1]);
            if (level < -200.0) continue;
            // Windows whose middle three nodes contain the interval.
            const std::size_t lo = std::min(j >= 2 ? j - 2 : 0, n - 5);
            const std::size_t hi = std::min(j, n - 5);
            for (std::size_t k = lo; k <= hi; ++k) err[j] = std::max(err[j], d4[k]);
            err[j] /= std::max(1.0, -level / 50.0);
        }
        return err;
    }

    void tabulate(double coverage) {
        using namespace stable_detail;
        const double a = alpha_eff_;
        const double b = beta_;
        zeta_ = s0_offset(a, b);
        // Width of the central peak, which narrows sharply as alpha falls below 1.
        scale_ = std::min(1.0, std::sqrt(std::tgamma(1.0 / a) / std::tgamma(3.0 / a)));
        const double c_up = tail_constant(a, b, true);
        const double c_lo = tail_constant(a, b, false);
        const double mass_each = 0.5 * (1.0 - coverage);
        const bool heavy_up = c_up > 0.0, heavy_lo = c_lo > 0.0;

        double L = std::max(40.0, 4.0 * std::abs(zeta_));
        if (a == 1.0) L = std::max(L, unit_tail_switch);
        std::vector<double> coef_up, coef_lo;
        for (int iter = 0; iter < 60; ++iter) {
            bool ok = true;
            if (heavy_up) {
                coef_up = series_coefficients(a, b, L - zeta_);
                ok = ok && !coef_up.empty() && c_up / a * std::pow(L - zeta_, -a) <= mass_each;
            }
            if (heavy_lo) {
                coef_lo = series_coefficients(a, -b, L + zeta_);
                ok = ok && !coef_lo.empty() && c_lo / a * std::pow(L + zeta_, -a) <= mass_each;
            }
            if (ok || L > 1e15) break;
            L *= 2.0;
        }
        if (heavy_up && coef_up.empty()) coef_up = {c_up};
        if (heavy_lo && coef_lo.empty()) coef_lo = {c_lo};
        half_width_ = L;

        const double u_max = std::asinh(L / scale_);
        const long k_max = static_cast<long>(std::ceil(u_max / base_spacing));
        // Walk outward from the centre so light sides stop once the density
        // has underflowed.
        std::vector<Node> right, left;
        for (long k = 0; k <= k_max; ++k) {
            right.push_back(evaluate(base_spacing * static_cast<double>(k)));
            if (!(right.back().logf > -745.0)) break;
        }
        if (!(right.front().logf > -745.0))
            throw NumericalError("build_density_grid: density underflows at the centre");
        for (long k = 1; k <= k_max; ++k) {
            left.push_back(evaluate(-base_spacing * static_cast<double>(k)));
            if (!(left.back().logf > -745.0)) break;
        }
        const bool right_full = static_cast<long>(right.size()) == k_max + 1 && right.back().logf > -745.0;
        const bool left_full = static_cast<long>(left.size()) == k_max && left.back().logf > -745.0;
        if (!right_full) right.pop_back();
        if (!left_full && !left.empty()) left.pop_back();
        // A light side that stops well above underflow ends at a support edge;
        // leave its last two intervals to direct evaluation.
        if (!right_full && right.size() > 4 && right.back().logf > -700.0) right.resize(right.size() - 2);
        if (!left_full && left.size() > 4 && left.back().logf > -700.0) left.resize(left.size() - 2);

        std::vector<Node> coarse(left.rbegin(), left.rend());
        coarse.insert(coarse.end(), right.begin(), right.end());
        const std::size_t nc = coarse.size();
        if (nc < 4) throw NumericalError("build_density_grid: degenerate table");
        const double u0 = -base_spacing * static_cast<double>(left.size());
        std::vector<double> cv(nc);
        for (std::size_t j = 0; j < nc; ++j) cv[j] = coarse[j].logf;
        const auto err = coarse_errors(cv);

        level_.assign(nc - 1, 0);
        offset_.assign(nc - 1, 0);
        u_.clear();
        logf_.clear();
        cdf_.clear();
        auto push = [&](double u, const Node& node) {
            u_.push_back(u);
            logf_.push_back(node.logf);
            if (has_cdf_) cdf_.push_back(node.cdf);
        };
        for (std::size_t j = 0; j + 1 < nc; ++j) {
            int lvl = 0;
            while (lvl < max_split_level && err[j] / std::pow(16.0, lvl) > target_error) ++lvl;
            // Differences lag behind the dive towards a support edge.
            const bool edge = (!left_full && j < 3) || (!right_full && j + 4 >= nc);
            if (edge && std::max(cv[j], cv[j + 1]) > -200.0) lvl = max_split_level;
            level_[j] = lvl;
            offset_[j] = u_.size();
            const double uj = u0 + base_spacing * static_cast<double>(j);
            push(uj, coarse[j]);
            const int parts = 1 << lvl;
            for (int q = 1; q < parts; ++q) {
                const double u = uj + base_spacing * q / parts;
                push(u, evaluate(u));
            }
        }
        push(u0 + base_spacing * static_cast<double>(nc - 1), coarse.back());
        const std::size_t n = u_.size();
        if (has_cdf_) {
            dcdf_.resize(n);
            for (std::size_t k = 0; k < n; ++k) dcdf_[k] = std::exp(logf_[k]) * scale_ * std::cosh(u_[k]);
        }
        solve_spline();

        upper_.alpha = lower_.alpha = a;
        upper_.heavy = heavy_up && right_full;
        lower_.heavy = heavy_lo && left_full;
        upper_.coef = coef_up;
        lower_.coef = coef_lo;
        upper_.slope = std::min(0.0, (logf_[n - 1] - logf_[n - 2]) / (u_[n - 1] - u_[n - 2]));
        lower_.slope = std::min(0.0, (logf_[0] - logf_[1]) / (u_[1] - u_[0]));
    }

    void solve_spline() {
        const std::size_t n = logf_.size();
        m_.assign(n, 0.0);
        std::vector<double> c(n, 0.0), d(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h0 = u_[i] - u_[i - 1];
            const double h1 = u_[i + 1] - u_[i];
            const double rhs = 6.0 * ((logf_[i + 1] - logf_[i]) / h1 - (logf_[i] - logf_[i - 1]) / h0);
            const double denom = 2.0 * (h0 + h1) - h0 * c[i - 1];
            c[i] = h1 / denom;
            d[i] = (rhs - h0 * d[i - 1]) / denom;
        }
        for (std::size_t i = n - 2; i >= 1; --i) m_[i] = d[i] - c[i] * m_[i + 1];
    }

    Kind kind_ = Kind::gaussian;
    double alpha_ = 2.0, beta_ = 0.0, alpha_eff_ = 2.0;
    bool has_cdf_ = false;
    double zeta_ = 0.0;
    double scale_ = 1.0;
    double half_width_ = 0.0;
    std::vector<int> level_;            // split level per coarse interval
    std::vector<std::size_t> offset_;   // first fine node of each coarse interval
    std::vector<double> u_, logf_, m_, cdf_, dcdf_;
    Side upper_, lower_;
};

inline DensityGrid build_density_grid(double alpha, double beta, double coverage = 1.0 - 1e-6) {
    return DensityGrid::build(alpha, beta, coverage, false);
}

/// Small thread-safe LRU of grids keyed on the exact (alpha, beta) pair.
class DensityGridCache {
public:
    explicit DensityGridCache(std::size_t capacity = 16) : capacity_(capacity) {}

    std::shared_ptr<const DensityGrid> get(double alpha, double beta, bool with_cdf = false) {
        {
            std::lock_guard lock(mutex_);
            for (auto it = entries_.begin(); it != entries_.end(); ++it) {
                if (it->alpha == alpha && it->beta == beta && (!with_cdf || it->grid->has_cdf())) {
                    entries_.splice(entries_.begin(), entries_, it);
                    return entries_.front().grid;
                }
            }
        }
        auto grid =
            std::make_shared<const DensityGrid>(DensityGrid::build(alpha, beta, 1.0 - 1e-6, with_cdf));
        std::lock_guard lock(mutex_);
        entries_.push_front({alpha, beta, grid});
        if (entries_.size() > capacity_) entries_.pop_back();
        return grid;
    }

private:
    struct Entry {
        double alpha, beta;
        std::shared_ptr<const DensityGrid> grid;
    };
    std::size_t capacity_;
    std::mutex mutex_;
    std::list<Entry> entries_;
};

}  // namespace levymle
