#pragma once

// Maximum-likelihood fitting. Parameters are searched in unbounded
// coordinates; curvature is measured in original coordinates. Every
// parameter enters exactly one dimension's likelihood factor, so the search
// and the information matrix split into independent per-dimension blocks.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "levymle/errors.hpp"
#include "levymle/likelihood.hpp"
#include "levymle/models.hpp"
#include "levymle/optimize.hpp"
#include "levymle/rng.hpp"
#include "levymle/spline.hpp"
#include "levymle/timeseries.hpp"

namespace levymle {

struct FitOptions {
    double tolerance = 1e-8;
    std::size_t max_iterations = 0;  ///< 0: 2000 * (parameters in the block)
    std::size_t multistart = 1;
    std::uint64_t seed = 1;
    /// Truncation for the two-pass fit: explicit per-coordinate bounds, or
    /// empirical quantiles when no bounds are given.
    bool truncate = false;
    double quantile_lo = 0.005;
    double quantile_hi = 0.995;
    std::vector<std::pair<double, double>> bounds;
    bool initialize = true;
    std::map<std::string, double> init_overrides;
    double hessian_rel_step = 1e-4;
    double hessian_min_step = 1e-4;
    unsigned threads = 1;

    void validate() const {
        if (!(quantile_lo >= 0.0 && quantile_lo < quantile_hi && quantile_hi <= 1.0))
            throw ConfigError("fit options: truncation quantiles must satisfy 0 <= lo < hi <= 1");
        if (multistart < 1) throw ConfigError("fit options: multistart must be at least 1");
        if (!(tolerance > 0.0)) throw ConfigError("fit options: tolerance must be positive");
        if (!(hessian_rel_step > 0.0 && hessian_min_step > 0.0))
            throw ConfigError("fit options: Hessian steps must be positive");
        for (const auto& [lo, hi] : bounds)
            if (!(lo < hi)) throw ConfigError("fit options: truncation bounds must satisfy lo < hi");
    }
};

struct FitResult {
    ModelSpec model;                   ///< template with the estimates written in
    std::vector<std::string> names;    ///< free parameters, table order
    std::vector<std::size_t> index;    ///< their positions in model.params
    std::vector<double> estimates;
    std::vector<double> std_errors;    ///< NaN where the covariance diagonal is negative
    double loglik = 0.0;
    Eigen::MatrixXd observed_information;
    Eigen::MatrixXd covariance;
    bool converged = false;
    std::size_t n_objective_calls = 0;
    std::vector<std::string> notes;

    // Two-pass bookkeeping.
    bool two_pass = false;
    std::optional<double> loglik_pass1;  ///< masked log-likelihood at the pass-1 optimum
    std::optional<double> loglik_pass2;  ///< full log-likelihood after the (alpha, beta) refit
    std::vector<std::pair<double, double>> truncation;
    std::size_t transitions_used = 0;
    std::size_t transitions_total = 0;

    std::optional<std::size_t> position(const std::string& name) const {
        for (std::size_t k = 0; k < names.size(); ++k)
            if (names[k] == name) return k;
        return std::nullopt;
    }
};

namespace estimate_detail {

inline bool is_stable_param(const ModelSpec& m, std::size_t k) {
    for (const auto& d : m.dims)
        if (d.alpha == k || d.beta == k) return true;
    return false;
}

// Indices of parameters referenced by dimension i.
inline std::vector<std::size_t> referenced(const ModelSpec& m, std::size_t i) {
    const auto& d = m.dims[i];
    std::vector<std::size_t> r;
    switch (d.drift.kind) {
        case DriftKind::polynomial:
            for (const auto& t : d.drift.terms) r.push_back(t.param);
            break;
        case DriftKind::lotka_volterra:
            r.push_back(d.drift.rate);
            r.insert(r.end(), d.drift.interaction.begin(), d.drift.interaction.end());
            break;
        case DriftKind::spline: r.insert(r.end(), d.drift.ordinates.begin(), d.drift.ordinates.end()); break;
    }
    switch (d.noise.kind) {
        case NoiseKind::constant: r.push_back(d.noise.level); break;
        case NoiseKind::polynomial:
            for (const auto& t : d.noise.terms) r.push_back(t.param);
            break;
        case NoiseKind::spline: r.insert(r.end(), d.noise.ordinates.begin(), d.noise.ordinates.end()); break;
    }
    r.push_back(d.alpha);
    r.push_back(d.beta);
    return r;
}

// True when every parameter is referenced only by the dimension it claims.
inline bool separable(const ModelSpec& m) {
    std::vector<int> owner(m.params.size(), -1);
    for (std::size_t i = 0; i < m.dims.size(); ++i)
        for (auto k : referenced(m, i)) {
            if (owner[k] >= 0 && owner[k] != static_cast<int>(i)) return false;
            owner[k] = static_cast<int>(i);
        }
    for (std::size_t k = 0; k < m.params.size(); ++k)
        if (owner[k] >= 0 && owner[k] != m.params[k].dimension) return false;
    return true;
}

inline double monomial(const std::vector<int>& powers, std::span<const double> x) {
    double v = 1.0;
    for (std::size_t j = 0; j < x.size(); ++j)
        for (int k = 0; k < powers[j]; ++k) v *= x[j];
    return v;
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t h = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<long>(h), v.end());
    double m = v[h];
    if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<long>(h)));
    return m;
}

// Least squares with a rank check; the columns of X are basis functions.
inline Eigen::VectorXd least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::size_t dim) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < X.cols())
        throw ConfigError("initialization: drift basis of dimension " + std::to_string(dim + 1) +
                          " is rank deficient on these data (rank " + std::to_string(qr.rank()) + " of " +
                          std::to_string(X.cols()) + "); use fewer drift parameters");
    return qr.solve(y);
}

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace estimate_detail

/// Starting values: drift by least squares of the increments divided by delta
/// on the drift basis, noise from the median absolute increment, alpha = 1.8,
/// beta = 0. Only free parameters change. `mask` restricts the regression rows.
inline ModelSpec initialize_params(const TimeSeries& ts, const ModelSpec& tmpl, const std::vector<char>* mask = nullptr) {
    using namespace estimate_detail;
    ts.validate();
    tmpl.validate();
    if (ts.dim != tmpl.dimension()) throw ConfigError("initialization: series and model dimensions differ");
    const std::size_t n = ts.size() - 1;
    if (ts.size() < 10 * std::max<std::size_t>(1, tmpl.free_count()))
        throw DataError("initialization: " + std::to_string(ts.size()) + " observations are fewer than 10 per free parameter");
    constexpr double alpha0 = 1.8;
    ModelSpec m = tmpl;
    std::vector<std::size_t> rows;
    for (std::size_t t = 0; t < n; ++t)
        if (!mask || (*mask)[t]) rows.push_back(t);
    if (rows.empty()) throw DataError("initialization: no transitions selected");
    const std::size_t nr = rows.size();

    for (std::size_t i = 0; i < m.dims.size(); ++i) {
        auto& dm = m.dims[i];
        Eigen::VectorXd y(nr);
        for (std::size_t r = 0; r < nr; ++r) y(r) = (ts.at(rows[r] + 1, i) - ts.at(rows[r], i)) / ts.delta;

        switch (dm.drift.kind) {
            case DriftKind::polynomial: {
                std::vector<const Term*> free;
                for (const auto& t : dm.drift.terms) {
                    if (m.params[t.param].free) {
                        free.push_back(&t);
                    } else {
                        for (std::size_t r = 0; r < nr; ++r)
                            y(r) -= t.sign * m.params[t.param].value * monomial(t.powers, ts.row(rows[r]));
                    }
                }
                if (free.empty()) break;
                Eigen::MatrixXd X(nr, free.size());
                for (std::size_t r = 0; r < nr; ++r)
                    for (std::size_t c = 0; c < free.size(); ++c)
                        X(r, c) = free[c]->sign * monomial(free[c]->powers, ts.row(rows[r]));
                const Eigen::VectorXd b = least_squares(X, y, i);
                for (std::size_t c = 0; c < free.size(); ++c) m.params[free[c]->param].value = b(c);
                break;
            }
            case DriftKind::spline: {
                const std::size_t k = dm.drift.knots.size();
                std::vector<std::size_t> free;
                for (std::size_t j = 0; j < k; ++j)
                    if (m.params[dm.drift.ordinates[j]].free) free.push_back(j);
                if (free.empty()) break;
                // The spline is linear in its ordinates: column j is the spline through e_j.
                std::vector<NaturalCubicSpline> basis;
                for (std::size_t j = 0; j < k; ++j) {
                    std::vector<double> e(k, 0.0);
                    e[j] = 1.0;
                    basis.emplace_back(dm.drift.knots, e);
                }
                Eigen::MatrixXd X(nr, free.size());
                for (std::size_t r = 0; r < nr; ++r) {
                    const double x = ts.at(rows[r], 0);
                    for (std::size_t j = 0; j < k; ++j) {
                        const double bj = basis[j](x);
                        if (!m.params[dm.drift.ordinates[j]].free) y(r) -= m.params[dm.drift.ordinates[j]].value * bj;
                    }
                    for (std::size_t c = 0; c < free.size(); ++c) X(r, c) = basis[free[c]](x);
                }
                const Eigen::VectorXd b = least_squares(X, y, i);
                for (std::size_t c = 0; c < free.size(); ++c) m.params[dm.drift.ordinates[free[c]]].value = b(c);
                break;
            }
            case DriftKind::lotka_volterra: {
                // r x_i - sum_j (r a_ij) x_i x_j is linear in (r, r a_i.).
                const std::size_t d = m.dims.size();
                const bool r_free = m.params[dm.drift.rate].free;
                const bool all_free = std::all_of(dm.drift.interaction.begin(), dm.drift.interaction.end(),
                                                  [&](std::size_t k) { return m.params[k].free; });
                if (r_free && all_free) {
                    Eigen::MatrixXd X(nr, d + 1);
                    for (std::size_t r = 0; r < nr; ++r) {
                        const auto x = ts.row(rows[r]);
                        X(r, 0) = x[i];
                        for (std::size_t j = 0; j < d; ++j) X(r, j + 1) = -x[i] * x[j];
                    }
                    const Eigen::VectorXd b = least_squares(X, y, i);
                    if (b(0) == 0.0) throw ConfigError("initialization: zero growth rate estimate");
                    m.params[dm.drift.rate].value = b(0);
                    for (std::size_t j = 0; j < d; ++j) m.params[dm.drift.interaction[j]].value = b(j + 1) / b(0);
                } else if (!r_free) {
                    const double rate = m.params[dm.drift.rate].value;
                    std::vector<std::size_t> free;
                    for (std::size_t j = 0; j < d; ++j)
                        if (m.params[dm.drift.interaction[j]].free) free.push_back(j);
                    if (free.empty()) break;
                    Eigen::MatrixXd X(nr, free.size());
                    for (std::size_t r = 0; r < nr; ++r) {
                        const auto x = ts.row(rows[r]);
                        y(r) -= rate * x[i];
                        for (std::size_t j = 0; j < d; ++j)
                            if (!m.params[dm.drift.interaction[j]].free)
                                y(r) += rate * m.params[dm.drift.interaction[j]].value * x[i] * x[j];
                        for (std::size_t c = 0; c < free.size(); ++c) X(r, c) = -rate * x[i] * x[free[c]];
                    }
                    const Eigen::VectorXd b = least_squares(X, y, i);
                    for (std::size_t c = 0; c < free.size(); ++c) m.params[dm.drift.interaction[free[c]]].value = b(c);
                }
                // Free rate with some interactions frozen: keep the template values.
                break;
            }
        }

        std::vector<double> inc(nr);
        for (std::size_t r = 0; r < nr; ++r) inc[r] = std::abs(ts.at(rows[r] + 1, i) - ts.at(rows[r], i));
        double s0 = median(inc) / std::pow(ts.delta, 1.0 / alpha0);
        if (!(s0 > 0.0)) s0 = 1.0;
        switch (dm.noise.kind) {
            case NoiseKind::constant:
                if (m.params[dm.noise.level].free) m.params[dm.noise.level].value = s0;
                break;
            case NoiseKind::spline:
                for (auto k : dm.noise.ordinates)
                    if (m.params[k].free) m.params[k].value = s0;
                break;
            case NoiseKind::polynomial:
                for (const auto& t : dm.noise.terms) {
                    if (!m.params[t.param].free) continue;
                    const bool constant = std::all_of(t.powers.begin(), t.powers.end(), [](int p) { return p == 0; });
                    m.params[t.param].value = constant ? std::log(s0) / t.sign : 0.0;
                }
                break;
        }
        if (m.params[dm.alpha].free) m.params[dm.alpha].value = alpha0;
        if (m.params[dm.beta].free) m.params[dm.beta].value = 0.0;
    }
    return m;
}

namespace estimate_detail {

// One optimisation block: the free parameters and the likelihood they enter.
struct Block {
    std::vector<std::size_t> params;  // positions in ModelSpec::params
    std::optional<std::size_t> dim;   // nullopt: the full likelihood
};

inline std::vector<Block> make_blocks(const ModelSpec& m, const std::vector<std::size_t>& free) {
    if (!separable(m) || m.dims.size() == 1) return {Block{free, m.dims.size() == 1 ? std::optional<std::size_t>(0) : std::nullopt}};
    std::vector<Block> blocks(m.dims.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].dim = i;
    for (auto k : free) blocks[static_cast<std::size_t>(m.params[k].dimension)].params.push_back(k);
    std::erase_if(blocks, [](const Block& b) { return b.params.empty(); });
    return blocks;
}

inline double block_loglik(const LikelihoodEvaluator& ev, const ModelSpec& m, const Block& b) {
    return b.dim ? ev.dimension(m, *b.dim) : ev(m);
}

struct BlockFit {
    std::vector<double> values;  // original coordinates, block order
    double loglik = 0.0;
    bool converged = false;
    std::size_t calls = 0;
};

inline BlockFit fit_block(const LikelihoodEvaluator& ev, const ModelSpec& start, const Block& b, const FitOptions& opts) {
    const std::size_t n = b.params.size();
    std::vector<Transform> tf(n);
    std::vector<double> u0(n), steps(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& p = start.params[b.params[k]];
        tf[k] = p.transform;
        u0[k] = to_unbounded(p.transform, p.value);
        steps[k] = p.transform == Transform::identity ? (p.value != 0.0 ? 0.1 * std::abs(p.value) : 0.05) : 0.1;
    }
    ModelSpec work = start;
    auto objective = [&](const std::vector<double>& u) {
        for (std::size_t k = 0; k < n; ++k) work.params[b.params[k]].value = from_unbounded(tf[k], u[k]);
        try {
            return -block_loglik(ev, work, b);
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    NelderMeadOptions nm;
    nm.tolerance = opts.tolerance;
    nm.max_iterations = opts.max_iterations;

    BlockFit best;
    best.loglik = -std::numeric_limits<double>::infinity();
    CounterRng rng = CounterRng::substream(opts.seed, 0x5157 + (b.dim ? *b.dim : 999));
    for (std::size_t s = 0; s < opts.multistart; ++s) {
        std::vector<double> x0 = u0;
        if (s > 0)
            for (std::size_t k = 0; k < n; ++k) x0[k] += 3.0 * steps[k] * (2.0 * rng.uniform_open() - 1.0);
        NelderMeadResult r;
        try {
            r = nelder_mead(objective, x0, steps, nm);
        } catch (const OptimizationError&) {
            if (s == 0 && opts.multistart == 1) throw;
            continue;
        }
        best.calls += r.evaluations;
        if (-r.f > best.loglik) {
            best.loglik = -r.f;
            best.converged = r.converged;
            best.values.resize(n);
            for (std::size_t k = 0; k < n; ++k) best.values[k] = from_unbounded(tf[k], r.x[k]);
        }
    }
    if (best.values.empty()) throw OptimizationError("fit: every start was rejected by the objective");
    return best;
}

// Runs f(k) for each block, concurrently when threads allow; rethrows the first failure.
template <class F>
void for_blocks(std::size_t count, unsigned threads, F&& f) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t k = 0; k < count; ++k) f(k);
        return;
    }
    std::vector<std::exception_ptr> errors(count);
    {
        std::vector<std::jthread> pool;
        for (std::size_t k = 0; k < count; ++k)
            pool.emplace_back([&, k] {
                try {
                    f(k);
                } catch (...) {
                    errors[k] = std::current_exception();
                }
            });
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace estimate_detail

/// Central-difference Hessian of -loglik over `params` (original coordinates),
/// symmetrized. Steps are h_i = max(min_step, rel_step |theta_i|); a parameter
/// closer than h_i to a closed bound is differenced about a centre moved
/// inside, and reported in `notes`.
inline Eigen::MatrixXd observed_information(const LikelihoodEvaluator& ev, const ModelSpec& model,
                                            const std::vector<std::size_t>& params, std::optional<std::size_t> dim,
                                            const FitOptions& opts, std::vector<std::string>* notes = nullptr,
                                            std::size_t* calls = nullptr) {
    const std::size_t n = params.size();
    std::vector<double> h(n), centre(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& p = model.params[params[k]];
        h[k] = std::max(opts.hessian_min_step, opts.hessian_rel_step * std::abs(p.value));
        centre[k] = p.value;
        if (p.transform == Transform::log) h[k] = std::min(h[k], 0.25 * p.value);
        double hi = std::numeric_limits<double>::infinity(), lo = -hi;
        if (p.transform == Transform::alpha_range) hi = 2.0, lo = alpha_lower;
        if (p.transform == Transform::beta_range) hi = 1.0, lo = -1.0;
        const double margin = p.transform == Transform::alpha_range ? std::max(h[k], 1e-3) : h[k];
        if (centre[k] + margin > hi) {
            centre[k] = hi - margin;
            if (notes)
                notes->push_back(p.name + " lies within " + estimate_detail::fmt(margin) +
                                 " of its upper bound; curvature taken one-sided, about " + estimate_detail::fmt(centre[k]));
        } else if (centre[k] - margin < lo) {
            centre[k] = lo + margin;
            if (notes)
                notes->push_back(p.name + " lies within " + estimate_detail::fmt(margin) +
                                 " of its lower bound; curvature taken one-sided, about " + estimate_detail::fmt(centre[k]));
        }
    }
    ModelSpec work = model;
    std::size_t count = 0;
    auto f = [&](std::initializer_list<std::pair<std::size_t, double>> shift) {
        for (std::size_t k = 0; k < n; ++k) work.params[params[k]].value = centre[k];
        for (auto [k, s] : shift) work.params[params[k]].value = centre[k] + s * h[k];
        ++count;
        return dim ? ev.dimension(work, *dim) : ev(work);
    };
    Eigen::MatrixXd H(n, n);
    const double f0 = f({});
    for (std::size_t i = 0; i < n; ++i) {
        H(i, i) = (f({{i, 1.0}}) - 2.0 * f0 + f({{i, -1.0}})) / (h[i] * h[i]);
        for (std::size_t j = 0; j < i; ++j) {
            const double v = f({{i, 1.0}, {j, 1.0}}) - f({{i, 1.0}, {j, -1.0}}) - f({{i, -1.0}, {j, 1.0}}) +
                             f({{i, -1.0}, {j, -1.0}});
            H(i, j) = H(j, i) = v / (4.0 * h[i] * h[j]);
        }
    }
    if (calls) *calls += count;
    Eigen::MatrixXd F = -H;
    return 0.5 * (F + F.transpose());
}

/// Covariance from an information matrix; falls back to the pseudo-inverse
/// when it is singular or indefinite.
inline Eigen::MatrixXd covariance_from_information(const Eigen::MatrixXd& F, std::vector<std::string>* notes = nullptr) {
    const std::size_t n = static_cast<std::size_t>(F.rows());
    if (n == 0) return F;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(F);
    const Eigen::VectorXd ev = eig.eigenvalues();
    const double top = ev.cwiseAbs().maxCoeff();
    if (ev.minCoeff() > 1e-12 * top) return eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(static_cast<long>(n));
    for (long k = 0; k < ev.size(); ++k)
        if (std::abs(ev(k)) > 1e-12 * top) inv(k) = 1.0 / ev(k);
    if (notes)
        notes->push_back("information matrix is " + std::string(ev.minCoeff() < 0 ? "indefinite" : "singular") +
                         " (smallest eigenvalue " + estimate_detail::fmt(ev.minCoeff()) + "); pseudo-inverse used");
    return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

inline std::vector<double> standard_errors(const Eigen::MatrixXd& cov, const std::vector<std::string>& names,
                                           std::vector<std::string>* notes = nullptr) {
    std::vector<double> se(static_cast<std::size_t>(cov.rows()));
    for (std::size_t k = 0; k < se.size(); ++k) {
        const double v = cov(static_cast<long>(k), static_cast<long>(k));
        if (v >= 0.0) {
            se[k] = std::sqrt(v);
        } else {
            se[k] = std::numeric_limits<double>::quiet_NaN();
            if (notes) notes->push_back("warning: negative variance for " + (k < names.size() ? names[k] : "?") + "; SE undefined");
        }
    }
    return se;
}

namespace estimate_detail {

// Information over all free parameters, block-diagonal when separable.
inline Eigen::MatrixXd information(const LikelihoodEvaluator& ev, const ModelSpec& m, const std::vector<std::size_t>& free,
                                   const FitOptions& opts, std::vector<std::string>& notes, std::size_t& calls) {
    const auto blocks = make_blocks(m, free);
    const std::size_t n = free.size();
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(static_cast<long>(n), static_cast<long>(n));
    std::vector<Eigen::MatrixXd> parts(blocks.size());
    std::vector<std::vector<std::string>> block_notes(blocks.size());
    std::vector<std::size_t> block_calls(blocks.size(), 0);
    for_blocks(blocks.size(), opts.threads, [&](std::size_t b) {
        parts[b] = observed_information(ev, m, blocks[b].params, blocks[b].dim, opts, &block_notes[b], &block_calls[b]);
    });
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        std::vector<long> pos;
        for (auto k : blocks[b].params)
            pos.push_back(static_cast<long>(std::find(free.begin(), free.end(), k) - free.begin()));
        for (std::size_t r = 0; r < pos.size(); ++r)
            for (std::size_t c = 0; c < pos.size(); ++c)
                F(pos[r], pos[c]) = parts[b](static_cast<long>(r), static_cast<long>(c));
        notes.insert(notes.end(), block_notes[b].begin(), block_notes[b].end());
        calls += block_calls[b];
    }
    return F;
}

inline FitResult fit_with_mask(const TimeSeries& ts, const ModelSpec& tmpl, const FitOptions& opts,
                               const std::optional<std::vector<char>>& mask, bool initialize,
                               bool with_information = true) {
    opts.validate();
    ts.validate();
    tmpl.validate();
    if (ts.dim != tmpl.dimension()) throw ConfigError("fit: series and model dimensions differ");
    if (tmpl.free_count() == 0) throw ConfigError("fit: the model has no free parameters");

    ModelSpec start = initialize ? initialize_params(ts, tmpl, mask ? &*mask : nullptr) : tmpl;
    for (const auto& [name, value] : opts.init_overrides) {
        const auto k = start.find(name);
        if (!k) throw ConfigError("fit: initial value given for unknown parameter '" + name + "'");
        start.params[*k].value = value;
    }
    start.validate();

    LikelihoodOptions lo;
    lo.threads = std::max(1u, opts.threads);
    LikelihoodEvaluator ev(ts, mask, lo);

    std::vector<std::size_t> free;
    for (std::size_t k = 0; k < start.params.size(); ++k)
        if (start.params[k].free) free.push_back(k);
    const auto blocks = make_blocks(start, free);
    if (blocks.size() > 1) lo.threads = std::max(1u, lo.threads / static_cast<unsigned>(blocks.size()));
    LikelihoodEvaluator block_ev(ts, mask, lo);

    std::vector<BlockFit> fits(blocks.size());
    for_blocks(blocks.size(), opts.threads,
               [&](std::size_t b) { fits[b] = fit_block(blocks.size() > 1 ? block_ev : ev, start, blocks[b], opts); });

    FitResult res;
    res.model = start;
    res.converged = true;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        for (std::size_t k = 0; k < blocks[b].params.size(); ++k) res.model.params[blocks[b].params[k]].value = fits[b].values[k];
        res.converged = res.converged && fits[b].converged;
        res.n_objective_calls += fits[b].calls;
    }
    if (!res.converged) res.notes.push_back("optimizer stopped at the iteration limit before converging");
    res.loglik = ev(res.model);
    res.index = free;
    for (auto k : free) {
        res.names.push_back(res.model.params[k].name);
        res.estimates.push_back(res.model.params[k].value);
    }
    res.transitions_total = ts.size() - 1;
    res.transitions_used = mask ? static_cast<std::size_t>(std::count(mask->begin(), mask->end(), char{1})) : res.transitions_total;

    if (!with_information) return res;
    res.observed_information = information(ev, res.model, free, opts, res.notes, res.n_objective_calls);
    res.covariance = covariance_from_information(res.observed_information, &res.notes);
    res.std_errors = standard_errors(res.covariance, res.names, &res.notes);
    return res;
}

}  // namespace estimate_detail

/// Maximum-likelihood fit of the free parameters of `tmpl`.
inline FitResult fit_mle(const TimeSeries& ts, const ModelSpec& tmpl, const FitOptions& opts = {}) {
    return estimate_detail::fit_with_mask(ts, tmpl, opts, std::nullopt, opts.initialize);
}

/// Per-coordinate truncation bounds: explicit, or the configured empirical quantiles.
inline std::vector<std::pair<double, double>> truncation_bounds(const TimeSeries& ts, const FitOptions& opts) {
    if (!opts.bounds.empty()) {
        if (opts.bounds.size() != ts.dim)
            throw ConfigError("truncation: " + std::to_string(opts.bounds.size()) + " bound pairs for " +
                              std::to_string(ts.dim) + " coordinates");
        return opts.bounds;
    }
    std::vector<std::pair<double, double>> b;
    for (std::size_t i = 0; i < ts.dim; ++i) {
        auto c = ts.column(i);
        std::sort(c.begin(), c.end());
        auto q = [&](double p) {
            const double pos = p * static_cast<double>(c.size() - 1);
            const auto k = static_cast<std::size_t>(pos);
            const double w = pos - static_cast<double>(k);
            return k + 1 < c.size() ? c[k] * (1 - w) + c[k + 1] * w : c.back();
        };
        b.emplace_back(q(opts.quantile_lo), q(opts.quantile_hi));
    }
    return b;
}

/// Transitions whose origin lies inside every coordinate's bounds.
inline std::vector<char> truncation_mask(const TimeSeries& ts, const std::vector<std::pair<double, double>>& bounds) {
    std::vector<char> mask(ts.size() - 1, 1);
    for (std::size_t t = 0; t + 1 < ts.size(); ++t)
        for (std::size_t i = 0; i < ts.dim; ++i)
            if (ts.at(t, i) < bounds[i].first || ts.at(t, i) > bounds[i].second) mask[t] = 0;
    return mask;
}

/// Pass 1 fits every free parameter on transitions starting inside the
/// truncation domain. Pass 2 freezes drift and noise and refits (alpha, beta)
/// on all transitions. Drift and noise standard errors come from the
/// truncated-data information at the final estimates, those of (alpha, beta)
/// from the full-data information over all free parameters.
inline FitResult two_pass_fit(const TimeSeries& ts, const ModelSpec& tmpl, const FitOptions& opts = {}) {
    using namespace estimate_detail;
    opts.validate();
    ts.validate();
    const auto bounds = truncation_bounds(ts, opts);
    const auto mask = truncation_mask(ts, bounds);
    const std::size_t total = mask.size();
    const std::size_t used = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), char{1}));
    if (static_cast<double>(used) < 0.05 * static_cast<double>(total))
        throw ConfigError("two-pass fit: truncation keeps only " + std::to_string(used) + " of " + std::to_string(total) +
                          " transitions (below 5%)");

    FitResult r1 = fit_with_mask(ts, tmpl, opts, mask, opts.initialize, false);
    FitResult res = r1;
    res.two_pass = true;
    res.truncation = bounds;
    res.transitions_used = used;
    res.transitions_total = total;
    res.loglik_pass1 = r1.loglik;

    ModelSpec t2 = r1.model;
    bool any = false;
    for (std::size_t k = 0; k < t2.params.size(); ++k) {
        const bool keep = t2.params[k].free && is_stable_param(t2, k);
        t2.params[k].free = keep;
        any = any || keep;
    }
    FitResult r2;
    if (any) {
        FitOptions o2 = opts;
        o2.init_overrides.clear();
        r2 = fit_with_mask(ts, t2, o2, std::nullopt, false, false);
        res.model = r2.model;
        res.loglik = r2.loglik;
        res.converged = r1.converged && r2.converged;
        res.n_objective_calls = r1.n_objective_calls + r2.n_objective_calls;
        for (std::size_t k = 0; k < res.index.size(); ++k) res.estimates[k] = res.model.params[res.index[k]].value;
    } else {
        LikelihoodEvaluator full(ts, std::nullopt, LikelihoodOptions{std::max(1u, opts.threads)});
        res.loglik = full(res.model);
    }
    res.loglik_pass2 = res.loglik;

    // Drift and noise curvature on the truncated data at the final estimates.
    LikelihoodEvaluator masked(ts, mask, LikelihoodOptions{std::max(1u, opts.threads)});
    std::vector<std::string> notes;
    res.observed_information = information(masked, res.model, res.index, opts, notes, res.n_objective_calls);
    res.covariance = covariance_from_information(res.observed_information, &notes);
    res.std_errors = standard_errors(res.covariance, res.names, &notes);
    // Index and skewness: full-data information over every free parameter, so
    // their correlation with the noise level is accounted for.
    if (any) {
        LikelihoodEvaluator full(ts, std::nullopt, LikelihoodOptions{std::max(1u, opts.threads)});
        std::vector<std::string> full_notes;
        const auto info = information(full, res.model, res.index, opts, full_notes, res.n_objective_calls);
        const auto se = standard_errors(covariance_from_information(info, &full_notes), res.names, &full_notes);
        for (std::size_t k = 0; k < res.index.size(); ++k)
            if (is_stable_param(res.model, res.index[k])) res.std_errors[k] = se[k];
        for (auto& n : full_notes) notes.push_back("full data: " + n);
    }
    res.notes = r1.notes;
    if (static_cast<double>(used) < 0.5 * static_cast<double>(total))
        res.notes.push_back("warning: truncation removes more than half of the transitions");
    for (auto& n : r2.notes) res.notes.push_back("pass 2: " + n);
    res.notes.insert(res.notes.end(), notes.begin(), notes.end());
    if (any) res.notes.push_back("two-pass fit: index and skewness standard errors come from the full-data information");
    else res.notes.push_back("two-pass fit: no free index or skewness parameter, pass 2 skipped");
    return res;
}

}  // namespace levymle
