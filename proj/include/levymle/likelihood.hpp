#pragma once

// Euler transition density of a diagonal-noise system. With
//   eta_i = (x_i(t+1) - x_i(t) - mu_i(X(t)) delta) / (delta^{1/alpha_i} sigma_i(X(t)))
// the transition log-density is
//   sum_i [ log f(eta_i; alpha_i, beta_i) - log sigma_i(X(t)) - log(delta) / alpha_i ],
// the last two terms being the Jacobian det(G)^{-1}.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "levymle/density_grid.hpp"
#include "levymle/errors.hpp"
#include "levymle/models.hpp"
#include "levymle/stable.hpp"
#include "levymle/timeseries.hpp"

namespace levymle {

/// Standardized innovations, (N-1) x d row-major, with a per-row inclusion mask.
struct Residuals {
    std::size_t dim = 1;
    std::vector<double> eta;
    std::vector<char> mask;

    std::size_t size() const noexcept { return mask.size(); }
    std::size_t included() const noexcept {
        return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), char{1}));
    }
    double at(std::size_t t, std::size_t i) const noexcept { return eta[t * dim + i]; }

    /// Included residuals of dimension i.
    std::vector<double> column(std::size_t i) const {
        std::vector<double> c;
        c.reserve(size());
        for (std::size_t t = 0; t < size(); ++t)
            if (mask[t]) c.push_back(at(t, i));
        return c;
    }
};

namespace likelihood_detail {

inline void check_inputs(const TimeSeries& ts, const ModelSpec& model, const std::vector<char>* mask) {
    ts.validate();
    model.validate();
    if (ts.dim != model.dimension())
        throw ConfigError("likelihood: series has " + std::to_string(ts.dim) + " columns, model has " +
                          std::to_string(model.dimension()) + " dimensions");
    if (mask && mask->size() != ts.size() - 1)
        throw ConfigError("likelihood: mask length " + std::to_string(mask->size()) + " does not match " +
                          std::to_string(ts.size() - 1) + " transitions");
}

inline double residual(const CompiledModel& m, const TimeSeries& ts, std::size_t t, std::size_t i,
                       double scale_i) noexcept {
    const auto x = ts.row(t);
    return (ts.at(t + 1, i) - x[i] - m.drift(x, i) * ts.delta) / (scale_i * m.noise(x, i));
}

// Runs body(chunk) for chunk in [0, count) on up to `threads` workers.
template <class Body>
void parallel_chunks(std::size_t count, unsigned threads, Body&& body) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), count));
    if (workers <= 1) {
        for (std::size_t c = 0; c < count; ++c) body(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto run = [&] {
        for (std::size_t c = next++; c < count; c = next++) body(c);
    };
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
}

}  // namespace likelihood_detail

inline Residuals compute_residuals(const TimeSeries& ts, const ModelSpec& model,
                                   const std::vector<char>* mask = nullptr) {
    likelihood_detail::check_inputs(ts, model, mask);
    CompiledModel m(model);
    const std::size_t n = ts.size() - 1, d = ts.dim;
    Residuals r;
    r.dim = d;
    r.eta.resize(n * d);
    r.mask = mask ? *mask : std::vector<char>(n, 1);
    for (std::size_t i = 0; i < d; ++i) {
        const double scale = std::pow(ts.delta, 1.0 / model.params[model.dims[i].alpha].value);
        for (std::size_t t = 0; t < n; ++t) {
            const double e = likelihood_detail::residual(m, ts, t, i, scale);
            if (!std::isfinite(e))
                throw NumericalError("residuals: non-finite innovation at row " + std::to_string(t + 1) +
                                     ", dimension " + std::to_string(i + 1));
            r.eta[t * d + i] = e;
        }
    }
    return r;
}

/// log p(x_next | x_curr), evaluated with the direct stable density.
inline double transition_log_density(std::span<const double> x_next, std::span<const double> x_curr,
                                     const ModelSpec& model, double delta) {
    model.validate();
    if (x_next.size() != model.dimension() || x_curr.size() != model.dimension())
        throw ConfigError("transition_log_density: states must have one entry per dimension");
    if (!(delta > 0.0)) throw ConfigError("transition_log_density: delta must be positive");
    CompiledModel m(model);
    double s = 0.0;
    for (std::size_t i = 0; i < x_curr.size(); ++i) {
        const double a = model.params[model.dims[i].alpha].value;
        const double sigma = m.noise(x_curr, i);
        const double eta = (x_next[i] - x_curr[i] - m.drift(x_curr, i) * delta) / (std::pow(delta, 1.0 / a) * sigma);
        s += stable_log_pdf(eta, model.stable(i)) - std::log(sigma) - std::log(delta) / a;
    }
    return s;
}

struct LikelihoodOptions {
    unsigned threads = 1;
    /// Transitions per partial sum. Fixed so the total does not depend on `threads`.
    std::size_t chunk = 4096;
    /// Lower bound on any single log-density term.
    double floor = -1e8;
};

/// Path log-likelihood of one series under varying models. Grids are shared
/// through a cache keyed on (alpha, beta).
class LikelihoodEvaluator {
public:
    LikelihoodEvaluator(const TimeSeries& ts, std::optional<std::vector<char>> mask = std::nullopt,
                        LikelihoodOptions opts = {}, std::shared_ptr<DensityGridCache> cache = nullptr)
        : ts_(&ts), mask_(std::move(mask)), opts_(opts),
          cache_(cache ? std::move(cache) : std::make_shared<DensityGridCache>()) {
        ts.validate();
        if (mask_) {
            if (mask_->size() != ts.size() - 1)
                throw ConfigError("likelihood: mask length " + std::to_string(mask_->size()) +
                                  " does not match " + std::to_string(ts.size() - 1) + " transitions");
            if (std::none_of(mask_->begin(), mask_->end(), [](char c) { return c != 0; }))
                throw DataError("likelihood: the mask excludes every transition");
        }
    }

    const TimeSeries& series() const noexcept { return *ts_; }
    const std::optional<std::vector<char>>& mask() const noexcept { return mask_; }
    const LikelihoodOptions& options() const noexcept { return opts_; }

    /// Contribution of dimension i.
    double dimension(const ModelSpec& model, std::size_t i) const {
        const CompiledModel m(model);
        return dimension(m, i);
    }

    double dimension(const CompiledModel& m, std::size_t i) const {
        const auto& model = m.spec();
        const double a = model.params[model.dims[i].alpha].value;
        const double b = model.params[model.dims[i].beta].value;
        StableParams::standard(a, b).validate();
        const auto grid = cache_->get(a, b);
        const double scale = std::pow(ts_->delta, 1.0 / a);
        const double jac = std::log(ts_->delta) / a;
        const std::size_t n = ts_->size() - 1;
        const std::size_t chunks = (n + opts_.chunk - 1) / opts_.chunk;
        std::vector<double> partial(chunks, 0.0);
        likelihood_detail::parallel_chunks(chunks, opts_.threads, [&](std::size_t c) {
            const std::size_t lo = c * opts_.chunk, hi = std::min(n, lo + opts_.chunk);
            double s = 0.0;
            for (std::size_t t = lo; t < hi; ++t) {
                if (mask_ && !(*mask_)[t]) continue;
                const auto x = ts_->row(t);
                const double sigma = m.noise(x, i);
                const double eta = (ts_->at(t + 1, i) - x[i] - m.drift(x, i) * ts_->delta) / (scale * sigma);
                double lf = std::isfinite(eta) ? grid->log_pdf(eta) : opts_.floor;
                if (!(lf >= opts_.floor)) lf = opts_.floor;
                s += lf - std::log(sigma) - jac;
            }
            partial[c] = s;
        });
        double total = 0.0;
        for (double p : partial) total += p;
        return total;
    }

    double operator()(const ModelSpec& model) const {
        if (model.dimension() != ts_->dim)
            throw ConfigError("likelihood: series has " + std::to_string(ts_->dim) + " columns, model has " +
                              std::to_string(model.dimension()) + " dimensions");
        const CompiledModel m(model);
        double total = 0.0;
        for (std::size_t i = 0; i < model.dimension(); ++i) total += dimension(m, i);
        return total;
    }

private:
    const TimeSeries* ts_;
    std::optional<std::vector<char>> mask_;
    LikelihoodOptions opts_;
    std::shared_ptr<DensityGridCache> cache_;
};

/// Sum of transition log-densities over the included transitions; the
/// unconditional density of the first observation is ignored.
inline double log_likelihood(const TimeSeries& ts, const ModelSpec& model, const std::vector<char>* mask = nullptr,
                             LikelihoodOptions opts = {}) {
    likelihood_detail::check_inputs(ts, model, mask);
    LikelihoodEvaluator ev(ts, mask ? std::optional<std::vector<char>>(*mask) : std::nullopt, opts);
    return ev(model);
}

}  // namespace levymle
