#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "levymle/errors.hpp"
#include "levymle/models.hpp"
#include "levymle/rng.hpp"
#include "levymle/stable.hpp"
#include "levymle/timeseries.hpp"

namespace levymle {

struct SimConfig {
    ModelSpec model;
    std::vector<double> x0;
    double delta = 0.01;
    std::size_t n_steps = 1000;  ///< rows in the output series (the first is the state after burn-in)
    std::uint64_t seed = 1;
    std::size_t burn_in = 0;
    double cap = 1e12;  ///< |x| beyond this aborts the path

    void validate() const {
        model.validate(true);
        if (x0.size() != model.dimension())
            throw ConfigError("simulate: x0 has " + std::to_string(x0.size()) + " entries, model has " +
                              std::to_string(model.dimension()) + " dimensions");
        for (double v : x0)
            if (!std::isfinite(v)) throw ConfigError("simulate: x0 must be finite");
        if (!(delta > 0.0) || !std::isfinite(delta)) throw ConfigError("simulate: delta must be positive");
        if (n_steps < 1) throw ConfigError("simulate: n_steps must be at least 1");
        if (!(cap > 0.0)) throw ConfigError("simulate: cap must be positive");
    }
};

/// X + M(X) delta + diag(delta^{1/alpha_i} sigma_i(X)) eta, written to `out`.
inline void euler_step(const CompiledModel& m, std::span<const double> x, double delta,
                       std::span<const double> eta, std::span<double> out) {
    const auto& spec = m.spec();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = spec.params[spec.dims[i].alpha].value;
        out[i] = x[i] + m.drift(x, i) * delta + std::pow(delta, 1.0 / a) * m.noise(x, i) * eta[i];
    }
}

inline std::vector<double> euler_step(const ModelSpec& model, std::span<const double> x, double delta,
                                      std::span<const double> eta) {
    if (x.size() != model.dimension() || eta.size() != model.dimension())
        throw ConfigError("euler_step: state and noise must have one entry per dimension");
    CompiledModel m(model);
    std::vector<double> out(x.size());
    euler_step(m, x, delta, eta, out);
    return out;
}

/// Euler path. Dimension i draws its noise from substream (seed, i) only.
/// If `noise` is given it receives the (n_steps - 1) x d standardized draws
/// behind the returned rows.
inline TimeSeries simulate_path(const SimConfig& cfg, std::vector<double>* noise = nullptr) {
    cfg.validate();
    const std::size_t d = cfg.model.dimension();
    CompiledModel m(cfg.model);
    std::vector<CounterRng> rng;
    std::vector<StableParams> law;
    for (std::size_t i = 0; i < d; ++i) {
        rng.push_back(CounterRng::substream(cfg.seed, i));
        law.push_back(cfg.model.stable(i));
    }
    TimeSeries ts;
    ts.delta = cfg.delta;
    ts.dim = d;
    for (const auto& dm : cfg.model.dims) ts.labels.push_back(dm.label);
    ts.values.reserve(cfg.n_steps * d);
    if (noise) {
        noise->clear();
        noise->reserve((cfg.n_steps - 1) * d);
    }

    std::vector<double> x = cfg.x0, next(d), eta(d);
    const std::size_t total = cfg.burn_in + cfg.n_steps;
    for (std::size_t step = 0; step < total; ++step) {
        if (step >= cfg.burn_in) ts.values.insert(ts.values.end(), x.begin(), x.end());
        if (step + 1 == total) break;
        for (std::size_t i = 0; i < d; ++i) eta[i] = stable_sample(law[i], rng[i]);
        euler_step(m, x, cfg.delta, eta, next);
        for (std::size_t i = 0; i < d; ++i) {
            if (!(std::abs(next[i]) <= cfg.cap))
                throw ExplosionError("simulate: path exploded at step " + std::to_string(step + 1) +
                                         " (dimension " + std::to_string(i + 1) + ")",
                                     step + 1);
        }
        if (noise && step >= cfg.burn_in) noise->insert(noise->end(), eta.begin(), eta.end());
        x.swap(next);
    }
    return ts;
}

}  // namespace levymle
