#pragma once

// Drift and noise-intensity families for d-dimensional Levy-driven systems
//   dX_i = mu_i(X) dt + sigma_i(X) dL_i,   L_i independent standard S1 stable,
// with every scalar (coefficients, knot ordinates, alpha_i, beta_i) held in
// one flat parameter table so packing, reporting and the Hessian all see the
// same ordering.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "levymle/errors.hpp"
#include "levymle/spline.hpp"
#include "levymle/stable.hpp"

namespace levymle {

// ---------------------------------------------------------------- transforms

enum class Transform {
    identity,
    log,          ///< (0, inf)
    alpha_range,  ///< (0.1, 2] via 0.1 + 1.9 logistic(u)
    beta_range,   ///< [-1, 1] via tanh(u)
};

inline const char* transform_name(Transform t) noexcept {
    switch (t) {
        case Transform::identity: return "identity";
        case Transform::log: return "log";
        case Transform::alpha_range: return "logistic";
        case Transform::beta_range: return "tanh";
    }
    return "?";
}

inline constexpr double alpha_lower = 0.1;
inline constexpr double alpha_span = 1.9;

inline double from_unbounded(Transform t, double u) noexcept {
    switch (t) {
        case Transform::identity: return u;
        case Transform::log: return std::exp(u);
        case Transform::alpha_range: {
            const double s = u >= 0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
            return std::min(2.0, alpha_lower + alpha_span * s);
        }
        case Transform::beta_range: return std::tanh(u);
    }
    return u;
}

/// Inverse of from_unbounded. Values on a closed bound map to a large finite u.
inline double to_unbounded(Transform t, double v) noexcept {
    switch (t) {
        case Transform::identity: return v;
        case Transform::log: return std::log(std::max(v, std::numeric_limits<double>::min()));
        case Transform::alpha_range: {
            const double s = std::clamp((v - alpha_lower) / alpha_span, 1e-16, 1.0 - 1e-16);
            return std::log(s) - std::log1p(-s);
        }
        case Transform::beta_range: return std::atanh(std::clamp(v, -1.0 + 1e-16, 1.0 - 1e-16));
    }
    return v;
}

inline bool inside_bounds(Transform t, double v) noexcept {
    switch (t) {
        case Transform::identity: return std::isfinite(v);
        case Transform::log: return v > 0.0 && std::isfinite(v);
        case Transform::alpha_range: return v >= alpha_lower && v <= 2.0;
        case Transform::beta_range: return v >= -1.0 && v <= 1.0;
    }
    return false;
}

// ---------------------------------------------------------------- model spec

struct Parameter {
    std::string name;
    double value = 0.0;
    Transform transform = Transform::identity;
    bool free = true;
    int dimension = 0;  ///< the only likelihood factor this parameter enters
};

/// sign * theta[param] * prod_j x_j^powers[j]
struct Term {
    std::size_t param = 0;
    double sign = 1.0;
    std::vector<int> powers;
};

enum class DriftKind { polynomial, lotka_volterra, spline };
enum class NoiseKind { constant, polynomial, spline };

struct DriftModel {
    DriftKind kind = DriftKind::polynomial;
    std::vector<Term> terms;                 // polynomial
    std::size_t rate = 0;                    // lotka_volterra: r_i
    std::vector<std::size_t> interaction;    // lotka_volterra: a_i1 .. a_id
    std::vector<double> knots;               // spline
    std::vector<std::size_t> ordinates;      // spline: mu at knots
};

/// sigma > 0 by construction: constant level on a log transform, log sigma as a
/// polynomial, or a spline through log sigma at the knots.
struct NoiseModel {
    NoiseKind kind = NoiseKind::constant;
    std::size_t level = 0;                   // constant
    std::vector<Term> terms;                 // polynomial in log sigma
    std::vector<double> knots;               // spline
    std::vector<std::size_t> ordinates;      // spline: sigma at knots
};

struct Dimension {
    std::string label;
    DriftModel drift;
    NoiseModel noise;
    std::size_t alpha = 0;
    std::size_t beta = 0;
};

struct ModelSpec {
    std::vector<Parameter> params;
    std::vector<Dimension> dims;

    std::size_t dimension() const noexcept { return dims.size(); }

    std::size_t free_count() const noexcept {
        return static_cast<std::size_t>(
            std::count_if(params.begin(), params.end(), [](const Parameter& p) { return p.free; }));
    }

    double value(std::size_t k) const { return params.at(k).value; }

    StableParams stable(std::size_t i) const {
        return StableParams::standard(params[dims[i].alpha].value, params[dims[i].beta].value);
    }

    std::optional<std::size_t> find(const std::string& name) const {
        for (std::size_t k = 0; k < params.size(); ++k)
            if (params[k].name == name) return k;
        return std::nullopt;
    }

    /// Structural checks. With allow_zero_noise a constant noise level of 0 is
    /// accepted (deterministic simulation); the likelihood never allows it.
    void validate(bool allow_zero_noise = false) const {
        const std::size_t d = dims.size();
        if (d == 0) throw ConfigError("model: at least one dimension required");
        auto check_index = [&](std::size_t k, const std::string& what) {
            if (k >= params.size()) throw ConfigError("model: " + what + " refers to a missing parameter");
        };
        auto check_terms = [&](const std::vector<Term>& terms, const std::string& what) {
            for (const auto& t : terms) {
                check_index(t.param, what);
                if (t.powers.size() != d)
                    throw ConfigError("model: " + what + " term '" + params[t.param].name + "' needs " +
                                      std::to_string(d) + " powers");
                for (int p : t.powers)
                    if (p < 0) throw ConfigError("model: negative power in " + what);
                if (!std::isfinite(t.sign)) throw ConfigError("model: non-finite sign in " + what);
            }
        };
        auto check_knots = [&](const std::vector<double>& knots, const std::vector<std::size_t>& ords,
                               const std::string& what) {
            if (d != 1) throw ConfigError("model: " + what + " splines are only supported for d = 1");
            if (knots.size() < 4) throw ConfigError("model: " + what + " spline needs at least 4 knots");
            if (knots.size() != ords.size())
                throw ConfigError("model: " + what + " spline has " + std::to_string(knots.size()) +
                                  " knots but " + std::to_string(ords.size()) + " ordinates");
            for (std::size_t j = 0; j < knots.size(); ++j) {
                if (!std::isfinite(knots[j])) throw ConfigError("model: non-finite knot in " + what);
                if (j > 0 && !(knots[j] > knots[j - 1]))
                    throw ConfigError("model: " + what + " knots must be strictly increasing");
                check_index(ords[j], what);
            }
        };
        for (std::size_t i = 0; i < d; ++i) {
            const auto& dm = dims[i];
            const std::string tag = "dimension " + std::to_string(i + 1);
            switch (dm.drift.kind) {
                case DriftKind::polynomial: check_terms(dm.drift.terms, tag + " drift"); break;
                case DriftKind::lotka_volterra:
                    check_index(dm.drift.rate, tag + " drift");
                    if (dm.drift.interaction.size() != d)
                        throw ConfigError("model: " + tag + " Lotka-Volterra drift needs " +
                                          std::to_string(d) + " interaction coefficients");
                    for (auto k : dm.drift.interaction) check_index(k, tag + " drift");
                    break;
                case DriftKind::spline: check_knots(dm.drift.knots, dm.drift.ordinates, tag + " drift"); break;
            }
            switch (dm.noise.kind) {
                case NoiseKind::constant: {
                    check_index(dm.noise.level, tag + " noise");
                    const double s = params[dm.noise.level].value;
                    if (!(s > 0.0 || (allow_zero_noise && s == 0.0)) || !std::isfinite(s))
                        throw ConfigError("model: " + tag + " noise level must be positive");
                    break;
                }
                case NoiseKind::polynomial: check_terms(dm.noise.terms, tag + " noise"); break;
                case NoiseKind::spline:
                    check_knots(dm.noise.knots, dm.noise.ordinates, tag + " noise");
                    for (auto k : dm.noise.ordinates)
                        if (!(params[k].value > 0.0))
                            throw ConfigError("model: " + tag + " noise knot values must be positive");
                    break;
            }
            check_index(dm.alpha, tag + " alpha");
            check_index(dm.beta, tag + " beta");
            stable(i).validate();
            if (params[dm.alpha].value < alpha_lower)
                throw ParameterDomainError("model: alpha below the numerical floor 0.1");
        }
        for (const auto& p : params) {
            if (!std::isfinite(p.value)) throw ConfigError("model: parameter '" + p.name + "' is not finite");
            if (p.dimension < 0 || static_cast<std::size_t>(p.dimension) >= d)
                throw ConfigError("model: parameter '" + p.name + "' has no owning dimension");
        }
    }
};

// ---------------------------------------------------------------- evaluation

/// ModelSpec with splines solved once, for repeated evaluation.
class CompiledModel {
public:
    explicit CompiledModel(const ModelSpec& m) : spec_(&m) {
        const std::size_t d = m.dims.size();
        drift_spline_.resize(d);
        noise_spline_.resize(d);
        for (std::size_t i = 0; i < d; ++i) {
            const auto& dm = m.dims[i];
            if (dm.drift.kind == DriftKind::spline) {
                std::vector<double> y;
                for (auto k : dm.drift.ordinates) y.push_back(m.params[k].value);
                drift_spline_[i] = NaturalCubicSpline(dm.drift.knots, y);
            }
            if (dm.noise.kind == NoiseKind::spline) {
                std::vector<double> y;
                for (auto k : dm.noise.ordinates) y.push_back(std::log(m.params[k].value));
                noise_spline_[i] = NaturalCubicSpline(dm.noise.knots, y);
            }
        }
    }

    std::size_t dimension() const noexcept { return spec_->dims.size(); }
    const ModelSpec& spec() const noexcept { return *spec_; }

    double drift(std::span<const double> x, std::size_t i) const noexcept {
        const auto& dm = spec_->dims[i].drift;
        const auto& p = spec_->params;
        switch (dm.kind) {
            case DriftKind::polynomial: return terms(dm.terms, x);
            case DriftKind::lotka_volterra: {
                double s = 1.0;
                for (std::size_t j = 0; j < x.size(); ++j) s -= p[dm.interaction[j]].value * x[j];
                return p[dm.rate].value * x[i] * s;
            }
            case DriftKind::spline: return drift_spline_[i](x[0]);
        }
        return 0.0;
    }

    double noise(std::span<const double> x, std::size_t i) const noexcept {
        const auto& nm = spec_->dims[i].noise;
        switch (nm.kind) {
            case NoiseKind::constant: return spec_->params[nm.level].value;
            case NoiseKind::polynomial: return std::exp(terms(nm.terms, x));
            case NoiseKind::spline: return std::exp(noise_spline_[i](x[0]));
        }
        return 1.0;
    }

private:
    double terms(const std::vector<Term>& ts, std::span<const double> x) const noexcept {
        double s = 0.0;
        for (const auto& t : ts) {
            double v = t.sign * spec_->params[t.param].value;
            for (std::size_t j = 0; j < x.size(); ++j)
                for (int k = 0; k < t.powers[j]; ++k) v *= x[j];
            s += v;
        }
        return s;
    }

    const ModelSpec* spec_;
    std::vector<NaturalCubicSpline> drift_spline_, noise_spline_;
};

inline std::vector<double> eval_drift(const ModelSpec& m, std::span<const double> x) {
    if (x.size() != m.dimension()) throw ConfigError("eval_drift: state has the wrong length");
    CompiledModel c(m);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c.drift(x, i);
    return out;
}

inline std::vector<double> eval_noise(const ModelSpec& m, std::span<const double> x) {
    if (x.size() != m.dimension()) throw ConfigError("eval_noise: state has the wrong length");
    CompiledModel c(m);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c.noise(x, i);
    return out;
}

// ---------------------------------------------------------------- packing

/// Free parameters in unbounded coordinates, in table order.
struct ParamVector {
    std::vector<double> theta;
    std::vector<std::size_t> index;  ///< position in ModelSpec::params
    std::vector<Transform> transforms;
    std::vector<std::string> names;

    std::size_t size() const noexcept { return theta.size(); }

    /// Free values in original coordinates.
    std::vector<double> values() const {
        std::vector<double> v(theta.size());
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = from_unbounded(transforms[k], theta[k]);
        return v;
    }
};

inline ParamVector pack_params(const ModelSpec& m) {
    ParamVector v;
    for (std::size_t k = 0; k < m.params.size(); ++k) {
        const auto& p = m.params[k];
        if (!p.free) continue;
        v.theta.push_back(to_unbounded(p.transform, p.value));
        v.index.push_back(k);
        v.transforms.push_back(p.transform);
        v.names.push_back(p.name);
    }
    return v;
}

/// Copy of `tmpl` with the free parameters set from `v`. Frozen ones are untouched.
inline ModelSpec unpack_params(const ParamVector& v, const ModelSpec& tmpl) {
    if (v.theta.size() != tmpl.free_count() || v.index.size() != v.theta.size())
        throw ConfigError("unpack_params: vector has " + std::to_string(v.theta.size()) +
                          " entries but the model has " + std::to_string(tmpl.free_count()) +
                          " free parameters");
    ModelSpec m = tmpl;
    for (std::size_t k = 0; k < v.theta.size(); ++k) {
        auto& p = m.params.at(v.index[k]);
        if (!p.free) throw ConfigError("unpack_params: entry '" + v.names[k] + "' is frozen in the template");
        p.value = from_unbounded(p.transform, v.theta[k]);
    }
    return m;
}

/// Free values in original coordinates written straight into a copy of `tmpl`.
inline ModelSpec with_values(const ModelSpec& tmpl, std::span<const std::size_t> index,
                             std::span<const double> values) {
    ModelSpec m = tmpl;
    for (std::size_t k = 0; k < index.size(); ++k) m.params.at(index[k]).value = values[k];
    return m;
}

// ---------------------------------------------------------------- builders

/// Knot abscissa as used in parameter labels ("mu@-1.25").
inline std::string format_knot(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

namespace model_detail {

inline std::size_t add(ModelSpec& m, std::string name, double value, Transform t, int dim) {
    m.params.push_back({std::move(name), value, t, true, dim});
    return m.params.size() - 1;
}

// alpha and beta of every dimension, appended after all drift and noise
// parameters so reports list them last.
inline void add_stable(ModelSpec& m, std::span<const double> alpha, std::span<const double> beta) {
    const std::size_t d = m.dims.size();
    const bool one = d == 1;
    for (std::size_t i = 0; i < d; ++i)
        m.dims[i].alpha = add(m, one ? "alpha" : "alpha" + std::to_string(i + 1), alpha[i],
                              Transform::alpha_range, static_cast<int>(i));
    for (std::size_t i = 0; i < d; ++i)
        m.dims[i].beta = add(m, one ? "beta" : "beta" + std::to_string(i + 1), beta[i],
                             Transform::beta_range, static_cast<int>(i));
}

}  // namespace model_detail

/// dx = (a x - b x^3) dt + c dL; parameters (a, b, c, alpha, beta).
inline ModelSpec landau_model(double a, double b, double c, double alpha, double beta) {
    using model_detail::add;
    ModelSpec m;
    m.dims.resize(1);
    m.dims[0].label = "x1";
    m.dims[0].drift.kind = DriftKind::polynomial;
    m.dims[0].drift.terms.push_back({add(m, "a", a, Transform::identity, 0), 1.0, {1}});
    m.dims[0].drift.terms.push_back({add(m, "b", b, Transform::identity, 0), -1.0, {3}});
    m.dims[0].noise.kind = NoiseKind::constant;
    m.dims[0].noise.level = add(m, "c", c, Transform::log, 0);
    const double al[] = {alpha}, be[] = {beta};
    model_detail::add_stable(m, al, be);
    return m;
}

/// dX_i = r_i X_i (1 - sum_j a_ij X_j) dt + sigma_i dL_i. `a` is row-major d x d.
inline ModelSpec lotka_volterra_model(std::span<const double> r, std::span<const double> a,
                                      std::span<const double> sigma, std::span<const double> alpha,
                                      std::span<const double> beta) {
    using model_detail::add;
    const std::size_t d = r.size();
    if (a.size() != d * d || sigma.size() != d || alpha.size() != d || beta.size() != d)
        throw ConfigError("lotka_volterra_model: inconsistent dimensions");
    ModelSpec m;
    m.dims.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        const int di = static_cast<int>(i);
        auto& dm = m.dims[i];
        dm.label = "x" + std::to_string(i + 1);
        dm.drift.kind = DriftKind::lotka_volterra;
        dm.drift.rate = add(m, "r" + std::to_string(i + 1), r[i], Transform::identity, di);
    }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            m.dims[i].drift.interaction.push_back(add(m, "a" + std::to_string(i + 1) + std::to_string(j + 1),
                                                      a[i * d + j], Transform::identity,
                                                      static_cast<int>(i)));
    for (std::size_t i = 0; i < d; ++i) {
        m.dims[i].noise.kind = NoiseKind::constant;
        m.dims[i].noise.level =
            add(m, "sigma" + std::to_string(i + 1), sigma[i], Transform::log, static_cast<int>(i));
    }
    model_detail::add_stable(m, alpha, beta);
    return m;
}

/// Univariate spline drift and spline noise on a shared knot sequence.
inline ModelSpec spline_model(std::span<const double> knots, std::span<const double> mu,
                              std::span<const double> sigma, double alpha, double beta) {
    using model_detail::add;
    if (mu.size() != knots.size() || sigma.size() != knots.size())
        throw ConfigError("spline_model: one drift and one noise value per knot required");
    ModelSpec m;
    m.dims.resize(1);
    auto& dm = m.dims[0];
    dm.label = "x1";
    dm.drift.kind = DriftKind::spline;
    dm.noise.kind = NoiseKind::spline;
    dm.drift.knots.assign(knots.begin(), knots.end());
    dm.noise.knots.assign(knots.begin(), knots.end());
    for (std::size_t j = 0; j < knots.size(); ++j)
        dm.drift.ordinates.push_back(add(m, "mu@" + format_knot(knots[j]), mu[j], Transform::identity, 0));
    for (std::size_t j = 0; j < knots.size(); ++j)
        dm.noise.ordinates.push_back(add(m, "sigma@" + format_knot(knots[j]), sigma[j], Transform::log, 0));
    const double al[] = {alpha}, be[] = {beta};
    model_detail::add_stable(m, al, be);
    return m;
}

}  // namespace levymle
