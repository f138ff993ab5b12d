#pragma once

// Run configuration: one JSON document per run. Every object is checked for
// unknown keys before anything is computed; config_to_json writes the
// resolved configuration back out with all defaults filled in.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "levymle/errors.hpp"
#include "levymle/estimate.hpp"
#include "levymle/models.hpp"
#include "levymle/report.hpp"
#include "levymle/spline.hpp"
#include "levymle/timeseries.hpp"

namespace levymle {

// ---------------------------------------------------------------- model section

namespace config_detail {

using report_detail::check_keys;
using report_detail::get;

inline double number(const json& j, const char* key, const std::string& where) {
    const double v = get<double>(j, key, where);
    if (!std::isfinite(v)) throw ConfigError(where + ": '" + key + "' must be finite");
    return v;
}

inline double number_or(const json& j, const char* key, double fallback, const std::string& where) {
    return j.contains(key) ? number(j, key, where) : fallback;
}

inline std::vector<double> numbers(const json& j, const char* key, const std::string& where) {
    const auto v = get<std::vector<double>>(j, key, where);
    for (double x : v)
        if (!std::isfinite(x)) throw ConfigError(where + ": '" + key + "' must be finite");
    return v;
}

// Scalar or one value per dimension.
inline std::vector<double> per_dimension(const json& j, const char* key, std::size_t d, double fallback,
                                         const std::string& where) {
    if (!j.contains(key)) return std::vector<double>(d, fallback);
    if (j.at(key).is_number()) return std::vector<double>(d, number(j, key, where));
    auto v = numbers(j, key, where);
    if (v.size() != d)
        throw ConfigError(where + ": '" + key + "' has " + std::to_string(v.size()) + " entries, expected " +
                          std::to_string(d));
    return v;
}

// Knot sequence from "knots", or "knot_count" with "knot_range" (or the
// supplied default range).
inline std::vector<double> knots(const json& j, const std::optional<std::pair<double, double>>& range,
                                 const std::string& where) {
    if (j.contains("knots")) {
        if (j.contains("knot_count")) throw ConfigError(where + ": give either 'knots' or 'knot_count', not both");
        return numbers(j, "knots", where);
    }
    const int n = get<int>(j, "knot_count", where);
    if (n < 4) throw ConfigError(where + ": knot_count must be at least 4");
    std::pair<double, double> r;
    if (j.contains("knot_range")) {
        const auto v = numbers(j, "knot_range", where);
        if (v.size() != 2) throw ConfigError(where + ": knot_range must be [lo, hi]");
        r = {v[0], v[1]};
    } else if (range) {
        r = *range;
    } else {
        throw ConfigError(where + ": knot_count needs knot_range (no data range available here)");
    }
    if (!(r.first < r.second)) throw ConfigError(where + ": knot_range must satisfy lo < hi");
    return equidistant_knots(r.first, r.second, static_cast<std::size_t>(n));
}

inline std::vector<double> ordinates(const json& j, const char* key, std::size_t n, double fallback,
                                     const std::string& where) {
    if (!j.contains(key)) return std::vector<double>(n, fallback);
    if (j.at(key).is_number()) return std::vector<double>(n, number(j, key, where));
    auto v = numbers(j, key, where);
    if (v.size() != n)
        throw ConfigError(where + ": '" + key + "' has " + std::to_string(v.size()) + " values for " +
                          std::to_string(n) + " knots");
    return v;
}

inline void apply_fixed(ModelSpec& m, const json& j, const std::string& where) {
    if (!j.contains("fixed")) return;
    for (const auto& name : get<std::vector<std::string>>(j, "fixed", where)) {
        const auto k = m.find(name);
        if (!k) throw ConfigError(where + ": 'fixed' names unknown parameter '" + name + "'");
        m.params[*k].free = false;
    }
}

inline ModelSpec landau(const json& j) {
    const std::string w = "model (landau)";
    check_keys(j, {"family", "a", "b", "c", "alpha", "beta", "fixed"}, w);
    return landau_model(number(j, "a", w), number(j, "b", w), number(j, "c", w), number(j, "alpha", w),
                        number(j, "beta", w));
}

inline ModelSpec lotka_volterra(const json& j) {
    const std::string w = "model (lotka_volterra)";
    check_keys(j, {"family", "r", "a", "sigma", "alpha", "beta", "fixed"}, w);
    const auto r = numbers(j, "r", w);
    const std::size_t d = r.size();
    if (d == 0) throw ConfigError(w + ": 'r' must not be empty");
    const auto rows = get<std::vector<std::vector<double>>>(j, "a", w);
    if (rows.size() != d) throw ConfigError(w + ": 'a' must have " + std::to_string(d) + " rows");
    std::vector<double> a;
    for (const auto& row : rows) {
        if (row.size() != d) throw ConfigError(w + ": every row of 'a' needs " + std::to_string(d) + " entries");
        a.insert(a.end(), row.begin(), row.end());
    }
    const auto sigma = per_dimension(j, "sigma", d, 0.0, w);
    if (!j.contains("sigma")) throw ConfigError(w + ": missing 'sigma'");
    return lotka_volterra_model(r, a, sigma, per_dimension(j, "alpha", d, 1.8, w), per_dimension(j, "beta", d, 0.0, w));
}

inline ModelSpec spline(const json& j, const std::optional<std::pair<double, double>>& range) {
    const std::string w = "model (spline)";
    check_keys(j, {"family", "knots", "knot_count", "knot_range", "mu", "sigma", "alpha", "beta", "fixed"}, w);
    const auto k = knots(j, range, w);
    return spline_model(k, ordinates(j, "mu", k.size(), 0.0, w), ordinates(j, "sigma", k.size(), 1.0, w),
                        number_or(j, "alpha", 1.8, w), number_or(j, "beta", 0.0, w));
}

// General form: one entry per dimension with its own drift and noise.
inline ModelSpec general(const json& j, const std::optional<std::pair<double, double>>& range) {
    using model_detail::add;
    const std::string w = "model";
    check_keys(j, {"family", "dimensions", "fixed"}, w);
    const auto dims = get<json>(j, "dimensions", w);
    if (!dims.is_array() || dims.empty()) throw ConfigError(w + ": 'dimensions' must be a non-empty array");
    const std::size_t d = dims.size();
    ModelSpec m;
    m.dims.resize(d);
    std::vector<double> alpha(d), beta(d);
    auto terms = [&](const json& arr, int dim, const std::string& where, std::vector<Term>& out) {
        if (!arr.is_array() || arr.empty()) throw ConfigError(where + ": 'terms' must be a non-empty array");
        for (const auto& t : arr) {
            check_keys(t, {"name", "value", "powers", "sign"}, where + " term");
            const auto name = get<std::string>(t, "name", where);
            if (m.find(name)) throw ConfigError(where + ": duplicate parameter name '" + name + "'");
            const auto powers = get<std::vector<int>>(t, "powers", where);
            if (powers.size() != d)
                throw ConfigError(where + ": term '" + name + "' needs " + std::to_string(d) + " powers");
            const std::size_t k = add(m, name, number_or(t, "value", 0.0, where), Transform::identity, dim);
            out.push_back({k, number_or(t, "sign", 1.0, where), powers});
        }
    };
    for (std::size_t i = 0; i < d; ++i) {
        const json& dj = dims[i];
        const std::string where = "model dimension " + std::to_string(i + 1);
        check_keys(dj, {"label", "drift", "noise", "alpha", "beta"}, where);
        m.dims[i].label = dj.contains("label") ? get<std::string>(dj, "label", where) : "x" + std::to_string(i + 1);
        alpha[i] = number_or(dj, "alpha", 1.8, where);
        beta[i] = number_or(dj, "beta", 0.0, where);
    }
    const std::string suffix_one;
    auto suffix = [&](std::size_t i) { return d == 1 ? suffix_one : std::to_string(i + 1); };
    for (std::size_t i = 0; i < d; ++i) {
        const std::string where = "model dimension " + std::to_string(i + 1) + " drift";
        const json& dr = get<json>(dims[i], "drift", where);
        auto& dm = m.dims[i].drift;
        const auto kind = get<std::string>(dr, "kind", where);
        const int di = static_cast<int>(i);
        if (kind == "polynomial") {
            check_keys(dr, {"kind", "terms"}, where);
            dm.kind = DriftKind::polynomial;
            terms(dr.at("terms"), di, where, dm.terms);
        } else if (kind == "lotka_volterra") {
            check_keys(dr, {"kind", "rate", "interaction"}, where);
            dm.kind = DriftKind::lotka_volterra;
            const auto a = numbers(dr, "interaction", where);
            if (a.size() != d)
                throw ConfigError(where + ": 'interaction' needs " + std::to_string(d) + " coefficients");
            dm.rate = add(m, "r" + std::to_string(i + 1), number(dr, "rate", where), Transform::identity, di);
            for (std::size_t k = 0; k < d; ++k)
                dm.interaction.push_back(
                    add(m, "a" + std::to_string(i + 1) + std::to_string(k + 1), a[k], Transform::identity, di));
        } else if (kind == "spline") {
            check_keys(dr, {"kind", "knots", "knot_count", "knot_range", "values"}, where);
            if (d != 1) throw ConfigError(where + ": spline drift is only supported for d = 1");
            dm.kind = DriftKind::spline;
            dm.knots = knots(dr, range, where);
            const auto v = ordinates(dr, "values", dm.knots.size(), 0.0, where);
            for (std::size_t k = 0; k < v.size(); ++k)
                dm.ordinates.push_back(add(m, "mu@" + format_knot(dm.knots[k]), v[k], Transform::identity, di));
        } else {
            throw ConfigError(where + ": unknown kind '" + kind + "' (polynomial, lotka_volterra, spline)");
        }
    }
    for (std::size_t i = 0; i < d; ++i) {
        const std::string where = "model dimension " + std::to_string(i + 1) + " noise";
        const json& nz = get<json>(dims[i], "noise", where);
        auto& nm = m.dims[i].noise;
        const auto kind = get<std::string>(nz, "kind", where);
        const int di = static_cast<int>(i);
        if (kind == "constant") {
            check_keys(nz, {"kind", "value", "name"}, where);
            nm.kind = NoiseKind::constant;
            const auto name = nz.contains("name") ? get<std::string>(nz, "name", where) : "sigma" + suffix(i);
            if (m.find(name)) throw ConfigError(where + ": duplicate parameter name '" + name + "'");
            nm.level = add(m, name, number(nz, "value", where), Transform::log, di);
        } else if (kind == "log_polynomial") {
            check_keys(nz, {"kind", "terms"}, where);
            nm.kind = NoiseKind::polynomial;
            terms(nz.at("terms"), di, where, nm.terms);
        } else if (kind == "spline") {
            check_keys(nz, {"kind", "knots", "knot_count", "knot_range", "values"}, where);
            if (d != 1) throw ConfigError(where + ": spline noise is only supported for d = 1");
            nm.kind = NoiseKind::spline;
            nm.knots = knots(nz, range, where);
            const auto v = ordinates(nz, "values", nm.knots.size(), 1.0, where);
            for (std::size_t k = 0; k < v.size(); ++k)
                nm.ordinates.push_back(add(m, "sigma@" + format_knot(nm.knots[k]), v[k], Transform::log, di));
        } else {
            throw ConfigError(where + ": unknown kind '" + kind + "' (constant, log_polynomial, spline)");
        }
    }
    model_detail::add_stable(m, alpha, beta);
    return m;
}

}  // namespace config_detail

/// ModelSpec from a model section: a family shortcut ("landau",
/// "lotka_volterra", "spline"), the general per-dimension form, or the
/// structural form written into reports. `knot_range` is the fallback range
/// for knot_count without knot_range.
inline ModelSpec build_model(const json& j, const std::optional<std::pair<double, double>>& knot_range = std::nullopt) {
    using namespace config_detail;
    if (!j.is_object()) throw ConfigError("model: expected an object");
    if (j.contains("parameters")) return model_from_structural_json(j);
    const std::string family = j.contains("family") ? get<std::string>(j, "family", "model") : "general";
    ModelSpec m;
    if (family == "landau") m = landau(j);
    else if (family == "lotka_volterra") m = lotka_volterra(j);
    else if (family == "spline") m = spline(j, knot_range);
    else if (family == "general") m = general(j, knot_range);
    else throw ConfigError("model: unknown family '" + family + "' (landau, lotka_volterra, spline, general)");
    apply_fixed(m, j, "model");
    m.validate(true);
    return m;
}

/// True when the model section asks for knots placed over a range it does not give.
inline bool needs_knot_range(const json& j) {
    auto open = [](const json& s) { return s.is_object() && s.contains("knot_count") && !s.contains("knot_range"); };
    if (open(j)) return true;
    if (j.contains("dimensions") && j["dimensions"].is_array())
        for (const auto& d : j["dimensions"])
            if (d.is_object() && ((d.contains("drift") && open(d["drift"])) || (d.contains("noise") && open(d["noise"]))))
                return true;
    return false;
}

/// Replaces every knot sequence in a model section by `count` equidistant
/// knots; knot ordinates given in the section are dropped.
inline json override_knot_count(json j, int count) {
    auto fix = [count](json& s) {
        if (!s.is_object() || !(s.contains("knots") || s.contains("knot_count"))) return;
        if (s.contains("knots") && !s.contains("knot_range")) {
            const auto k = s["knots"].get<std::vector<double>>();
            if (!k.empty()) s["knot_range"] = json::array({k.front(), k.back()});
        }
        s.erase("knots");
        s.erase("values");
        s.erase("mu");
        if (s.contains("sigma") && s["sigma"].is_array()) s.erase("sigma");
        s["knot_count"] = count;
    };
    if (j.contains("parameters")) throw ConfigError("--knots cannot be applied to an already fitted model");
    fix(j);
    if (j.contains("dimensions") && j["dimensions"].is_array())
        for (auto& d : j["dimensions"]) {
            if (d.contains("drift")) fix(d["drift"]);
            if (d.contains("noise")) fix(d["noise"]);
        }
    return j;
}

// ---------------------------------------------------------------- run config

struct DataConfig {
    std::string path;                ///< resolved against the config file's directory
    std::optional<double> delta;     ///< required when the CSV has no time column
    std::string transform = "none";  ///< none | log
};

struct SimulateSection {
    std::vector<double> x0;
    std::size_t n_steps = 100000;
    double delta = 0.01;
    std::size_t burn_in = 0;
    double cap = 1e12;
    std::string transform = "none";  ///< none | exp, applied to the written series
};

struct FitSection {
    FitOptions options;
    double ks_level = 0.01;
};

struct PotentialSection {
    std::size_t grid_size = 512;
    std::optional<double> bandwidth;
    std::size_t dimension = 1;  ///< 1-based column of the data
    std::size_t separation = 3;
    double min_count = 50.0;
    double min_depth = 0.5;
};

struct PdfSection {
    double alpha = 2.0;
    double beta = 0.0;
    double x_min = -10.0;
    double x_max = 10.0;
    std::size_t points = 401;
};

struct RunConfig {
    std::filesystem::path base_dir = ".";
    std::optional<json> model;
    std::optional<DataConfig> data;
    std::optional<SimulateSection> simulate;
    FitSection fit;
    PotentialSection potential;
    PdfSection pdf;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::string output = "out";  ///< resolved against base_dir unless given on the command line

    std::filesystem::path output_dir() const {
        const std::filesystem::path p(output);
        return p.is_absolute() ? p : (base_dir / p).lexically_normal();
    }
};

namespace config_detail {

inline std::string transform_value(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    const auto t = get<std::string>(j, "transform", where);
    for (const char* a : allowed)
        if (t == a) return t;
    throw ConfigError(where + ": unknown transform '" + t + "'");
}

inline std::size_t count(const json& j, const char* key, std::size_t fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ConfigError(where + ": '" + key + "' must be a non-negative integer");
    return static_cast<std::size_t>(v.get<long long>());
}

inline void parse_fit(const json& j, FitSection& f) {
    const std::string w = "fit";
    check_keys(j, {"tolerance", "max_iterations", "multistart", "truncate", "quantiles", "bounds", "initialize", "init",
                   "hessian_rel_step", "hessian_min_step", "ks_level"},
               w);
    auto& o = f.options;
    o.tolerance = number_or(j, "tolerance", o.tolerance, w);
    o.max_iterations = count(j, "max_iterations", o.max_iterations, w);
    o.multistart = count(j, "multistart", o.multistart, w);
    if (j.contains("truncate")) o.truncate = get<bool>(j, "truncate", w);
    if (j.contains("quantiles")) {
        const auto q = numbers(j, "quantiles", w);
        if (q.size() != 2) throw ConfigError(w + ": 'quantiles' must be [lo, hi]");
        o.quantile_lo = q[0];
        o.quantile_hi = q[1];
    }
    if (j.contains("bounds")) {
        for (const auto& b : get<std::vector<std::vector<double>>>(j, "bounds", w)) {
            if (b.size() != 2) throw ConfigError(w + ": every entry of 'bounds' must be [lo, hi]");
            o.bounds.emplace_back(b[0], b[1]);
        }
    }
    if (j.contains("initialize")) o.initialize = get<bool>(j, "initialize", w);
    if (j.contains("init")) {
        const auto& init = j.at("init");
        if (!init.is_object()) throw ConfigError(w + ": 'init' must map parameter names to values");
        for (auto it = init.begin(); it != init.end(); ++it) {
            if (!it.value().is_number()) throw ConfigError(w + ": initial value of '" + it.key() + "' must be a number");
            o.init_overrides[it.key()] = it.value().get<double>();
        }
    }
    o.hessian_rel_step = number_or(j, "hessian_rel_step", o.hessian_rel_step, w);
    o.hessian_min_step = number_or(j, "hessian_min_step", o.hessian_min_step, w);
    f.ks_level = number_or(j, "ks_level", f.ks_level, w);
    if (!(f.ks_level > 0.0 && f.ks_level < 1.0)) throw ConfigError(w + ": ks_level must lie in (0, 1)");
    o.validate();
}

}  // namespace config_detail

/// Parses and validates a run configuration. Relative data paths are taken
/// relative to `base_dir`.
inline RunConfig parse_config(const json& j, const std::filesystem::path& base_dir = ".") {
    using namespace config_detail;
    check_keys(j, {"model", "data", "simulate", "fit", "potential", "pdf", "seed", "threads", "output"}, "config");
    RunConfig c;
    c.base_dir = base_dir;
    if (j.contains("model")) {
        if (!j["model"].is_object()) throw ConfigError("model: expected an object");
        c.model = j["model"];
    }
    if (j.contains("data")) {
        const json& d = j["data"];
        check_keys(d, {"path", "delta", "transform"}, "data");
        DataConfig dc;
        dc.path = get<std::string>(d, "path", "data");
        if (d.contains("delta")) {
            dc.delta = number(d, "delta", "data");
            if (!(*dc.delta > 0.0)) throw ConfigError("data: delta must be positive");
        }
        if (d.contains("transform")) dc.transform = transform_value(d, "data", {"none", "log"});
        c.data = dc;
    }
    if (j.contains("simulate")) {
        const json& s = j["simulate"];
        const std::string w = "simulate";
        check_keys(s, {"x0", "n_steps", "delta", "burn_in", "cap", "transform"}, w);
        SimulateSection sc;
        sc.x0 = s.contains("x0") && s["x0"].is_number() ? std::vector<double>{number(s, "x0", w)} : numbers(s, "x0", w);
        sc.n_steps = count(s, "n_steps", sc.n_steps, w);
        sc.delta = number_or(s, "delta", sc.delta, w);
        sc.burn_in = count(s, "burn_in", sc.burn_in, w);
        sc.cap = number_or(s, "cap", sc.cap, w);
        if (s.contains("transform")) sc.transform = transform_value(s, w, {"none", "exp"});
        if (sc.n_steps < 2) throw ConfigError(w + ": n_steps must be at least 2");
        if (!(sc.delta > 0.0)) throw ConfigError(w + ": delta must be positive");
        c.simulate = sc;
    }
    if (j.contains("fit")) parse_fit(j["fit"], c.fit);
    if (j.contains("potential")) {
        const json& p = j["potential"];
        const std::string w = "potential";
        check_keys(p, {"grid_size", "bandwidth", "dimension", "separation", "min_count", "min_depth"}, w);
        auto& pc = c.potential;
        pc.grid_size = count(p, "grid_size", pc.grid_size, w);
        if (p.contains("bandwidth")) pc.bandwidth = number(p, "bandwidth", w);
        pc.dimension = count(p, "dimension", pc.dimension, w);
        pc.separation = count(p, "separation", pc.separation, w);
        pc.min_count = number_or(p, "min_count", pc.min_count, w);
        pc.min_depth = number_or(p, "min_depth", pc.min_depth, w);
        if (pc.dimension < 1) throw ConfigError(w + ": dimension is 1-based");
        if (pc.bandwidth && !(*pc.bandwidth > 0.0)) throw ConfigError(w + ": bandwidth must be positive");
    }
    if (j.contains("pdf")) {
        const json& p = j["pdf"];
        const std::string w = "pdf";
        check_keys(p, {"alpha", "beta", "x_min", "x_max", "points"}, w);
        auto& pc = c.pdf;
        pc.alpha = number_or(p, "alpha", pc.alpha, w);
        pc.beta = number_or(p, "beta", pc.beta, w);
        pc.x_min = number_or(p, "x_min", pc.x_min, w);
        pc.x_max = number_or(p, "x_max", pc.x_max, w);
        pc.points = count(p, "points", pc.points, w);
        if (!(pc.x_min < pc.x_max) || pc.points < 2) throw ConfigError(w + ": need x_min < x_max and at least 2 points");
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw ConfigError("config: 'seed' must be a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("threads")) {
        const auto t = count(j, "threads", 1, "config");
        if (t < 1) throw ConfigError("config: 'threads' must be at least 1");
        c.threads = static_cast<unsigned>(t);
    }
    if (j.contains("output")) c.output = get<std::string>(j, "output", "config");
    c.fit.options.seed = c.seed;
    c.fit.options.threads = c.threads;
    return c;
}

inline RunConfig load_config(const std::string& path) {
    const json j = read_json_file(path);
    return parse_config(j, std::filesystem::path(path).parent_path());
}

/// Data path resolved against the config directory.
inline std::string data_path(const RunConfig& c) {
    if (!c.data) throw ConfigError("config: a 'data' section is required for this command");
    const std::filesystem::path p(c.data->path);
    return p.is_absolute() ? p.string() : (c.base_dir / p).lexically_normal().string();
}

/// Reads the configured data file and applies its transform.
inline TimeSeries load_data(const RunConfig& c) {
    TimeSeries ts = ingest_csv(data_path(c), c.data->delta);
    if (c.data->transform == "log") {
        for (std::size_t k = 0; k < ts.values.size(); ++k) {
            if (!(ts.values[k] > 0.0))
                throw DataError("data: log transform needs positive values (row " + std::to_string(k / ts.dim + 1) +
                                ", column " + std::to_string(k % ts.dim + 1) + ")");
            ts.values[k] = std::log(ts.values[k]);
        }
    }
    return ts;
}

/// Fully resolved configuration, defaults included. `model` is the resolved
/// model in structural form when one was built. The output directory is left
/// out so that reports do not depend on where they were written.
inline json config_to_json(const RunConfig& c, const std::optional<ModelSpec>& model = std::nullopt) {
    json j;
    if (model) j["model"] = model_to_json(*model);
    else if (c.model) j["model"] = *c.model;
    if (c.data) {
        json d{{"path", c.data->path}};
        if (c.data->delta) d["delta"] = *c.data->delta;
        d["transform"] = c.data->transform;
        j["data"] = d;
    }
    if (c.simulate) {
        const auto& s = *c.simulate;
        j["simulate"] = {{"x0", s.x0},         {"n_steps", s.n_steps}, {"delta", s.delta},
                         {"burn_in", s.burn_in}, {"cap", s.cap},         {"transform", s.transform}};
    }
    const auto& o = c.fit.options;
    json fit{{"tolerance", o.tolerance},
             {"max_iterations", o.max_iterations},
             {"multistart", o.multistart},
             {"truncate", o.truncate},
             {"quantiles", json::array({o.quantile_lo, o.quantile_hi})}};
    json bounds = json::array();
    for (const auto& [lo, hi] : o.bounds) bounds.push_back(json::array({lo, hi}));
    fit["bounds"] = bounds;
    fit["initialize"] = o.initialize;
    json init = json::object();
    for (const auto& [k, v] : o.init_overrides) init[k] = v;
    fit["init"] = init;
    fit["hessian_rel_step"] = o.hessian_rel_step;
    fit["hessian_min_step"] = o.hessian_min_step;
    fit["ks_level"] = c.fit.ks_level;
    j["fit"] = fit;
    const auto& p = c.potential;
    j["potential"] = {{"grid_size", p.grid_size}, {"dimension", p.dimension}, {"separation", p.separation},
                      {"min_count", p.min_count}, {"min_depth", p.min_depth}};
    if (p.bandwidth) j["potential"]["bandwidth"] = *p.bandwidth;
    j["pdf"] = {{"alpha", c.pdf.alpha}, {"beta", c.pdf.beta}, {"x_min", c.pdf.x_min}, {"x_max", c.pdf.x_max},
                {"points", c.pdf.points}};
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    return j;
}

}  // namespace levymle
