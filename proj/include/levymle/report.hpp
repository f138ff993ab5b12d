#pragma once

// JSON serialisation of models and fit reports, plus the plain-text summary.
// Numbers are written with 17 significant digits so reports are byte-stable
// and lossless.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "levymle/analysis.hpp"
#include "levymle/errors.hpp"
#include "levymle/estimate.hpp"
#include "levymle/models.hpp"

namespace levymle {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------- writer

namespace report_detail {

inline std::string number(double v) {
    if (std::isnan(v)) return "null";
    if (std::isinf(v)) return v > 0 ? "1e999" : "-1e999";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s = buf;
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

inline void write(std::ostream& out, const json& j, int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string close(static_cast<std::size_t>(indent * depth), ' ');
    switch (j.type()) {
        case json::value_t::object: {
            if (j.empty()) {
                out << "{}";
                return;
            }
            out << "{\n";
            std::size_t k = 0;
            for (auto it = j.begin(); it != j.end(); ++it, ++k) {
                out << pad << json(it.key()).dump() << ": ";
                write(out, it.value(), indent, depth + 1);
                out << (k + 1 < j.size() ? ",\n" : "\n");
            }
            out << close << "}";
            return;
        }
        case json::value_t::array: {
            if (j.empty()) {
                out << "[]";
                return;
            }
            const bool flat = std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_primitive(); });
            if (flat) {
                out << "[";
                for (std::size_t k = 0; k < j.size(); ++k) {
                    if (k) out << ", ";
                    write(out, j[k], indent, depth + 1);
                }
                out << "]";
                return;
            }
            out << "[\n";
            for (std::size_t k = 0; k < j.size(); ++k) {
                out << pad;
                write(out, j[k], indent, depth + 1);
                out << (k + 1 < j.size() ? ",\n" : "\n");
            }
            out << close << "]";
            return;
        }
        case json::value_t::number_float: out << number(j.get<double>()); return;
        default: out << j.dump(); return;
    }
}

}  // namespace report_detail

/// Pretty-printed JSON with doubles at 17 significant digits (NaN as null).
inline std::string dump_json(const json& j, int indent = 2) {
    std::ostringstream out;
    report_detail::write(out, j, indent, 0);
    out << '\n';
    return out.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << text;
    if (!out) throw DataError("write to '" + path + "' failed");
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

// ---------------------------------------------------------------- model

namespace report_detail {

inline const char* drift_kind(DriftKind k) {
    switch (k) {
        case DriftKind::polynomial: return "polynomial";
        case DriftKind::lotka_volterra: return "lotka_volterra";
        case DriftKind::spline: return "spline";
    }
    return "?";
}

inline const char* noise_kind(NoiseKind k) {
    switch (k) {
        case NoiseKind::constant: return "constant";
        case NoiseKind::polynomial: return "log_polynomial";
        case NoiseKind::spline: return "spline";
    }
    return "?";
}

inline Transform transform_from(const std::string& s) {
    if (s == "identity") return Transform::identity;
    if (s == "log") return Transform::log;
    if (s == "logistic") return Transform::alpha_range;
    if (s == "tanh") return Transform::beta_range;
    throw ConfigError("model: unknown transform '" + s + "'");
}

}  // namespace report_detail

/// Lossless structural form: a parameter table plus per-dimension structure
/// referring to parameters by name.
inline json model_to_json(const ModelSpec& m) {
    using namespace report_detail;
    json j;
    json params = json::array();
    for (const auto& p : m.params)
        params.push_back({{"name", p.name},
                          {"value", p.value},
                          {"transform", transform_name(p.transform)},
                          {"free", p.free},
                          {"dimension", p.dimension + 1}});
    j["parameters"] = params;
    auto name = [&](std::size_t k) { return m.params[k].name; };
    auto terms = [&](const std::vector<Term>& ts) {
        json a = json::array();
        for (const auto& t : ts) a.push_back({{"param", name(t.param)}, {"sign", t.sign}, {"powers", t.powers}});
        return a;
    };
    auto names = [&](const std::vector<std::size_t>& ks) {
        json a = json::array();
        for (auto k : ks) a.push_back(name(k));
        return a;
    };
    json dims = json::array();
    for (const auto& d : m.dims) {
        json dj;
        dj["label"] = d.label;
        json dr{{"kind", drift_kind(d.drift.kind)}};
        switch (d.drift.kind) {
            case DriftKind::polynomial: dr["terms"] = terms(d.drift.terms); break;
            case DriftKind::lotka_volterra:
                dr["rate"] = name(d.drift.rate);
                dr["interaction"] = names(d.drift.interaction);
                break;
            case DriftKind::spline:
                dr["knots"] = d.drift.knots;
                dr["ordinates"] = names(d.drift.ordinates);
                break;
        }
        json nz{{"kind", noise_kind(d.noise.kind)}};
        switch (d.noise.kind) {
            case NoiseKind::constant: nz["level"] = name(d.noise.level); break;
            case NoiseKind::polynomial: nz["terms"] = terms(d.noise.terms); break;
            case NoiseKind::spline:
                nz["knots"] = d.noise.knots;
                nz["ordinates"] = names(d.noise.ordinates);
                break;
        }
        dj["drift"] = dr;
        dj["noise"] = nz;
        dj["alpha"] = name(d.alpha);
        dj["beta"] = name(d.beta);
        dims.push_back(dj);
    }
    j["dimensions"] = dims;
    return j;
}

namespace report_detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing '" + std::string(key) + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + ": '" + std::string(key) + "' has the wrong type");
    }
}

}  // namespace report_detail

/// Inverse of model_to_json.
inline ModelSpec model_from_structural_json(const json& j) {
    using namespace report_detail;
    const std::string where = "model";
    check_keys(j, {"parameters", "dimensions"}, where);
    ModelSpec m;
    for (const auto& pj : get<json>(j, "parameters", where)) {
        check_keys(pj, {"name", "value", "transform", "free", "dimension"}, where + " parameter");
        Parameter p;
        p.name = get<std::string>(pj, "name", where);
        p.value = pj.contains("value") && pj["value"].is_null() ? std::nan("") : get<double>(pj, "value", where);
        p.transform = transform_from(get<std::string>(pj, "transform", where));
        p.free = get<bool>(pj, "free", where);
        p.dimension = get<int>(pj, "dimension", where) - 1;
        if (m.find(p.name)) throw ConfigError("model: duplicate parameter name '" + p.name + "'");
        m.params.push_back(p);
    }
    auto ref = [&](const json& v) {
        const auto k = m.find(v.get<std::string>());
        if (!k) throw ConfigError("model: reference to unknown parameter '" + v.get<std::string>() + "'");
        return *k;
    };
    auto terms = [&](const json& a) {
        std::vector<Term> ts;
        for (const auto& t : a) {
            check_keys(t, {"param", "sign", "powers"}, where + " term");
            ts.push_back({ref(t.at("param")), get<double>(t, "sign", where), get<std::vector<int>>(t, "powers", where)});
        }
        return ts;
    };
    for (const auto& dj : get<json>(j, "dimensions", where)) {
        check_keys(dj, {"label", "drift", "noise", "alpha", "beta"}, where + " dimension");
        Dimension d;
        d.label = get<std::string>(dj, "label", where);
        const json& dr = dj.at("drift");
        const auto dk = get<std::string>(dr, "kind", where);
        if (dk == "polynomial") {
            check_keys(dr, {"kind", "terms"}, where + " drift");
            d.drift.kind = DriftKind::polynomial;
            d.drift.terms = terms(dr.at("terms"));
        } else if (dk == "lotka_volterra") {
            check_keys(dr, {"kind", "rate", "interaction"}, where + " drift");
            d.drift.kind = DriftKind::lotka_volterra;
            d.drift.rate = ref(dr.at("rate"));
            for (const auto& v : dr.at("interaction")) d.drift.interaction.push_back(ref(v));
        } else if (dk == "spline") {
            check_keys(dr, {"kind", "knots", "ordinates"}, where + " drift");
            d.drift.kind = DriftKind::spline;
            d.drift.knots = get<std::vector<double>>(dr, "knots", where);
            for (const auto& v : dr.at("ordinates")) d.drift.ordinates.push_back(ref(v));
        } else {
            throw ConfigError("model: unknown drift kind '" + dk + "'");
        }
        const json& nz = dj.at("noise");
        const auto nk = get<std::string>(nz, "kind", where);
        if (nk == "constant") {
            check_keys(nz, {"kind", "level"}, where + " noise");
            d.noise.kind = NoiseKind::constant;
            d.noise.level = ref(nz.at("level"));
        } else if (nk == "log_polynomial") {
            check_keys(nz, {"kind", "terms"}, where + " noise");
            d.noise.kind = NoiseKind::polynomial;
            d.noise.terms = terms(nz.at("terms"));
        } else if (nk == "spline") {
            check_keys(nz, {"kind", "knots", "ordinates"}, where + " noise");
            d.noise.kind = NoiseKind::spline;
            d.noise.knots = get<std::vector<double>>(nz, "knots", where);
            for (const auto& v : nz.at("ordinates")) d.noise.ordinates.push_back(ref(v));
        } else {
            throw ConfigError("model: unknown noise kind '" + nk + "'");
        }
        d.alpha = ref(dj.at("alpha"));
        d.beta = ref(dj.at("beta"));
        m.dims.push_back(std::move(d));
    }
    m.validate();
    return m;
}

// ---------------------------------------------------------------- fit report

/// Diagnostics attached to a fit report.
struct Diagnostics {
    std::vector<KsResult> ks;  ///< one per dimension
};

namespace report_detail {

inline json matrix(const Eigen::MatrixXd& a) {
    json rows = json::array();
    for (long r = 0; r < a.rows(); ++r) {
        json row = json::array();
        for (long c = 0; c < a.cols(); ++c) row.push_back(a(r, c));
        rows.push_back(row);
    }
    return rows;
}

// Knot abscissa of a spline ordinate parameter, if it is one.
inline std::optional<double> knot_of(const ModelSpec& m, std::size_t k) {
    for (const auto& d : m.dims) {
        for (std::size_t j = 0; j < d.drift.ordinates.size(); ++j)
            if (d.drift.kind == DriftKind::spline && d.drift.ordinates[j] == k) return d.drift.knots[j];
        for (std::size_t j = 0; j < d.noise.ordinates.size(); ++j)
            if (d.noise.kind == NoiseKind::spline && d.noise.ordinates[j] == k) return d.noise.knots[j];
    }
    return std::nullopt;
}

}  // namespace report_detail

/// Structured report: parameter table in model order, likelihoods, information
/// matrix, diagnostics and notes. Deterministic key order.
inline json model_report(const FitResult& fit, const Diagnostics& diag = {}) {
    using namespace report_detail;
    json r;
    r["converged"] = fit.converged;
    json table = json::array();
    for (std::size_t k = 0; k < fit.names.size(); ++k) {
        json row{{"name", fit.names[k]}, {"estimate", fit.estimates[k]}, {"std_error", fit.std_errors[k]}};
        if (auto x = knot_of(fit.model, fit.index[k])) row["knot"] = *x;
        row["dimension"] = fit.model.params[fit.index[k]].dimension + 1;
        table.push_back(row);
    }
    r["parameters"] = table;
    r["loglik"] = fit.loglik;
    const double kparams = static_cast<double>(fit.names.size());
    const double n = static_cast<double>(fit.transitions_total);
    r["aic"] = 2.0 * kparams - 2.0 * fit.loglik;
    r["bic"] = kparams * std::log(n) - 2.0 * fit.loglik;
    r["transitions_total"] = fit.transitions_total;
    r["transitions_used"] = fit.transitions_used;
    if (fit.two_pass) {
        json tp;
        tp["scheme"] = "pass 1 fits all free parameters on transitions starting inside the truncation box; "
                       "pass 2 refits index and skewness on all transitions with drift and noise frozen";
        tp["loglik_pass1"] = *fit.loglik_pass1;
        tp["loglik_pass2"] = *fit.loglik_pass2;
        json b = json::array();
        for (const auto& [lo, hi] : fit.truncation) b.push_back(json::array({lo, hi}));
        tp["truncation"] = b;
        r["two_pass"] = tp;
    }
    r["n_objective_calls"] = fit.n_objective_calls;
    r["observed_information"] = matrix(fit.observed_information);
    r["covariance"] = matrix(fit.covariance);
    if (!diag.ks.empty()) {
        json ks = json::array();
        for (std::size_t i = 0; i < diag.ks.size(); ++i) {
            const auto& k = diag.ks[i];
            ks.push_back({{"dimension", i + 1},
                          {"statistic", k.statistic},
                          {"cutoff", k.cutoff},
                          {"p_value", k.p_value},
                          {"level", k.level},
                          {"n", k.n},
                          {"pass", k.pass}});
        }
        r["ks_residual_test"] = ks;
    }
    r["conventions"] = {{"stable_parameterization", "S1 (classical)"},
                        {"likelihood", "Euler transition density including the 1/sigma(X) Jacobian"},
                        {"spline", "natural cubic, linear extrapolation beyond the end knots; noise splines interpolate log sigma"},
                        {"standard_errors", "square roots of the diagonal of the inverse observed information"}};
    r["notes"] = fit.notes;
    r["model"] = model_to_json(fit.model);
    return r;
}

/// Human-readable summary of a report produced by model_report.
inline std::string report_text(const json& r) {
    std::ostringstream out;
    char buf[256];
    const bool converged = r.value("converged", false);
    out << (converged ? "converged: yes\n" : "*** NOT CONVERGED ***\n");
    std::snprintf(buf, sizeof buf, "%-16s %16s %14s\n", "parameter", "estimate", "std.error");
    out << buf;
    for (const auto& row : r.at("parameters")) {
        const double se = row["std_error"].is_null() ? std::nan("") : row["std_error"].get<double>();
        std::snprintf(buf, sizeof buf, "%-16s %16.8g %14.6g\n", row["name"].get<std::string>().c_str(),
                      row["estimate"].get<double>(), se);
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "log-likelihood   %.10g\n", r.at("loglik").get<double>());
    out << buf;
    if (r.contains("two_pass")) {
        std::snprintf(buf, sizeof buf, "pass 1 (truncated) log-likelihood %.10g\npass 2 (all data) log-likelihood  %.10g\n",
                      r["two_pass"]["loglik_pass1"].get<double>(), r["two_pass"]["loglik_pass2"].get<double>());
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "transitions used %zu of %zu\n", r.value("transitions_used", std::size_t{0}),
                  r.value("transitions_total", std::size_t{0}));
    out << buf;
    if (r.contains("ks_residual_test"))
        for (const auto& k : r["ks_residual_test"]) {
            std::snprintf(buf, sizeof buf, "KS residuals dim %d: D = %.5f (cutoff %.5f at %g) %s\n", k["dimension"].get<int>(),
                          k["statistic"].get<double>(), k["cutoff"].get<double>(), k["level"].get<double>(),
                          k["pass"].get<bool>() ? "pass" : "FAIL");
            out << buf;
        }
    for (const auto& n : r.value("notes", json::array())) out << "note: " << n.get<std::string>() << '\n';
    return out.str();
}

}  // namespace levymle
