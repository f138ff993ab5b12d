// levymle: simulate, fit and inspect stable-Levy-driven SDE models.
// Exit codes: 0 success, 1 usage or configuration, 2 data, 3 numerical failure
// (including a fit that did not converge).

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "levymle/levymle.hpp"

namespace fs = std::filesystem;
using namespace levymle;

namespace {

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<unsigned> threads;
    std::optional<double> alpha, beta, delta_t, x;
    std::optional<int> knots;
    std::string model;   // fitted model or report for `residuals`
    std::string data;    // data file for `potential` without a config
    std::string report;  // report to render
};

// Stage currently running, named in error messages.
std::string stage = "setup";

RunConfig load(const Flags& f, bool required) {
    RunConfig c;
    if (!f.config.empty()) {
        stage = "config";
        c = load_config(f.config);
    } else if (required) {
        throw ConfigError("--config is required for this command");
    }
    if (f.seed) {
        c.seed = *f.seed;
        c.fit.options.seed = *f.seed;
    }
    if (f.threads) {
        if (*f.threads < 1) throw ConfigError("--threads must be at least 1");
        c.threads = *f.threads;
        c.fit.options.threads = *f.threads;
    }
    if (f.out) c.output = fs::absolute(*f.out).string();
    if (f.delta_t) {
        if (!(*f.delta_t > 0.0)) throw ConfigError("--delta-t must be positive");
        if (c.data) c.data->delta = *f.delta_t;
        if (c.simulate) c.simulate->delta = *f.delta_t;
    }
    if (f.knots && c.model) *c.model = override_knot_count(*c.model, *f.knots);
    return c;
}

fs::path output_dir(const RunConfig& c) {
    const fs::path dir = c.output_dir();
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory '" + dir.string() + "': " + ec.message());
    return dir;
}

void set_stable(ModelSpec& m, const Flags& f) {
    for (auto& d : m.dims) {
        if (f.alpha) m.params[d.alpha].value = *f.alpha;
        if (f.beta) m.params[d.beta].value = *f.beta;
    }
}

std::optional<std::pair<double, double>> knot_range(const RunConfig& c, const TimeSeries& ts) {
    if (!c.model || !needs_knot_range(*c.model)) return std::nullopt;
    if (c.fit.options.truncate) return truncation_bounds(ts, c.fit.options).front();
    const auto col = ts.column(0);
    const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
    return std::make_pair(*lo, *hi);
}

void write_residuals(const fs::path& path, const Residuals& r) {
    std::vector<std::string> header;
    std::vector<std::vector<double>> cols;
    for (std::size_t i = 0; i < r.dim; ++i) {
        header.push_back("eta" + std::to_string(i + 1));
        std::vector<double> c(r.size());
        for (std::size_t t = 0; t < r.size(); ++t) c[t] = r.at(t, i);
        cols.push_back(std::move(c));
    }
    header.push_back("included");
    std::vector<double> inc(r.size());
    for (std::size_t t = 0; t < r.size(); ++t) inc[t] = r.mask[t] ? 1.0 : 0.0;
    cols.push_back(std::move(inc));
    write_table(path.string(), header, cols);
}

Diagnostics diagnose(const Residuals& res, const ModelSpec& model, double level, std::vector<std::string>& notes) {
    Diagnostics d;
    for (std::size_t i = 0; i < res.dim; ++i) {
        try {
            d.ks.push_back(ks_residual_test(res, i, model.stable(i), level));
        } catch (const DataError& e) {
            notes.push_back(std::string("KS test skipped: ") + e.what());
            d.ks.clear();
            break;
        }
    }
    return d;
}

int cmd_simulate(const Flags& f) {
    RunConfig c = load(f, true);
    if (!c.model) throw ConfigError("config: a 'model' section is required to simulate");
    if (!c.simulate) throw ConfigError("config: a 'simulate' section is required to simulate");
    stage = "model";
    ModelSpec m = build_model(*c.model);
    set_stable(m, f);
    SimConfig sc;
    sc.model = m;
    sc.x0 = c.simulate->x0;
    sc.delta = c.simulate->delta;
    sc.n_steps = c.simulate->n_steps;
    sc.burn_in = c.simulate->burn_in;
    sc.cap = c.simulate->cap;
    sc.seed = c.seed;
    sc.validate();
    const fs::path dir = output_dir(c);
    stage = "simulate";
    TimeSeries ts = simulate_path(sc);
    if (c.simulate->transform == "exp")
        for (double& v : ts.values) v = std::exp(v);
    stage = "output";
    write_csv((dir / "series.csv").string(), ts, false);
    json meta;
    meta["rows"] = ts.size();
    meta["columns"] = ts.labels;
    meta["delta"] = sc.delta;
    meta["seed"] = sc.seed;
    meta["config"] = config_to_json(c, m);
    write_text_file((dir / "metadata.json").string(), dump_json(meta));
    std::printf("wrote %zu rows x %zu columns to %s\n", ts.size(), ts.dim, (dir / "series.csv").string().c_str());
    return 0;
}

int cmd_fit(const Flags& f) {
    RunConfig c = load(f, true);
    if (!c.model) throw ConfigError("config: a 'model' section is required to fit");
    stage = "ingest";
    const TimeSeries ts = load_data(c);
    stage = "model";
    const ModelSpec tmpl = build_model(*c.model, knot_range(c, ts));
    if (tmpl.dimension() != ts.dim)
        throw ConfigError("model has " + std::to_string(tmpl.dimension()) + " dimensions, data have " +
                          std::to_string(ts.dim) + " columns");
    const fs::path dir = output_dir(c);
    stage = "fit";
    FitResult fit = c.fit.options.truncate ? two_pass_fit(ts, tmpl, c.fit.options) : fit_mle(ts, tmpl, c.fit.options);
    stage = "diagnostics";
    const Residuals res = compute_residuals(ts, fit.model);
    const Diagnostics diag = diagnose(res, fit.model, c.fit.ks_level, fit.notes);
    stage = "output";
    json report = model_report(fit, diag);
    report["config"] = config_to_json(c, tmpl);
    write_text_file((dir / "report.json").string(), dump_json(report));
    const std::string text = report_text(report);
    write_text_file((dir / "report.txt").string(), text);
    write_residuals(dir / "residuals.csv", res);
    std::fputs(text.c_str(), stdout);
    return fit.converged ? 0 : 3;
}

int cmd_density(const Flags& f, bool cdf) {
    RunConfig c = load(f, false);
    const double a = f.alpha.value_or(c.pdf.alpha), b = f.beta.value_or(c.pdf.beta);
    const StableParams p = StableParams::standard(a, b);
    p.validate();
    stage = cdf ? "cdf" : "pdf";
    auto eval = [&](double x) { return cdf ? stable_cdf(x, p) : stable_pdf(x, p); };
    if (f.x) {
        std::printf("%.10g\n", eval(*f.x));
        return 0;
    }
    const fs::path dir = output_dir(c);
    std::vector<double> xs(c.pdf.points), ys(c.pdf.points);
    const double span = c.pdf.x_max - c.pdf.x_min;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        xs[k] = c.pdf.x_min + span * static_cast<double>(k) / static_cast<double>(xs.size() - 1);
        ys[k] = eval(xs[k]);
    }
    const fs::path path = dir / (cdf ? "cdf.csv" : "pdf.csv");
    write_table(path.string(), {"x", cdf ? "cdf" : "pdf"}, {xs, ys});
    std::printf("wrote %zu points to %s\n", xs.size(), path.string().c_str());
    return 0;
}

int cmd_residuals(const Flags& f) {
    RunConfig c = load(f, true);
    stage = "ingest";
    const TimeSeries ts = load_data(c);
    stage = "model";
    ModelSpec m;
    if (!f.model.empty()) {
        const json j = read_json_file(f.model);
        m = build_model(j.contains("model") ? j["model"] : j);
    } else if (c.model) {
        m = build_model(*c.model, knot_range(c, ts));
    } else {
        throw ConfigError("residuals need a fitted model (--model) or a 'model' section");
    }
    set_stable(m, f);
    stage = "residuals";
    const Residuals res = compute_residuals(ts, m);
    const fs::path dir = output_dir(c);
    write_residuals(dir / "residuals.csv", res);
    std::vector<std::string> notes;
    const Diagnostics d = diagnose(res, m, c.fit.ks_level, notes);
    for (std::size_t i = 0; i < d.ks.size(); ++i)
        std::printf("dimension %zu: KS D = %.6f, cutoff %.6f, p = %.4g, %s\n", i + 1, d.ks[i].statistic, d.ks[i].cutoff,
                    d.ks[i].p_value, d.ks[i].pass ? "pass" : "FAIL");
    for (const auto& n : notes) std::printf("note: %s\n", n.c_str());
    std::printf("wrote %zu residual rows to %s\n", res.size(), (dir / "residuals.csv").string().c_str());
    return 0;
}

int cmd_potential(const Flags& f) {
    RunConfig c = load(f, f.data.empty());
    if (!f.data.empty()) {
        DataConfig d = c.data.value_or(DataConfig{});
        d.path = fs::absolute(f.data).string();
        if (f.delta_t) d.delta = *f.delta_t;
        if (!d.delta) d.delta = 1.0;  // the potential does not depend on the time step
        c.data = d;
    }
    stage = "ingest";
    const TimeSeries ts = load_data(c);
    const auto& pc = c.potential;
    if (pc.dimension > ts.dim)
        throw ConfigError("potential: dimension " + std::to_string(pc.dimension) + " but the data have " +
                          std::to_string(ts.dim) + " columns");
    stage = "potential";
    const auto sample = ts.column(pc.dimension - 1);
    const PotentialCurve curve = effective_potential(sample, pc.grid_size, pc.bandwidth);
    const auto all = local_minima(curve.U, pc.separation);
    const auto sig = significant_minima(curve, pc.separation, pc.min_count, pc.min_depth);
    const fs::path dir = output_dir(c);
    write_table((dir / "potential.csv").string(), {"x", "U"}, {curve.x, curve.U});
    json summary;
    summary["bandwidth"] = curve.bandwidth;
    summary["sample_size"] = curve.sample_size;
    json mins = json::array();
    for (auto k : sig) mins.push_back({{"x", curve.x[k]}, {"U", curve.U[k]}});
    summary["minima"] = mins;
    summary["raw_local_minima"] = all.size();
    summary["settings"] = config_to_json(c)["potential"];
    write_text_file((dir / "potential.json").string(), dump_json(summary));
    std::printf("bandwidth %.6g, %zu minima", curve.bandwidth, sig.size());
    for (std::size_t m = 0; m < sig.size(); ++m) std::printf("%s x = %.4f", m ? "," : ":", curve.x[sig[m]]);
    std::printf("\nwrote %s\n", (dir / "potential.csv").string().c_str());
    return 0;
}

int cmd_report(const Flags& f) {
    if (f.report.empty()) throw ConfigError("report needs --report PATH");
    stage = "report";
    const json r = read_json_file(f.report);
    if (!r.contains("parameters") || !r.contains("loglik")) throw ConfigError("'" + f.report + "' is not a fit report");
    const std::string text = report_text(r);
    if (f.out) {
        fs::create_directories(*f.out);
        write_text_file((fs::path(*f.out) / "report.txt").string(), text);
    }
    std::fputs(text.c_str(), stdout);
    return r.value("converged", false) ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and maximum-likelihood reconstruction of stable-Levy-driven SDEs"};
    app.require_subcommand(1);
    Flags f;
    auto common = [&](CLI::App* s) {
        s->add_option("--config", f.config, "JSON run configuration");
        s->add_option("--seed", f.seed, "random seed");
        s->add_option("--out", f.out, "output directory");
        s->add_option("--threads", f.threads, "worker threads");
    };
    auto* sim = app.add_subcommand("simulate", "simulate a path; writes series.csv and metadata.json");
    common(sim);
    sim->add_option("--alpha", f.alpha, "override every alpha");
    sim->add_option("--beta", f.beta, "override every beta");
    sim->add_option("--delta-t", f.delta_t, "override the time step");
    sim->add_option("--knots", f.knots, "equidistant knot count for spline models");
    auto* fit = app.add_subcommand("fit", "fit a model; writes report.json, report.txt and residuals.csv");
    common(fit);
    fit->add_option("--delta-t", f.delta_t, "sampling step of the data");
    fit->add_option("--knots", f.knots, "equidistant knot count for spline models");
    auto* pdf = app.add_subcommand("pdf", "standard stable density; writes pdf.csv or prints one value");
    auto* cdf = app.add_subcommand("cdf", "standard stable CDF; writes cdf.csv or prints one value");
    for (auto* s : {pdf, cdf}) {
        common(s);
        s->add_option("--alpha", f.alpha, "index in (0, 2]");
        s->add_option("--beta", f.beta, "skewness in [-1, 1]");
        s->add_option("--x", f.x, "evaluate at a single point");
    }
    auto* resid = app.add_subcommand("residuals", "standardized innovations of a model on the data");
    common(resid);
    resid->add_option("--model", f.model, "fitted model or report JSON");
    resid->add_option("--delta-t", f.delta_t, "sampling step of the data");
    resid->add_option("--alpha", f.alpha, "override every alpha");
    resid->add_option("--beta", f.beta, "override every beta");
    auto* pot = app.add_subcommand("potential", "effective potential U = -log p; writes potential.csv");
    common(pot);
    pot->add_option("--data", f.data, "CSV series, replacing the path in the config data section");
    pot->add_option("--delta-t", f.delta_t, "sampling step of the data");
    auto* rep = app.add_subcommand("report", "print the summary of a fit report");
    rep->add_option("--report", f.report, "report.json")->required();
    rep->add_option("--out", f.out, "also write report.txt here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }
    const CLI::App* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    try {
        if (name == "simulate") return cmd_simulate(f);
        if (name == "fit") return cmd_fit(f);
        if (name == "pdf") return cmd_density(f, false);
        if (name == "cdf") return cmd_density(f, true);
        if (name == "residuals") return cmd_residuals(f);
        if (name == "potential") return cmd_potential(f);
        if (name == "report") return cmd_report(f);
    } catch (const Error& e) {
        std::fprintf(stderr, "levymle %s: %s stage failed: %s\n", name.c_str(), stage.c_str(), e.what());
        return e.exit_code();
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "levymle %s: %s stage failed: %s\n", name.c_str(), stage.c_str(), e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "levymle %s: %s stage failed: %s\n", name.c_str(), stage.c_str(), e.what());
        return 3;
    }
    return 1;
}
