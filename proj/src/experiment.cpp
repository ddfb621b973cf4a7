#include "selmut/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

namespace selmut {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kReservedModelKeys = {"name"};

std::string padded(std::size_t k) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03zu", k);
    return buf;
}

void write_manifest(const fs::path& dir, const ExperimentConfig& cfg, const std::string& mode) {
    Config manifest = cfg.resolved;
    manifest.set("experiment.mode", mode);
    write_text(dir / "manifest.conf", manifest.serialize());
}

// At most `limit` evenly strided points, always keeping the last one.
PlotSeries thin(std::string name, const Vec& x, const Vec& y, std::size_t limit = 2000) {
    PlotSeries s{std::move(name), {}, {}};
    const std::size_t stride = std::max<std::size_t>(1, (x.size() + limit - 1) / limit);
    for (std::size_t k = 0; k < x.size(); k += stride) {
        s.x.push_back(x[k]);
        s.y.push_back(y[k]);
    }
    if (!x.empty() && s.x.back() != x.back()) {
        s.x.push_back(x.back());
        s.y.push_back(y.back());
    }
    return s;
}

void write_trajectory(const fs::path& dir, const Trajectory& traj) {
    write_csv(dir / "trajectory.csv", {"t", "mass", "nu_min", "nu_max", "w_min", "w_max"},
              {traj.times, traj.mass, traj.nu_min, traj.nu_max, traj.w_min, traj.w_max});
    PlotStyle style;
    style.title = "total mass";
    style.xlabel = "t";
    style.ylabel = "rho_h(t)";
    write_text(dir / "mass.svg", emit_plot({thin("rho_h", traj.times, traj.mass)}, style));
}

void write_snapshot(const fs::path& path, const ParticleEnsemble& ens) {
    std::vector<std::string> header = {"label"};
    std::vector<Vec> cols(1);
    for (std::size_t l = 0; l < ens.dim; ++l) header.push_back("x" + std::to_string(l + 1));
    header.push_back("w");
    header.push_back("nu");
    cols.resize(header.size());
    for (std::size_t i = 0; i < ens.size(); ++i) {
        cols[0].push_back(static_cast<double>(ens.labels[i]));
        for (std::size_t l = 0; l < ens.dim; ++l) cols[1 + l].push_back(ens.positions[i * ens.dim + l]);
        cols[1 + ens.dim].push_back(ens.volumes[i]);
        cols[2 + ens.dim].push_back(ens.intensities[i]);
    }
    write_csv(path, header, cols);
}

Box position_hull(const ParticleEnsemble& ens) {
    const std::size_t d = ens.dim;
    Vec lo(d, std::numeric_limits<double>::infinity()), hi(d, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < ens.size(); ++i) {
        for (std::size_t l = 0; l < d; ++l) {
            lo[l] = std::min(lo[l], ens.positions[i * d + l]);
            hi[l] = std::max(hi[l], ens.positions[i * d + l]);
        }
    }
    return Box(lo, hi);
}

struct Frame {
    SampleGrid grid;
    Vec values;
};

Frame reconstruct_frame(const ParticleEnsemble& ens, const CutoffSpec& phi, double eps, int workers) {
    const double spacing = ens.dim == 1 ? eps / 4.0 : eps / 2.0;
    Frame f;
    f.grid = SampleGrid::with_spacing(position_hull(ens).dilated(phi.radius * eps), spacing);
    f.values = reconstruct(ens, phi, eps, f.grid, workers);
    return f;
}

void write_frame(const fs::path& path, const Frame& f) {
    std::vector<std::string> header;
    std::vector<Vec> cols(f.grid.dim + 1);
    for (std::size_t l = 0; l < f.grid.dim; ++l) header.push_back("x" + std::to_string(l + 1));
    header.push_back("v");
    for (std::size_t g = 0; g < f.grid.size(); ++g) {
        for (std::size_t l = 0; l < f.grid.dim; ++l) cols[l].push_back(f.grid.points[g * f.grid.dim + l]);
        cols[f.grid.dim].push_back(f.values[g]);
    }
    write_csv(path, header, cols);
}

void write_profile_plot(const fs::path& path, const Frame& f, const std::string& title,
                        const ReferenceGrid* oracle = nullptr) {
    if (f.grid.dim != 1) return;
    std::vector<PlotSeries> series = {thin("v_eps^h", f.grid.points, f.values)};
    if (oracle != nullptr) {
        Vec xs, vs;
        const Box& s = oracle->support();
        const auto& g = oracle->grid();
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (g.points[k] >= s.lo[0] && g.points[k] <= s.hi[0]) {
                xs.push_back(g.points[k]);
                vs.push_back(oracle->values()[k]);
            }
        }
        if (!xs.empty()) series.push_back(thin("reference", xs, vs));
    }
    PlotStyle style;
    style.title = title;
    style.ylabel = "v";
    write_text(path, emit_plot(series, style));
}

void put_monitors(KvReport& r, const std::string& section, const MonitorSummary& m) {
    r.put(section, "mass_bound", m.mass_bound);
    r.put(section, "max_mass_excess", m.max_mass_excess);
    r.put(section, "max_support_excess", m.max_support_excess);
    r.put(section, "min_nu_ratio", m.min_nu_ratio);
    r.put(section, "outside_active_box", static_cast<double>(m.outside_active_box));
}

void put_fit(KvReport& r, const std::string& section, const std::string& prefix, const std::optional<OrderFit>& fit) {
    if (!fit) {
        r.put(section, prefix + "_order", "unavailable");
        return;
    }
    r.put(section, prefix + "_order", fit->slope);
    r.put(section, prefix + "_order_stderr", fit->slope_stderr);
    r.put(section, prefix + "_fit_residual", fit->residual);
}

std::optional<OrderFit> try_fit(const Vec& h, const Vec& e) {
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t k = 0; k < h.size(); ++k) pairs.emplace_back(h[k], e[k]);
    try {
        return fit_convergence_order(pairs);
    } catch (const UsageError&) {
        return std::nullopt;
    }
}

RunConfig run_for(const ExperimentConfig& cfg, double T) {
    RunConfig run = cfg.run;
    run.T_final = T;
    return run;
}

// Oracle with dx halved until the total mass settles to the refinement tolerance.
std::optional<ReferenceGrid> refined_oracle(const ModelSpec& model, const InitialDensity& v0, const ExperimentConfig& cfg,
                                            double T, Vec& dx_out, Vec& mass_out) {
    ReferenceOptions opts = cfg.oracle_options;
    opts.workers = cfg.run.workers;
    std::optional<ReferenceGrid> oracle;
    for (int k = 0; k <= cfg.oracle_refinements; ++k) {
        oracle = solve_reference(model, v0, T, opts);
        dx_out.push_back(opts.dx);
        mass_out.push_back(oracle->total_mass());
        if (k > 0 && std::abs(mass_out[k] - mass_out[k - 1]) <= cfg.oracle_refine_tol) break;
        opts.dx *= 0.5;
    }
    return oracle;
}

void write_oracle(const fs::path& path, const ReferenceGrid& oracle) {
    Vec xs, vs;
    const Box& s = oracle.support();
    const auto& g = oracle.grid();
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (g.points[k] >= s.lo[0] && g.points[k] <= s.hi[0]) {
            xs.push_back(g.points[k]);
            vs.push_back(oracle.values()[k]);
        }
    }
    write_csv(path, {"x", "v"}, {xs, vs});
}

Vec widths_over(const Vec& counts, double width, const std::string& key) {
    Vec out;
    for (double n : counts) {
        if (!(n >= 1.0) || n != std::floor(n)) throw UsageError(key + ": particle counts must be positive integers");
        out.push_back(width / n);
    }
    return out;
}

}  // namespace

const std::vector<std::string>& known_config_keys() {
    static const std::vector<std::string> keys = {
        "model.name", "model.r0", "model.r1", "model.a1", "model.a2", "model.a_sup",
        "initial.name", "initial.lo", "initial.hi", "initial.center", "initial.width", "initial.level",
        "discretization.h", "discretization.N", "discretization.h_list", "discretization.N_list",
        "regularization.cutoff", "regularization.radius", "regularization.eps_rule", "regularization.eps_q",
        "regularization.kappa", "regularization.r",
        "run.T", "run.dt", "run.snapshot_every", "run.negative_alarm", "run.workers",
        "oracle.enabled", "oracle.dx", "oracle.dt", "oracle.char_dt", "oracle.tol", "oracle.max_iterations",
        "oracle.min_dt", "oracle.refine_tol", "oracle.refinements",
        "asymptote.window", "asymptote.pos_tol", "asymptote.mass_tol", "asymptote.gap_floor",
        "output.dir", "output.seed"};
    return keys;
}

ExperimentConfig resolve_experiment(Config cfg) {
    std::vector<std::string> keys = known_config_keys();
    for (const auto& [k, v] : cfg.values()) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    cfg.apply_env(keys);

    ExperimentConfig out;
    Config& echo = out.resolved;
    auto text = [&](const std::string& key, const std::string& fallback) {
        const std::string v = cfg.get(key, fallback);
        if (!v.empty()) echo.set(key, v);
        return v;
    };
    auto number = [&](const std::string& key, double fallback) {
        const double v = cfg.get_double(key, fallback);
        echo.set(key, cfg.has(key) ? cfg.get(key, "") : format_number(fallback));
        return v;
    };
    auto integer = [&](const std::string& key, long long fallback) {
        const long long v = cfg.get_int(key, fallback);
        echo.set(key, cfg.has(key) ? cfg.get(key, "") : std::to_string(fallback));
        return v;
    };
    auto flag = [&](const std::string& key, bool fallback) {
        const std::string v = text(key, fallback ? "true" : "false");
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw UsageError(key + ": expected true or false, got '" + v + "'");
    };

    out.model_name = text("model.name", "");
    if (out.model_name.empty()) throw UsageError("config: model.name is required");
    for (const auto& [k, v] : cfg.section("model")) {
        if (kReservedModelKeys.count(k)) continue;
        out.model_params[k] = v;
        echo.set("model." + k, v);
    }
    const ModelSpec model = make_preset(out.model_name, out.model_params);

    out.v0_name = text("initial.name", "");
    if (out.v0_name.empty()) throw UsageError("config: initial.name is required");
    for (const auto& [k, v] : cfg.section("initial")) {
        if (k == "name") continue;
        out.v0_params[k] = cfg.get_list("initial." + k);
        echo.set("initial." + k, v);
    }
    const InitialDensity v0 = make_initial_density(out.v0_name, out.v0_params, model.dim);
    const double width = v0.support.width(0);

    if (cfg.has("discretization.h") && cfg.has("discretization.N")) {
        throw UsageError("config: give discretization.h or discretization.N, not both");
    }
    if (cfg.has("discretization.h")) out.h = number("discretization.h", 0.0);
    if (cfg.has("discretization.N")) out.h = widths_over({static_cast<double>(integer("discretization.N", 0))}, width, "discretization.N")[0];
    if (cfg.has("discretization.h") && !(out.h > 0.0)) throw UsageError("discretization.h must be positive");
    if (cfg.has("discretization.h_list") && cfg.has("discretization.N_list")) {
        throw UsageError("config: give discretization.h_list or discretization.N_list, not both");
    }
    if (cfg.has("discretization.h_list")) {
        out.h_list = cfg.get_list("discretization.h_list");
        echo.set("discretization.h_list", cfg.get("discretization.h_list", ""));
    }
    if (cfg.has("discretization.N_list")) {
        out.h_list = widths_over(cfg.get_list("discretization.N_list"), width, "discretization.N_list");
        echo.set("discretization.N_list", cfg.get("discretization.N_list", ""));
    }
    for (std::size_t k = 0; k < out.h_list.size(); ++k) {
        if (!(out.h_list[k] > 0.0)) throw UsageError("discretization: h values must be positive");
        if (k > 0 && !(out.h_list[k] < out.h_list[k - 1])) {
            throw UsageError("discretization: h values must be strictly decreasing");
        }
    }

    out.cutoff = text("regularization.cutoff", "gaussian");
    if (cfg.has("regularization.radius")) out.cutoff_params["radius"] = number("regularization.radius", 3.0);
    const CutoffSpec phi = make_cutoff(out.cutoff, out.cutoff_params);
    const std::string rule = text("regularization.eps_rule", "power");
    if (rule == "power") {
        out.eps_rule = EpsilonRule::power(number("regularization.eps_q", 0.5));
    } else if (rule == "optimal") {
        out.eps_rule = EpsilonRule::optimal(static_cast<int>(integer("regularization.kappa", model.kappa)),
                                            static_cast<int>(integer("regularization.r", phi.r_order)));
    } else {
        throw UsageError("regularization.eps_rule must be 'power' or 'optimal', got '" + rule + "'");
    }
    const double q = out.eps_rule.exponent();
    if (!(q > 0.0 && q < 1.0)) throw UsageError("regularization: the epsilon exponent must lie in (0, 1)");

    out.run.T_final = number("run.T", 1.0);
    if (!(out.run.T_final > 0.0)) throw UsageError("run.T must be positive");
    out.run.dt = number("run.dt", 0.0);
    if (out.run.dt < 0.0) throw UsageError("run.dt must be non-negative");
    const long long every = integer("run.snapshot_every", 0);
    if (every < 0) throw UsageError("run.snapshot_every must be non-negative");
    out.run.snapshot_every = static_cast<std::size_t>(every);
    out.run.negative_alarm = number("run.negative_alarm", 1e-10);
    // The worker count never changes results, so it stays out of the manifest.
    out.run.workers = static_cast<int>(cfg.get_int("run.workers", 1));
    if (out.run.workers < 1) throw UsageError("run.workers must be at least 1");

    out.oracle = flag("oracle.enabled", false);
    out.oracle_options.dx = number("oracle.dx", 1e-3);
    out.oracle_options.dt = number("oracle.dt", 1e-3);
    out.oracle_options.char_dt = number("oracle.char_dt", 0.0);
    out.oracle_options.fixed_point_tol = number("oracle.tol", 1e-10);
    out.oracle_options.max_iterations = static_cast<int>(integer("oracle.max_iterations", 50));
    out.oracle_options.min_dt = number("oracle.min_dt", 1e-6);
    out.oracle_refine_tol = number("oracle.refine_tol", 1e-3);
    out.oracle_refinements = static_cast<int>(integer("oracle.refinements", 0));
    if (!(out.oracle_options.dx > 0.0) || !(out.oracle_options.dt > 0.0) || out.oracle_refinements < 0) {
        throw UsageError("oracle: dx and dt must be positive and refinements non-negative");
    }
    if (out.oracle && (model.dim != 1 || !model.local_advection)) {
        throw UsageError("oracle.enabled requires a one-dimensional model with local advection");
    }

    out.window = number("asymptote.window", 5.0);
    out.pos_tol = number("asymptote.pos_tol", 0.0);
    out.mass_tol = number("asymptote.mass_tol", 1e-3);
    out.gap_floor = number("asymptote.gap_floor", 0.1);
    if (!(out.window > 0.0) || out.pos_tol < 0.0 || !(out.mass_tol > 0.0)) {
        throw UsageError("asymptote: window and mass_tol must be positive, pos_tol non-negative");
    }

    out.out_dir = text("output.dir", "out");
    out.seed = integer("output.seed", 0);
    return out;
}

ModelSpec build_model(const ExperimentConfig& cfg) {
    ModelSpec model = make_preset(cfg.model_name, cfg.model_params);
    model.support_v0 = make_initial_density(cfg.v0_name, cfg.v0_params, model.dim).support;
    return model;
}

InitialDensity build_initial_density(const ExperimentConfig& cfg, const ModelSpec& model) {
    return make_initial_density(cfg.v0_name, cfg.v0_params, model.dim);
}

SimulateResult run_simulate(const ExperimentConfig& cfg, const fs::path& out) {
    if (!(cfg.h > 0.0)) throw UsageError("simulate: set discretization.h or discretization.N");
    const ModelSpec model = build_model(cfg);
    const InitialDensity v0 = build_initial_density(cfg, model);
    const CutoffSpec phi = make_cutoff(cfg.cutoff, cfg.cutoff_params);
    fs::create_directories(out);
    write_manifest(out, cfg, "simulate");

    Box vbox = model.support_v0;
    if (model.support_m_x) vbox = hull(vbox, *model.support_m_x);
    const ValidationReport validation = validate_model(model, vbox, 2000, cfg.run.T_final);

    SimulateResult res;
    res.h = cfg.h;
    res.eps = epsilon_rule(cfg.h, cfg.eps_rule);
    const ParticleEnsemble ens0 = partition_support(v0, model, cfg.h, cfg.run.T_final);
    res.spacing = check_spacing(ens0);
    res.trajectory = integrate(model, ens0, run_for(cfg, cfg.run.T_final));
    const Trajectory& traj = res.trajectory;

    write_trajectory(out, traj);
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        const auto& snap = traj.snapshots[k];
        write_snapshot(out / ("snapshot_" + padded(k) + ".csv"), snap);
        const Frame f = reconstruct_frame(snap, phi, res.eps, cfg.run.workers);
        write_frame(out / ("reconstruction_" + padded(k) + ".csv"), f);
        if (k + 1 == traj.snapshots.size()) {
            write_profile_plot(out / "profile.svg", f, "v_eps^h at t = " + format_number(snap.time));
        }
    }

    KvReport r;
    r.put("summary", "mode", "simulate");
    r.put("summary", "model", model.name);
    r.put("summary", "initial", v0.name);
    r.put("summary", "particles", static_cast<double>(ens0.size()));
    r.put("summary", "h", res.h);
    r.put("summary", "eps", res.eps);
    r.put("summary", "dt", traj.dt);
    r.put("summary", "T", traj.final_state().time);
    r.put("summary", "initial_mass", traj.mass.front());
    r.put("summary", "final_mass", traj.mass.back());
    r.put("summary", "snapshots", static_cast<double>(traj.snapshots.size()));
    r.put("spacing", "c_hat", res.spacing.c_hat);
    r.put("spacing", "C_hat", res.spacing.C_hat);
    put_monitors(r, "monitors", traj.monitors);
    r.put("validation", "samples", static_cast<double>(validation.samples));
    r.put("validation", "violations", static_cast<double>(validation.violations.size()));
    for (std::size_t k = 0; k < validation.violations.size() && k < 5; ++k) {
        r.put("validation", "violation_" + std::to_string(k), validation.violations[k].hypothesis);
    }
    r.write(out / "report.conf");
    return res;
}

ConvergeResult run_converge(const ExperimentConfig& cfg, const fs::path& out) {
    if (cfg.h_list.size() < 3) {
        throw UsageError("converge: need at least three h values (discretization.h_list or N_list)");
    }
    const ModelSpec model = build_model(cfg);
    const InitialDensity v0 = build_initial_density(cfg, model);
    const CutoffSpec phi = make_cutoff(cfg.cutoff, cfg.cutoff_params);
    const double T = cfg.run.T_final;
    fs::create_directories(out);
    write_manifest(out, cfg, "converge");

    ConvergeResult res;
    KvReport r;
    r.put("summary", "mode", "converge");
    r.put("summary", "model", model.name);
    r.put("summary", "initial", v0.name);
    r.put("summary", "T", T);
    for (double h : cfg.h_list) res.eps.push_back(epsilon_rule(h, cfg.eps_rule));

    if (cfg.oracle) {
        ReferenceOptions opts = cfg.oracle_options;
        opts.workers = cfg.run.workers;
        const ReferenceGrid oracle = solve_reference(model, v0, T, opts);
        res.oracle_mass = oracle.total_mass();
        r.put("summary", "reference", "oracle");
        r.put("oracle", "dx", opts.dx);
        r.put("oracle", "dt", oracle.dt);
        r.put("oracle", "mass", res.oracle_mass);
        r.put("oracle", "iterations", static_cast<double>(oracle.iterations));
        r.put("oracle", "halvings", static_cast<double>(oracle.halvings));
        for (std::size_t k = 0; k < cfg.h_list.size(); ++k) {
            const double h = cfg.h_list[k];
            const Trajectory traj = integrate(model, partition_support(v0, model, h, T), run_for(cfg, T));
            const ParticleEnsemble& fin = traj.final_state();
            const Vec recon = reconstruct(fin, phi, res.eps[k], oracle.grid(), cfg.run.workers);
            res.h.push_back(h);
            res.l1.push_back(l1_distance(oracle, oracle.grid(), recon));
            res.pointwise.push_back(weighted_pointwise_error(fin, oracle));
            res.monitors.push_back(traj.monitors);
        }
        res.l1_fit = try_fit(res.h, res.l1);
        res.pointwise_fit = try_fit(res.h, res.pointwise);
        write_csv(out / "errors.csv", {"h", "eps", "l1", "pointwise"}, {res.h, res.eps, res.l1, res.pointwise});
        write_oracle(out / "oracle.csv", oracle);
    } else {
        SelfConvergenceOptions opts;
        opts.cutoff = phi;
        opts.eps_rule = cfg.eps_rule;
        opts.run = cfg.run;
        const SelfConvergence sc = particle_self_convergence(model, v0, cfg.h_list, T, opts);
        r.put("summary", "reference", "finest run");
        for (const auto& [h, e] : sc.errors) {
            res.h.push_back(h);
            res.l1.push_back(e);
        }
        res.eps.resize(res.h.size());
        res.l1_fit = sc.fit;
        write_csv(out / "errors.csv", {"h", "eps", "l1_self"}, {res.h, res.eps, res.l1});
    }

    for (std::size_t k = 0; k < res.h.size(); ++k) {
        const std::string sec = "h_" + padded(k);
        r.put(sec, "h", res.h[k]);
        r.put(sec, "eps", res.eps[k]);
        r.put(sec, "l1", res.l1[k]);
        if (!res.pointwise.empty()) r.put(sec, "pointwise", res.pointwise[k]);
        if (k < res.monitors.size()) {
            r.put(sec, "max_mass_excess", res.monitors[k].max_mass_excess);
            r.put(sec, "max_support_excess", res.monitors[k].max_support_excess);
        }
    }
    put_fit(r, "summary", "l1", res.l1_fit);
    if (cfg.oracle) put_fit(r, "summary", "pointwise", res.pointwise_fit);
    r.write(out / "report.conf");

    std::vector<PlotSeries> series = {{"L1", res.h, res.l1}};
    if (!res.pointwise.empty()) series.push_back({"weighted pointwise", res.h, res.pointwise});
    PlotStyle style;
    style.title = "convergence";
    style.xlabel = "h";
    style.ylabel = "error";
    style.log_x = style.log_y = true;
    style.markers = true;
    style.annotate_slope = true;
    bool positive = true;
    for (const auto& s : series) {
        for (double e : s.y) positive = positive && e > 0.0;
    }
    if (positive) write_text(out / "order.svg", emit_plot(series, style));
    return res;
}

AsymptoteResult run_asymptote(const ExperimentConfig& cfg, const fs::path& out) {
    Vec hs = cfg.h_list;
    if (hs.empty()) hs.push_back(cfg.h);
    if (!(hs.front() > 0.0)) throw UsageError("asymptote: set discretization.N, h, N_list or h_list");
    const ModelSpec model = build_model(cfg);
    const InitialDensity v0 = build_initial_density(cfg, model);
    const CutoffSpec phi = make_cutoff(cfg.cutoff, cfg.cutoff_params);
    const double T = cfg.run.T_final;
    if (!(cfg.window < T)) throw UsageError("asymptote: asymptote.window must be shorter than run.T");
    fs::create_directories(out);
    write_manifest(out, cfg, "asymptote");

    AsymptoteResult res;
    std::optional<ReferenceGrid> oracle;
    if (cfg.oracle) oracle = refined_oracle(model, v0, cfg, T, res.oracle_dx, res.oracle_mass);
    std::vector<TestFunction> tests;
    if (oracle) tests = default_test_bumps(v0.support.lo[0], v0.support.hi[0]);

    std::vector<Vec> samples;
    {
        Box sbox = v0.support;
        if (model.support_m_x) sbox = hull(sbox, *model.support_m_x);
        for (std::uint64_t n = 1; n <= 101; ++n) {
            Vec u = halton_point(n, model.dim);
            for (std::size_t l = 0; l < model.dim; ++l) u[l] = sbox.lo[l] + u[l] * sbox.width(l);
            samples.push_back(u);
        }
    }

    for (std::size_t k = 0; k < hs.size(); ++k) {
        const double h = hs[k];
        RunConfig run = run_for(cfg, T);
        if (run.snapshot_every == 0) {
            const double dt_req = run.dt > 0.0 ? run.dt : default_dt(model, h);
            const double dt = T / std::ceil(T / dt_req - 1e-9);
            run.snapshot_every = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(cfg.window / dt + 1e-9)));
        }
        const ParticleEnsemble ens0 = partition_support(v0, model, h, T);
        const Trajectory traj = integrate(model, ens0, run);
        const ParticleEnsemble& fin = traj.final_state();

        AsymptoteMember m;
        m.h = h;
        m.particles = ens0.size();
        m.mass = fin.total_mass();
        m.monitors = traj.monitors;
        m.clusters = detect_limit_clusters(traj, cfg.window, cfg.pos_tol > 0.0 ? cfg.pos_tol : 10.0 * h, cfg.mass_tol);
        for (const auto& c : m.clusters.clusters) {
            try {
                m.predicted_mass.push_back(predict_limit_mass(model, c.position));
            } catch (const PredictionUnavailable&) {
                m.predicted_mass.push_back(std::nullopt);
            }
        }
        if (m.clusters.stationary && model.local_advection && model.autonomous) {
            m.residuals = check_dirac_necessary_conditions(model, m.clusters.clusters, samples);
        }
        if (oracle) m.gap = weak_measure_gap(fin, *oracle, tests);

        const fs::path dir = out / ("run_" + padded(k));
        fs::create_directories(dir);
        write_manifest(dir, cfg, "asymptote");
        write_trajectory(dir, traj);
        write_snapshot(dir / "final.csv", fin);
        const double eps = epsilon_rule(h, cfg.eps_rule);
        const Frame f = reconstruct_frame(fin, phi, eps, cfg.run.workers);
        write_frame(dir / "reconstruction.csv", f);
        write_profile_plot(dir / "profile.svg", f, "t = " + format_number(fin.time), oracle ? &*oracle : nullptr);

        std::vector<std::string> header = {"cluster"};
        for (std::size_t l = 0; l < model.dim; ++l) header.push_back("x" + std::to_string(l + 1));
        header.insert(header.end(), {"mass", "members", "predicted_mass"});
        std::vector<Vec> cols(header.size());
        for (std::size_t c = 0; c < m.clusters.clusters.size(); ++c) {
            const Cluster& cl = m.clusters.clusters[c];
            cols[0].push_back(static_cast<double>(c));
            for (std::size_t l = 0; l < model.dim; ++l) cols[1 + l].push_back(cl.position[l]);
            cols[1 + model.dim].push_back(cl.mass);
            cols[2 + model.dim].push_back(static_cast<double>(cl.members));
            cols[3 + model.dim].push_back(m.predicted_mass[c].value_or(std::nan("")));
        }
        write_csv(dir / "clusters.csv", header, cols);

        KvReport r;
        r.put("summary", "h", h);
        r.put("summary", "particles", static_cast<double>(m.particles));
        r.put("summary", "T", fin.time);
        r.put("summary", "mass", m.mass);
        r.put("summary", "stationary", m.clusters.stationary ? "true" : "false");
        if (!m.clusters.reason.empty()) r.put("summary", "reason", m.clusters.reason);
        r.put("summary", "max_displacement", m.clusters.max_displacement);
        r.put("summary", "clusters", static_cast<double>(m.clusters.clusters.size()));
        if (m.gap) r.put("summary", "weak_gap", *m.gap);
        for (std::size_t c = 0; c < m.clusters.clusters.size(); ++c) {
            const std::string sec = "cluster_" + padded(c);
            const Cluster& cl = m.clusters.clusters[c];
            for (std::size_t l = 0; l < model.dim; ++l) r.put(sec, "x" + std::to_string(l + 1), cl.position[l]);
            r.put(sec, "mass", cl.mass);
            if (m.predicted_mass[c]) r.put(sec, "predicted_mass", *m.predicted_mass[c]);
            else r.put(sec, "predicted_mass", "unavailable");
            if (m.residuals) {
                r.put(sec, "residual_advection", m.residuals->advection[c]);
                r.put(sec, "residual_growth", m.residuals->growth[c]);
            }
        }
        if (m.residuals) r.put("residuals", "mutation", m.residuals->mutation);
        put_monitors(r, "monitors", m.monitors);
        r.write(dir / "report.conf");
        res.members.push_back(std::move(m));
    }

    KvReport r;
    r.put("summary", "mode", "asymptote");
    r.put("summary", "model", model.name);
    r.put("summary", "initial", v0.name);
    r.put("summary", "T", T);
    r.put("summary", "members", static_cast<double>(res.members.size()));
    Vec mh, mn, mmass, mgap;
    for (std::size_t k = 0; k < res.members.size(); ++k) {
        const auto& m = res.members[k];
        const std::string sec = "run_" + padded(k);
        r.put(sec, "h", m.h);
        r.put(sec, "particles", static_cast<double>(m.particles));
        r.put(sec, "mass", m.mass);
        r.put(sec, "stationary", m.clusters.stationary ? "true" : "false");
        r.put(sec, "clusters", static_cast<double>(m.clusters.clusters.size()));
        if (!m.clusters.clusters.empty()) {
            const Cluster& heaviest = *std::max_element(m.clusters.clusters.begin(), m.clusters.clusters.end(),
                                                        [](const Cluster& a, const Cluster& b) { return a.mass < b.mass; });
            r.put(sec, "heaviest_x1", heaviest.position[0]);
            r.put(sec, "heaviest_mass", heaviest.mass);
        }
        if (m.gap) r.put(sec, "weak_gap", *m.gap);
        mh.push_back(m.h);
        mn.push_back(static_cast<double>(m.particles));
        mmass.push_back(m.mass);
        mgap.push_back(m.gap.value_or(std::nan("")));
    }
    write_csv(out / "sweep.csv", {"h", "particles", "mass", "weak_gap"}, {mh, mn, mmass, mgap});

    if (oracle) {
        for (std::size_t k = 0; k < res.oracle_dx.size(); ++k) {
            r.put("oracle", "mass_dx_" + padded(k), res.oracle_mass[k]);
            r.put("oracle", "dx_" + padded(k), res.oracle_dx[k]);
        }
        r.put("oracle", "mass", res.oracle_mass.back());
        write_csv(out / "oracle_mass.csv", {"dx", "mass"}, {res.oracle_dx, res.oracle_mass});
        write_oracle(out / "oracle.csv", *oracle);
        std::vector<std::pair<double, double>> h_gap;
        for (const auto& m : res.members) h_gap.emplace_back(m.h, *m.gap);
        if (h_gap.size() >= 2) {
            res.verdict = ap_verdict(h_gap, cfg.gap_floor);
            r.put("summary", "ap_verdict", to_string(*res.verdict));
            PlotStyle style;
            style.title = "weak measure gap";
            style.xlabel = "h";
            style.ylabel = "gap";
            style.log_x = style.log_y = true;
            style.markers = true;
            bool positive = true;
            for (double g : mgap) positive = positive && g > 0.0;
            if (positive) write_text(out / "gap.svg", emit_plot({{"gap", mh, mgap}}, style));
        }
    }
    r.write(out / "report.conf");
    return res;
}

Config fig2_scenario(char scenario, const Config& base) {
    Config cfg;
    cfg.set("model.name", "advsel1d");
    cfg.set("model.r0", "6");
    cfg.set("model.r1", "4");
    cfg.set("discretization.N", "5000");
    cfg.set("regularization.cutoff", "gaussian");
    cfg.set("regularization.eps_rule", "power");
    cfg.set("regularization.eps_q", "0.5");
    cfg.set("run.T", "40");
    cfg.set("run.dt", "1e-3");
    cfg.set("oracle.enabled", "true");
    cfg.set("oracle.dx", "1/1000");
    switch (scenario) {
        case 'a': cfg.set("initial.name", "one-minus-x"); break;
        case 'b': cfg.set("initial.name", "x-one-minus-x"); break;
        case 'c': cfg.set("initial.name", "x-squared"); break;
        case 'd':
            cfg.set("initial.name", "const6");
            cfg.set("initial.lo", "0.05");
            cfg.set("initial.hi", "1");
            cfg.set("model.r1", "0.5");
            break;
        default: throw UsageError(std::string("unknown fig2 scenario '") + scenario + "'");
    }
    for (const auto& [k, v] : base.values()) {
        if (k.rfind("model.", 0) == 0 || k.rfind("initial.", 0) == 0) continue;
        cfg.set(k, v);
    }
    return cfg;
}

std::vector<AsymptoteResult> run_reproduce_fig2(const Config& base, const fs::path& out, int workers) {
    std::vector<AsymptoteResult> results;
    KvReport r;
    fs::create_directories(out);
    std::vector<std::string> names;
    Vec xs, masses, predicted, oracle_mass;
    for (char s : {'a', 'b', 'c', 'd'}) {
        Config sc = fig2_scenario(s, base);
        sc.set("run.workers", std::to_string(workers));
        ExperimentConfig cfg = resolve_experiment(sc);
        const fs::path dir = out / (std::string("scenario_") + s);
        results.push_back(run_asymptote(cfg, dir));
        const AsymptoteResult& res = results.back();
        const AsymptoteMember& m = res.members.front();
        const std::string sec = std::string("scenario_") + s;
        r.put(sec, "initial", cfg.v0_name);
        r.put(sec, "r1", cfg.model_params.at("r1"));
        r.put(sec, "particle_mass", m.mass);
        r.put(sec, "stationary", m.clusters.stationary ? "true" : "false");
        r.put(sec, "clusters", static_cast<double>(m.clusters.clusters.size()));
        double x = std::nan(""), cm = std::nan(""), pm = std::nan("");
        if (!m.clusters.clusters.empty()) {
            x = m.clusters.clusters.back().position[0];
            cm = m.clusters.clusters.back().mass;
            if (m.predicted_mass.back()) pm = *m.predicted_mass.back();
            r.put(sec, "cluster_x", x);
            r.put(sec, "cluster_mass", cm);
            r.put(sec, "predicted_mass", pm);
        }
        if (!res.oracle_mass.empty()) r.put(sec, "oracle_mass", res.oracle_mass.back());
        xs.push_back(x);
        masses.push_back(cm);
        predicted.push_back(pm);
        oracle_mass.push_back(res.oracle_mass.empty() ? std::nan("") : res.oracle_mass.back());
    }
    Config manifest;
    for (const auto& [k, v] : base.values()) {
        if (k != "run.workers") manifest.set(k, v);
    }
    manifest.set("experiment.mode", "reproduce fig2");
    write_text(out / "manifest.conf", manifest.serialize());
    write_csv(out / "summary.csv", {"scenario", "cluster_x", "cluster_mass", "predicted_mass", "oracle_mass"},
              {{0, 1, 2, 3}, xs, masses, predicted, oracle_mass});
    r.write(out / "report.conf");
    return results;
}

}  // namespace selmut
