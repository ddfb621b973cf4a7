#include "selmut/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "selmut/parallel.hpp"

namespace selmut {

double weighted_pointwise_error(const ParticleEnsemble& ens, const ReferenceGrid& oracle) {
    if (ens.dim != 1) throw UsageError("weighted_pointwise_error: the oracle is one-dimensional");
    if (std::abs(ens.time - oracle.time()) > 1e-9 * std::max(1.0, std::abs(ens.time))) {
        throw UsageError("weighted_pointwise_error: ensemble and oracle times differ");
    }
    const Box& g = oracle.grid().box;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        if (!g.contains(ens.position(i))) {
            throw GridMismatch("weighted_pointwise_error: particle " + std::to_string(i) + " lies outside the oracle grid");
        }
    }
    return pairwise_sum(ens.size(), [&](std::size_t i) {
        return std::abs(oracle.value_at(ens.positions[i]) - ens.intensities[i]) * ens.volumes[i];
    });
}

OrderFit fit_convergence_order(const std::vector<std::pair<double, double>>& h_error) {
    const std::size_t n = h_error.size();
    if (n < 3) throw UsageError("fit_convergence_order: need at least three h values");
    for (std::size_t k = 0; k < n; ++k) {
        if (!(h_error[k].first > 0.0)) throw UsageError("fit_convergence_order: h values must be positive");
        if (!(h_error[k].second > 0.0)) throw UsageError("fit_convergence_order: non-positive error entry");
        if (k > 0 && !(h_error[k].first < h_error[k - 1].first)) {
            throw UsageError("fit_convergence_order: h values must be strictly decreasing");
        }
    }
    Vec X(n), Y(n);
    for (std::size_t k = 0; k < n; ++k) {
        X[k] = std::log(h_error[k].first);
        Y[k] = std::log(h_error[k].second);
    }
    const double mx = std::accumulate(X.begin(), X.end(), 0.0) / static_cast<double>(n);
    const double my = std::accumulate(Y.begin(), Y.end(), 0.0) / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sxx += (X[k] - mx) * (X[k] - mx);
        sxy += (X[k] - mx) * (Y[k] - my);
    }
    OrderFit fit;
    fit.points = n;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double sse = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double r = Y[k] - (fit.intercept + fit.slope * X[k]);
        sse += r * r;
        fit.residual = std::max(fit.residual, std::abs(r));
    }
    fit.slope_stderr = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
    return fit;
}

ClusterResult detect_limit_clusters(const Trajectory& traj, double window, double pos_tol, double mass_tol) {
    if (traj.snapshots.empty()) throw UsageError("detect_limit_clusters: empty trajectory");
    if (!(window > 0.0) || !(pos_tol > 0.0) || !(mass_tol > 0.0)) {
        throw UsageError("detect_limit_clusters: window and tolerances must be positive");
    }
    const ParticleEnsemble& last = traj.final_state();
    const double T = last.time;
    const double t_window = T - window;
    ClusterResult out;
    out.rho_final = last.total_mass();

    const ParticleEnsemble* earlier = nullptr;
    for (const auto& snap : traj.snapshots) {
        if (snap.time <= t_window + 1e-12 * std::max(1.0, T)) earlier = &snap;
    }
    if (earlier == nullptr) {
        out.reason = "no snapshot at or before T - window";
        return out;
    }
    std::size_t step = 0;
    while (step + 1 < traj.times.size() && traj.times[step + 1] <= t_window + 1e-12 * std::max(1.0, T)) ++step;
    out.rho_window = traj.mass.empty() ? earlier->total_mass() : traj.mass[step];

    const std::size_t d = last.dim;
    Vec disp(d);
    for (std::size_t i = 0; i < last.size(); ++i) {
        for (std::size_t l = 0; l < d; ++l) disp[l] = last.positions[i * d + l] - earlier->positions[i * d + l];
        out.max_displacement = std::max(out.max_displacement, norm(disp));
    }
    if (!(out.max_displacement < pos_tol)) {
        out.reason = "particles still moving over the window";
        return out;
    }
    if (!(std::abs(out.rho_final - out.rho_window) < mass_tol * out.rho_final)) {
        out.reason = "total mass still changing over the window";
        return out;
    }
    out.stationary = true;

    // Single linkage via union-find over pairs closer than pos_tol.
    const std::size_t n = last.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> root = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return last.positions[a * d] < last.positions[b * d]; });
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t i = order[r];
        for (std::size_t s = r + 1; s < n; ++s) {
            const std::size_t j = order[s];
            if (last.positions[j * d] - last.positions[i * d] > pos_tol) break;
            for (std::size_t l = 0; l < d; ++l) disp[l] = last.positions[j * d + l] - last.positions[i * d + l];
            if (norm(disp) <= pos_tol) {
                const std::size_t a = root(i), b = root(j);
                parent[std::max(a, b)] = std::min(a, b);
            }
        }
    }

    std::vector<std::size_t> slot(n, n);
    std::vector<Cluster> found;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = root(i);
        if (slot[r] == n) {
            slot[r] = found.size();
            found.push_back(Cluster{Vec(d, 0.0), 0.0, 0});
        }
        Cluster& c = found[slot[r]];
        const double alpha = last.alpha(i);
        c.mass += alpha;
        c.members += 1;
        for (std::size_t l = 0; l < d; ++l) c.position[l] += alpha * last.positions[i * d + l];
    }
    for (auto& c : found) {
        if (!(c.mass >= mass_tol * out.rho_final) || c.mass <= 0.0) continue;
        for (double& p : c.position) p /= c.mass;
        out.clusters.push_back(std::move(c));
    }
    std::sort(out.clusters.begin(), out.clusters.end(),
              [](const Cluster& a, const Cluster& b) { return a.position < b.position; });
    return out;
}

double predict_limit_mass(const ModelSpec& model, Point x_hat) {
    const double psi = model.kernel_g.value(0.0, x_hat, x_hat);
    auto f = [&](double I) { return model.growth(0.0, x_hat, psi * I); };
    double lo = 0.0;
    double hi = model.I_star / model.psi_g_min + 1.0;
    if (!(f(lo) > 0.0) || !(f(hi) < 0.0)) {
        throw PredictionUnavailable("predict_limit_mass: R(x_hat, psi_g I) has no sign change on [0, I*/psi_g_min + 1]");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

DiracResiduals check_dirac_necessary_conditions(const ModelSpec& model, const std::vector<Cluster>& clusters,
                                                const std::vector<Vec>& samples) {
    ParticleEnsemble limit;
    limit.dim = model.dim;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        limit.push_back(static_cast<std::int64_t>(c), clusters[c].position, 1.0, clusters[c].mass);
    }
    FieldEvaluator field(model, limit, 0.0);
    DiracResiduals out;
    Vec I(model.n_advection_args()), a(model.dim);
    for (const Cluster& c : clusters) {
        field.advection_args(c.position, I);
        field.velocity(c.position, I, a);
        out.advection.push_back(norm(a));
        const double Ig = field.nonlocal(KernelRef::growth(), c.position);
        out.growth.push_back(std::abs(model.growth(0.0, c.position, Ig)));
    }
    if (model.has_mutation()) {
        for (const Vec& x : samples) {
            const double Id = field.nonlocal(KernelRef::mutation(), x);
            double s = 0.0;
            for (const Cluster& c : clusters) s += c.mass * model.mutation(0.0, x, c.position, Id);
            out.mutation = std::max(out.mutation, s);
        }
    }
    return out;
}

TestFunction bump(double center, double width) {
    return [center, width](double x) {
        const double u = (x - center) / width;
        return std::abs(u) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - u * u)) : 0.0;
    };
}

std::vector<TestFunction> default_test_bumps(double lo, double hi) {
    if (!(hi > lo)) throw UsageError("default_test_bumps: empty interval");
    const double step = (hi - lo) / 7.0;
    std::vector<TestFunction> tests;
    for (int j = 0; j < 7; ++j) tests.push_back(bump(lo + (j + 0.5) * step, step));
    return tests;
}

double weak_measure_gap(const ParticleEnsemble& ens, const ReferenceGrid& oracle, const std::vector<TestFunction>& tests) {
    if (!ens.empty() && ens.dim != 1) throw UsageError("weak_measure_gap: the oracle is one-dimensional");
    const Vec& xs = oracle.grid().points;
    const Vec& w = oracle.weights();
    const Vec& v = oracle.values();
    double gap = 0.0;
    for (const auto& phi : tests) {
        const double particles = pairwise_sum(ens.size(), [&](std::size_t i) { return ens.alpha(i) * phi(ens.positions[i]); });
        const double continuum = pairwise_sum(xs.size(), [&](std::size_t k) { return w[k] == 0.0 ? 0.0 : w[k] * v[k] * phi(xs[k]); });
        gap = std::max(gap, std::abs(particles - continuum));
    }
    return gap;
}

SelfConvergence particle_self_convergence(const ModelSpec& model, const InitialDensity& v0, const Vec& h_list,
                                          double T, const SelfConvergenceOptions& options) {
    if (h_list.size() < 4) throw UsageError("particle_self_convergence: need at least four h values (finest is the reference)");
    for (std::size_t k = 1; k < h_list.size(); ++k) {
        if (!(h_list[k] < h_list[k - 1])) throw UsageError("particle_self_convergence: h values must be strictly decreasing");
    }
    if (!options.cutoff.profile) throw UsageError("particle_self_convergence: no cut-off function");
    std::vector<ParticleEnsemble> finals;
    Vec eps;
    RunConfig run = options.run;
    run.T_final = T;
    for (double h : h_list) {
        const ParticleEnsemble ens = partition_support(v0, model, h, T);
        finals.push_back(integrate(model, ens, run).final_state());
        eps.push_back(epsilon_rule(h, options.eps_rule));
    }

    const std::size_t d = model.dim;
    Vec lo(d, std::numeric_limits<double>::infinity()), hi(d, -std::numeric_limits<double>::infinity());
    for (const auto& e : finals) {
        for (std::size_t i = 0; i < e.size(); ++i) {
            for (std::size_t l = 0; l < d; ++l) {
                lo[l] = std::min(lo[l], e.positions[i * d + l]);
                hi[l] = std::max(hi[l], e.positions[i * d + l]);
            }
        }
    }
    const double eps_max = *std::max_element(eps.begin(), eps.end());
    const double eps_min = *std::min_element(eps.begin(), eps.end());
    const Box box = Box(lo, hi).dilated(options.cutoff.radius * eps_max);
    const SampleGrid grid = SampleGrid::with_spacing(box, eps_min / 4.0);

    std::vector<Vec> recon;
    for (std::size_t k = 0; k < finals.size(); ++k) {
        recon.push_back(reconstruct(finals[k], options.cutoff, eps[k], grid, run.workers));
    }
    SelfConvergence out;
    const Vec& truth = recon.back();
    for (std::size_t k = 0; k + 1 < recon.size(); ++k) {
        Vec diff(truth.size());
        for (std::size_t g = 0; g < diff.size(); ++g) diff[g] = std::abs(recon[k][g] - truth[g]);
        out.errors.emplace_back(h_list[k], trapezoid(grid, diff));
    }
    out.fit = fit_convergence_order(out.errors);
    return out;
}

std::string to_string(ApVerdict verdict) {
    switch (verdict) {
        case ApVerdict::preserving:
            return "preserving";
        case ApVerdict::non_preserving:
            return "non-preserving";
        case ApVerdict::inconclusive:
            return "inconclusive";
    }
    return "inconclusive";
}

ApVerdict ap_verdict(const std::vector<std::pair<double, double>>& h_gap, double floor) {
    if (h_gap.size() < 2) return ApVerdict::inconclusive;
    auto sorted = h_gap;
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    const auto [h0, g0] = sorted.front();
    const auto fine = std::find_if(sorted.begin(), sorted.end(),
                                   [h0 = h0](const auto& p) { return p.first <= h0 / 4.0 * (1.0 + 1e-9); });
    if (fine == sorted.end()) return ApVerdict::inconclusive;
    if (g0 >= 2.0 * fine->second) return ApVerdict::preserving;
    const bool above = std::all_of(sorted.begin(), sorted.end(), [&](const auto& p) { return p.second > floor; });
    return above ? ApVerdict::non_preserving : ApVerdict::inconclusive;
}

namespace {

Vec trace_local(const ModelSpec& model, Vec x, double t0, double t1) {
    const std::size_t d = model.dim;
    const Vec I(model.n_advection_args(), 0.0);
    const std::size_t steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::abs(t1 - t0) / 1e-3)));
    const double h = (t1 - t0) / static_cast<double>(steps);
    Vec k1(d), k2(d), k3(d), k4(d), tmp(d);
    for (std::size_t s = 0; s < steps; ++s) {
        const double t = t0 + static_cast<double>(s) * h;
        model.advection(t, x, I, k1);
        for (std::size_t l = 0; l < d; ++l) tmp[l] = x[l] + 0.5 * h * k1[l];
        model.advection(t + 0.5 * h, tmp, I, k2);
        for (std::size_t l = 0; l < d; ++l) tmp[l] = x[l] + 0.5 * h * k2[l];
        model.advection(t + 0.5 * h, tmp, I, k3);
        for (std::size_t l = 0; l < d; ++l) tmp[l] = x[l] + h * k3[l];
        model.advection(t + h, tmp, I, k4);
        for (std::size_t l = 0; l < d; ++l) x[l] += h / 6.0 * (k1[l] + 2.0 * k2[l] + 2.0 * k3[l] + k4[l]);
    }
    return x;
}

void corners(const Box& b, std::vector<Vec>& out) {
    const std::size_t d = b.dim();
    for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
        Vec c(d);
        for (std::size_t l = 0; l < d; ++l) c[l] = (mask >> l) & 1U ? b.hi[l] : b.lo[l];
        out.push_back(std::move(c));
    }
}

}  // namespace

DisjointnessCheck check_support_disjointness(const ModelSpec& model, double T, std::size_t samples) {
    if (!model.local_advection) throw UsageError("check_support_disjointness: needs local advection");
    if (samples == 0) throw UsageError("check_support_disjointness: need at least one sample time");
    std::vector<Vec> start;
    corners(model.support_v0, start);
    if (model.support_m_x) corners(*model.support_m_x, start);

    DisjointnessCheck out;
    out.swept = model.support_v0;
    if (model.support_m_x) out.swept = hull(out.swept, *model.support_m_x);
    for (const Vec& c : start) {
        Vec x = c;
        double t = 0.0;
        for (std::size_t s = 1; s <= samples; ++s) {
            const double t_next = T * static_cast<double>(s) / static_cast<double>(samples);
            x = trace_local(model, x, t, t_next);
            t = t_next;
            out.swept = hull(out.swept, Box(x, x));
        }
    }
    out.disjoint = !model.has_mutation() || !model.support_m_y || !out.swept.intersects(*model.support_m_y);
    return out;
}

}  // namespace selmut
