#include "selmut/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "selmut/parallel.hpp"

namespace selmut {

double default_dt(const ModelSpec& model, double h) {
    if (model.a_sup > 0.0 && h > 0.0) return std::min(1e-3, h / (2.0 * model.a_sup));
    return 1e-3;
}

Box active_box(const ModelSpec& model, double T) {
    if (!(T >= 0.0)) throw UsageError("active_box: T must be non-negative");
    Box box = model.support_v0;
    if (model.has_mutation() && model.support_m_x) box = hull(box, *model.support_m_x);
    return box.dilated(2.0 * model.a_sup * T);
}

namespace {

[[noreturn]] void non_finite(std::size_t i, const char* term) {
    throw IntegrationError("non-finite " + std::string(term) + " derivative at particle " + std::to_string(i));
}

}  // namespace

void rhs(const ModelSpec& model, const ParticleEnsemble& ens, Derivative& out, int workers) {
    const std::size_t n = ens.size();
    const std::size_t d = ens.dim;
    const std::size_t na = model.n_advection_args();
    const double t = ens.time;
    out.dx.resize(n * d);
    out.dw.resize(n);
    out.dnu.resize(n);
    if (n == 0) return;

    FieldEvaluator field(model, ens, t);

    std::vector<std::size_t> sources;
    if (model.has_mutation()) {
        for (std::size_t j = 0; j < n; ++j) {
            if (!model.support_m_y || model.support_m_y->contains(ens.position(j))) sources.push_back(j);
        }
    }

    parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
        Vec I(na);
        for (std::size_t i = begin; i < end; ++i) {
            const Point x = ens.position(i);
            std::span<double> v(out.dx.data() + i * d, d);
            field.advection_args(x, I);
            field.velocity(x, I, v);
            for (double c : v) {
                if (!std::isfinite(c)) non_finite(i, "position");
            }
            const double div = field.divergence(x, I);
            const double R = model.growth(t, x, field.nonlocal(KernelRef::growth(), x));

            double influx = 0.0;
            if (!sources.empty() && (!model.support_m_x || model.support_m_x->contains(x))) {
                const double Id = field.nonlocal(KernelRef::mutation(), x);
                influx = pairwise_sum(sources.size(), [&](std::size_t k) {
                    const std::size_t j = sources[k];
                    return ens.volumes[j] * ens.intensities[j] * model.mutation(t, x, ens.position(j), Id);
                });
                if (!std::isfinite(influx)) non_finite(i, "mutation");
            }

            out.dw[i] = div * ens.volumes[i];
            if (!std::isfinite(out.dw[i])) non_finite(i, "volume");
            out.dnu[i] = (R - div) * ens.intensities[i] + influx;
            if (!std::isfinite(out.dnu[i])) non_finite(i, "intensity");
        }
    });
}

Derivative rhs(const ModelSpec& model, const ParticleEnsemble& ens, int workers) {
    Derivative out;
    rhs(model, ens, out, workers);
    return out;
}

namespace {

// dst = base + c * k, component-wise.
void axpy_state(const ParticleEnsemble& base, double c, const Derivative& k, ParticleEnsemble& dst) {
    for (std::size_t q = 0; q < base.positions.size(); ++q) dst.positions[q] = base.positions[q] + c * k.dx[q];
    for (std::size_t i = 0; i < base.size(); ++i) {
        dst.volumes[i] = base.volumes[i] + c * k.dw[i];
        dst.intensities[i] = base.intensities[i] + c * k.dnu[i];
    }
}

double rk4_combine(double y, double dt, double a, double b, double c, double d) {
    return y + dt / 6.0 * (a + 2.0 * b + 2.0 * c + d);
}

}  // namespace

Trajectory integrate(const ModelSpec& model, const ParticleEnsemble& ens0, const RunConfig& cfg) {
    if (!(cfg.T_final > 0.0)) throw UsageError("integrate: T_final must be positive");
    if (ens0.empty()) throw UsageError("integrate: empty ensemble");
    const double dt_req = cfg.dt > 0.0 ? cfg.dt : default_dt(model, ens0.h);
    const auto steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(cfg.T_final / dt_req - 1e-9)));
    const double dt = cfg.T_final / static_cast<double>(steps);
    const std::size_t n = ens0.size();
    const std::size_t d = ens0.dim;
    const double t0 = ens0.time;

    Trajectory traj;
    traj.dt = dt;
    const double initial_mass = ens0.total_mass();
    traj.monitors.mass_bound = model.mass_bound(initial_mass);
    const Box box = active_box(model, cfg.T_final);

    ParticleEnsemble y = ens0;
    ParticleEnsemble stage = ens0;
    Derivative k1, k2, k3, k4;

    auto record = [&](std::size_t step) {
        const double mass = y.total_mass();
        const auto [nmin, nmax] = std::minmax_element(y.intensities.begin(), y.intensities.end());
        const auto [wmin, wmax] = std::minmax_element(y.volumes.begin(), y.volumes.end());
        traj.times.push_back(y.time);
        traj.mass.push_back(mass);
        traj.nu_min.push_back(*nmin);
        traj.nu_max.push_back(*nmax);
        traj.w_min.push_back(*wmin);
        traj.w_max.push_back(*wmax);

        if (!std::isfinite(mass)) throw IntegrationError("non-finite total mass at step " + std::to_string(step));
        if (!(*wmin > 0.0)) {
            throw IntegrationError("volume w_" + std::to_string(wmin - y.volumes.begin()) +
                                   " is no longer positive at step " + std::to_string(step));
        }
        if (*nmax > 0.0) {
            const double ratio = *nmin / *nmax;
            traj.monitors.min_nu_ratio = std::min(traj.monitors.min_nu_ratio, ratio);
            if (ratio < -cfg.negative_alarm) {
                throw IntegrationError("intensity nu_" + std::to_string(nmin - y.intensities.begin()) +
                                       " fell below the negative alarm threshold at step " + std::to_string(step));
            }
        }
        traj.monitors.max_mass_excess =
            std::max(traj.monitors.max_mass_excess, mass - traj.monitors.mass_bound);

        const double elapsed = y.time - t0;
        Vec disp(d);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t l = 0; l < d; ++l) disp[l] = y.positions[i * d + l] - ens0.positions[i * d + l];
            traj.monitors.max_support_excess =
                std::max(traj.monitors.max_support_excess, norm(disp) - model.a_sup * elapsed);
            if (!box.contains(y.position(i), 1e-9)) ++traj.monitors.outside_active_box;
        }
    };

    record(0);
    traj.snapshots.push_back(y);
    for (std::size_t s = 0; s < steps; ++s) {
        const double t = t0 + static_cast<double>(s) * dt;
        rhs(model, y, k1, cfg.workers);
        axpy_state(y, 0.5 * dt, k1, stage);
        stage.time = t + 0.5 * dt;
        rhs(model, stage, k2, cfg.workers);
        axpy_state(y, 0.5 * dt, k2, stage);
        rhs(model, stage, k3, cfg.workers);
        axpy_state(y, dt, k3, stage);
        stage.time = t + dt;
        rhs(model, stage, k4, cfg.workers);

        for (std::size_t q = 0; q < y.positions.size(); ++q) {
            y.positions[q] = rk4_combine(y.positions[q], dt, k1.dx[q], k2.dx[q], k3.dx[q], k4.dx[q]);
        }
        for (std::size_t i = 0; i < n; ++i) {
            y.volumes[i] = rk4_combine(y.volumes[i], dt, k1.dw[i], k2.dw[i], k3.dw[i], k4.dw[i]);
            y.intensities[i] = rk4_combine(y.intensities[i], dt, k1.dnu[i], k2.dnu[i], k3.dnu[i], k4.dnu[i]);
        }
        y.time = t0 + static_cast<double>(s + 1) * dt;

        record(s + 1);
        const bool last = s + 1 == steps;
        if (last || (cfg.snapshot_every > 0 && (s + 1) % cfg.snapshot_every == 0)) traj.snapshots.push_back(y);
    }
    return traj;
}

}  // namespace selmut
