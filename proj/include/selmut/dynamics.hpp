#pragma once

#include <cstddef>
#include <vector>

#include "selmut/model.hpp"
#include "selmut/types.hpp"

namespace selmut {

struct RunConfig {
    double T_final = 1.0;
    double dt = 0.0;                  ///< 0 selects default_dt()
    std::size_t snapshot_every = 0;   ///< 0 keeps only the initial and final states
    double negative_alarm = 1e-10;    ///< abort if nu_i < -alarm * max nu
    int workers = 1;
};

/// min(1e-3, h / (2 a_sup)); 1e-3 when a_sup == 0.
double default_dt(const ModelSpec& model, double h);

/// Time derivatives of (x_i, w_i, nu_i) for every particle.
struct Derivative {
    Vec dx;  ///< flat, size() * dim
    Vec dw;
    Vec dnu;
};

/// Right-hand side of the particle system. The mutation sum for particle i
/// runs only when x_i lies in support_m_x, and only over sources x_j in
/// support_m_y; every skipped term is exactly zero.
Derivative rhs(const ModelSpec& model, const ParticleEnsemble& ens, int workers = 1);
void rhs(const ModelSpec& model, const ParticleEnsemble& ens, Derivative& out, int workers = 1);

/// O_T = hull(supp v0, supp_m_x) + B_{2 a_sup T}.
Box active_box(const ModelSpec& model, double T);

/// Worst values seen by the per-step invariant monitors.
struct MonitorSummary {
    double mass_bound = 0.0;           ///< max{initial mass, I*/psi_g_min}
    double max_mass_excess = 0.0;      ///< max_t (rho_h(t) - mass_bound), floored at 0
    double max_support_excess = 0.0;   ///< max_t max_i (|x_i(t) - x_i(0)| - a_sup t), floored at 0
    double min_nu_ratio = 1.0;         ///< min_t min_i nu_i / max_j nu_j
    std::size_t outside_active_box = 0;
};

struct Trajectory {
    std::vector<ParticleEnsemble> snapshots;
    Vec times;  ///< every step, starting at 0
    Vec mass;
    Vec nu_min, nu_max;
    Vec w_min, w_max;
    MonitorSummary monitors;
    double dt = 0.0;

    const ParticleEnsemble& final_state() const { return snapshots.back(); }
};

/// Classical RK4 with fixed step dt = T / ceil(T / dt_requested).
/// Throws IntegrationError on non-finite state, w_i <= 0, or a negative
/// intensity below the alarm threshold.
Trajectory integrate(const ModelSpec& model, const ParticleEnsemble& ens0, const RunConfig& cfg);

}  // namespace selmut
