#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "selmut/discretize.hpp"
#include "selmut/dynamics.hpp"
#include "selmut/model.hpp"
#include "selmut/reference.hpp"
#include "selmut/regularize.hpp"

namespace selmut {

/// No root of I -> R(x, psi_g(x, x) I) in the bracket.
class PredictionUnavailable : public Error {
public:
    using Error::Error;
};

/// sum_i |v(t, x_i) - nu_i| w_i with v interpolated from the oracle.
double weighted_pointwise_error(const ParticleEnsemble& ens, const ReferenceGrid& oracle);

struct OrderFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  ///< max |log error - fitted line|
    double slope_stderr = 0.0;
    std::size_t points = 0;
};

/// Least squares on (log h, log error). Needs at least three strictly
/// decreasing h values and positive errors.
OrderFit fit_convergence_order(const std::vector<std::pair<double, double>>& h_error);

struct Cluster {
    Vec position;  ///< mass-weighted centroid
    double mass = 0.0;
    std::size_t members = 0;
};

struct ClusterResult {
    bool stationary = false;
    std::vector<Cluster> clusters;
    double rho_final = 0.0;
    double rho_window = 0.0;       ///< rho_h(T - window)
    double max_displacement = 0.0; ///< max_i |x_i(T) - x_i(T - window)|
    std::string reason;            ///< why the certificate failed
};

/// Single-linkage clustering of the final positions with linking radius
/// pos_tol. Needs a snapshot at (or before) T - window. Clusters lighter than
/// mass_tol * rho_h are dropped; the rest are sorted by position.
ClusterResult detect_limit_clusters(const Trajectory& traj, double window, double pos_tol, double mass_tol);

/// Root of I -> R(x_hat, psi_g(x_hat, x_hat) I) on [0, I*/psi_g_min + 1] by bisection to 1e-12.
double predict_limit_mass(const ModelSpec& model, Point x_hat);

struct DiracResiduals {
    Vec advection;  ///< |a(x_c, I_a)| per cluster
    Vec growth;     ///< |R(x_c, I_g(x_c))| per cluster
    double mutation = 0.0;  ///< max_x sum_c mass_c m(x, x_c, I_d(x)) over the samples
};

DiracResiduals check_dirac_necessary_conditions(const ModelSpec& model, const std::vector<Cluster>& clusters,
                                                const std::vector<Vec>& samples);

using TestFunction = std::function<double(double)>;

/// exp(1 - 1/(1 - ((x - c)/w)^2)) on |x - c| < w.
TestFunction bump(double center, double width);

/// Seven bumps with centres (j + 1/2) W/7 from lo and radius W/7 over [lo, lo + W].
std::vector<TestFunction> default_test_bumps(double lo, double hi);

/// max over tests of |sum_i nu_i w_i phi(x_i) - int phi v_oracle| (1D).
double weak_measure_gap(const ParticleEnsemble& ens, const ReferenceGrid& oracle, const std::vector<TestFunction>& tests);

struct SelfConvergenceOptions {
    CutoffSpec cutoff;
    EpsilonRule eps_rule = EpsilonRule::power(0.5);
    RunConfig run;  ///< T_final is overwritten; dt is shared by all runs
};

struct SelfConvergence {
    std::vector<std::pair<double, double>> errors;  ///< (h, L1 distance to the finest run)
    OrderFit fit;
};

/// Runs every h, reconstructs on a shared grid (spacing <= eps_min / 4) and
/// measures L1 distances to the finest run. Needs at least four h values.
SelfConvergence particle_self_convergence(const ModelSpec& model, const InitialDensity& v0, const Vec& h_list,
                                          double T, const SelfConvergenceOptions& options);

enum class ApVerdict { preserving, non_preserving, inconclusive };

std::string to_string(ApVerdict verdict);

/// preserving if the gap drops by at least 2x from the coarsest h to some
/// h <= h/4; non-preserving if every gap exceeds `floor` and it does not;
/// inconclusive otherwise.
ApVerdict ap_verdict(const std::vector<std::pair<double, double>>& h_gap, double floor);

struct DisjointnessCheck {
    bool disjoint = false;
    Box swept;  ///< hull of the traced corners and K_x
};

/// Traces characteristics from the corners of supp v0 (and K_x) over [0, T]
/// and tests the hull of the swept points against K_y. A heuristic: the
/// corners need not bound the image of the box.
DisjointnessCheck check_support_disjointness(const ModelSpec& model, double T, std::size_t samples = 100);

struct DiagnosticsReport {
    Vec times;
    Vec mass;
    std::vector<std::pair<double, double>> l1_errors;
    std::vector<std::pair<double, double>> pointwise_errors;
    std::optional<OrderFit> l1_order;
    std::optional<OrderFit> pointwise_order;
    std::optional<ClusterResult> clusters;
    std::optional<double> predicted_mass;
    std::optional<DiracResiduals> residuals;
    std::vector<std::pair<double, double>> gaps;
    ApVerdict verdict = ApVerdict::inconclusive;
};

}  // namespace selmut
