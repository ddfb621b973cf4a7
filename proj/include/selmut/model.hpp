#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "selmut/types.hpp"

namespace selmut {

using AdvectionFn =
    std::function<void(double t, Point x, std::span<const double> I, std::span<double> out)>;
using AdvectionDivFn = std::function<double(double t, Point x, std::span<const double> I)>;
/// Writes d a / d I_k (a vector in R^d) into `out`.
using AdvectionDIFn = std::function<void(double t, Point x, std::span<const double> I,
                                         std::size_t k, std::span<double> out)>;
using GrowthFn = std::function<double(double t, Point x, double I)>;
using MutationFn = std::function<double(double t, Point x, Point y, double I)>;
using KernelFn = std::function<double(double t, Point x, Point y)>;
using KernelGradFn = std::function<void(double t, Point x, Point y, std::span<double> grad)>;

/// Interaction kernel psi(t, x, y) of a non-local term.
struct Kernel {
    KernelFn value;
    KernelGradFn grad_x;  ///< may be empty; see with_fd_gradient()
    /// False when psi does not depend on x (e.g. psi == 1 or psi = y_j). The
    /// non-local integral is then the same at every x and is evaluated once.
    bool depends_on_x = true;

    static Kernel constant(double c);
    static Kernel coordinate(std::size_t j);  ///< psi(t, x, y) = y_j
};

/// Coefficient bundle of the selection-mutation problem
///   d_t v + div(a(t,x,I_a v) v) = R(t,x,I_g v) v + int m(t,x,y,I_d v) v(y) dy
/// together with the declared hypothesis constants.
struct ModelSpec {
    std::string name;
    std::size_t dim = 1;

    AdvectionFn advection;
    AdvectionDivFn advection_div_x;  ///< divergence in x at frozen I
    AdvectionDIFn advection_dI;      ///< may be empty for local advection
    bool local_advection = true;
    bool autonomous = true;  ///< coefficients do not depend on t

    GrowthFn growth;
    GrowthFn growth_dI;
    MutationFn mutation;  ///< empty means m == 0

    std::vector<Kernel> kernels_a;  ///< one per advection argument I_k
    Kernel kernel_g = Kernel::constant(1.0);
    Kernel kernel_d = Kernel::constant(0.0);
    double psi_g_min = 1.0;

    Box support_v0;
    std::optional<Box> support_m_x;
    std::optional<Box> support_m_y;

    double a_sup = 0.0;
    double I_star = 0.0;
    double r_star = 0.0;
    double M_bar = 0.0;
    double K_const = 0.0;
    int kappa = 1;
    int k_reg = 1;
    int r_order = 2;

    bool has_mutation() const { return static_cast<bool>(mutation); }
    std::size_t n_advection_args() const { return kernels_a.size(); }
    /// max{initial mass, I* / psi_g_min}
    double mass_bound(double initial_mass) const;
};

/// Particle ensemble sum_i nu_i w_i delta_{x_i} at a given time.
struct ParticleEnsemble {
    std::size_t dim = 1;
    double time = 0.0;
    double h = 0.0;
    std::vector<std::int64_t> labels;  ///< lattice labels of the active cells
    Vec positions;                     ///< flat, size() * dim
    Vec volumes;
    Vec intensities;

    std::size_t size() const { return volumes.size(); }
    bool empty() const { return volumes.empty(); }
    Point position(std::size_t i) const { return {positions.data() + i * dim, dim}; }
    double alpha(std::size_t i) const { return intensities[i] * volumes[i]; }
    /// sum_i nu_i w_i, pairwise-reduced in index order.
    double total_mass() const;
    void push_back(std::int64_t label, Point x, double w, double nu);
};

/// Which kernel a non-local term uses.
struct KernelRef {
    enum class Kind { advection, growth, mutation };
    Kind kind = Kind::growth;
    std::size_t index = 0;  ///< advection argument k

    static KernelRef advection(std::size_t k) { return {Kind::advection, k}; }
    static KernelRef growth() { return {Kind::growth, 0}; }
    static KernelRef mutation() { return {Kind::mutation, 0}; }
};

const Kernel& kernel_of(const ModelSpec& model, KernelRef ref);

/// I(t, x) = sum_j nu_j w_j psi(t, x, x_j).
double eval_nonlocal(const ModelSpec& model, KernelRef kernel, double t, Point x,
                     const ParticleEnsemble& ens);

/// Effective velocity A(t, x) = a(t, x, I_a(t, x)).
Vec eval_velocity(const ModelSpec& model, double t, Point x, const ParticleEnsemble& ens);

/// div_x A(t, x) = (div_x a)(t, x, I) + sum_k d a / d I_k . grad_x I_k(t, x).
double eval_divergence(const ModelSpec& model, double t, Point x, const ParticleEnsemble& ens);

/// Per-ensemble evaluator that caches the x-independent non-local sums so the
/// per-particle cost stays O(1) for such kernels. All public eval_* go through it.
class FieldEvaluator {
public:
    FieldEvaluator(const ModelSpec& model, const ParticleEnsemble& ens);
    FieldEvaluator(const ModelSpec& model, const ParticleEnsemble& ens, double t);

    double nonlocal(KernelRef kernel, Point x) const;
    /// grad_x I_k(t, x), written into out (size dim).
    void nonlocal_gradient(std::size_t k, Point x, std::span<double> out) const;
    /// Non-local advection arguments at x.
    void advection_args(Point x, std::span<double> I) const;
    void velocity(Point x, std::span<const double> I, std::span<double> out) const;
    double divergence(Point x, std::span<const double> I) const;

    const ModelSpec& model() const { return model_; }
    double time() const { return t_; }

private:
    const ModelSpec& model_;
    const ParticleEnsemble& ens_;
    double t_;
    std::vector<std::optional<double>> cached_a_;
    std::optional<double> cached_g_;
    std::optional<double> cached_d_;
};

// Finite-difference fallbacks (central, step sqrt(eps) * max(1, |x|)).
AdvectionDivFn fd_divergence(const ModelSpec& model);
AdvectionDIFn fd_advection_dI(const ModelSpec& model);
Kernel with_fd_gradient(Kernel kernel, std::size_t dim);

struct Violation {
    std::string hypothesis;
    Vec witness;  ///< (t, x..., [y...], [I])
    double value = 0.0;
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;
    std::size_t samples = 0;
    bool ok() const { return violations.empty(); }
    bool violated(const std::string& hypothesis) const;
};

/// Samples the model hypotheses on a Halton point set over `box` x [0, T].
/// Checks psi_g >= psi_g_min, m >= 0, m vanishing outside its supports,
/// R + K < -r* for I >= I*, a vanishing d a / d I for local specs, and the
/// consistency of advection_div_x with a central difference of the
/// advection (rel. 1e-5).
ValidationReport validate_model(const ModelSpec& model, const Box& box, std::size_t samples = 10000,
                                double T = 1.0);

/// Radical-inverse (Halton) point in [0,1)^dims for index n >= 1.
Vec halton_point(std::uint64_t n, std::size_t dims);

}  // namespace selmut
