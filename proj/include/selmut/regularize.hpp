#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "selmut/model.hpp"
#include "selmut/types.hpp"

namespace selmut {

/// Cut-off function phi on R^d, the tensor product of a 1D profile.
struct CutoffSpec {
    std::string name;
    std::function<double(double)> profile;
    int r_order = 2;       ///< declared moment order r
    double radius = 0.0;   ///< profile vanishes for |u| > radius
    std::string note;

    double operator()(Point u) const;
};

/// Built-in kernels: gaussian (cut at |u| = 9, r = 2), truncated_gaussian
/// (param `radius`, renormalised, r = 2), bspline3 (centred cubic B-spline,
/// r = 2), gaussian4 ((3/2 - u^2/2) N(0,1), cut at 9, r = 4).
CutoffSpec make_cutoff(const std::string& name, const std::map<std::string, double>& params = {});

/// phi_eps(u) = eps^-1 phi(u / eps) per axis.
CutoffSpec scaled(const CutoffSpec& phi, double eps);

struct Moment {
    std::vector<int> alpha;
    double value = 0.0;
    double expected = 0.0;  ///< 1 for alpha = 0, else 0
    bool ok = false;
};

struct MomentReport {
    std::vector<Moment> moments;  ///< all |alpha| <= r - 1
    bool ok = false;
    int detected_order = 0;  ///< lowest degree with a non-vanishing moment (searched up to 8)
};

/// Tensor Gauss-Legendre quadrature on unit-width panels over the support.
/// The zeroth moment must equal 1 to 1e-10, the others vanish to 1e-8.
MomentReport verify_moments(const CutoffSpec& phi, int r, std::size_t dim = 1);

/// Ordered sample points. Uniform grids also carry their shape, which the
/// trapezoid rule needs.
struct SampleGrid {
    std::size_t dim = 1;
    Vec points;                       ///< flat, size() * dim, last axis fastest
    std::vector<std::size_t> shape;   ///< empty for scattered points
    Box box;

    static SampleGrid uniform(const Box& box, const std::vector<std::size_t>& counts);
    /// Uniform grid over `box` with spacing at most `max_spacing` on every axis.
    static SampleGrid with_spacing(const Box& box, double max_spacing);
    static SampleGrid scattered(std::size_t dim, Vec points);

    std::size_t size() const { return dim == 0 ? 0 : points.size() / dim; }
    Point point(std::size_t i) const { return {points.data() + i * dim, dim}; }
    bool is_uniform() const { return !shape.empty(); }
    double spacing(std::size_t axis) const;
};

bool same_grid(const SampleGrid& a, const SampleGrid& b);

/// Tensor trapezoid rule of grid-sampled values.
double trapezoid(const SampleGrid& grid, const Vec& values);

/// v_eps^h(x) = sum_i nu_i w_i eps^-d phi((x - x_i) / eps) at every grid point.
Vec reconstruct(const ParticleEnsemble& ens, const CutoffSpec& phi, double eps, const SampleGrid& grid,
                int workers = 1);

/// (Pi_eps^h v)(x) = sum_i w_i v(x_i) eps^-d phi((x - x_i) / eps).
Vec project(const Vec& v_at_particles, const ParticleEnsemble& ens, const CutoffSpec& phi, double eps,
            const SampleGrid& grid, int workers = 1);

struct EpsilonRule {
    enum class Kind { power, optimal };
    Kind kind = Kind::power;
    double q = 0.5;
    int kappa = 2;
    int r = 2;

    static EpsilonRule power(double q) { return {Kind::power, q, 0, 0}; }
    static EpsilonRule optimal(int kappa, int r) { return {Kind::optimal, 0.0, kappa, r}; }
    /// q, or kappa / (kappa + r).
    double exponent() const;
};

/// eps = h^q.
double epsilon_rule(double h, const EpsilonRule& rule);

}  // namespace selmut
