#pragma once

#include <cstddef>
#include <string>

#include "selmut/discretize.hpp"
#include "selmut/model.hpp"
#include "selmut/regularize.hpp"
#include "selmut/types.hpp"

namespace selmut {

/// X(t1; t0, y) for a local 1D advection, RK4 with uniform substeps of at
/// most `dt` (default 1e-3). t1 < t0 traces backwards.
double characteristics(const ModelSpec& model, double y, double t0, double t1, double dt = 0.0);

struct ReferenceOptions {
    double dx = 1e-3;
    double dt = 1e-3;             ///< sub-interval length of the fixed-point march
    double char_dt = 0.0;         ///< RK4 substep along characteristics; 0 selects min(1e-3, dx / (2 a_sup))
    double fixed_point_tol = 1e-10;
    int max_iterations = 50;
    double min_dt = 1e-6;
    int workers = 1;
};

/// Grid-sampled oracle solution v(T, .) in 1D. Values vanish outside
/// `support`; inside it they are interpolated by a monotone cubic through the
/// nodes in the support, held constant between the edge nodes and the support ends.
class ReferenceGrid {
public:
    ReferenceGrid() = default;
    ReferenceGrid(SampleGrid grid, Vec values, Box support, double time);

    const SampleGrid& grid() const { return grid_; }
    const Vec& values() const { return values_; }
    const Box& support() const { return support_; }
    double time() const { return time_; }
    double dx() const { return grid_.spacing(0); }

    double value_at(double x) const;
    /// Integral of v over its support (trapezoid on the live nodes plus the end pieces).
    double total_mass() const;
    /// Quadrature weights matching total_mass(), zero off the support.
    const Vec& weights() const { return weights_; }

    Vec times;  ///< one entry per sub-interval, starting at 0
    Vec mass;
    std::string model_name;
    double dt = 0.0;
    double tol = 0.0;
    std::size_t iterations = 0;  ///< total fixed-point iterations
    std::size_t halvings = 0;

private:
    SampleGrid grid_;
    Vec values_;
    Box support_;
    double time_ = 0.0;
    std::size_t live_first_ = 0;
    std::size_t live_count_ = 0;
    Vec live_values_;
    Vec slopes_;
    Vec weights_;
};

/// Semi-Lagrangian march of the Duhamel fixed point v = Phi v: trace feet
/// back along characteristics, weight by exp(int R - div a), add the
/// mutation source by the trapezoid rule in time, and iterate until the grid
/// L1 change is below tol (1 + rho). A sub-interval that does not contract
/// within max_iterations is halved; below min_dt an OracleFailure is thrown.
ReferenceGrid solve_reference(const ModelSpec& model, const InitialDensity& v0, double T,
                              const ReferenceOptions& options = {});

/// Trapezoid L1 norm of (oracle - values) on the oracle's own grid.
double l1_distance(const ReferenceGrid& oracle, const SampleGrid& grid, const Vec& values);

}  // namespace selmut
