#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "selmut/model.hpp"
#include "selmut/types.hpp"

namespace selmut {

struct InitialDensity {
    std::string name;
    std::function<double(Point)> value;  ///< zero outside `support`
    Box support;
    int k_reg = 1;  ///< Sobolev index used in rate predictions
};

/// Named initial densities: one-minus-x, x-one-minus-x, x-squared, const6
/// (support [0,1] unless `lo`/`hi` are given), gaussian(center, width) on
/// center +- 3 width, bump(center, width) = exp(1 - 1/(1 - |x-c|^2/w^2)), and
/// uniform(level) on [lo, hi].
/// Parameters: lo, hi, center, width, level (vectors for d > 1).
InitialDensity make_initial_density(const std::string& name, const std::map<std::string, Vec>& params,
                                    std::size_t dim = 1);

/// Registers a user evaluator under `name` so make_initial_density finds it.
void register_initial_density(const std::string& name,
                              std::function<InitialDensity(const std::map<std::string, Vec>&, std::size_t)> factory);

struct PartitionOptions {
    /// Drop cells with v0(centre) == 0 that can never receive a mutation influx.
    bool drop_zero_cells = true;
};

/// Tiles O_T = hull(supp v0, supp_m_x) + B_{2 a_sup T} with cubes of side h
/// whose centres are supp_v0.lo + (i + 1/2) h, and emits one particle per cube
/// (x = centre, w = h^d, nu = v0(centre)) in lexicographic lattice order.
ParticleEnsemble partition_support(const InitialDensity& v0, const ModelSpec& model, double h, double T,
                                   PartitionOptions options = {});

struct SpacingReport {
    double position_min = 0.0;  ///< min nearest-neighbour distance / h
    double position_max = 0.0;  ///< max nearest-neighbour distance / h
    double volume_min = 0.0;    ///< min w / h^d
    double volume_max = 0.0;
    double c_hat = 0.0;  ///< min of the two minima
    double C_hat = 0.0;  ///< max of the two maxima
};

SpacingReport check_spacing(const ParticleEnsemble& ens);

struct MutationDiscretizationCheck {
    bool ok = true;
    double bound = 0.0;      ///< K + r*/2
    double max_value = 0.0;  ///< largest sampled sum_i w_i m(t, x_i, y, I_d)
    std::optional<double> witness_t;
    std::optional<Vec> witness_y;
};

/// True iff sum_i w_i m(t, x_i, y, I_d(t, x_i)) < K + r*/2 at every sampled (t, y).
MutationDiscretizationCheck check_mutation_discretization(const ParticleEnsemble& ens, const ModelSpec& model,
                                                          const Vec& t_samples,
                                                          const std::vector<Vec>& y_samples);

}  // namespace selmut
