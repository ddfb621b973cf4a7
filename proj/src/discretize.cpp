#include "selmut/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "selmut/parallel.hpp"

namespace selmut {

namespace {

using Factory = std::function<InitialDensity(const std::map<std::string, Vec>&, std::size_t)>;

std::map<std::string, Factory>& user_registry() {
    static std::map<std::string, Factory> registry;
    return registry;
}

Vec param(const std::map<std::string, Vec>& params, const std::string& key, std::size_t dim,
          double fallback) {
    auto it = params.find(key);
    if (it == params.end() || it->second.empty()) return Vec(dim, fallback);
    if (it->second.size() == 1) return Vec(dim, it->second.front());
    if (it->second.size() != dim) {
        throw UsageError("initial density parameter '" + key + "' has the wrong dimension");
    }
    return it->second;
}

InitialDensity polynomial_profile(const std::string& name, std::function<double(double)> f,
                                  const std::map<std::string, Vec>& params, std::size_t dim) {
    if (dim != 1) throw UsageError("initial density '" + name + "' is one-dimensional");
    Box support(param(params, "lo", 1, 0.0), param(params, "hi", 1, 1.0));
    InitialDensity v0;
    v0.name = name;
    v0.support = support;
    v0.k_reg = 1;
    v0.value = [support, f = std::move(f)](Point x) { return support.contains(x) ? f(x[0]) : 0.0; };
    return v0;
}

}  // namespace

void register_initial_density(const std::string& name, Factory factory) {
    user_registry()[name] = std::move(factory);
}

InitialDensity make_initial_density(const std::string& name, const std::map<std::string, Vec>& params,
                                    std::size_t dim) {
    if (auto it = user_registry().find(name); it != user_registry().end()) return it->second(params, dim);

    if (name == "one-minus-x") return polynomial_profile(name, [](double x) { return 1.0 - x; }, params, dim);
    if (name == "x-one-minus-x") {
        return polynomial_profile(name, [](double x) { return x * (1.0 - x); }, params, dim);
    }
    if (name == "x-squared") return polynomial_profile(name, [](double x) { return x * x; }, params, dim);
    if (name == "const6") return polynomial_profile(name, [](double) { return 6.0; }, params, dim);

    if (name == "uniform") {
        const double level = param(params, "level", 1, 1.0)[0];
        Box support(param(params, "lo", dim, 0.0), param(params, "hi", dim, 1.0));
        InitialDensity v0{name, [support, level](Point x) { return support.contains(x) ? level : 0.0; },
                          support, 1};
        return v0;
    }
    if (name == "gaussian" || name == "bump") {
        const Vec c = param(params, "center", dim, 0.0);
        const double w = param(params, "width", 1, 1.0)[0];
        if (!(w > 0.0)) throw UsageError("initial density width must be positive");
        const bool gaussian = name == "gaussian";
        const double reach = gaussian ? 3.0 * w : w;
        Vec lo(dim), hi(dim);
        for (std::size_t l = 0; l < dim; ++l) {
            lo[l] = c[l] - reach;
            hi[l] = c[l] + reach;
        }
        Box support(lo, hi);
        InitialDensity v0;
        v0.name = name;
        v0.support = support;
        v0.k_reg = gaussian ? 4 : 8;
        v0.value = [support, c, w, gaussian](Point x) {
            if (!support.contains(x)) return 0.0;
            double r2 = 0.0;
            for (std::size_t l = 0; l < x.size(); ++l) r2 += (x[l] - c[l]) * (x[l] - c[l]);
            r2 /= w * w;
            if (gaussian) return std::exp(-r2);
            return r2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r2)) : 0.0;
        };
        return v0;
    }
    throw UsageError("unknown initial density '" + name + "'");
}

ParticleEnsemble partition_support(const InitialDensity& v0, const ModelSpec& model, double h, double T,
                                   PartitionOptions options) {
    if (!(h > 0.0)) throw UsageError("partition_support: h must be positive");
    if (!(T >= 0.0)) throw UsageError("partition_support: T must be non-negative");
    const std::size_t d = v0.support.dim();
    if (d != model.dim) throw UsageError("partition_support: initial density and model dimensions differ");

    Box active = v0.support;
    if (model.has_mutation() && model.support_m_x) active = hull(active, *model.support_m_x);
    active = active.dilated(2.0 * model.a_sup * T);

    // Cells outside this box start at zero and can never receive mutation influx.
    std::optional<Box> receiving;
    if (model.has_mutation() && model.support_m_x) receiving = model.support_m_x->dilated(model.a_sup * T);

    Box scan = v0.support;
    if (receiving) scan = hull(scan, receiving->dilated(0.5 * h));
    if (!options.drop_zero_cells) scan = active;

    const Vec& anchor = v0.support.lo;
    constexpr double kTol = 1e-9;
    auto index_range = [&](const Box& b, std::size_t l) {
        const auto i_min = static_cast<long long>(std::ceil((b.lo[l] - anchor[l]) / h - 0.5 - kTol));
        const auto i_max = static_cast<long long>(std::floor((b.hi[l] - anchor[l]) / h - 0.5 + kTol));
        return std::pair{i_min, i_max};
    };
    // Labels flatten the lattice of all of O_T, so they do not depend on which cells are dropped.
    std::vector<long long> full_first(d), full_count(d), first(d), count(d);
    for (std::size_t l = 0; l < d; ++l) {
        const auto [a_min, a_max] = index_range(active, l);
        const auto [s_min, s_max] = index_range(scan, l);
        full_first[l] = a_min;
        full_count[l] = std::max(0LL, a_max - a_min + 1);
        first[l] = std::max(a_min, s_min);
        count[l] = std::max(0LL, std::min(a_max, s_max) - first[l] + 1);
    }
    const long long total = std::accumulate(count.begin(), count.end(), 1LL, std::multiplies<>());

    ParticleEnsemble ens;
    ens.dim = d;
    ens.h = h;
    ens.time = 0.0;
    const double volume = std::pow(h, static_cast<double>(d));
    Vec centre(d);
    for (long long flat = 0; flat < total; ++flat) {
        // Last axis varies fastest.
        long long rem = flat;
        long long label = 0;
        long long stride = 1;
        for (std::size_t l = d; l-- > 0;) {
            const long long i = first[l] + rem % count[l];
            rem /= count[l];
            centre[l] = anchor[l] + (static_cast<double>(i) + 0.5) * h;
            label += (i - full_first[l]) * stride;
            stride *= full_count[l];
        }
        const double nu = v0.value(centre);
        if (!(nu >= 0.0) || !std::isfinite(nu)) {
            throw DiscretizationError("initial density '" + v0.name + "' is negative or non-finite at a cell centre");
        }
        bool keep = nu != 0.0 || !options.drop_zero_cells;
        if (!keep && receiving) {
            Vec lo(d), hi(d);
            for (std::size_t l = 0; l < d; ++l) {
                lo[l] = centre[l] - 0.5 * h;
                hi[l] = centre[l] + 0.5 * h;
            }
            keep = Box(lo, hi).intersects(*receiving);
        }
        if (keep) ens.push_back(label, centre, volume, nu);
    }
    if (ens.empty()) {
        throw DiscretizationError("partition_support produced no particles (h too large for the support?)");
    }
    return ens;
}

SpacingReport check_spacing(const ParticleEnsemble& ens) {
    const std::size_t n = ens.size();
    if (n < 2) throw UsageError("check_spacing: need at least two particles");
    if (!(ens.h > 0.0)) throw UsageError("check_spacing: ensemble has no spacing parameter h");
    const std::size_t d = ens.dim;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return ens.positions[a * d] < ens.positions[b * d]; });

    auto dist2 = [&](std::size_t a, std::size_t b) {
        double s = 0.0;
        for (std::size_t l = 0; l < d; ++l) {
            const double diff = ens.positions[a * d + l] - ens.positions[b * d + l];
            s += diff * diff;
        }
        return s;
    };

    double nn_min = std::numeric_limits<double>::infinity();
    double nn_max = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t i = order[r];
        const double xi = ens.positions[i * d];
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t s = r + 1; s < n; ++s) {
            const double gap = ens.positions[order[s] * d] - xi;
            if (gap * gap >= best) break;
            best = std::min(best, dist2(i, order[s]));
        }
        for (std::size_t s = r; s-- > 0;) {
            const double gap = xi - ens.positions[order[s] * d];
            if (gap * gap >= best) break;
            best = std::min(best, dist2(i, order[s]));
        }
        if (best == 0.0) throw SpacingError("check_spacing: duplicate particle positions");
        const double nn = std::sqrt(best) / ens.h;
        nn_min = std::min(nn_min, nn);
        nn_max = std::max(nn_max, nn);
    }

    const double hd = std::pow(ens.h, static_cast<double>(d));
    const auto [wmin, wmax] = std::minmax_element(ens.volumes.begin(), ens.volumes.end());
    SpacingReport report;
    report.position_min = nn_min;
    report.position_max = nn_max;
    report.volume_min = *wmin / hd;
    report.volume_max = *wmax / hd;
    report.c_hat = std::min(report.position_min, report.volume_min);
    report.C_hat = std::max(report.position_max, report.volume_max);
    return report;
}

MutationDiscretizationCheck check_mutation_discretization(const ParticleEnsemble& ens, const ModelSpec& model,
                                                          const Vec& t_samples,
                                                          const std::vector<Vec>& y_samples) {
    MutationDiscretizationCheck check;
    check.bound = model.K_const + 0.5 * model.r_star;
    if (!model.has_mutation()) return check;
    for (double t : t_samples) {
        FieldEvaluator field(model, ens, t);
        Vec Id(ens.size());
        for (std::size_t i = 0; i < ens.size(); ++i) Id[i] = field.nonlocal(KernelRef::mutation(), ens.position(i));
        for (const Vec& y : y_samples) {
            if (y.size() != model.dim) throw UsageError("check_mutation_discretization: sample dimension");
            const double sum = pairwise_sum(ens.size(), [&](std::size_t i) {
                return ens.volumes[i] * model.mutation(t, ens.position(i), y, Id[i]);
            });
            check.max_value = std::max(check.max_value, sum);
            if (!(sum < check.bound) && check.ok) {
                check.ok = false;
                check.witness_t = t;
                check.witness_y = y;
            }
        }
    }
    return check;
}

}  // namespace selmut
