#include "selmut/regularize.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>
#include <numeric>

#include "selmut/parallel.hpp"

namespace selmut {

double CutoffSpec::operator()(Point u) const {
    double v = 1.0;
    for (double c : u) v *= profile(c);
    return v;
}

namespace {

double normal_pdf(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

CutoffSpec make_cutoff(const std::string& name, const std::map<std::string, double>& params) {
    CutoffSpec phi;
    phi.name = name;
    if (name == "gaussian") {
        phi.radius = 9.0;
        phi.r_order = 2;
        phi.profile = [](double u) { return std::abs(u) <= 9.0 ? normal_pdf(u) : 0.0; };
        phi.note = "standard normal density cut at |u| = 9 (tail below 1e-18); not compactly supported before the cut";
    } else if (name == "truncated_gaussian") {
        const auto it = params.find("radius");
        const double R = it == params.end() ? 3.0 : it->second;
        if (!(R > 0.0)) throw UsageError("truncated_gaussian: radius must be positive");
        const double mass = std::erf(R / std::sqrt(2.0));
        phi.radius = R;
        phi.r_order = 2;
        phi.profile = [R, mass](double u) { return std::abs(u) <= R ? normal_pdf(u) / mass : 0.0; };
        phi.note = "normal density restricted to [-R, R] and renormalised; discontinuous at the cut";
    } else if (name == "bspline3") {
        phi.radius = 2.0;
        phi.r_order = 2;
        phi.profile = [](double u) {
            const double a = std::abs(u);
            if (a < 1.0) return (4.0 - 6.0 * a * a + 3.0 * a * a * a) / 6.0;
            if (a < 2.0) return (2.0 - a) * (2.0 - a) * (2.0 - a) / 6.0;
            return 0.0;
        };
        phi.note = "centred cubic B-spline, C^2, support [-2, 2]";
    } else if (name == "gaussian4") {
        phi.radius = 9.0;
        phi.r_order = 4;
        phi.profile = [](double u) { return std::abs(u) <= 9.0 ? (1.5 - 0.5 * u * u) * normal_pdf(u) : 0.0; };
        phi.note = "fourth-order Gaussian kernel; takes negative values";
    } else {
        throw UsageError("unknown cut-off function '" + name + "'");
    }
    return phi;
}

CutoffSpec scaled(const CutoffSpec& phi, double eps) {
    if (!(eps > 0.0)) throw UsageError("scaled: eps must be positive");
    CutoffSpec out = phi;
    out.name = phi.name + "_eps";
    out.radius = phi.radius * eps;
    out.profile = [p = phi.profile, eps](double u) { return p(u / eps) / eps; };
    return out;
}

MomentReport verify_moments(const CutoffSpec& phi, int r, std::size_t dim) {
    if (r < 1) throw UsageError("verify_moments: r must be at least 1");
    if (dim < 1) throw UsageError("verify_moments: dim must be positive");
    constexpr int kMaxDegree = 8;
    const int top = std::max(r - 1, kMaxDegree);

    // 1D moments by Gauss-Legendre on unit-width panels over [-radius, radius].
    using GL = boost::math::quadrature::gauss<double, 20>;
    const double R = phi.radius;
    const auto panels = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(2.0 * R)));
    const double width = 2.0 * R / static_cast<double>(panels);
    Vec m1(top + 1, 0.0);
    for (std::size_t p = 0; p < panels; ++p) {
        const double a = -R + static_cast<double>(p) * width;
        const double mid = a + 0.5 * width;
        for (int k = 0; k <= top; ++k) {
            auto f = [&](double u) { return std::pow(u, k) * phi.profile(u); };
            double s = 0.0;
            for (std::size_t q = 0; q < GL::abscissa().size(); ++q) {
                const double z = GL::abscissa()[q] * 0.5 * width;
                const double wq = GL::weights()[q] * 0.5 * width;
                s += z == 0.0 ? wq * f(mid) : wq * (f(mid - z) + f(mid + z));
            }
            m1[k] += s;
        }
    }

    // phi is a tensor product, so the tensor quadrature of x^alpha phi is the
    // product of the 1D quadratures.
    MomentReport report;
    report.detected_order = top + 1;
    std::vector<int> alpha(dim, 0);
    for (int degree = 0; degree <= top; ++degree) {
        bool degree_ok = true;
        std::function<void(std::size_t, int)> walk = [&](std::size_t axis, int left) {
            if (axis + 1 == dim) {
                alpha[axis] = left;
                double value = 1.0;
                for (std::size_t l = 0; l < dim; ++l) value *= m1[alpha[l]];
                const double expected = degree == 0 ? 1.0 : 0.0;
                const double tol = degree == 0 ? 1e-10 : 1e-8;
                const bool ok = std::abs(value - expected) <= tol;
                degree_ok = degree_ok && ok;
                if (degree <= r - 1) report.moments.push_back({alpha, value, expected, ok});
                return;
            }
            for (int a = left; a >= 0; --a) {
                alpha[axis] = a;
                walk(axis + 1, left - a);
            }
        };
        walk(0, degree);
        if (!degree_ok && report.detected_order == top + 1) report.detected_order = degree;
    }
    report.ok = std::all_of(report.moments.begin(), report.moments.end(), [](const Moment& m) { return m.ok; });
    return report;
}

SampleGrid SampleGrid::uniform(const Box& box, const std::vector<std::size_t>& counts) {
    const std::size_t d = box.dim();
    if (counts.size() != d) throw UsageError("SampleGrid::uniform: counts must match the box dimension");
    std::size_t total = 1;
    for (std::size_t l = 0; l < d; ++l) {
        if (counts[l] < 2) throw UsageError("SampleGrid::uniform: need at least two points per axis");
        total *= counts[l];
    }
    SampleGrid g;
    g.dim = d;
    g.shape = counts;
    g.box = box;
    g.points.resize(total * d);
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rem = flat;
        for (std::size_t l = d; l-- > 0;) {
            const std::size_t k = rem % counts[l];
            rem /= counts[l];
            const double step = box.width(l) / static_cast<double>(counts[l] - 1);
            g.points[flat * d + l] = k + 1 == counts[l] ? box.hi[l] : box.lo[l] + static_cast<double>(k) * step;
        }
    }
    return g;
}

SampleGrid SampleGrid::with_spacing(const Box& box, double max_spacing) {
    if (!(max_spacing > 0.0)) throw UsageError("SampleGrid::with_spacing: spacing must be positive");
    std::vector<std::size_t> counts(box.dim());
    for (std::size_t l = 0; l < box.dim(); ++l) {
        counts[l] = static_cast<std::size_t>(std::ceil(box.width(l) / max_spacing - 1e-9)) + 1;
        counts[l] = std::max<std::size_t>(counts[l], 2);
    }
    return uniform(box, counts);
}

SampleGrid SampleGrid::scattered(std::size_t dim, Vec points) {
    if (dim == 0 || points.size() % dim != 0) throw UsageError("SampleGrid::scattered: bad point array");
    SampleGrid g;
    g.dim = dim;
    g.points = std::move(points);
    return g;
}

double SampleGrid::spacing(std::size_t axis) const {
    if (!is_uniform()) throw UsageError("SampleGrid::spacing: grid is not uniform");
    return box.width(axis) / static_cast<double>(shape[axis] - 1);
}

bool same_grid(const SampleGrid& a, const SampleGrid& b) {
    return a.dim == b.dim && a.shape == b.shape && a.points == b.points;
}

double trapezoid(const SampleGrid& grid, const Vec& values) {
    if (!grid.is_uniform()) throw UsageError("trapezoid: grid is not uniform");
    if (values.size() != grid.size()) throw GridMismatch("trapezoid: value count does not match the grid");
    const std::size_t d = grid.dim;
    Vec h(d);
    for (std::size_t l = 0; l < d; ++l) h[l] = grid.spacing(l);
    return pairwise_sum(values.size(), [&](std::size_t flat) {
        double w = 1.0;
        std::size_t rem = flat;
        for (std::size_t l = d; l-- > 0;) {
            const std::size_t k = rem % grid.shape[l];
            rem /= grid.shape[l];
            w *= (k == 0 || k + 1 == grid.shape[l]) ? 0.5 * h[l] : h[l];
        }
        return w * values[flat];
    });
}

namespace {

// sum_i alpha_i eps^-d phi((x - x_i) / eps) on the grid. Particles are visited
// in order of their first coordinate (ties by index) inside the support window.
Vec convolve(const Vec& alpha, const ParticleEnsemble& ens, const CutoffSpec& phi, double eps,
             const SampleGrid& grid, int workers) {
    if (!(eps > 0.0)) throw UsageError("eps must be positive");
    if (grid.dim != ens.dim) throw GridMismatch("grid and ensemble dimensions differ");
    const std::size_t d = ens.dim;
    const std::size_t n = ens.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return ens.positions[a * d] < ens.positions[b * d]; });
    Vec first(n);
    for (std::size_t k = 0; k < n; ++k) first[k] = ens.positions[order[k] * d];

    const double reach = phi.radius * eps;
    const double scale = std::pow(eps, -static_cast<double>(d));
    Vec out(grid.size(), 0.0);
    parallel_for(grid.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t g = begin; g < end; ++g) {
            const Point x = grid.point(g);
            const auto lo = std::lower_bound(first.begin(), first.end(), x[0] - reach) - first.begin();
            const auto hi = std::upper_bound(first.begin(), first.end(), x[0] + reach) - first.begin();
            const double s = pairwise_sum(static_cast<std::size_t>(lo), static_cast<std::size_t>(hi), [&](std::size_t k) {
                const std::size_t i = order[k];
                double v = alpha[i];
                for (std::size_t l = 0; l < d && v != 0.0; ++l) {
                    v *= phi.profile((x[l] - ens.positions[i * d + l]) / eps);
                }
                return v;
            });
            out[g] = scale * s;
        }
    });
    return out;
}

}  // namespace

Vec reconstruct(const ParticleEnsemble& ens, const CutoffSpec& phi, double eps, const SampleGrid& grid,
                int workers) {
    Vec alpha(ens.size());
    for (std::size_t i = 0; i < ens.size(); ++i) alpha[i] = ens.alpha(i);
    return convolve(alpha, ens, phi, eps, grid, workers);
}

Vec project(const Vec& v_at_particles, const ParticleEnsemble& ens, const CutoffSpec& phi, double eps,
            const SampleGrid& grid, int workers) {
    if (v_at_particles.size() != ens.size()) {
        throw UsageError("project: expected one value per particle");
    }
    Vec alpha(ens.size());
    for (std::size_t i = 0; i < ens.size(); ++i) alpha[i] = ens.volumes[i] * v_at_particles[i];
    return convolve(alpha, ens, phi, eps, grid, workers);
}

double EpsilonRule::exponent() const {
    if (kind == Kind::power) return q;
    if (kappa <= 0 || r <= 0) throw UsageError("epsilon_rule: kappa and r must be positive");
    return static_cast<double>(kappa) / static_cast<double>(kappa + r);
}

double epsilon_rule(double h, const EpsilonRule& rule) {
    if (!(h > 0.0)) throw UsageError("epsilon_rule: h must be positive");
    const double q = rule.exponent();
    if (!(q > 0.0 && q < 1.0)) throw UsageError("epsilon_rule: exponent must lie in (0, 1)");
    return std::pow(h, q);
}

}  // namespace selmut
