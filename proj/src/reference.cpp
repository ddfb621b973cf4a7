#include "selmut/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "selmut/dynamics.hpp"
#include "selmut/parallel.hpp"

namespace selmut {

namespace {

void require_local_1d(const ModelSpec& model, const char* op) {
    if (model.dim != 1) throw UsageError(std::string(op) + ": the reference solver is one-dimensional");
    if (!model.local_advection) throw UsageError(std::string(op) + ": the reference solver needs local advection");
}

struct Traced {
    double x = 0.0;
    double int_div = 0.0;  ///< int_{t0}^{t1} div a(s, X(s)) ds
};

// RK4 on (x, int div a) with `substeps` uniform steps from t0 to t1.
Traced trace(const ModelSpec& model, double y, double t0, double t1, std::size_t substeps) {
    const double zero_args[4] = {0.0, 0.0, 0.0, 0.0};
    const std::span<const double> I(zero_args, std::min<std::size_t>(4, model.n_advection_args()));
    const double step = (t1 - t0) / static_cast<double>(substeps);
    auto f = [&](double t, double x, double& dx, double& dl) {
        double a = 0.0;
        const double pt[1] = {x};
        model.advection(t, Point(pt, 1), I, std::span<double>(&a, 1));
        dx = a;
        dl = model.advection_div_x ? model.advection_div_x(t, Point(pt, 1), I) : 0.0;
    };
    Traced s{y, 0.0};
    for (std::size_t k = 0; k < substeps; ++k) {
        const double t = t0 + static_cast<double>(k) * step;
        double x1, l1, x2, l2, x3, l3, x4, l4;
        f(t, s.x, x1, l1);
        f(t + 0.5 * step, s.x + 0.5 * step * x1, x2, l2);
        f(t + 0.5 * step, s.x + 0.5 * step * x2, x3, l3);
        f(t + step, s.x + step * x3, x4, l4);
        s.x += step / 6.0 * (x1 + 2.0 * x2 + 2.0 * x3 + x4);
        s.int_div += step / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
    }
    return s;
}

std::size_t substeps_for(double span, double dt) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::abs(span) / dt - 1e-9)));
}

// Nodes inside [a, b] as a contiguous index range.
struct LiveRange {
    std::size_t first = 0;
    std::size_t count = 0;
};

LiveRange live_range(const Vec& xs, double dx, double a, double b) {
    const double tol = 1e-9 * dx;
    const auto lo = std::lower_bound(xs.begin(), xs.end(), a - tol) - xs.begin();
    const auto hi = std::upper_bound(xs.begin(), xs.end(), b + tol) - xs.begin();
    if (hi <= lo) return {};
    return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi - lo)};
}

// Trapezoid weights of the live nodes plus the pieces between the edge nodes and [a, b].
Vec live_weights(const Vec& xs, double dx, LiveRange r, double a, double b) {
    Vec w(r.count, dx);
    if (r.count == 0) return w;
    if (r.count == 1) {
        w[0] = std::max(0.0, b - a);
        return w;
    }
    w.front() = 0.5 * dx + std::max(0.0, xs[r.first] - a);
    w.back() = 0.5 * dx + std::max(0.0, b - xs[r.first + r.count - 1]);
    return w;
}

// Fritsch-Carlson slopes of live values on a uniform mesh.
Vec monotone_slopes(const Vec& v, double dx) {
    const std::size_t n = v.size();
    Vec d(n, 0.0);
    if (n < 2) return d;
    auto delta = [&](std::size_t k) { return (v[k + 1] - v[k]) / dx; };
    if (n == 2) {
        d[0] = d[1] = delta(0);
        return d;
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const double d0 = delta(k - 1), d1 = delta(k);
        d[k] = (d0 * d1 <= 0.0) ? 0.0 : 2.0 / (1.0 / d0 + 1.0 / d1);
    }
    auto end_slope = [](double d0, double d1) {
        const double s = 0.5 * (3.0 * d0 - d1);
        if (s * d0 <= 0.0) return 0.0;
        if (d0 * d1 <= 0.0 && std::abs(s) > 3.0 * std::abs(d0)) return 3.0 * d0;
        return s;
    };
    d[0] = end_slope(delta(0), delta(1));
    d[n - 1] = end_slope(delta(n - 2), delta(n - 3));
    return d;
}

// Monotone cubic through the live values, constant beyond the edge nodes.
double interpolate(const Vec& xs, double dx, LiveRange r, const Vec& v, const Vec& slopes, double y) {
    if (r.count == 0) return 0.0;
    const double x_first = xs[r.first];
    const std::size_t last = r.count - 1;
    if (y <= x_first) return v[0];
    if (y >= xs[r.first + last]) return v[last];
    auto j = static_cast<std::size_t>(std::floor((y - x_first) / dx));
    j = std::min(j, last - 1);
    const double s = (y - xs[r.first + j]) / dx;
    const double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    const double h10 = s * (1.0 - s) * (1.0 - s);
    const double h01 = s * s * (3.0 - 2.0 * s);
    const double h11 = s * s * (s - 1.0);
    return h00 * v[j] + h10 * dx * slopes[j] + h01 * v[j + 1] + h11 * dx * slopes[j + 1];
}

}  // namespace

double characteristics(const ModelSpec& model, double y, double t0, double t1, double dt) {
    require_local_1d(model, "characteristics");
    if (t0 == t1) return y;
    const double step = dt > 0.0 ? dt : 1e-3;
    return trace(model, y, t0, t1, substeps_for(t1 - t0, step)).x;
}

ReferenceGrid::ReferenceGrid(SampleGrid grid, Vec values, Box support, double time)
    : grid_(std::move(grid)), values_(std::move(values)), support_(std::move(support)), time_(time) {
    if (grid_.dim != 1 || !grid_.is_uniform()) throw UsageError("ReferenceGrid: needs a uniform 1D grid");
    if (values_.size() != grid_.size()) throw GridMismatch("ReferenceGrid: value count does not match the grid");
    const LiveRange r = live_range(grid_.points, dx(), support_.lo[0], support_.hi[0]);
    live_first_ = r.first;
    live_count_ = r.count;
    live_values_.assign(values_.begin() + static_cast<std::ptrdiff_t>(r.first),
                        values_.begin() + static_cast<std::ptrdiff_t>(r.first + r.count));
    slopes_ = monotone_slopes(live_values_, dx());
    const Vec w = live_weights(grid_.points, dx(), r, support_.lo[0], support_.hi[0]);
    weights_.assign(values_.size(), 0.0);
    std::copy(w.begin(), w.end(), weights_.begin() + static_cast<std::ptrdiff_t>(r.first));
}

double ReferenceGrid::value_at(double x) const {
    if (x < support_.lo[0] || x > support_.hi[0]) return 0.0;
    return interpolate(grid_.points, dx(), {live_first_, live_count_}, live_values_, slopes_, x);
}

double ReferenceGrid::total_mass() const {
    return pairwise_sum(values_.size(), [&](std::size_t k) { return weights_[k] * values_[k]; });
}

namespace {

class Marcher {
public:
    Marcher(const ModelSpec& model, const ReferenceOptions& opt, SampleGrid grid)
        : model_(model), opt_(opt), grid_(std::move(grid)), xs_(grid_.points), dx_(grid_.spacing(0)) {
        char_dt_ = opt.char_dt > 0.0 ? opt.char_dt : default_dt(model, dx_);
    }

    // Values, slopes and weights are stored for the live nodes only.
    struct State {
        double t = 0.0;
        double lo = 0.0, hi = 0.0;
        LiveRange range;
        Vec v, slopes, weights;
    };

    State initial(const InitialDensity& v0) const {
        State s;
        s.lo = v0.support.lo[0];
        s.hi = v0.support.hi[0];
        s.range = live_range(xs_, dx_, s.lo, s.hi);
        s.v.resize(s.range.count);
        for (std::size_t q = 0; q < s.range.count; ++q) {
            const double x[1] = {std::clamp(xs_[s.range.first + q], s.lo, s.hi)};
            s.v[q] = v0.value(Point(x, 1));
        }
        finish(s);
        return s;
    }

    double mass(const State& s) const {
        return pairwise_sum(s.v.size(), [&](std::size_t q) { return s.weights[q] * s.v[q]; });
    }

    Vec full_values(const State& s) const {
        Vec out(xs_.size(), 0.0);
        std::copy(s.v.begin(), s.v.end(), out.begin() + static_cast<std::ptrdiff_t>(s.range.first));
        return out;
    }

    /// One sub-interval; nullopt if the fixed point does not contract.
    std::optional<State> advance(const State& s, double dt, std::size_t& iterations) {
        const double t0 = s.t, t1 = s.t + dt;
        const std::size_t sub = substeps_for(dt, char_dt_);

        State next;
        next.t = t1;
        next.lo = trace(model_, s.lo, t0, t1, sub).x;
        next.hi = trace(model_, s.hi, t0, t1, sub).x;
        if (model_.has_mutation() && model_.support_m_x) {
            next.lo = std::min(next.lo, model_.support_m_x->lo[0]);
            next.hi = std::max(next.hi, model_.support_m_x->hi[0]);
        }
        next.range = live_range(xs_, dx_, next.lo, next.hi);
        next.weights = live_weights(xs_, dx_, next.range, next.lo, next.hi);
        const std::size_t first = next.range.first, count = next.range.count;

        // Feet and int div a along each characteristic; reused across steps when a is autonomous.
        if (!model_.autonomous || dt != cached_dt_) {
            cached_dt_ = dt;
            foot_.assign(xs_.size(), std::numeric_limits<double>::quiet_NaN());
            neg_int_div_.assign(xs_.size(), 0.0);
        }
        parallel_for(count, opt_.workers, [&](std::size_t b, std::size_t e) {
            for (std::size_t q = b; q < e; ++q) {
                const std::size_t k = first + q;
                if (!std::isnan(foot_[k])) continue;
                const Traced back = trace(model_, xs_[k], t1, t0, sub);
                foot_[k] = back.x;
                neg_int_div_[k] = back.int_div;
            }
        });
        if (!model_.autonomous) cached_dt_ = -1.0;

        // Quantities at the feet (time t0, known).
        const double Ig_const0 = growth_arg_constant(s);
        const bool mutation = model_.has_mutation();
        Vec v_foot(count), G_foot(count), S_foot(count, 0.0);
        parallel_for(count, opt_.workers, [&](std::size_t b, std::size_t e) {
            for (std::size_t q = b; q < e; ++q) {
                const double y = std::clamp(foot_[first + q], s.lo, s.hi);
                const double py[1] = {y};
                v_foot[q] = interpolate(xs_, dx_, s.range, s.v, s.slopes, y);
                const double Ig = std::isnan(Ig_const0) ? growth_arg(s, y) : Ig_const0;
                G_foot[q] = model_.growth(t0, Point(py, 1), Ig);
                if (mutation) S_foot[q] = mutation_source_at(s, y);
            }
        });

        // Initial guess: explicit exponential step.
        next.v.resize(count);
        for (std::size_t q = 0; q < count; ++q) {
            next.v[q] = std::exp(neg_int_div_[first + q] + dt * G_foot[q]) * (v_foot[q] + dt * S_foot[q]);
        }
        Vec v_new(count), S_head(count, 0.0);
        for (int it = 0; it < opt_.max_iterations; ++it) {
            ++iterations;
            const double Ig_const1 = growth_arg_constant(next);
            parallel_for(count, opt_.workers, [&](std::size_t b, std::size_t e) {
                for (std::size_t q = b; q < e; ++q) {
                    const double x = xs_[first + q];
                    const double px[1] = {x};
                    const double Ig = std::isnan(Ig_const1) ? growth_arg(next, x) : Ig_const1;
                    const double G1 = model_.growth(t1, Point(px, 1), Ig);
                    const double decay = std::exp(neg_int_div_[first + q] + 0.5 * dt * (G_foot[q] + G1));
                    double value = decay * (v_foot[q] + 0.5 * dt * S_foot[q]);
                    if (mutation) value += 0.5 * dt * mutation_source_at(next, x);
                    v_new[q] = value;
                }
            });
            double change = 0.0, rho = 0.0;
            for (std::size_t q = 0; q < count; ++q) {
                if (!std::isfinite(v_new[q])) throw OracleFailure("non-finite oracle value");
                change += next.weights[q] * std::abs(v_new[q] - next.v[q]);
                rho += next.weights[q] * v_new[q];
            }
            next.v.swap(v_new);
            if (change < opt_.fixed_point_tol * (1.0 + rho)) {
                finish(next);
                return next;
            }
        }
        return std::nullopt;
    }

    const SampleGrid& grid() const { return grid_; }

private:
    void finish(State& s) const {
        s.slopes = monotone_slopes(s.v, dx_);
        s.weights = live_weights(xs_, dx_, s.range, s.lo, s.hi);
    }

    // I_g when psi_g does not depend on x (NaN otherwise).
    double growth_arg_constant(const State& s) const {
        if (model_.kernel_g.depends_on_x) return std::numeric_limits<double>::quiet_NaN();
        return growth_arg(s, 0.0);
    }

    template <class Psi>
    double integral(const State& s, const Psi& psi) const {
        return pairwise_sum(s.range.count,
                            [&](std::size_t q) { return s.weights[q] * s.v[q] * psi(xs_[s.range.first + q]); });
    }

    double growth_arg(const State& s, double x) const {
        const double px[1] = {x};
        return integral(s, [&](double y) {
            const double py[1] = {y};
            return model_.kernel_g.value(s.t, Point(px, 1), Point(py, 1));
        });
    }

    double mutation_source_at(const State& s, double x) const {
        const double px[1] = {x};
        if (model_.support_m_x && !model_.support_m_x->contains(Point(px, 1))) return 0.0;
        const double Id = integral(s, [&](double y) {
            const double py[1] = {y};
            return model_.kernel_d.value(s.t, Point(px, 1), Point(py, 1));
        });
        return integral(s, [&](double y) {
            const double py[1] = {y};
            return model_.mutation(s.t, Point(px, 1), Point(py, 1), Id);
        });
    }

    const ModelSpec& model_;
    const ReferenceOptions& opt_;
    SampleGrid grid_;
    const Vec& xs_;
    double dx_;
    double char_dt_ = 1e-3;
    double cached_dt_ = -1.0;
    Vec foot_, neg_int_div_;
};

}  // namespace

ReferenceGrid solve_reference(const ModelSpec& model, const InitialDensity& v0, double T,
                              const ReferenceOptions& options) {
    require_local_1d(model, "solve_reference");
    if (!model.advection_div_x) throw ConfigurationError("solve_reference: model has no advection divergence");
    if (v0.support.dim() != 1) throw UsageError("solve_reference: initial density must be 1D");
    if (!(T >= 0.0)) throw UsageError("solve_reference: T must be non-negative");
    if (!(options.dx > 0.0) || !(options.dt > 0.0)) throw UsageError("solve_reference: dx and dt must be positive");

    ModelSpec shaped = model;
    shaped.support_v0 = v0.support;
    const Box domain = active_box(shaped, T);
    const double anchor = v0.support.lo[0];
    const auto k_min = static_cast<long long>(std::floor((domain.lo[0] - anchor) / options.dx + 1e-9));
    const auto k_max = static_cast<long long>(std::ceil((domain.hi[0] - anchor) / options.dx - 1e-9));
    SampleGrid grid = SampleGrid::uniform(
        Box::interval(anchor + static_cast<double>(k_min) * options.dx, anchor + static_cast<double>(k_max) * options.dx),
        {static_cast<std::size_t>(k_max - k_min + 1)});

    Marcher marcher(model, options, grid);
    Marcher::State state = marcher.initial(v0);

    Vec times{0.0}, masses{marcher.mass(state)};
    std::size_t iterations = 0, halvings = 0;

    const auto steps = T > 0.0 ? substeps_for(T, options.dt) : 0;
    const double dt = steps > 0 ? T / static_cast<double>(steps) : 0.0;

    std::function<Marcher::State(const Marcher::State&, double)> march = [&](const Marcher::State& s, double h) {
        if (auto next = marcher.advance(s, h, iterations)) return std::move(*next);
        if (h / 2.0 < options.min_dt) {
            throw OracleFailure("fixed-point map did not contract at t = " + std::to_string(s.t) +
                                " even with sub-interval " + std::to_string(h));
        }
        ++halvings;
        return march(march(s, h / 2.0), h / 2.0);
    };
    for (std::size_t n = 0; n < steps; ++n) {
        state = march(state, dt);
        state.t = static_cast<double>(n + 1) * dt;
        times.push_back(state.t);
        masses.push_back(marcher.mass(state));
    }

    ReferenceGrid out(marcher.grid(), marcher.full_values(state), Box::interval(state.lo, state.hi), T);
    out.times = std::move(times);
    out.mass = std::move(masses);
    out.model_name = model.name;
    out.dt = dt;
    out.tol = options.fixed_point_tol;
    out.iterations = iterations;
    out.halvings = halvings;
    return out;
}

double l1_distance(const ReferenceGrid& oracle, const SampleGrid& grid, const Vec& values) {
    if (!same_grid(oracle.grid(), grid)) throw GridMismatch("l1_distance: grids differ");
    if (values.size() != grid.size()) throw GridMismatch("l1_distance: value count does not match the grid");
    Vec diff(values.size());
    for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = std::abs(oracle.values()[k] - values[k]);
    return trapezoid(grid, diff);
}

}  // namespace selmut
