#include "selmut/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "selmut/parallel.hpp"

namespace selmut {

Kernel Kernel::constant(double c) {
    Kernel k;
    k.value = [c](double, Point, Point) { return c; };
    k.grad_x = [](double, Point, Point, std::span<double> g) { std::fill(g.begin(), g.end(), 0.0); };
    k.depends_on_x = false;
    return k;
}

Kernel Kernel::coordinate(std::size_t j) {
    Kernel k;
    k.value = [j](double, Point, Point y) { return y[j]; };
    k.grad_x = [](double, Point, Point, std::span<double> g) { std::fill(g.begin(), g.end(), 0.0); };
    k.depends_on_x = false;
    return k;
}

double ModelSpec::mass_bound(double initial_mass) const {
    return std::max(initial_mass, I_star / psi_g_min);
}

double ParticleEnsemble::total_mass() const {
    return pairwise_sum(size(), [&](std::size_t i) { return intensities[i] * volumes[i]; });
}

void ParticleEnsemble::push_back(std::int64_t label, Point x, double w, double nu) {
    labels.push_back(label);
    positions.insert(positions.end(), x.begin(), x.end());
    volumes.push_back(w);
    intensities.push_back(nu);
}

const Kernel& kernel_of(const ModelSpec& model, KernelRef ref) {
    switch (ref.kind) {
        case KernelRef::Kind::advection:
            if (ref.index >= model.kernels_a.size()) {
                throw ConfigurationError("model '" + model.name + "' has no advection kernel " +
                                         std::to_string(ref.index));
            }
            return model.kernels_a[ref.index];
        case KernelRef::Kind::growth:
            return model.kernel_g;
        case KernelRef::Kind::mutation:
            return model.kernel_d;
    }
    throw ConfigurationError("unknown kernel reference");
}

namespace {

double nonlocal_sum(const Kernel& kernel, double t, Point x, const ParticleEnsemble& ens) {
    if (!kernel.value) throw ConfigurationError("kernel has no evaluator");
    return pairwise_sum(ens.size(), [&](std::size_t j) {
        const double psi = kernel.value(t, x, ens.position(j));
        if (!std::isfinite(psi)) {
            throw EvaluationError("non-finite kernel value at particle index " + std::to_string(j));
        }
        return ens.intensities[j] * ens.volumes[j] * psi;
    });
}

}  // namespace

double eval_nonlocal(const ModelSpec& model, KernelRef kernel, double t, Point x,
                     const ParticleEnsemble& ens) {
    if (ens.empty()) throw UsageError("eval_nonlocal: empty ensemble");
    return nonlocal_sum(kernel_of(model, kernel), t, x, ens);
}

FieldEvaluator::FieldEvaluator(const ModelSpec& model, const ParticleEnsemble& ens)
    : FieldEvaluator(model, ens, ens.time) {}

FieldEvaluator::FieldEvaluator(const ModelSpec& model, const ParticleEnsemble& ens, double t)
    : model_(model), ens_(ens), t_(t), cached_a_(model.kernels_a.size()) {
    if (ens.empty()) return;
    const Point anchor = ens.position(0);
    if (!model.local_advection) {
        for (std::size_t k = 0; k < model.kernels_a.size(); ++k) {
            if (!model.kernels_a[k].depends_on_x) {
                cached_a_[k] = nonlocal_sum(model.kernels_a[k], t, anchor, ens);
            }
        }
    }
    if (!model.kernel_g.depends_on_x) cached_g_ = nonlocal_sum(model.kernel_g, t, anchor, ens);
    if (model.has_mutation() && !model.kernel_d.depends_on_x) {
        cached_d_ = nonlocal_sum(model.kernel_d, t, anchor, ens);
    }
}

double FieldEvaluator::nonlocal(KernelRef kernel, Point x) const {
    if (ens_.empty()) return 0.0;
    switch (kernel.kind) {
        case KernelRef::Kind::advection:
            if (kernel.index < cached_a_.size() && cached_a_[kernel.index]) return *cached_a_[kernel.index];
            break;
        case KernelRef::Kind::growth:
            if (cached_g_) return *cached_g_;
            break;
        case KernelRef::Kind::mutation:
            if (cached_d_) return *cached_d_;
            break;
    }
    return nonlocal_sum(kernel_of(model_, kernel), t_, x, ens_);
}

void FieldEvaluator::nonlocal_gradient(std::size_t k, Point x, std::span<double> out) const {
    const Kernel& kernel = kernel_of(model_, KernelRef::advection(k));
    std::fill(out.begin(), out.end(), 0.0);
    if (!kernel.depends_on_x || ens_.empty()) return;
    if (!kernel.grad_x) {
        throw ConfigurationError("model '" + model_.name + "': advection kernel " + std::to_string(k) +
                                 " has no x-gradient but d a / d I is non-zero");
    }
    const std::size_t d = model_.dim;
    const std::size_t n = ens_.size();
    Vec grads(n * d);
    for (std::size_t j = 0; j < n; ++j) {
        kernel.grad_x(t_, x, ens_.position(j), {grads.data() + j * d, d});
    }
    for (std::size_t l = 0; l < d; ++l) {
        out[l] = pairwise_sum(n, [&](std::size_t j) {
            const double g = grads[j * d + l];
            if (!std::isfinite(g)) {
                throw EvaluationError("non-finite kernel gradient at particle index " + std::to_string(j));
            }
            return ens_.intensities[j] * ens_.volumes[j] * g;
        });
    }
}

void FieldEvaluator::advection_args(Point x, std::span<double> I) const {
    if (model_.local_advection) {
        std::fill(I.begin(), I.end(), 0.0);
        return;
    }
    for (std::size_t k = 0; k < I.size(); ++k) I[k] = nonlocal(KernelRef::advection(k), x);
}

void FieldEvaluator::velocity(Point x, std::span<const double> I, std::span<double> out) const {
    model_.advection(t_, x, I, out);
}

double FieldEvaluator::divergence(Point x, std::span<const double> I) const {
    if (!model_.advection_div_x) {
        throw ConfigurationError("model '" + model_.name + "' has no advection divergence evaluator");
    }
    double div = model_.advection_div_x(t_, x, I);
    if (model_.local_advection) return div;
    if (!model_.advection_dI) {
        throw ConfigurationError("model '" + model_.name + "': non-local advection needs d a / d I");
    }
    const std::size_t d = model_.dim;
    Vec dadI(d), gradI(d);
    for (std::size_t k = 0; k < model_.kernels_a.size(); ++k) {
        model_.advection_dI(t_, x, I, k, dadI);
        if (std::all_of(dadI.begin(), dadI.end(), [](double v) { return v == 0.0; })) continue;
        nonlocal_gradient(k, x, gradI);
        for (std::size_t l = 0; l < d; ++l) div += dadI[l] * gradI[l];
    }
    return div;
}

Vec eval_velocity(const ModelSpec& model, double t, Point x, const ParticleEnsemble& ens) {
    if (ens.empty()) throw UsageError("eval_velocity: empty ensemble");
    FieldEvaluator field(model, ens, t);
    Vec I(model.n_advection_args()), out(model.dim);
    field.advection_args(x, I);
    field.velocity(x, I, out);
    return out;
}

double eval_divergence(const ModelSpec& model, double t, Point x, const ParticleEnsemble& ens) {
    if (ens.empty()) throw UsageError("eval_divergence: empty ensemble");
    FieldEvaluator field(model, ens, t);
    Vec I(model.n_advection_args());
    field.advection_args(x, I);
    return field.divergence(x, I);
}

namespace {

double fd_step(double x) {
    return std::sqrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, std::abs(x));
}

}  // namespace

AdvectionDivFn fd_divergence(const ModelSpec& model) {
    const AdvectionFn a = model.advection;
    const std::size_t d = model.dim;
    return [a, d](double t, Point x, std::span<const double> I) {
        Vec xp(x.begin(), x.end()), xm(x.begin(), x.end()), ap(d), am(d);
        double div = 0.0;
        for (std::size_t l = 0; l < d; ++l) {
            const double step = fd_step(x[l]);
            xp[l] = x[l] + step;
            xm[l] = x[l] - step;
            a(t, xp, I, ap);
            a(t, xm, I, am);
            div += (ap[l] - am[l]) / (xp[l] - xm[l]);
            xp[l] = xm[l] = x[l];
        }
        return div;
    };
}

AdvectionDIFn fd_advection_dI(const ModelSpec& model) {
    const AdvectionFn a = model.advection;
    const std::size_t d = model.dim;
    return [a, d](double t, Point x, std::span<const double> I, std::size_t k, std::span<double> out) {
        Vec Ip(I.begin(), I.end()), Im(I.begin(), I.end()), ap(d), am(d);
        const double step = fd_step(I[k]);
        Ip[k] += step;
        Im[k] -= step;
        a(t, x, Ip, ap);
        a(t, x, Im, am);
        for (std::size_t l = 0; l < d; ++l) out[l] = (ap[l] - am[l]) / (Ip[k] - Im[k]);
    };
}

Kernel with_fd_gradient(Kernel kernel, std::size_t dim) {
    const KernelFn psi = kernel.value;
    kernel.grad_x = [psi, dim](double t, Point x, Point y, std::span<double> grad) {
        Vec xp(x.begin(), x.end()), xm(x.begin(), x.end());
        for (std::size_t l = 0; l < dim; ++l) {
            const double step = fd_step(x[l]);
            xp[l] = x[l] + step;
            xm[l] = x[l] - step;
            grad[l] = (psi(t, xp, y) - psi(t, xm, y)) / (xp[l] - xm[l]);
            xp[l] = xm[l] = x[l];
        }
    };
    return kernel;
}

bool ValidationReport::violated(const std::string& hypothesis) const {
    return std::any_of(violations.begin(), violations.end(),
                       [&](const Violation& v) { return v.hypothesis == hypothesis; });
}

Vec halton_point(std::uint64_t n, std::size_t dims) {
    static constexpr std::array<unsigned, 16> kPrimes = {2,  3,  5,  7,  11, 13, 17, 19,
                                                         23, 29, 31, 37, 41, 43, 47, 53};
    if (dims > kPrimes.size()) throw UsageError("halton_point: too many dimensions");
    Vec p(dims);
    for (std::size_t k = 0; k < dims; ++k) {
        const unsigned base = kPrimes[k];
        double f = 1.0, r = 0.0;
        for (std::uint64_t i = n; i > 0; i /= base) {
            f /= base;
            r += f * static_cast<double>(i % base);
        }
        p[k] = r;
    }
    return p;
}

ValidationReport validate_model(const ModelSpec& model, const Box& box, std::size_t samples,
                                double T) {
    if (box.dim() != model.dim) throw UsageError("validate_model: box dimension mismatch");
    const std::size_t d = model.dim;
    const std::size_t na = model.n_advection_args();
    ValidationReport report;
    report.samples = samples;

    // Worst witness per hypothesis; larger `severity` is worse.
    std::map<std::string, std::pair<double, Violation>> worst;
    auto flag = [&](const std::string& name, double severity, Vec witness, double value,
                    std::string detail) {
        auto it = worst.find(name);
        if (it == worst.end() || severity > it->second.first) {
            worst[name] = {severity, Violation{name, std::move(witness), value, std::move(detail)}};
        }
    };

    const double I_hi = model.I_star + std::max(1.0, std::abs(model.I_star));
    const std::size_t dims = 1 + 2 * d + 1 + na;
    Vec x(d), y(d), I(na), a_plus(d), a_minus(d), xp(d), xm(d);
    for (std::size_t n = 1; n <= samples; ++n) {
        const Vec u = halton_point(n, dims);
        const double t = T * u[0];
        for (std::size_t l = 0; l < d; ++l) {
            x[l] = box.lo[l] + u[1 + l] * box.width(l);
            y[l] = box.lo[l] + u[1 + d + l] * box.width(l);
        }
        const double s = u[1 + 2 * d];
        auto witness = [&](double Ival) {
            Vec w{t};
            w.insert(w.end(), x.begin(), x.end());
            w.insert(w.end(), y.begin(), y.end());
            w.push_back(Ival);
            return w;
        };

        const double psi_g = model.kernel_g.value(t, x, y);
        if (!(psi_g >= model.psi_g_min)) {
            flag("psi_g_lower_bound", model.psi_g_min - psi_g, witness(0.0), psi_g,
                 "psi_g below declared psi_g_min");
        }

        if (model.has_mutation()) {
            const double Id = s * I_hi;
            const double m = model.mutation(t, x, y, Id);
            if (m < 0.0) flag("mutation_nonnegative", -m, witness(Id), m, "m < 0");
            const bool inside = model.support_m_x && model.support_m_y && model.support_m_x->contains(x) &&
                                model.support_m_y->contains(y);
            if (!inside && m != 0.0) {
                flag("mutation_support", std::abs(m), witness(Id), m,
                     "m non-zero outside the declared supports");
            }
        }

        const double Ig = model.I_star + s * (I_hi - model.I_star);
        const double R = model.growth(t, x, Ig);
        if (!(R + model.K_const < -model.r_star)) {
            flag("growth_vs_mutation", R + model.K_const + model.r_star, witness(Ig), R,
                 "R + K >= -r* for I >= I*");
        }

        if (model.advection_div_x) {
            for (std::size_t k = 0; k < na; ++k) {
                I[k] = model.local_advection ? 0.0 : (2.0 * u[2 + 2 * d + k] - 1.0) * I_hi;
            }
            if (model.local_advection && model.advection_dI) {
                for (std::size_t k = 0; k < std::max<std::size_t>(na, 1); ++k) {
                    std::fill(a_plus.begin(), a_plus.end(), 0.0);
                    model.advection_dI(t, x, I, k, a_plus);
                    const double mag = norm(a_plus);
                    if (mag != 0.0) flag("local_advection_dI", mag, witness(0.0), mag, "d a / d I non-zero for a local spec");
                }
            }
            const double div = model.advection_div_x(t, x, I);
            double fd = 0.0;
            for (std::size_t l = 0; l < d; ++l) {
                const double step = std::cbrt(std::numeric_limits<double>::epsilon()) *
                                    std::max(1.0, std::abs(x[l]));
                xp = x;
                xm = x;
                xp[l] += step;
                xm[l] -= step;
                model.advection(t, xp, I, a_plus);
                model.advection(t, xm, I, a_minus);
                fd += (a_plus[l] - a_minus[l]) / (xp[l] - xm[l]);
            }
            const double err = std::abs(div - fd) / std::max(1.0, std::abs(fd));
            if (!(err <= 1e-5)) {
                std::ostringstream msg;
                msg << "advection_div_x=" << div << " vs central difference " << fd;
                flag("divergence_consistency", err, witness(0.0), div, msg.str());
            }
        }
    }
    for (auto& [name, entry] : worst) report.violations.push_back(std::move(entry.second));
    return report;
}

}  // namespace selmut
