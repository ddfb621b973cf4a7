#include <cmath>
#include <numbers>

#include "doctest.h"
#include "selmut/discretize.hpp"
#include "selmut/model.hpp"
#include "selmut/presets.hpp"
#include "support.hpp"

using namespace selmut;
using testing::Gen;

namespace {

// a(t, x, I) = f(I) with one advection kernel psi.
ModelSpec nonlocal_model(Kernel psi, std::function<double(double)> f, std::function<double(double)> df) {
    ModelSpec m;
    m.name = "test-nonlocal";
    m.local_advection = false;
    m.kernels_a = {std::move(psi)};
    m.advection = [f](double, Point, std::span<const double> I, std::span<double> out) { out[0] = f(I[0]); };
    m.advection_div_x = [](double, Point, std::span<const double>) { return 0.0; };
    m.advection_dI = [df](double, Point, std::span<const double> I, std::size_t, std::span<double> out) {
        out[0] = df(I[0]);
    };
    m.growth = [](double, Point, double I) { return 1.0 - I; };
    m.support_v0 = Box::interval(0.0, 1.0);
    return m;
}

Kernel x_times_y() {
    Kernel k;
    k.value = [](double, Point x, Point y) { return x[0] * y[0]; };
    k.grad_x = [](double, Point, Point y, std::span<double> g) { g[0] = y[0]; };
    return k;
}

// psi(x, y) = exp(-(x - y)^2) with its x-gradient.
Kernel gaussian_kernel() {
    Kernel k;
    k.value = [](double, Point x, Point y) { return std::exp(-(x[0] - y[0]) * (x[0] - y[0])); };
    k.grad_x = [](double, Point x, Point y, std::span<double> g) {
        g[0] = -2.0 * (x[0] - y[0]) * std::exp(-(x[0] - y[0]) * (x[0] - y[0]));
    };
    return k;
}

double fd_velocity_divergence(const ModelSpec& m, double t, double x, const ParticleEnsemble& e) {
    const double step = 1e-5 * std::max(1.0, std::abs(x));
    const double xp[] = {x + step}, xm[] = {x - step};
    return (eval_velocity(m, t, xp, e)[0] - eval_velocity(m, t, xm, e)[0]) / (2.0 * step);
}

}  // namespace

TEST_SUITE("model") {
    TEST_CASE("constant kernel gives the total mass") {
        Gen g(1);
        const ParticleEnsemble e = g.ensemble(137, 1, -1.0, 2.0);
        ModelSpec m = testing::zero_model();
        m.kernel_g = Kernel::constant(1.0);
        const double x[] = {0.3};
        CHECK(eval_nonlocal(m, KernelRef::growth(), 0.0, x, e) == doctest::Approx(e.total_mass()).epsilon(1e-14));
    }

    TEST_CASE("one-particle sum with psi = y") {
        ModelSpec m = testing::zero_model();
        m.kernel_g = Kernel::coordinate(0);
        const double x[] = {-7.0};
        CHECK(eval_nonlocal(m, KernelRef::growth(), 0.0, x, testing::single(3.0, 0.5, 2.0)) == 3.0);
    }

    TEST_CASE("second moment of exp(-x^2) against adaptive quadrature") {
        const InitialDensity v0 = make_initial_density("gaussian", {{"center", {0.0}}, {"width", {1.0}}});
        ModelSpec m = testing::zero_model();
        m.support_v0 = v0.support;
        const ParticleEnsemble e = partition_support(v0, m, 1e-3, 0.0);
        m.kernel_g.value = [](double, Point, Point y) { return y[0] * y[0]; };
        m.kernel_g.depends_on_x = false;
        const double truth = testing::integrate([](double y) { return y * y * std::exp(-y * y); }, -3.0, 3.0);
        const double x[] = {0.0};
        CHECK(std::abs(eval_nonlocal(m, KernelRef::growth(), 0.0, x, e) - truth) < 1e-5);
    }

    TEST_CASE("non-finite kernel value names the particle") {
        ModelSpec m = testing::zero_model();
        m.kernel_g.value = [](double, Point, Point y) { return y[0] > 0.5 ? std::nan("") : 1.0; };
        ParticleEnsemble e = testing::single(0.0, 1.0, 1.0);
        e.push_back(1, Vec{1.0}, 1.0, 1.0);
        const double x[] = {0.0};
        try {
            eval_nonlocal(m, KernelRef::growth(), 0.0, x, e);
            FAIL("expected an evaluation error");
        } catch (const EvaluationError& err) {
            CHECK(std::string(err.what()).find("index 1") != std::string::npos);
        }
    }

    TEST_CASE("velocity examples") {
        const ModelSpec adv = make_preset("advsel1d");
        const double half[] = {0.5};
        Gen g(2);
        CHECK(eval_velocity(adv, 0.0, half, g.ensemble(10, 1, 0.0, 1.0))[0] == 0.25);
        CHECK(eval_velocity(adv, 0.0, half, testing::single(0.1, 1.0, 9.0))[0] == 0.25);

        const ModelSpec id = nonlocal_model(Kernel::constant(1.0), [](double I) { return I; }, [](double) { return 1.0; });
        ParticleEnsemble two = testing::single(0.2, 1.0, 1.5);
        two.push_back(1, Vec{0.7}, 0.5, 1.0);
        CHECK(eval_velocity(id, 0.0, half, two)[0] == doctest::Approx(2.0).epsilon(1e-15));

        const ModelSpec sine = nonlocal_model(Kernel::coordinate(0), [](double I) { return std::sin(I); },
                                              [](double I) { return std::cos(I); });
        CHECK(eval_velocity(sine, 0.0, half, testing::single(std::numbers::pi / 2, 1.0, 1.0))[0] ==
              doctest::Approx(1.0).epsilon(1e-15));
    }

    TEST_CASE("velocity with zero intensities is a(t, x, 0)") {
        const ModelSpec sine = nonlocal_model(gaussian_kernel(), [](double I) { return std::cos(I) + 0.5; },
                                              [](double I) { return -std::sin(I); });
        Gen g(3);
        ParticleEnsemble e = g.ensemble(50, 1, -1.0, 1.0);
        std::fill(e.intensities.begin(), e.intensities.end(), 0.0);
        for (int k = 0; k < 20; ++k) {
            const double x[] = {g.uniform(-2.0, 2.0)};
            CHECK(eval_velocity(sine, 0.0, x, e)[0] == 1.5);
        }
    }

    TEST_CASE("divergence examples") {
        const ModelSpec adv = make_preset("advsel1d");
        const double q[] = {0.25};
        CHECK(eval_divergence(adv, 0.0, q, testing::single(0.5, 1.0, 1.0)) == 0.5);

        const ModelSpec id = nonlocal_model(x_times_y(), [](double I) { return I; }, [](double) { return 1.0; });
        const double x[] = {0.7};
        CHECK(eval_divergence(id, 0.0, x, testing::single(2.0, 1.0, 1.0)) == doctest::Approx(2.0).epsilon(1e-15));
    }

    TEST_CASE("missing kernel gradient is a configuration error") {
        Kernel k;
        k.value = [](double, Point x, Point y) { return x[0] * y[0]; };
        const ModelSpec m = nonlocal_model(k, [](double I) { return I; }, [](double) { return 1.0; });
        const double x[] = {0.1};
        CHECK_THROWS_AS(eval_divergence(m, 0.0, x, testing::single(2.0, 1.0, 1.0)), ConfigurationError);
        const ModelSpec fixed = nonlocal_model(with_fd_gradient(k, 1), [](double I) { return I; }, [](double) { return 1.0; });
        CHECK(eval_divergence(fixed, 0.0, x, testing::single(2.0, 1.0, 1.0)) == doctest::Approx(2.0).epsilon(1e-7));
    }

    TEST_CASE("property: divergence matches a finite difference of the velocity") {
        const ModelSpec m = nonlocal_model(gaussian_kernel(), [](double I) { return std::sin(I) + I * I; },
                                           [](double I) { return std::cos(I) + 2.0 * I; });
        Gen g(4);
        for (int trial = 0; trial < 100; ++trial) {
            const ParticleEnsemble e = g.ensemble(g.index(1, 40), 1, -1.0, 1.0);
            const double x = g.uniform(-1.5, 1.5);
            const double xs[] = {x};
            const double div = eval_divergence(m, 0.0, xs, e);
            const double fd = fd_velocity_divergence(m, 0.0, x, e);
            CHECK(std::abs(div - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
        }
    }

    TEST_CASE("property: non-local sums are linear in the intensities") {
        Gen g(5);
        ModelSpec m = testing::zero_model();
        m.kernel_g = gaussian_kernel();
        for (int trial = 0; trial < 100; ++trial) {
            const ParticleEnsemble a = g.ensemble(g.index(1, 200), 1, -1.0, 1.0);
            ParticleEnsemble b = a;
            for (auto& nu : b.intensities) nu = g.uniform(0.0, 2.0);
            const double alpha = g.uniform(-2.0, 2.0), beta = g.uniform(-2.0, 2.0);
            ParticleEnsemble mix = a;
            for (std::size_t i = 0; i < a.size(); ++i) mix.intensities[i] = alpha * a.intensities[i] + beta * b.intensities[i];
            const double x[] = {g.uniform(-1.0, 1.0)};
            const double lhs = eval_nonlocal(m, KernelRef::growth(), 0.0, x, mix);
            const double rhs = alpha * eval_nonlocal(m, KernelRef::growth(), 0.0, x, a) +
                               beta * eval_nonlocal(m, KernelRef::growth(), 0.0, x, b);
            const double scale = std::abs(alpha) * eval_nonlocal(m, KernelRef::growth(), 0.0, x, a) +
                                 std::abs(beta) * eval_nonlocal(m, KernelRef::growth(), 0.0, x, b);
            CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(scale, 1e-300));
        }
    }

    TEST_CASE("repeated evaluations are bit-identical") {
        Gen g(6);
        const ParticleEnsemble e = g.ensemble(3000, 1, -1.0, 1.0);
        ModelSpec m = testing::zero_model();
        m.kernel_g = gaussian_kernel();
        const double x[] = {0.123};
        const double a = eval_nonlocal(m, KernelRef::growth(), 0.0, x, e);
        const double b = eval_nonlocal(m, KernelRef::growth(), 0.0, x, e);
        CHECK(a == b);
    }

    TEST_CASE("validation accepts a well-posed linear decay") {
        ModelSpec m = make_preset("advsel1d");
        m.I_star = 6.0 + m.K_const + m.r_star;
        const ValidationReport rep = validate_model(m, Box::interval(0.0, 1.0), 2000);
        CHECK(rep.ok());
        CHECK_FALSE(rep.violated("mutation_support"));
    }

    TEST_CASE("validation finds a psi_g below its declared minimum") {
        ModelSpec m = make_preset("advsel1d");
        m.kernel_g = gaussian_kernel();
        m.psi_g_min = 0.5;
        const ValidationReport rep = validate_model(m, Box::interval(-2.0, 2.0), 2000);
        REQUIRE(rep.violated("psi_g_lower_bound"));
        for (const auto& v : rep.violations) {
            if (v.hypothesis == "psi_g_lower_bound") CHECK(v.value < 0.5);
        }
    }

    TEST_CASE("validation flags an inconsistent divergence and non-zero dI for a local spec") {
        ModelSpec m = make_preset("advsel1d");
        m.advection_div_x = [](double, Point x, std::span<const double>) { return 1.0 - x[0]; };
        m.advection_dI = [](double, Point, std::span<const double>, std::size_t, std::span<double> out) { out[0] = 0.1; };
        const ValidationReport rep = validate_model(m, Box::interval(0.0, 1.0), 500);
        CHECK(rep.violated("divergence_consistency"));
        CHECK(rep.violated("local_advection_dI"));
    }

    TEST_CASE("validation flags mutation outside its supports and negative mutation") {
        ModelSpec m = make_preset("advsel1d");
        m.mutation = [](double, Point x, Point, double) { return x[0] - 0.5; };
        m.support_m_x = Box::interval(0.0, 0.25);
        m.support_m_y = Box::interval(0.0, 1.0);
        const ValidationReport rep = validate_model(m, Box::interval(0.0, 1.0), 500);
        CHECK(rep.violated("mutation_support"));
        CHECK(rep.violated("mutation_nonnegative"));
    }

    TEST_CASE("halton points lie in the unit cube") {
        for (std::uint64_t n = 1; n < 200; ++n) {
            const Vec u = halton_point(n, 5);
            for (double c : u) CHECK((c >= 0.0 && c < 1.0));
        }
        CHECK(halton_point(1, 1)[0] == 0.5);
    }
}
