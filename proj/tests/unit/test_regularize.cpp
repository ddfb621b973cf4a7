#include <cmath>

#include "doctest.h"
#include "selmut/discretize.hpp"
#include "selmut/regularize.hpp"
#include "support.hpp"

using namespace selmut;

namespace {

double gauss_pdf(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * M_PI); }

SampleGrid line(double lo, double hi, double spacing) { return SampleGrid::with_spacing(Box::interval(lo, hi), spacing); }

ParticleEnsemble lattice(double lo, double hi, double h, const std::function<double(double)>& v) {
    ParticleEnsemble e;
    e.h = h;
    const auto n = static_cast<std::size_t>(std::llround((hi - lo) / h));
    for (std::size_t i = 0; i < n; ++i) {
        const double x = lo + (static_cast<double>(i) + 0.5) * h;
        e.push_back(static_cast<std::int64_t>(i), Vec{x}, h, v(x));
    }
    return e;
}

}  // namespace

TEST_SUITE("regularize") {
    TEST_CASE("gaussian moments") {
        const CutoffSpec phi = make_cutoff("gaussian");
        const MomentReport rep = verify_moments(phi, 2);
        CHECK(rep.ok);
        CHECK(rep.detected_order == 2);
        REQUIRE(rep.moments.size() == 2);
        CHECK(rep.moments[0].value == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(rep.moments[1].value) < 1e-12);
        const double second = testing::integrate([&](double u) { return u * u * phi.profile(u); }, -9.0, 9.0);
        CHECK(second == doctest::Approx(1.0).epsilon(1e-10));
        CHECK_FALSE(verify_moments(phi, 3).ok);
    }

    TEST_CASE("built-in kernels pass at their declared order") {
        for (const char* name : {"gaussian", "truncated_gaussian", "bspline3", "gaussian4"}) {
            const CutoffSpec phi = make_cutoff(name);
            INFO(name);
            CHECK(verify_moments(phi, phi.r_order).ok);
            CHECK(verify_moments(phi, phi.r_order, 2).ok);
            CHECK(verify_moments(phi, phi.r_order).detected_order == phi.r_order);
        }
        CHECK(make_cutoff("bspline3").r_order == 2);
        CHECK(make_cutoff("gaussian4").r_order == 4);
    }

    TEST_CASE("order-4 kernel against the quadrature oracle") {
        const CutoffSpec phi = make_cutoff("gaussian4");
        for (int k = 0; k < 4; ++k) {
            const double mk = testing::integrate([&](double u) { return std::pow(u, k) * (1.5 - 0.5 * u * u) * gauss_pdf(u); }, -12.0, 12.0);
            CHECK(std::abs(mk - (k == 0 ? 1.0 : 0.0)) < 1e-10);
        }
        const double m4 = testing::integrate([&](double u) { return std::pow(u, 4) * phi.profile(u); }, -9.0, 9.0);
        CHECK(std::abs(m4) > 0.1);
    }

    TEST_CASE("cut-off errors") {
        CHECK_THROWS_AS(make_cutoff("nope"), UsageError);
        CHECK_THROWS_AS(make_cutoff("truncated_gaussian", {{"radius", -1.0}}), UsageError);
        CHECK_THROWS_AS(verify_moments(make_cutoff("gaussian"), 0), UsageError);
    }

    TEST_CASE("single particle reproduces the kernel") {
        const CutoffSpec phi = make_cutoff("gaussian");
        const SampleGrid g = line(-4.0, 4.0, 0.01);
        const Vec v = reconstruct(testing::single(0.0, 1.0, 1.0), phi, 1.0, g);
        for (std::size_t k = 0; k < g.size(); ++k) CHECK(v[k] == doctest::Approx(gauss_pdf(g.points[k])).epsilon(1e-14));
    }

    TEST_CASE("property: reconstruction mass equals the particle mass") {
        testing::Gen gen(31);
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t dim = trial % 4 == 3 ? 2 : 1;
            const ParticleEnsemble e = gen.ensemble(gen.index(1, 60), dim, -1.0, 1.0);
            const double eps = gen.uniform(0.05, 0.3);
            const char* names[] = {"gaussian", "bspline3", "gaussian4"};
            const CutoffSpec phi = make_cutoff(names[gen.index(0, 2)]);
            const SampleGrid g = SampleGrid::with_spacing(Box::cube(dim, -1.0, 1.0).dilated(phi.radius * eps), eps / 4.0);
            const Vec v = reconstruct(e, phi, eps, g);
            CHECK(trapezoid(g, v) == doctest::Approx(e.total_mass()).epsilon(dim == 1 ? 1e-6 : 1e-4));
        }
    }

    TEST_CASE("reconstruction of exp(-x^2) from a fine lattice") {
        const double h = 1e-3, eps = std::sqrt(h);
        const ParticleEnsemble e = lattice(-3.0, 3.0, h, [](double x) { return std::exp(-x * x); });
        const SampleGrid g = line(-3.5, 3.5, eps / 4.0);
        const Vec v = reconstruct(e, make_cutoff("gaussian"), eps, g);
        Vec diff(v.size());
        for (std::size_t k = 0; k < v.size(); ++k) {
            const double x = g.points[k];
            diff[k] = std::abs(v[k] - (std::abs(x) <= 3.0 ? std::exp(-x * x) : 0.0));
        }
        CHECK(trapezoid(g, diff) <= 5e-3);
    }

    TEST_CASE("property: scaling identity and translation equivariance") {
        testing::Gen gen(32);
        const CutoffSpec phi = make_cutoff("gaussian");
        for (int trial = 0; trial < 20; ++trial) {
            const ParticleEnsemble e = gen.ensemble(30, 1, -1.0, 1.0);
            const double eps = gen.uniform(0.05, 0.5);
            const SampleGrid g = line(-2.0, 2.0, 0.02);
            const Vec a = reconstruct(e, phi, eps, g);
            const Vec b = reconstruct(e, scaled(phi, eps), 1.0, g);
            for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-12).scale(1.0));

            const double shift = gen.uniform(-3.0, 3.0);
            ParticleEnsemble moved = e;
            for (auto& x : moved.positions) x += shift;
            Vec pts = g.points;
            for (auto& x : pts) x += shift;
            const Vec c = reconstruct(moved, phi, eps, SampleGrid::scattered(1, pts));
            for (std::size_t k = 0; k < a.size(); ++k) CHECK(c[k] == doctest::Approx(a[k]).epsilon(1e-9).scale(1.0));
        }
    }

    TEST_CASE("projection of zero and of a constant") {
        const double h = 1e-3, eps = std::pow(h, 0.8);
        const ParticleEnsemble e = lattice(-1.0, 1.0, h, [](double) { return 1.0; });
        const SampleGrid g = line(-0.5, 0.5, 0.01);
        const Vec zero = project(Vec(e.size(), 0.0), e, make_cutoff("gaussian"), eps, g);
        for (double z : zero) CHECK(z == 0.0);
        const Vec one = project(Vec(e.size(), 1.0), e, make_cutoff("gaussian"), eps, g);
        for (double v : one) CHECK(std::abs(v - 1.0) <= 1e-3);
        CHECK_THROWS_AS(project(Vec(3, 1.0), e, make_cutoff("gaussian"), eps, g), UsageError);
    }

    TEST_CASE("projection error keeps the eps^r + (h/eps)^k shape") {
        auto v = [](double x) { return std::exp(-4.0 * x * x) * (1.0 + 0.5 * std::sin(3.0 * x)); };
        const CutoffSpec phi = make_cutoff("gaussian");
        auto error = [&](double h, double eps) {
            const ParticleEnsemble e = lattice(-4.0, 4.0, h, v);
            Vec samples(e.size());
            for (std::size_t i = 0; i < e.size(); ++i) samples[i] = v(e.positions[i]);
            const SampleGrid g = line(-3.0, 3.0, eps / 4.0);
            const Vec p = project(samples, e, phi, eps, g);
            Vec diff(p.size());
            for (std::size_t k = 0; k < p.size(); ++k) diff[k] = std::abs(p[k] - v(g.points[k]));
            return trapezoid(g, diff);
        };
        auto bound = [](double h, double eps) { return eps * eps + (h / eps) * (h / eps); };
        const double h0 = 0.01, eps0 = 0.1;
        const double c1 = error(h0, eps0) / bound(h0, eps0);
        const double c2 = error(h0 / 4.0, eps0 / 2.0) / bound(h0 / 4.0, eps0 / 2.0);
        CHECK(c2 / c1 > 0.5);
        CHECK(c2 / c1 < 2.0);
    }

    TEST_CASE("epsilon rules") {
        CHECK(epsilon_rule(0.02, EpsilonRule::power(0.8)) == doctest::Approx(0.04373).epsilon(1e-4));
        CHECK(epsilon_rule(1.0 / 5000.0, EpsilonRule::power(0.5)) == doctest::Approx(0.01414).epsilon(1e-3));
        CHECK(EpsilonRule::optimal(2, 2).exponent() == 0.5);
        CHECK(epsilon_rule(0.01, EpsilonRule::optimal(1, 2)) == doctest::Approx(std::pow(0.01, 1.0 / 3.0)));
        CHECK_THROWS_AS(epsilon_rule(0.01, EpsilonRule::power(1.0)), UsageError);
        CHECK_THROWS_AS(epsilon_rule(0.01, EpsilonRule::power(0.0)), UsageError);
        CHECK_THROWS_AS(epsilon_rule(-1.0, EpsilonRule::power(0.5)), UsageError);
    }

    TEST_CASE("sample grids and the trapezoid rule") {
        const SampleGrid g = SampleGrid::with_spacing(Box::interval(0.0, 1.0), 0.03);
        CHECK(g.spacing(0) <= 0.03);
        CHECK(g.points.front() == 0.0);
        CHECK(g.points.back() == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(trapezoid(g, Vec(g.size(), 2.0)) == doctest::Approx(2.0).epsilon(1e-14));
        CHECK(same_grid(g, SampleGrid::with_spacing(Box::interval(0.0, 1.0), 0.03)));
        CHECK_FALSE(same_grid(g, SampleGrid::with_spacing(Box::interval(0.0, 1.0), 0.01)));
        const SampleGrid g2 = SampleGrid::uniform(Box::cube(2, 0.0, 2.0), {11, 21});
        CHECK(g2.size() == 231);
        Vec f(g2.size());
        for (std::size_t k = 0; k < f.size(); ++k) f[k] = g2.points[2 * k] + g2.points[2 * k + 1];
        CHECK(trapezoid(g2, f) == doctest::Approx(8.0).epsilon(1e-13));
        CHECK_THROWS_AS(trapezoid(g, Vec(3, 1.0)), GridMismatch);
        CHECK_THROWS_AS(trapezoid(SampleGrid::scattered(1, {0.0, 1.0}), Vec(2, 1.0)), UsageError);
    }
}
