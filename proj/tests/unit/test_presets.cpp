#include <cmath>

#include "doctest.h"
#include "selmut/analysis.hpp"
#include "selmut/discretize.hpp"
#include "selmut/dynamics.hpp"
#include "selmut/expr.hpp"
#include "selmut/io.hpp"
#include "selmut/presets.hpp"
#include "support.hpp"

using namespace selmut;

namespace {

std::string format_poly(double c0, double c1, double c2) {
    return "(" + format_number(c0) + ") + (" + format_number(c1) + ")*x1 + (" + format_number(c2) + ")*x1^2*t";
}

}  // namespace

TEST_SUITE("expr") {
    TEST_CASE("precedence and associativity") {
        const Expression e("1 + 2*3^2^0.5 - -x/4", {"x"});
        const double x = 2.0;
        CHECK(e.evaluate(std::span<const double>(&x, 1)) == doctest::Approx(1.0 + 2.0 * std::pow(3.0, std::pow(2.0, 0.5)) + 0.5));
    }

    TEST_CASE("functions and constants") {
        const Expression e("max(sin(x), cos(x)) + pow(k, 2) + sqrt(abs(-4)) + exp(log(3)) + tanh(0) + min(1, 2)",
                           {"x"}, {{"k", 3.0}});
        const double x = 0.3;
        CHECK(e.evaluate(std::span<const double>(&x, 1)) ==
              doctest::Approx(std::max(std::sin(0.3), std::cos(0.3)) + 9.0 + 2.0 + 3.0 + 0.0 + 1.0));
    }

    TEST_CASE("property: random polynomials match direct evaluation") {
        testing::Gen g(71);
        for (int trial = 0; trial < 200; ++trial) {
            const double c0 = g.uniform(-5, 5), c1 = g.uniform(-5, 5), c2 = g.uniform(-5, 5);
            const std::string text = format_poly(c0, c1, c2);
            const Expression e(text, {"t", "x1"});
            const double v[2] = {g.uniform(-2, 2), g.uniform(-2, 2)};
            CHECK(e.evaluate(v) == doctest::Approx(c0 + c1 * v[1] + c2 * v[1] * v[1] * v[0]).epsilon(1e-12));
        }
    }

    TEST_CASE("malformed expressions") {
        CHECK_THROWS_AS(Expression("1 +", {"x"}), UsageError);
        CHECK_THROWS_AS(Expression("(x", {"x"}), UsageError);
        CHECK_THROWS_AS(Expression("y + 1", {"x"}), UsageError);
        CHECK_THROWS_AS(Expression("foo(x)", {"x"}), UsageError);
        CHECK_THROWS_AS(Expression("x x", {"x"}), UsageError);
    }
}

TEST_SUITE("presets") {
    TEST_CASE("names and unknown models") {
        const auto names = preset_names();
        for (const char* n : {"advsel1d", "friedman2d", "logistic0d", "nonlocal1d"}) {
            CHECK(std::find(names.begin(), names.end(), n) != names.end());
        }
        CHECK_THROWS_AS(make_preset("nope"), UsageError);
        CHECK_THROWS_AS(make_preset("advsel1d", {{"r0", "six"}}), UsageError);
    }

    TEST_CASE("registered presets shadow nothing else") {
        register_preset("custom-test", [](const PresetParams&) {
            ModelSpec m = testing::zero_model();
            m.name = "custom-test";
            return m;
        });
        CHECK(make_preset("custom-test").name == "custom-test");
        const auto names = preset_names();
        CHECK(std::find(names.begin(), names.end(), "custom-test") != names.end());
    }

    TEST_CASE("every preset satisfies its declared hypotheses") {
        for (const std::string n : {"advsel1d", "logistic0d", "nonlocal1d"}) {
            CAPTURE(n);
            const ModelSpec m = make_preset(n);
            const ValidationReport r = validate_model(m, m.support_v0, 500, 1.0);
            for (const auto& v : r.violations) MESSAGE(v.hypothesis << ": " << v.detail);
            CHECK(r.ok());
        }
    }

    TEST_CASE("friedman2d conserves mass instead of saturating") {
        const ModelSpec m = make_preset("friedman2d");
        const ValidationReport r = validate_model(m, m.support_v0, 500, 1.0);
        CHECK(r.violated("growth_vs_mutation"));
        for (const auto& v : r.violations) CHECK(v.hypothesis == "growth_vs_mutation");
    }

    TEST_CASE("advsel1d coefficients") {
        const ModelSpec m = make_preset("advsel1d", {{"r0", "6"}, {"r1", "4"}});
        const Vec x{0.25};
        const double I = 0.0;
        double a = 0.0;
        m.advection(0.0, x, std::span<const double>(&I, 0), std::span<double>(&a, 1));
        CHECK(a == 0.1875);
        CHECK(m.advection_div_x(0.0, x, {}) == 0.5);
        CHECK(m.growth(0.0, x, 1.0) == 4.0);
    }

    TEST_CASE("friedman2d divergence matches the analytic one") {
        const ModelSpec m = make_preset("friedman2d");
        testing::Gen g(72);
        for (int trial = 0; trial < 100; ++trial) {
            const Vec x{g.uniform(-1, 1), g.uniform(-1, 1)};
            const double I[2] = {g.uniform(-1, 1), g.uniform(-1, 1)};
            CHECK(m.advection_div_x(0.0, x, I) == doctest::Approx(1.0 - 3.0 * x[0] * x[0] - 1.0).epsilon(1e-6));
        }
    }

    TEST_CASE("friedman2d splits into two clusters") {
        ModelSpec m = make_preset("friedman2d");
        const InitialDensity v0 = make_initial_density("uniform", {{"lo", {-1.0, -1.0}}, {"hi", {1.0, 1.0}}}, 2);
        m.support_v0 = v0.support;
        const ParticleEnsemble e = partition_support(v0, m, 0.1, 10.0);
        RunConfig run;
        run.T_final = 10.0;
        run.dt = 1e-2;
        run.snapshot_every = 100;
        const Trajectory traj = integrate(m, e, run);
        const ClusterResult r = detect_limit_clusters(traj, 2.0, 1e-2, 1e-3);
        REQUIRE(r.stationary);
        REQUIRE(r.clusters.size() == 2);
        CHECK(r.clusters[0].position[0] == doctest::Approx(-1.0).epsilon(1e-3));
        CHECK(r.clusters[1].position[0] == doctest::Approx(1.0).epsilon(1e-3));
        CHECK(std::abs(r.clusters[0].position[1]) <= 1e-3);
        CHECK(r.clusters[0].mass == doctest::Approx(r.clusters[1].mass).epsilon(1e-9));
        CHECK(traj.monitors.max_mass_excess <= 1e-6 * traj.mass.front());
    }
}
