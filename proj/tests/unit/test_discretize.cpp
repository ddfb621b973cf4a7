#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "selmut/analysis.hpp"
#include "selmut/discretize.hpp"
#include "selmut/dynamics.hpp"
#include "selmut/presets.hpp"
#include "support.hpp"

using namespace selmut;

namespace {

InitialDensity unit_level(double level = 1.0) {
    return make_initial_density("uniform", {{"level", {level}}, {"lo", {0.0}}, {"hi", {1.0}}});
}

// Local drift towards 0.5 with a mutation kernel living on K_x = [0.4, 0.6].
ModelSpec mutating_model() {
    ModelSpec m = testing::local1d([](double x) { return 0.2 * (0.5 - x); }, [](double) { return -0.2; },
                                   [](double, double I) { return 0.5 - I; }, 0.4);
    m.mutation = [](double, Point x, Point y, double) {
        if (x[0] < 0.4 || x[0] > 0.6 || y[0] < 0.0 || y[0] > 0.3) return 0.0;
        return 2.0 * std::sin(M_PI * (x[0] - 0.4) / 0.2);
    };
    m.support_m_x = Box::interval(0.4, 0.6);
    m.support_m_y = Box::interval(0.0, 0.3);
    m.support_v0 = Box::interval(0.0, 0.3);
    m.K_const = 0.4;
    m.r_star = 0.5;
    return m;
}

}  // namespace

TEST_SUITE("discretize") {
    TEST_CASE("uniform tiling of [0, 1] with h = 1/4") {
        const ModelSpec m = testing::zero_model();
        const ParticleEnsemble e = partition_support(unit_level(), m, 0.25, 0.0);
        REQUIRE(e.size() == 4);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(e.volumes[i] == 0.25);
            CHECK(e.intensities[i] == 1.0);
            CHECK(e.positions[i] == doctest::Approx(0.125 + 0.25 * static_cast<double>(i)).epsilon(1e-15));
        }
        CHECK(e.total_mass() == 1.0);
    }

    TEST_CASE("N = 5000 on [0, 1] gives 5000 particles at T = 40") {
        ModelSpec m = make_preset("advsel1d");
        const InitialDensity v0 = make_initial_density("one-minus-x", {});
        m.support_v0 = v0.support;
        const ParticleEnsemble e = partition_support(v0, m, 1.0 / 5000.0, 40.0);
        CHECK(e.size() == 5000);
    }

    TEST_CASE("midpoint mass of x(1-x) converges at second order") {
        const ModelSpec m = testing::zero_model();
        const InitialDensity v0 = make_initial_density("x-one-minus-x", {});
        std::vector<std::pair<double, double>> errs;
        for (double h : {1.0 / 50, 1.0 / 100, 1.0 / 200}) {
            errs.emplace_back(h, std::abs(partition_support(v0, m, h, 0.0).total_mass() - 1.0 / 6.0));
        }
        CHECK(fit_convergence_order(errs).slope >= 1.8);
    }

    TEST_CASE("property: initial mass converges to the quadrature integral at order >= 1.8") {
        testing::Gen g(11);
        const ModelSpec base = testing::zero_model();
        for (int trial = 0; trial < 10; ++trial) {
            const double c = g.uniform(-0.5, 0.5), w = g.uniform(0.3, 1.0);
            const InitialDensity v0 = make_initial_density("bump", {{"center", {c}}, {"width", {w}}});
            ModelSpec m = base;
            m.support_v0 = v0.support;
            const double truth = testing::integrate(
                [&](double x) { const double u = (x - c) / w; return std::abs(u) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - u * u)) : 0.0; },
                c - w, c + w);
            std::vector<std::pair<double, double>> errs;
            for (double n : {8.0, 12.0, 16.0, 24.0}) {
                const double h = 2.0 * w / n;
                errs.emplace_back(h, std::abs(partition_support(v0, m, h, 0.0).total_mass() - truth));
            }
            CHECK(fit_convergence_order(errs).slope >= 1.8);
        }
    }

    TEST_CASE("partition is idempotent and labels do not depend on dropping") {
        ModelSpec m = make_preset("advsel1d");
        const InitialDensity v0 = make_initial_density("one-minus-x", {});
        const ParticleEnsemble a = partition_support(v0, m, 0.01, 3.0);
        const ParticleEnsemble b = partition_support(v0, m, 0.01, 3.0);
        CHECK(a.positions == b.positions);
        CHECK(a.labels == b.labels);
        CHECK(a.intensities == b.intensities);
        const ParticleEnsemble full = partition_support(v0, m, 0.01, 3.0, PartitionOptions{false});
        CHECK(full.size() > a.size());
        std::map<std::int64_t, double> by_label;
        for (std::size_t i = 0; i < full.size(); ++i) by_label[full.labels[i]] = full.positions[i];
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(by_label.at(a.labels[i]) == a.positions[i]);
    }

    TEST_CASE("dropping zero cells never changes a trajectory") {
        const ModelSpec m = mutating_model();
        const InitialDensity v0 = make_initial_density("uniform", {{"lo", {0.0}}, {"hi", {0.3}}});
        const double T = 1.0;
        RunConfig run;
        run.T_final = T;
        run.dt = 1e-2;
        const ParticleEnsemble kept = partition_support(v0, m, 0.02, T);
        const ParticleEnsemble all = partition_support(v0, m, 0.02, T, PartitionOptions{false});
        REQUIRE(all.size() > kept.size());
        const ParticleEnsemble a = integrate(m, kept, run).final_state();
        const ParticleEnsemble b = integrate(m, all, run).final_state();
        std::map<std::int64_t, std::size_t> index;
        for (std::size_t i = 0; i < b.size(); ++i) index[b.labels[i]] = i;
        double received = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const std::size_t j = index.at(a.labels[i]);
            CHECK(std::abs(a.intensities[i] - b.intensities[j]) <= 1e-13 * std::max(1.0, std::abs(b.intensities[j])));
            if (kept.intensities[i] == 0.0) received = std::max(received, a.intensities[i]);
        }
        CHECK(received > 0.0);
        std::set<std::int64_t> kept_labels(a.labels.begin(), a.labels.end());
        for (std::size_t j = 0; j < b.size(); ++j) {
            if (!kept_labels.count(b.labels[j])) CHECK(b.intensities[j] == 0.0);
        }
    }

    TEST_CASE("partition errors") {
        const ModelSpec m = testing::zero_model();
        CHECK_THROWS_AS(partition_support(unit_level(), m, 10.0, 0.0), DiscretizationError);
        CHECK_THROWS_AS(partition_support(unit_level(), m, 0.0, 0.0), UsageError);
        InitialDensity bad = unit_level();
        bad.value = [](Point x) { return x[0] - 0.5; };
        CHECK_THROWS_AS(partition_support(bad, m, 0.1, 0.0), DiscretizationError);
        CHECK_THROWS_AS(make_initial_density("no-such-profile", {}), UsageError);
    }

    TEST_CASE("spacing of a fresh lattice") {
        const ParticleEnsemble e = partition_support(unit_level(), testing::zero_model(), 0.1, 0.0);
        const SpacingReport s = check_spacing(e);
        CHECK(s.volume_min == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(s.volume_max == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(s.position_min == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(s.c_hat == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(s.C_hat == doctest::Approx(1.0).epsilon(1e-12));
    }

    TEST_CASE("spacing stays finite and positive after advection") {
        ModelSpec m = make_preset("advsel1d");
        const InitialDensity v0 = make_initial_density("one-minus-x", {});
        RunConfig run;
        run.T_final = 1.0;
        const Trajectory traj = integrate(m, partition_support(v0, m, 0.01, 1.0), run);
        const SpacingReport s = check_spacing(traj.final_state());
        CHECK(s.c_hat > 0.0);
        CHECK(s.c_hat <= s.C_hat);
        CHECK(std::isfinite(s.C_hat));
    }

    TEST_CASE("spacing errors") {
        ParticleEnsemble e = testing::single(0.5, 0.1, 1.0);
        CHECK_THROWS_AS(check_spacing(e), UsageError);
        e.push_back(1, Vec{0.5}, 0.1, 1.0);
        CHECK_THROWS_AS(check_spacing(e), SpacingError);
    }

    TEST_CASE("mutation discretization check") {
        const ModelSpec plain = make_preset("advsel1d");
        const ParticleEnsemble e = partition_support(unit_level(), plain, 0.1, 0.0);
        CHECK(check_mutation_discretization(e, plain, {0.0}, {{0.5}}).ok);

        // M(x) = int m dx = 2 * 0.2 * 2 / pi; the lattice sum approaches it.
        ModelSpec m = mutating_model();
        m.K_const = 0.8 / M_PI;
        const InitialDensity v0 = make_initial_density("uniform", {{"lo", {0.0}}, {"hi", {1.0}}});
        double previous = 1.0;
        for (double h : {1e-2, 1e-3}) {
            const auto check = check_mutation_discretization(partition_support(v0, m, h, 0.0), m, {0.0, 0.5}, {{0.1}, {0.2}});
            CHECK(check.ok);
            const double gap = std::abs(check.max_value - m.K_const);
            CHECK(gap < previous);
            previous = gap;
        }

        ModelSpec spike = m;
        spike.mutation = [](double, Point x, Point, double) { return std::abs(x[0] - 0.505) < 0.004 ? 1e3 : 0.0; };
        spike.K_const = 0.1;
        const auto bad = check_mutation_discretization(partition_support(v0, spike, 0.01, 0.0), spike, {0.25}, {{0.1}});
        CHECK_FALSE(bad.ok);
        CHECK(bad.witness_t == 0.25);
        CHECK(bad.witness_y == Vec{0.1});
        CHECK(bad.max_value > bad.bound);
    }
}
