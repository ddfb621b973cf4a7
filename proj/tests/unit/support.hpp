#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <functional>
#include <random>

#include "selmut/model.hpp"

namespace testing {

using selmut::Box;
using selmut::ModelSpec;
using selmut::ParticleEnsemble;
using selmut::Point;
using selmut::Vec;

/// Adaptive Gauss-Kronrod on [a, b], split at the given interior breakpoints.
inline double integrate(const std::function<double(double)>& f, double a, double b, std::initializer_list<double> breaks = {}) {
    double total = 0.0;
    double lo = a;
    auto piece = [&](double l, double r) {
        return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, l, r, 20, 1e-14);
    };
    for (double c : breaks) {
        total += piece(lo, c);
        lo = c;
    }
    return total + piece(lo, b);
}

/// Deterministic generator for property tests.
struct Gen {
    std::mt19937_64 rng;
    explicit Gen(std::uint64_t seed) : rng(seed) {}
    double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
    std::size_t index(std::size_t a, std::size_t b) { return std::uniform_int_distribution<std::size_t>(a, b)(rng); }

    ParticleEnsemble ensemble(std::size_t n, std::size_t dim, double lo, double hi) {
        ParticleEnsemble e;
        e.dim = dim;
        e.h = (hi - lo) / static_cast<double>(n);
        Vec x(dim);
        for (std::size_t i = 0; i < n; ++i) {
            for (auto& c : x) c = uniform(lo, hi);
            e.push_back(static_cast<std::int64_t>(i), x, uniform(0.1, 1.0) * e.h, uniform(0.0, 3.0));
        }
        return e;
    }
};

inline ParticleEnsemble single(double x, double w, double nu) {
    ParticleEnsemble e;
    e.h = 1.0;
    e.push_back(0, Vec{x}, w, nu);
    return e;
}

/// Local 1D model with a(x), div a(x) and R(x, I); m == 0.
inline ModelSpec local1d(std::function<double(double)> a, std::function<double(double)> diva,
                         std::function<double(double, double)> R, double a_sup) {
    ModelSpec m;
    m.name = "test-local";
    m.advection = [a](double, Point x, std::span<const double>, std::span<double> out) { out[0] = a(x[0]); };
    m.advection_div_x = [diva](double, Point x, std::span<const double>) { return diva(x[0]); };
    m.growth = [R](double, Point x, double I) { return R(x[0], I); };
    m.growth_dI = [](double, Point, double) { return -1.0; };
    m.support_v0 = Box::interval(0.0, 1.0);
    m.a_sup = a_sup;
    m.I_star = 2.0;
    m.r_star = 0.5;
    return m;
}

inline ModelSpec zero_model() {
    return local1d([](double) { return 0.0; }, [](double) { return 0.0; }, [](double, double) { return 0.0; }, 0.0);
}

}  // namespace testing
