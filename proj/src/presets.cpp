#include "selmut/presets.hpp"

#include <algorithm>
#include <cstdlib>

#include "selmut/expr.hpp"

namespace selmut {

namespace {

using Factory = std::function<ModelSpec(const PresetParams&)>;

std::map<std::string, Factory>& user_presets() {
    static std::map<std::string, Factory> presets;
    return presets;
}

double number(const PresetParams& p, const std::string& key, double fallback) {
    const auto it = p.find(key);
    if (it == p.end()) return fallback;
    char* end = nullptr;
    const double v = std::strtod(it->second.c_str(), &end);
    if (end == it->second.c_str() || *end != '\0') {
        throw UsageError("model parameter '" + key + "' is not a number: '" + it->second + "'");
    }
    return v;
}

ModelSpec advsel1d(const PresetParams& p) {
    const double r0 = number(p, "r0", 6.0);
    const double r1 = number(p, "r1", 4.0);
    ModelSpec m;
    m.name = "advsel1d";
    m.dim = 1;
    m.advection = [](double, Point x, std::span<const double>, std::span<double> out) { out[0] = x[0] * (1.0 - x[0]); };
    m.advection_div_x = [](double, Point x, std::span<const double>) { return 1.0 - 2.0 * x[0]; };
    m.advection_dI = [](double, Point, std::span<const double>, std::size_t, std::span<double> out) { out[0] = 0.0; };
    m.growth = [r0, r1](double, Point x, double I) { return r0 - r1 * x[0] - I; };
    m.growth_dI = [](double, Point, double) { return -1.0; };
    m.support_v0 = Box::interval(0.0, 1.0);
    // [0, 1] is invariant under x(1-x); the constants are declared there.
    m.a_sup = 0.25;
    m.r_star = 0.5;
    m.I_star = std::max(r0, r0 - r1) + 1.0;
    m.kappa = 1;
    m.k_reg = 1;
    m.r_order = 2;
    return m;
}

ModelSpec logistic0d(const PresetParams&) {
    ModelSpec m;
    m.name = "logistic0d";
    m.dim = 1;
    m.advection = [](double, Point, std::span<const double>, std::span<double> out) { out[0] = 0.0; };
    m.advection_div_x = [](double, Point, std::span<const double>) { return 0.0; };
    m.advection_dI = [](double, Point, std::span<const double>, std::size_t, std::span<double> out) { out[0] = 0.0; };
    m.growth = [](double, Point, double I) { return 1.0 - I; };
    m.growth_dI = [](double, Point, double) { return -1.0; };
    m.support_v0 = Box::interval(0.0, 1.0);
    m.a_sup = 0.0;
    m.r_star = 0.5;
    m.I_star = 2.0;
    return m;
}

ModelSpec nonlocal1d(const PresetParams&) {
    ModelSpec m;
    m.name = "nonlocal1d";
    m.dim = 1;
    m.local_advection = false;
    m.kernels_a = {Kernel::constant(1.0)};
    m.advection = [](double, Point, std::span<const double> I, std::span<double> out) { out[0] = 1.0 - I[0]; };
    m.advection_div_x = [](double, Point, std::span<const double>) { return 0.0; };
    m.advection_dI = [](double, Point, std::span<const double>, std::size_t, std::span<double> out) { out[0] = -1.0; };
    m.growth = [](double, Point, double I) { return 1.0 - I; };
    m.growth_dI = [](double, Point, double) { return -1.0; };
    m.support_v0 = Box::interval(0.0, 1.0);
    // The mass stays below max(rho0, 2), so |1 - I| <= 1 while rho0 <= 2.
    m.a_sup = 1.0;
    m.r_star = 0.5;
    m.I_star = 2.0;
    m.kappa = 1;
    return m;
}

ModelSpec friedman2d(const PresetParams& p) {
    std::map<std::string, double> constants;
    for (const auto& [key, value] : p) {
        if (key == "a1" || key == "a2" || key == "name") continue;
        constants[key] = number(p, key, 0.0);
    }
    const auto a1_text = p.count("a1") ? p.at("a1") : std::string("x1 - x1^3 - 0.2*I1");
    const auto a2_text = p.count("a2") ? p.at("a2") : std::string("-x2 - 0.2*I2");
    const std::vector<std::string> vars = {"t", "x1", "x2", "I1", "I2"};
    const Expression a1(a1_text, vars, constants);
    const Expression a2(a2_text, vars, constants);

    ModelSpec m;
    m.name = "friedman2d";
    m.dim = 2;
    m.local_advection = false;
    m.kernels_a = {Kernel::coordinate(0), Kernel::coordinate(1)};
    m.advection = [a1, a2](double t, Point x, std::span<const double> I, std::span<double> out) {
        const double v[5] = {t, x[0], x[1], I[0], I[1]};
        out[0] = a1.evaluate(v);
        out[1] = a2.evaluate(v);
    };
    m.advection_div_x = fd_divergence(m);
    m.advection_dI = fd_advection_dI(m);
    m.growth = [](double, Point, double) { return 0.0; };
    m.growth_dI = [](double, Point, double) { return 0.0; };
    m.support_v0 = Box::cube(2, -1.0, 1.0);
    m.a_sup = constants.count("a_sup") ? constants["a_sup"] : 2.0;
    // R = 0 conserves mass; I* = 0 makes the mass bound the initial mass.
    m.I_star = 0.0;
    m.kappa = 1;
    return m;
}

}  // namespace

ModelSpec make_preset(const std::string& name, const PresetParams& params) {
    if (auto it = user_presets().find(name); it != user_presets().end()) return it->second(params);
    if (name == "advsel1d") return advsel1d(params);
    if (name == "friedman2d") return friedman2d(params);
    if (name == "logistic0d") return logistic0d(params);
    if (name == "nonlocal1d") return nonlocal1d(params);
    throw UsageError("unknown model '" + name + "'");
}

std::vector<std::string> preset_names() {
    std::vector<std::string> names = {"advsel1d", "friedman2d", "logistic0d", "nonlocal1d"};
    for (const auto& [name, f] : user_presets()) {
        if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
    }
    return names;
}

void register_preset(const std::string& name, Factory factory) { user_presets()[name] = std::move(factory); }

}  // namespace selmut
