#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "selmut/experiment.hpp"
#include "support.hpp"

using namespace selmut;

namespace {

const char* kLogistic = R"(
[model]
name = logistic0d
[initial]
name = uniform
level = 0.1
[discretization]
N = 20
[run]
T = 1
dt = 1e-2
)";

ExperimentConfig resolve(const std::string& text) { return resolve_experiment(Config::parse(text)); }

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("selmut_experiment_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

}  // namespace

TEST_SUITE("experiment") {
    TEST_CASE("resolution fills defaults and maps N to h") {
        const ExperimentConfig c = resolve(kLogistic);
        CHECK(c.model_name == "logistic0d");
        CHECK(c.h == doctest::Approx(0.05).epsilon(1e-15));
        CHECK(c.run.T_final == 1.0);
        CHECK(c.cutoff == "gaussian");
        CHECK(c.resolved.has("regularization.cutoff"));
        CHECK_FALSE(c.resolved.has("run.workers"));
    }

    TEST_CASE("resolution rejects inconsistent settings") {
        const std::string base = kLogistic;
        CHECK_THROWS_AS(resolve(base + "[model]\nname = unknown\n"), UsageError);
        CHECK_THROWS_AS(resolve(base + "[discretization]\nh = 0.1\n"), UsageError);
        CHECK_THROWS_AS(resolve(base + "[initial]\nname = unknown\n"), UsageError);
        CHECK_THROWS_AS(resolve(base + "[regularization]\ncutoff = unknown\n"), UsageError);
        CHECK_THROWS_AS(resolve(base + "[regularization]\neps_q = 1.5\n"), UsageError);
        CHECK_THROWS_AS(resolve(base + "[discretization]\nh_list = 0.1, 0.2, 0.05\n"), UsageError);
        CHECK_THROWS_AS(resolve(std::string(kLogistic).replace(std::string(kLogistic).find("logistic0d"), 10, "nonlocal1d") +
                                "[oracle]\nenabled = true\n"),
                        UsageError);
    }

    TEST_CASE("converge needs three resolutions") {
        const ExperimentConfig c = resolve(std::string(kLogistic).replace(std::string(kLogistic).find("N = 20"), 6, "N_list = 20"));
        CHECK_THROWS_AS(run_converge(c, scratch("converge")), UsageError);
    }

    TEST_CASE("simulate writes its artifacts") {
        const auto dir = scratch("simulate");
        const SimulateResult r = run_simulate(resolve(kLogistic), dir);
        const double rho = 0.1 * std::exp(1.0) / (1.0 + 0.1 * (std::exp(1.0) - 1.0));
        CHECK(r.trajectory.mass.back() == doctest::Approx(rho).epsilon(1e-8));
        for (const char* f : {"manifest.conf", "trajectory.csv", "mass.svg", "report.conf"}) {
            CAPTURE(f);
            CHECK(std::filesystem::exists(dir / f));
        }
        const Config manifest = Config::load(dir / "manifest.conf");
        CHECK(manifest.get("model.name", "") == "logistic0d");
        std::filesystem::remove_all(dir);
    }

    TEST_CASE("artifacts do not depend on the worker count") {
        const auto a = scratch("workers1"), b = scratch("workers4");
        ExperimentConfig c = resolve(kLogistic);
        run_simulate(c, a);
        c.run.workers = 4;
        run_simulate(c, b);
        for (const auto& entry : std::filesystem::directory_iterator(a)) {
            CAPTURE(entry.path().filename().string());
            CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
        }
        std::filesystem::remove_all(a);
        std::filesystem::remove_all(b);
    }

    TEST_CASE("scenario presets") {
        const Config base = Config::parse("[discretization]\nN = 100\n[model]\nr0 = 1\n");
        const Config a = fig2_scenario('a', base);
        CHECK(a.get("initial.name", "") == "one-minus-x");
        CHECK(a.get("discretization.N", "") == "100");
        CHECK(a.get("model.r0", "") == "6");
        const Config d = fig2_scenario('d', base);
        CHECK(d.get("initial.name", "") == "const6");
        CHECK(d.get_double("model.r1", 0.0) == 0.5);
        CHECK_THROWS_AS(fig2_scenario('e', base), UsageError);
    }
}
