#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "selmut/experiment.hpp"

namespace fs = std::filesystem;
using namespace selmut;

namespace {

void print_report(const fs::path& dir) {
    std::ifstream in(dir / "report.conf");
    std::cout << in.rdbuf();
    std::cout << "artifacts: " << dir.string() << "\n";
}

void write_diagnostic(const fs::path& dir, const std::string& mode, const std::exception& e) {
    try {
        fs::create_directories(dir);
        KvReport r;
        r.put("abort", "mode", mode);
        r.put("abort", "error", e.what());
        r.write(dir / "diagnostic.conf");
    } catch (const std::exception&) {
        // The original error is still reported on stderr.
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Particle method solver for advection-selection-mutation equations"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int workers = 0;
    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("--config", config_path, "experiment config file");
        if (config_required) opt->required();
        opt->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "artifact directory (overrides output.dir)");
        sub->add_option("--workers", workers, "worker threads")->check(CLI::Range(1, 1024));
    };
    auto* simulate = app.add_subcommand("simulate", "one trajectory with snapshots and reconstruction frames");
    auto* converge = app.add_subcommand("converge", "h-sweep against the reference solver or the finest run");
    auto* asymptote = app.add_subcommand("asymptote", "long-time run with cluster and AP diagnostics");
    auto* reproduce = app.add_subcommand("reproduce", "built-in scenario sets");
    std::string target;
    reproduce->add_option("target", target, "scenario set (fig2)")->required()->check(CLI::IsMember({"fig2"}));
    add_common(simulate, true);
    add_common(converge, true);
    add_common(asymptote, true);
    add_common(reproduce, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const std::string mode = app.get_subcommands().front()->get_name();
    fs::path out = out_dir.empty() ? fs::path("out") / mode : fs::path(out_dir);
    try {
        Config cfg = config_path.empty() ? Config{} : Config::load(config_path);
        if (workers > 0) cfg.set("run.workers", std::to_string(workers));
        if (mode == "reproduce") {
            if (out_dir.empty()) out = fs::path(cfg.get("output.dir", "out")) / "fig2";
            cfg.apply_env(known_config_keys());
            const int w = static_cast<int>(cfg.get_int("run.workers", 1));
            if (w < 1) throw UsageError("run.workers must be at least 1");
            run_reproduce_fig2(cfg, out, w);
            print_report(out);
            return 0;
        }
        if (!out_dir.empty()) cfg.set("output.dir", out_dir);
        const ExperimentConfig exp = resolve_experiment(cfg);
        out = exp.out_dir;
        if (mode == "simulate") run_simulate(exp, out);
        else if (mode == "converge") run_converge(exp, out);
        else run_asymptote(exp, out);
        print_report(out);
        return 0;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "aborted: " << e.what() << "\n";
        write_diagnostic(out, mode, e);
        std::cerr << "diagnostic written to " << (out / "diagnostic.conf").string() << "\n";
        return 3;
    }
}
