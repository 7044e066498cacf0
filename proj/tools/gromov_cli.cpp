#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "gromov/error.hpp"
#include "gromov/experiments.hpp"

#ifndef GROMOV_CONFIG_DIR
#define GROMOV_CONFIG_DIR "configs"
#endif

namespace fs = std::filesystem;
using namespace gromov;

namespace {

enum Exit { kPass = 0, kAssertion = 1, kConfig = 2, kNumerical = 3 };

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw Error(ErrorCode::CONFIG_INVALID, "cannot write '" + p.string() + "'");
}

int run_config(const std::string& config_path, std::string out_dir, std::optional<uint64_t> seed, int jobs) {
    nlohmann::json cfg;
    std::string stem = fs::path(config_path).stem().string();
    try {
        cfg = load_config(config_path);
        if (cfg.is_object() && !cfg.contains("name")) cfg["name"] = stem;
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return kConfig;
    }
    if (out_dir.empty()) out_dir = (fs::path("results") / stem).string();
    auto t0 = std::chrono::steady_clock::now();
    try {
        RunOptions opt;
        opt.seed = seed;
        opt.jobs = jobs;
        auto res = run_experiment(cfg, opt);
        fs::create_directories(out_dir);
        write_file(fs::path(out_dir) / "report.json", res.report.dump(2) + "\n");
        for (const auto& t : res.tables) write_file(fs::path(out_dir) / t.file, t.str());
        for (const auto& a : res.report["assertions"])
            std::cout << (a["pass"].get<bool>() ? "PASS " : "FAIL ") << a["name"].get<std::string>() << "\n";
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cerr << stem << ": " << (res.pass ? "pass" : "FAIL") << " in " << secs << " s, output in " << out_dir << "\n";
        return res.pass ? kPass : kAssertion;
    } catch (const Error& e) {
        std::cerr << stem << ": " << e.what() << "\n";
        bool config = e.code() == ErrorCode::CONFIG_INVALID;
        try {
            fs::create_directories(out_dir);
            nlohmann::ordered_json rep;
            rep["experiment"] = cfg.value("name", stem);
            rep["kind"] = cfg.value("kind", "");
            rep["error"] = {{"code", code_name(e.code())}, {"message", e.what()}};
            rep["pass"] = false;
            write_file(fs::path(out_dir) / "report.json", rep.dump(2) + "\n");
        } catch (const std::exception&) {
        }
        return config ? kConfig : kNumerical;
    } catch (const std::exception& e) {
        std::cerr << stem << ": " << e.what() << "\n";
        return kNumerical;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gromov: hyperbolic geometry experiment runner"};
    app.require_subcommand(0, 1);

    std::string config, out, config_dir = GROMOV_CONFIG_DIR, filter;
    std::optional<uint64_t> seed;
    int jobs = 1;

    auto add_run_flags = [&](CLI::App* a) {
        a->add_option("--config", config, "experiment config (JSON)")->envname("WORKBENCH_CONFIG");
        a->add_option("--out", out, "output directory (default results/<config name>)")->envname("WORKBENCH_OUT");
        a->add_option("--seed", seed, "override the config seed")->envname("WORKBENCH_SEED");
        a->add_option("--jobs", jobs, "worker threads for independent sweep points")
            ->envname("WORKBENCH_JOBS")
            ->check(CLI::PositiveNumber);
    };
    add_run_flags(&app);
    auto* run = app.add_subcommand("run", "run one experiment config");
    add_run_flags(run);
    auto* list = app.add_subcommand("list-experiments", "list bundled configs, optionally filtered by name");
    list->add_option("filter", filter, "substring of the config name");
    list->add_option("--configs-dir", config_dir, "directory of bundled configs")->envname("WORKBENCH_CONFIG_DIR");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kConfig;
    }

    if (list->parsed()) {
        for (const auto& c : list_experiments(config_dir, filter))
            std::cout << c.name << "\t" << c.kind << "\tcriterion " << c.criterion << "\t" << c.description << "\n";
        return kPass;
    }
    if (config.empty()) {
        std::cerr << "CONFIG_INVALID: no config given (use --config or WORKBENCH_CONFIG)\n" << app.help();
        return kConfig;
    }
    return run_config(config, out, seed, jobs);
}
