#include <CLI11.hpp>

#include "clab/errors.hpp"
#include "clab/parallel.hpp"
#include "clab/suites.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

struct RunOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string out_dir;
    std::string dump_path;
    std::size_t dump_steps = 100;
};

void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << contents;
}

int run_suite(const clab::SuiteInfo& info, const RunOptions& opts) {
    clab::ExperimentConfig cfg = clab::load_config(opts.config_path);
    if (cfg.suite != info.name)
        throw clab::ConfigError("config declares suite \"" + cfg.suite +
                                "\" but the command is \"" + info.name + "\"");
    if (opts.seed)
        cfg.seed = *opts.seed;
    if (opts.workers)
        cfg.workers = *opts.workers;
    if (!opts.out_dir.empty())
        cfg.out_dir = opts.out_dir;
    else if (const char* env = std::getenv("COCYCLE_LAB_OUT"); env && cfg.out_dir.empty())
        cfg.out_dir = env;

    if (!opts.dump_path.empty())
        write_file(opts.dump_path, clab::trajectory_dump(cfg, opts.dump_steps));

    clab::Parallel par(cfg.workers);

    std::string summary;
    bool ok = false;
    bool incomplete = false;
    try {
        clab::SuiteResult result = info.run(cfg, par);
        incomplete = result.incomplete;

        std::string csv = clab::csv_header() + "\n";
        for (const auto& r : result.rows)
            csv += clab::csv_line(r) + "\n";

        ok = true;
        for (const auto& c : result.criteria) {
            ok = ok && c.pass;
            std::cout << (c.pass ? "PASS" : "FAIL") << "  " << c.name << "  ("
                      << clab::format_double(c.value) << " " << c.comparator << " "
                      << clab::format_double(c.threshold) << ")\n";
        }
        if (incomplete)
            std::cerr << "incomplete (budget): " << result.error << "\n";
        summary = clab::summary_json(cfg.experiment, cfg.fingerprint, result.criteria,
                                     incomplete, result.error);

        if (!cfg.out_dir.empty()) {
            std::filesystem::path dir(cfg.out_dir);
            std::filesystem::create_directories(dir);
            write_file(dir / (cfg.experiment + ".csv"), csv);
            write_file(dir / (cfg.experiment + ".summary.json"), summary);
            for (const auto& [name, contents] : result.plots)
                write_file(dir / (cfg.experiment + "." + name), contents);
        } else {
            std::cout << csv;
        }
    } catch (const clab::BudgetError& e) {
        summary = clab::summary_json(cfg.experiment, cfg.fingerprint, {},
                                     /*incomplete=*/true, e.what());
        if (!cfg.out_dir.empty()) {
            std::filesystem::path dir(cfg.out_dir);
            std::filesystem::create_directories(dir);
            write_file(dir / (cfg.experiment + ".summary.json"), summary);
        }
        std::cerr << "budget exceeded: " << e.what() << "\n";
        return 3;
    }
    if (incomplete)
        return 3;
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "cocycle-lab: a Monte Carlo laboratory for random walks on groups.\n"
        "Deterministic by construction: every run is a pure function of its\n"
        "configuration and seed, independent of the worker count."};
    app.require_subcommand(1);

    auto* list = app.add_subcommand("list-experiments", "list the built-in suites");
    std::string describe_name;
    auto* describe =
        app.add_subcommand("describe", "explain a suite and its pass conditions");
    describe->add_option("name", describe_name, "suite name")->required();

    std::vector<std::pair<const clab::SuiteInfo*, std::shared_ptr<RunOptions>>> runs;
    auto add_run = [&](const clab::SuiteInfo* info) {
        auto opts = std::make_shared<RunOptions>();
        auto* cmd = app.add_subcommand(info->name, info->summary);
        cmd->add_option("--config", opts->config_path, "experiment config (json)")
            ->required();
        cmd->add_option("--seed", opts->seed, "override the config seed");
        cmd->add_option("--workers", opts->workers, "override the worker count");
        cmd->add_option("--out", opts->out_dir, "output directory for csv/summary/plots");
        cmd->add_option("--dump-trajectory", opts->dump_path,
                        "write one trajectory as 'j X_j Z_j Q_j' lines to this file");
        cmd->add_option("--dump-steps", opts->dump_steps, "steps in the dump (default 100)");
        runs.emplace_back(info, opts);
    };
    for (const auto& info : clab::suite_registry())
        add_run(&info);
    add_run(clab::find_suite("speed"));

    CLI11_PARSE(app, argc, argv);

    try {
        if (list->parsed()) {
            std::cout << "built-in suites:\n";
            for (const auto& info : clab::suite_registry())
                std::cout << "  " << info.name << "  -  " << info.summary << "\n";
            std::cout << "plus the basic estimator command: speed  -  "
                      << clab::find_suite("speed")->summary << "\n";
            return 0;
        }
        if (describe->parsed()) {
            const auto* info = clab::find_suite(describe_name);
            if (!info) {
                std::cerr << "unknown suite \"" << describe_name << "\"; did you mean:\n";
                for (const auto& s : clab::suggest_suites(describe_name))
                    std::cerr << "  " << s << "\n";
                return 2;
            }
            std::cout << info->name << ": " << info->summary << "\n\n"
                      << info->description << "\n";
            return 0;
        }
        for (const auto& [info, opts] : runs) {
            if (app.get_subcommand(info->name)->parsed())
                return run_suite(*info, *opts);
        }
    } catch (const clab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
