// nplab command line: run configs, the hierarchy suite, list and describe experiments.

#include "nplab/lab/runner.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

namespace {

using namespace nplab;
using namespace nplab::lab;

struct Common {
    std::string out;
    std::string seed;
    unsigned jobs = 0;
    std::string format = "both";
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--out", c.out, "output directory (default: config output_dir, else ./results)");
    cmd->add_option("--seed", c.seed, "seed for every experiment; overrides NPLAB_SEED and config seeds");
    cmd->add_option("--jobs", c.jobs, "parallel experiments (default: hardware threads)");
    cmd->add_option("--format", c.format, "json, csv or both")->check(CLI::IsMember({"json", "csv", "both"}));
}

int execute(const std::vector<Task>& tasks, const Common& c) {
    const auto result = run_suite(tasks, c.jobs);
    std::map<std::string, std::vector<ExperimentReport>> by_dir;
    for (const auto& r : result.reports)
        by_dir[!c.out.empty() ? c.out : !r.output_dir.empty() ? r.output_dir : "results"].push_back(r);
    for (const auto& [dir, reps] : by_dir) write_outputs(reps, dir, parse_format(c.format));
    for (const auto& r : result.reports) {
        std::cout << (r.passed() ? "PASS " : "FAIL ") << r.experiment_id << " [" << params_hash(r.params).substr(0, 8)
                  << "]";
        if (r.failure != Failure::None) std::cout << "  " << r.error;
        std::cout << "\n";
        for (const auto& v : r.verdicts)
            if (v.outcome == Outcome::Fail)
                std::cout << "    " << v.measurement << " = " << format_real(r.measurement(v.measurement)) << " "
                          << to_string(v.comparison) << " " << v.bound << " = " << format_real(r.bound_value(v.bound))
                          << " failed\n";
    }
    std::size_t passed = 0;
    for (const auto& r : result.reports) passed += r.passed();
    std::cout << passed << "/" << result.reports.size() << " experiments passed\n";
    return result.exit_status;
}

void describe(const Experiment& e) {
    std::cout << e.id << "\n  claim: " << e.claim << "\n  tolerances: " << e.tolerances << "\n  params:\n";
    for (const auto& p : e.schema) {
        std::cout << "    " << p.name << " (" << to_string(p.type) << ", default " << p.fallback.dump();
        if (p.min) std::cout << ", min " << format_real(*p.min);
        if (p.max) std::cout << ", max " << format_real(*p.max);
        if (!p.choices.empty()) {
            std::cout << ", one of";
            for (const auto& c : p.choices) std::cout << " " << c;
        }
        std::cout << "): " << p.help << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nplab: neural process expressivity experiments"};
    app.require_subcommand(1);

    Common run_opts, suite_opts;
    std::string config_path, suite_name, describe_id;
    auto* run = app.add_subcommand("run", "run the experiments in a JSON config");
    run->add_option("config", config_path, "config file")->required();
    add_common(run, run_opts);
    auto* suite = app.add_subcommand("suite", "run a named suite");
    suite->add_option("name", suite_name, "suite name (hierarchy)")->required()->check(CLI::IsMember({"hierarchy"}));
    add_common(suite, suite_opts);
    app.add_subcommand("list", "list registered experiments");
    auto* desc = app.add_subcommand("describe", "show an experiment's claim, params and tolerances");
    desc->add_option("id", describe_id, "experiment id")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand("list")) {
            for (const auto& e : registry()) std::cout << e.id << "\n";
            std::cout << kHierarchySuite << "\n";
            return 0;
        }
        if (app.got_subcommand("describe")) {
            if (describe_id == kHierarchySuite) {
                std::cout << kHierarchySuite << "\n  members:";
                for (const auto& id : hierarchy_members()) std::cout << " " << id;
                std::cout << "\n";
                return 0;
            }
            const auto* e = find_experiment(describe_id);
            if (!e) throw UsageError("unknown experiment '" + describe_id + "'\n" + registry_listing());
            describe(*e);
            return 0;
        }
        const Common& c = app.got_subcommand("run") ? run_opts : suite_opts;
        std::optional<std::uint64_t> seed;
        if (!c.seed.empty()) seed = parse_seed(c.seed, "--seed");
        const auto tasks = app.got_subcommand("run") ? resolve(load_config(config_path), seed) : hierarchy_tasks(seed);
        return execute(tasks, c);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
