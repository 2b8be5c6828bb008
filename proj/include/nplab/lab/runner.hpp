#pragma once

/// @file runner.hpp
/// Resolving configs against the registry, running experiments in parallel
/// and writing reports.

#include "nplab/lab/config.hpp"
#include "nplab/lab/experiments.hpp"
#include "nplab/lab/report.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

namespace nplab::lab {

/// A validated experiment ready to run.
struct Task {
    const Experiment* experiment = nullptr;
    Params params;
    std::uint64_t seed = kDefaultSeed;
    std::string output_dir;
};

/// FNV-1a over the compact params dump.
inline std::string params_hash(const Json& params) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : params.dump()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string registry_listing() {
    std::string s = "registered experiments:";
    for (const auto& e : registry()) s += "\n  " + e.id;
    s += "\n  " + std::string(kHierarchySuite) + " (alias)";
    return s;
}

/// Seed precedence: override (command line) > NPLAB_SEED > config > default.
inline std::optional<std::uint64_t> env_seed() {
    const char* v = std::getenv("NPLAB_SEED");
    if (!v || !*v) return std::nullopt;
    return parse_seed(v, "NPLAB_SEED");
}

inline std::vector<Task> resolve(const std::vector<ExperimentConfig>& configs,
                                 std::optional<std::uint64_t> seed_override = std::nullopt) {
    const auto env = env_seed();
    std::vector<Task> out;
    for (const auto& c : configs) {
        const std::uint64_t seed = seed_override ? *seed_override : env ? *env : c.seed ? *c.seed : kDefaultSeed;
        if (c.experiment_id == kHierarchySuite) {
            if (!c.params.empty()) throw UsageError(std::string(kHierarchySuite) + " takes no params");
            for (const auto& id : hierarchy_members()) {
                const auto* e = find_experiment(id);
                out.push_back({e, validate_params(e->schema, Json::object(), id), seed, c.output_dir});
            }
            continue;
        }
        const auto* e = find_experiment(c.experiment_id);
        if (!e) throw UsageError("unknown experiment '" + c.experiment_id + "'\n" + registry_listing());
        out.push_back({e, validate_params(e->schema, c.params, c.experiment_id), seed, c.output_dir});
    }
    if (out.empty()) throw UsageError("nothing to run: empty experiment list");
    return out;
}

inline ExperimentReport run_task(const Task& t) {
    ExperimentReport r;
    r.experiment_id = t.experiment->id;
    r.claim = t.experiment->claim;
    r.params = t.params.json();
    r.seed = t.seed;
    r.output_dir = t.output_dir;
    const auto start = std::chrono::steady_clock::now();
    try {
        t.experiment->run(t.params, t.seed, r);
    } catch (const UsageError& e) {
        r.failure = Failure::Usage;
        r.error = e.what();
    } catch (const NumericError& e) {
        r.failure = Failure::Numeric;
        r.error = e.what();
    } catch (const Error& e) {
        r.failure = Failure::Contract;
        r.error = e.what();
    } catch (const std::exception& e) {
        r.failure = Failure::Numeric;
        r.error = std::string("internal: ") + e.what();
    }
    r.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return r;
}

inline ExperimentReport run_experiment(const ExperimentConfig& config, std::optional<std::uint64_t> seed = std::nullopt) {
    const auto tasks = resolve({config}, seed);
    if (tasks.size() != 1) throw UsageError("run_experiment: use run_suite for " + config.experiment_id);
    return run_task(tasks.front());
}

struct SuiteResult {
    std::vector<ExperimentReport> reports;  ///< sorted by id, then params hash
    int exit_status = 0;
};

/// 0 pass, 1 any failed verdict or contract failure, 2 usage, 3 numeric.
inline int exit_status(const std::vector<ExperimentReport>& reports) {
    bool usage = false, numeric = false, fail = false;
    for (const auto& r : reports) {
        usage = usage || r.failure == Failure::Usage;
        numeric = numeric || r.failure == Failure::Numeric;
        fail = fail || !r.passed();
    }
    return usage ? 2 : numeric ? 3 : fail ? 1 : 0;
}

inline SuiteResult run_suite(const std::vector<Task>& tasks, unsigned jobs = 0) {
    if (tasks.empty()) throw UsageError("run_suite: empty experiment list");
    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<unsigned>(jobs, static_cast<unsigned>(tasks.size()));
    std::vector<ExperimentReport> reports(tasks.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) reports[i] = run_task(tasks[i]);
    };
    std::vector<std::thread> pool;
    for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    std::stable_sort(reports.begin(), reports.end(), [](const ExperimentReport& a, const ExperimentReport& b) {
        if (a.experiment_id != b.experiment_id) return a.experiment_id < b.experiment_id;
        return params_hash(a.params) < params_hash(b.params);
    });
    SuiteResult out;
    out.exit_status = exit_status(reports);
    out.reports = std::move(reports);
    return out;
}

inline std::vector<Task> hierarchy_tasks(std::optional<std::uint64_t> seed = std::nullopt) {
    ExperimentConfig c;
    c.experiment_id = kHierarchySuite;
    return resolve({c}, seed);
}

enum class Format { Json, Csv, Both };

inline Format parse_format(const std::string& s) {
    if (s == "json") return Format::Json;
    if (s == "csv") return Format::Csv;
    if (s == "both") return Format::Both;
    throw UsageError("--format must be json, csv or both");
}

inline std::string csv_document(const std::vector<ExperimentReport>& reports) {
    std::string out = kCsvHeader;
    for (const auto& r : reports) out += csv_rows(r);
    return out;
}

inline std::string report_filename(const ExperimentReport& r) {
    return r.experiment_id + "-" + params_hash(r.params).substr(0, 8) + ".json";
}

/// One JSON file per report and results.csv, written in binary mode (LF).
inline void write_outputs(const std::vector<ExperimentReport>& reports, const std::filesystem::path& dir, Format f) {
    std::filesystem::create_directories(dir);
    if (f != Format::Csv)
        for (const auto& r : reports) {
            std::ofstream out(dir / report_filename(r), std::ios::binary);
            out << r.to_json().dump(2) << "\n";
            if (!out) throw Error("cannot write " + (dir / report_filename(r)).string());
        }
    if (f != Format::Json) {
        std::ofstream out(dir / "results.csv", std::ios::binary);
        out << csv_document(reports);
        if (!out) throw Error("cannot write " + (dir / "results.csv").string());
    }
}

}  // namespace nplab::lab
