#pragma once

/// @file report.hpp
/// Experiment reports: measurements, bounds, verdicts, JSON and CSV emission.

#include "nplab/core.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

namespace nplab::lab {

using Json = nlohmann::ordered_json;

/// Bad command line, config, experiment id or parameter.
class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(what) {}
};

enum class Outcome { Pass, Fail, Informational };

inline std::string to_string(Outcome o) {
    switch (o) {
        case Outcome::Pass: return "pass";
        case Outcome::Fail: return "fail";
        default: return "informational";
    }
}

enum class Comparison { AtMost, AtLeast, Informational };

inline std::string to_string(Comparison c) {
    switch (c) {
        case Comparison::AtMost: return "<=";
        case Comparison::AtLeast: return ">=";
        default: return "none";
    }
}

struct Verdict {
    std::string measurement;
    std::string bound;  ///< empty for informational entries
    Comparison comparison = Comparison::Informational;
    Outcome outcome = Outcome::Informational;
};

/// How an experiment ended when it did not produce verdicts.
enum class Failure { None, Usage, Contract, Numeric };

struct ExperimentReport {
    std::string experiment_id;
    std::string claim;
    Json params = Json::object();
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, double>> measurements;
    std::vector<std::pair<std::string, double>> bounds;
    std::vector<Verdict> verdicts;
    Failure failure = Failure::None;
    std::string error;
    double wall_time_ms = 0.0;
    std::string output_dir;  ///< from the config; not serialized

    void measure(const std::string& name, double value) { set(measurements, name, value); }
    void bound(const std::string& name, double value) { set(bounds, name, value); }

    double measurement(const std::string& name) const { return get(measurements, name); }
    double bound_value(const std::string& name) const { return get(bounds, name); }

    /// measurement <= bound
    void at_most(const std::string& name, double value, const std::string& bound_name, double limit) {
        record(name, value, bound_name, limit, Comparison::AtMost, value <= limit);
    }

    /// measurement >= bound
    void at_least(const std::string& name, double value, const std::string& bound_name, double limit) {
        record(name, value, bound_name, limit, Comparison::AtLeast, value >= limit);
    }

    void info(const std::string& name, double value) {
        measure(name, value);
        verdicts.push_back({name, "", Comparison::Informational, Outcome::Informational});
    }

    bool passed() const {
        if (failure != Failure::None) return false;
        for (const auto& v : verdicts)
            if (v.outcome == Outcome::Fail) return false;
        return true;
    }

    Json to_json(bool with_time = true) const {
        Json j;
        j["experiment_id"] = experiment_id;
        j["claim"] = claim;
        j["params"] = params;
        j["seed"] = std::to_string(seed);
        j["status"] = passed() ? "pass" : "fail";
        if (failure != Failure::None) j["error"] = error;
        Json m = Json::object(), b = Json::object(), v = Json::object();
        for (const auto& [k, x] : measurements) m[k] = finite_or_string(x);
        for (const auto& [k, x] : bounds) b[k] = finite_or_string(x);
        for (const auto& vd : verdicts) {
            Json e;
            e["measurement"] = vd.measurement;
            if (!vd.bound.empty()) e["bound"] = vd.bound;
            e["comparison"] = to_string(vd.comparison);
            e["verdict"] = to_string(vd.outcome);
            v[vd.measurement] = e;
        }
        j["measurements"] = m;
        j["bounds"] = b;
        j["verdicts"] = v;
        if (with_time) j["wall_time_ms"] = wall_time_ms;
        return j;
    }

private:
    static void set(std::vector<std::pair<std::string, double>>& list, const std::string& name, double value) {
        for (auto& [k, v] : list)
            if (k == name) {
                v = value;
                return;
            }
        list.emplace_back(name, value);
    }

    static double get(const std::vector<std::pair<std::string, double>>& list, const std::string& name) {
        for (const auto& [k, v] : list)
            if (k == name) return v;
        throw ContractError("report: no entry named " + name);
    }

    static Json finite_or_string(double x) {
        if (std::isfinite(x)) return x;
        return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
    }

    void record(const std::string& name, double value, const std::string& bound_name, double limit, Comparison c,
                bool ok) {
        measure(name, value);
        bound(bound_name, limit);
        verdicts.push_back({name, bound_name, c, ok ? Outcome::Pass : Outcome::Fail});
    }
};

/// 17 significant digits.
inline std::string format_real(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline const char* kCsvHeader = "experiment_id,measurement_name,value,bound_name,bound,verdict\n";

/// One row per verdict; failed runs get a single "error" row.
inline std::string csv_rows(const ExperimentReport& r) {
    std::string out;
    if (r.failure != Failure::None) {
        out += csv_field(r.experiment_id) + ",error,,,,fail\n";
        return out;
    }
    for (const auto& v : r.verdicts) {
        out += csv_field(r.experiment_id) + "," + csv_field(v.measurement) + "," + format_real(r.measurement(v.measurement)) + ",";
        if (!v.bound.empty()) out += csv_field(v.bound) + "," + format_real(r.bound_value(v.bound));
        else out += ",";
        out += "," + to_string(v.outcome) + "\n";
    }
    return out;
}

}  // namespace nplab::lab
