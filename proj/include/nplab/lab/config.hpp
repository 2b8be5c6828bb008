#pragma once

/// @file config.hpp
/// Parameter schemas and the JSON config document.

#include "nplab/lab/report.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace nplab::lab {

enum class ParamType { Number, Integer, String, NumberList };

inline std::string to_string(ParamType t) {
    switch (t) {
        case ParamType::Number: return "number";
        case ParamType::Integer: return "integer";
        case ParamType::String: return "string";
        default: return "number list";
    }
}

struct ParamSpec {
    std::string name;
    ParamType type = ParamType::Number;
    Json fallback;
    std::string help;
    std::vector<std::string> choices;  ///< String only
    std::optional<double> min;         ///< numbers and list entries
    std::optional<double> max;
};

using Schema = std::vector<ParamSpec>;

/// Validated parameters with every default filled in.
class Params {
public:
    Params() = default;
    explicit Params(Json values) : values_(std::move(values)) {}

    double num(const std::string& key) const { return values_.at(key).get<double>(); }
    long integer(const std::string& key) const { return static_cast<long>(std::llround(num(key))); }
    std::string str(const std::string& key) const { return values_.at(key).get<std::string>(); }
    std::vector<double> list(const std::string& key) const { return values_.at(key).get<std::vector<double>>(); }
    const Json& json() const { return values_; }

private:
    Json values_ = Json::object();
};

namespace detail {

inline void check_range(const ParamSpec& s, double v, const std::string& where) {
    if (!std::isfinite(v)) throw UsageError(where + ": parameter '" + s.name + "' must be finite");
    if (s.min && v < *s.min)
        throw UsageError(where + ": parameter '" + s.name + "' must be >= " + format_real(*s.min));
    if (s.max && v > *s.max)
        throw UsageError(where + ": parameter '" + s.name + "' must be <= " + format_real(*s.max));
}

inline void check_value(const ParamSpec& s, const Json& v, const std::string& where) {
    const std::string bad = where + ": parameter '" + s.name + "' must be a " + to_string(s.type);
    switch (s.type) {
        case ParamType::Number:
            if (!v.is_number()) throw UsageError(bad);
            check_range(s, v.get<double>(), where);
            break;
        case ParamType::Integer: {
            if (!v.is_number()) throw UsageError(bad);
            const double d = v.get<double>();
            if (d != std::floor(d)) throw UsageError(bad);
            check_range(s, d, where);
            break;
        }
        case ParamType::String: {
            if (!v.is_string()) throw UsageError(bad);
            if (!s.choices.empty()) {
                const auto str = v.get<std::string>();
                bool ok = false;
                for (const auto& c : s.choices) ok = ok || c == str;
                if (!ok) throw UsageError(where + ": parameter '" + s.name + "' has unknown value '" + str + "'");
            }
            break;
        }
        case ParamType::NumberList:
            if (!v.is_array() || v.empty()) throw UsageError(bad);
            for (const auto& e : v) {
                if (!e.is_number()) throw UsageError(bad);
                check_range(s, e.get<double>(), where);
            }
            break;
    }
}

}  // namespace detail

/// Rejects unknown keys and ill-typed values; fills defaults in schema order.
inline Params validate_params(const Schema& schema, const Json& given, const std::string& where) {
    if (!given.is_null() && !given.is_object()) throw UsageError(where + ": params must be an object");
    if (given.is_object())
        for (auto it = given.begin(); it != given.end(); ++it) {
            bool known = false;
            for (const auto& s : schema) known = known || s.name == it.key();
            if (!known) throw UsageError(where + ": unknown parameter '" + it.key() + "'");
        }
    Json out = Json::object();
    for (const auto& s : schema) {
        const bool has = given.is_object() && given.contains(s.name);
        const Json& v = has ? given.at(s.name) : s.fallback;
        detail::check_value(s, v, where);
        out[s.name] = v;
    }
    return Params(out);
}

inline std::uint64_t parse_seed(const std::string& text, const std::string& where) {
    if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos)
        throw UsageError(where + ": seed must be a decimal unsigned integer, got '" + text + "'");
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
    if (errno == ERANGE) throw UsageError(where + ": seed out of range");
    return static_cast<std::uint64_t>(v);
}

inline constexpr std::uint64_t kDefaultSeed = 20240601;

struct ExperimentConfig {
    std::string experiment_id;
    Json params = Json::object();  ///< raw; validated against the registry schema at run time
    std::optional<std::uint64_t> seed;
    std::string output_dir;
};

inline std::vector<ExperimentConfig> parse_config(const Json& doc) {
    if (!doc.is_object()) throw UsageError("config: top level must be an object");
    for (auto it = doc.begin(); it != doc.end(); ++it)
        if (it.key() != "experiments") throw UsageError("config: unknown top-level key '" + it.key() + "'");
    if (!doc.contains("experiments") || !doc["experiments"].is_array())
        throw UsageError("config: 'experiments' must be an array");
    std::vector<ExperimentConfig> out;
    std::size_t index = 0;
    for (const auto& e : doc["experiments"]) {
        const std::string where = "config: experiments[" + std::to_string(index++) + "]";
        if (!e.is_object()) throw UsageError(where + " must be an object");
        ExperimentConfig c;
        for (auto it = e.begin(); it != e.end(); ++it) {
            const auto& k = it.key();
            if (k == "experiment_id") {
                if (!it->is_string()) throw UsageError(where + ": experiment_id must be a string");
                c.experiment_id = it->get<std::string>();
            } else if (k == "params") {
                if (!it->is_object()) throw UsageError(where + ": params must be an object");
                c.params = *it;
            } else if (k == "seed") {
                if (it->is_string()) c.seed = parse_seed(it->get<std::string>(), where);
                else if (it->is_number_unsigned()) c.seed = it->get<std::uint64_t>();
                else throw UsageError(where + ": seed must be a decimal string");
            } else if (k == "output_dir") {
                if (!it->is_string()) throw UsageError(where + ": output_dir must be a string");
                c.output_dir = it->get<std::string>();
            } else {
                throw UsageError(where + ": unknown key '" + k + "'");
            }
        }
        if (c.experiment_id.empty()) throw UsageError(where + ": experiment_id is required");
        out.push_back(std::move(c));
    }
    return out;
}

inline std::vector<ExperimentConfig> load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    Json doc;
    try {
        doc = Json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw UsageError("config: " + path + " is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

}  // namespace nplab::lab
