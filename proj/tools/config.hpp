#pragma once

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "leafgibbs/core.hpp"

namespace leafgibbs::cli {

using json = nlohmann::ordered_json;

/// YAML node to JSON; untyped scalars become integers, reals, booleans or
/// strings, in that order of preference.
inline json to_json(const YAML::Node& n) {
    switch (n.Type()) {
        case YAML::NodeType::Null:
        case YAML::NodeType::Undefined:
            return nullptr;
        case YAML::NodeType::Sequence: {
            json a = json::array();
            for (const auto& x : n) a.push_back(to_json(x));
            return a;
        }
        case YAML::NodeType::Map: {
            json o = json::object();
            for (const auto& kv : n) o[kv.first.as<std::string>()] = to_json(kv.second);
            return o;
        }
        case YAML::NodeType::Scalar:
            break;
    }
    const std::string s = n.Scalar();
    if (n.Tag() == "!") return s;  // quoted
    long long i;
    if (YAML::convert<long long>::decode(n, i)) return i;
    double d;
    if (YAML::convert<double>::decode(n, d)) return d;
    bool b;
    if (YAML::convert<bool>::decode(n, b)) return b;
    return s;
}

inline json load_config(const std::string& path) {
    try {
        const json j = to_json(YAML::LoadFile(path));
        if (!j.is_object()) throw ConfigError("config " + path + ": top level must be a table");
        return j;
    } catch (const YAML::Exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
}

/// Applies `a.b.c=value` to the config, creating tables as needed.
inline void apply_override(json& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + assignment + "'");
    const std::string key = assignment.substr(0, eq), value = assignment.substr(eq + 1);
    json* node = &cfg;
    std::size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("--set: empty key component in '" + key + "'");
        if (!node->is_object()) *node = json::object();
        node = &(*node)[part];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    try {
        *node = to_json(YAML::Load(value));
    } catch (const YAML::Exception& e) {
        throw ConfigError("--set " + key + ": " + e.what());
    }
}

/// Typed access to a config that records every value read (with defaults
/// filled in) and rejects keys nobody read.
class Params {
public:
    explicit Params(json provided) : provided_(std::move(provided)), resolved_(json::object()) {}

    template <class T>
    T get(const std::string& path, const T& fallback) {
        const auto ptr = pointer(path);
        used_.insert(path);
        T value = fallback;
        if (provided_.contains(ptr) && !provided_[ptr].is_null()) {
            try {
                value = provided_[ptr].template get<T>();
            } catch (const nlohmann::json::exception&) {
                throw ConfigError("config key " + path + " has the wrong type");
            }
        }
        resolved_[ptr] = value;
        return value;
    }

    template <class T>
    T require(const std::string& path) {
        if (!provided_.contains(pointer(path)) || provided_[pointer(path)].is_null())
            throw ConfigError("config key " + path + " is required");
        return get<T>(path, T{});
    }

    std::size_t count(const std::string& path, double fallback) {
        const double v = get<double>(path, fallback);
        if (!(v >= 1.0) || v != std::floor(v) || v > 1e12) throw ConfigError(path + " must be a positive integer");
        resolved_[pointer(path)] = static_cast<std::size_t>(v);
        return static_cast<std::size_t>(v);
    }

    double positive(const std::string& path, double fallback) {
        const double v = get<double>(path, fallback);
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(path + " must be positive");
        return v;
    }

    bool has(const std::string& path) const { return provided_.contains(pointer(path)); }
    void mark_used(const std::string& path) { used_.insert(path); }

    /// Throws ConfigError for any provided leaf key that was never read.
    void finish() const { check_unused(provided_, ""); }

    const json& resolved() const { return resolved_; }

private:
    static json::json_pointer pointer(const std::string& path) {
        std::string p = "/" + path;
        for (char& c : p)
            if (c == '.') c = '/';
        return json::json_pointer(p);
    }

    void check_unused(const json& node, const std::string& prefix) const {
        if (node.is_object() && !(prefix.size() && used_.count(prefix))) {
            for (const auto& [k, v] : node.items()) check_unused(v, prefix.empty() ? k : prefix + "." + k);
            return;
        }
        if (!used_.count(prefix)) throw ConfigError("unknown config key '" + prefix + "'");
    }

    json provided_;
    json resolved_;
    std::set<std::string> used_;
};

}  // namespace leafgibbs::cli
