#pragma once

// `key = value` configuration text: one setting per line, `#` starts a
// comment, blank lines are ignored. Unknown keys and bad values throw
// ConfigError naming the line.

#include <exception>
#include <functional>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "polarsplat/errors.hpp"

namespace polarsplat {

using Setter = std::function<void(const std::string&)>;
using SetterTable = std::map<std::string, Setter>;

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parseNumber(const std::string& v) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (v.empty() || used != v.size()) throw ConfigError("not a number: " + v);
    return x;
}

inline long long parseInteger(const std::string& v) {
    std::size_t used = 0;
    long long x = 0;
    try {
        x = std::stoll(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (v.empty() || used != v.size()) throw ConfigError("not an integer: " + v);
    return x;
}

inline bool parseFlag(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("not a boolean: " + v);
}

/// Comma-separated numbers.
inline std::vector<double> parseNumberList(const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parseNumber(trim(item)));
    if (out.empty()) throw ConfigError("empty list");
    return out;
}

inline Setter numberSetter(double& dst) {
    return [&dst](const std::string& v) { dst = parseNumber(v); };
}

template <typename Int>
Setter integerSetter(Int& dst) {
    static_assert(std::is_integral_v<Int>);
    return [&dst](const std::string& v) { dst = static_cast<Int>(parseInteger(v)); };
}

inline Setter flagSetter(bool& dst) {
    return [&dst](const std::string& v) { dst = parseFlag(v); };
}

/// Applies every setting in `in` through `setters`.
inline void applySettings(std::istream& in, const SetterTable& setters) {
    std::string line;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineNo) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end()) throw ConfigError("line " + std::to_string(lineNo) + ": unknown key " + key);
        try {
            it->second(val);
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineNo) + ": " + key + ": " + e.what());
        }
    }
}

}  // namespace polarsplat
