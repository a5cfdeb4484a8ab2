#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace anytime {

/// Raised for malformed configs, bad flag combinations, invalid parameters.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when a file cannot be opened or written.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shortest decimal string that round-trips to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            break;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline double parse_double(std::string_view s) {
    std::string t(trim(s));
    std::size_t used = 0;
    double v;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        throw ConfigError("not a number: '" + t + "'");
    }
    if (used != t.size()) throw ConfigError("trailing junk in number: '" + t + "'");
    return v;
}

inline long parse_int(std::string_view s) {
    std::string t(trim(s));
    std::size_t used = 0;
    long v;
    try {
        v = std::stol(t, &used);
    } catch (const std::exception&) {
        throw ConfigError("not an integer: '" + t + "'");
    }
    if (used != t.size()) throw ConfigError("trailing junk in integer: '" + t + "'");
    return v;
}

/// Parses flat `key = value` text. `#` starts a comment, blank lines skipped.
/// Later occurrences of a key overwrite earlier ones.
inline std::map<std::string, std::string> parse_key_values(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto sv = trim(line);
        if (sv.empty()) continue;
        auto eq = sv.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key=value, got '" +
                              std::string(sv) + "'");
        auto key = trim(sv.substr(0, eq));
        auto val = trim(sv.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        kv[std::string(key)] = std::string(val);
    }
    return kv;
}

inline std::map<std::string, std::string> parse_key_value_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return parse_key_values(in);
}

/// Reads the `# key=value` stamp lines at the top of an output file back
/// into a map; stops at the first non-comment line.
inline std::map<std::string, std::string> parse_stamp(std::istream& in) {
    std::string stamped;
    std::string line;
    while (std::getline(in, line)) {
        auto sv = trim(line);
        if (sv.empty() || sv.front() != '#') break;
        stamped.append(sv.substr(1));
        stamped.push_back('\n');
    }
    std::istringstream ss(stamped);
    return parse_key_values(ss);
}

inline std::map<std::string, std::string> parse_stamp_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return parse_stamp(in);
}

}  // namespace anytime
