#include "p2ps/cli/toml.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "p2ps/errors.hpp"

namespace p2ps::cli {

namespace {

[[noreturn]] void fail(int line, const std::string& msg) {
    throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    for (char c : k) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
    }
    return true;
}

std::string parse_quoted(const std::string& raw, int line) {
    // raw starts and ends with '"'; process escapes.
    std::string out;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
        char c = raw[i];
        if (c == '"') fail(line, "unescaped quote inside string");
        if (c != '\\') {
            out += c;
            continue;
        }
        if (i + 2 >= raw.size()) fail(line, "dangling escape at end of string");
        char e = raw[++i];
        switch (e) {
            case '"': out += '"'; break;
            case '\\': out += '\\'; break;
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            case 'r': out += '\r'; break;
            default: fail(line, std::string("unsupported escape \\") + e);
        }
    }
    return out;
}

bool looks_integer(const std::string& v) {
    std::size_t i = (v[0] == '+' || v[0] == '-') ? 1 : 0;
    if (i >= v.size()) return false;
    for (; i < v.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(v[i]))) return false;
    }
    return true;
}

TomlValue parse_value(const std::string& v, int line) {
    if (v.size() >= 2 && v.front() == '"') {
        if (v.back() != '"') fail(line, "unterminated string");
        return parse_quoted(v, line);
    }
    if (v == "true") return true;
    if (v == "false") return false;
    if (looks_integer(v)) {
        errno = 0;
        char* end = nullptr;
        long long n = std::strtoll(v.c_str(), &end, 10);
        if (errno != 0 || end != v.c_str() + v.size()) fail(line, "integer out of range: " + v);
        return n;
    }
    char* end = nullptr;
    errno = 0;
    double d = std::strtod(v.c_str(), &end);
    if (end == v.c_str() + v.size() && end != v.c_str() && std::isfinite(d)) return d;
    fail(line, "cannot parse value '" + v + "'");
}

/// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& s) {
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (in_str) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_str = false;
            }
        } else if (c == '"') {
            in_str = true;
        } else if (c == '#') {
            return s.substr(0, i);
        }
    }
    return s;
}

}  // namespace

TomlTable parse_toml(const std::string& text) {
    TomlTable table;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) fail(line_no, "expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (!valid_key(key)) fail(line_no, "invalid key '" + key + "'");
        if (value.empty()) fail(line_no, "missing value for key '" + key + "'");
        if (!table.emplace(key, parse_value(value, line_no)).second) {
            fail(line_no, "duplicate key '" + key + "'");
        }
    }
    return table;
}

TomlTable load_toml(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_toml(buf.str());
}

std::string dump_toml(const TomlTable& table) {
    std::string out;
    for (const auto& [key, value] : table) {
        out += key;
        out += " = ";
        if (std::holds_alternative<bool>(value)) {
            out += std::get<bool>(value) ? "true" : "false";
        } else if (std::holds_alternative<long long>(value)) {
            out += std::to_string(std::get<long long>(value));
        } else if (std::holds_alternative<double>(value)) {
            double d = std::get<double>(value);
            if (!std::isfinite(d)) throw ConfigError("cannot serialize non-finite value for " + key);
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.17g", d);
            std::string s = buf;
            if (s.find_first_of(".eE") == std::string::npos) s += ".0";
            out += s;
        } else {
            const std::string& s = std::get<std::string>(value);
            out += '"';
            for (char c : s) {
                switch (c) {
                    case '"': out += "\\\""; break;
                    case '\\': out += "\\\\"; break;
                    case '\n': out += "\\n"; break;
                    case '\t': out += "\\t"; break;
                    case '\r': out += "\\r"; break;
                    default: out += c;
                }
            }
            out += '"';
        }
        out += '\n';
    }
    return out;
}

void save_toml(const TomlTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write config file: " + path);
    out << dump_toml(table);
    if (!out.good()) throw IoError("write failed for " + path);
}

}  // namespace p2ps::cli
