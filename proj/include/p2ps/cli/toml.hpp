#pragma once

#include <map>
#include <string>
#include <variant>

namespace p2ps::cli {

/// Flat key = value document: a TOML-compatible subset with bare keys,
/// quoted strings, booleans, integers, and floats. No tables or arrays.
using TomlValue = std::variant<bool, long long, double, std::string>;
using TomlTable = std::map<std::string, TomlValue>;

/// Throws ConfigError with a line number on malformed input.
TomlTable parse_toml(const std::string& text);

/// IoError on filesystem failure, ConfigError on malformed content.
TomlTable load_toml(const std::string& path);

/// Keys emitted in sorted order; floats always round-trip exactly
/// (%.17g, with ".0" appended when needed to stay float-typed).
std::string dump_toml(const TomlTable& table);

void save_toml(const TomlTable& table, const std::string& path);

}  // namespace p2ps::cli
