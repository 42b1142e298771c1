#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace hysterelax {

using Json = nlohmann::ordered_json;

/// Pretty JSON with every float printed to 17 significant digits; non-finite
/// numbers become null.
std::string dump_json(const Json& value);

/// Number formatted with 17 significant digits.
std::string format_number(double value);

/// Writes text to a file, creating parent directories. Throws ConfigError on failure.
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace hysterelax
