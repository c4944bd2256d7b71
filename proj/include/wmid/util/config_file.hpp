#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace wmid {

// Reads a JSON or TOML file into a JSON value; the format follows the
// extension (.toml, anything else is JSON). The TOML reader covers tables,
// dotted table headers, strings, numbers, booleans and single-line arrays.
nlohmann::json load_config_file(const std::filesystem::path& path);

nlohmann::json parse_toml(const std::string& text);

}  // namespace wmid
