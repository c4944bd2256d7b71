#include "wmid/util/config_file.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "wmid/error.hpp"

namespace wmid {

using nlohmann::json;

namespace {

struct TomlParser {
  const std::string& s;
  std::size_t i = 0;
  int line = 1;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ArgumentError("TOML line " + std::to_string(line) + ": " + msg);
  }
  bool eof() const { return i >= s.size(); }
  void skip_ws() {
    while (!eof() && (s[i] == ' ' || s[i] == '\t')) ++i;
  }
  void skip_comment() {
    if (!eof() && s[i] == '#')
      while (!eof() && s[i] != '\n') ++i;
  }
  void end_of_line() {
    skip_ws();
    skip_comment();
    if (eof()) return;
    if (s[i] == '\r') ++i;
    if (eof() || s[i] != '\n') fail("unexpected trailing characters");
    ++i;
    ++line;
  }

  std::string key() {
    skip_ws();
    if (eof()) fail("expected a key");
    if (s[i] == '"' || s[i] == '\'') return string_value();
    std::size_t b = i;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_' || s[i] == '-')) ++i;
    if (b == i) fail("expected a key");
    return s.substr(b, i - b);
  }

  std::vector<std::string> dotted_key() {
    std::vector<std::string> parts{key()};
    skip_ws();
    while (!eof() && s[i] == '.') {
      ++i;
      parts.push_back(key());
      skip_ws();
    }
    return parts;
  }

  std::string string_value() {
    const char q = s[i++];
    std::string out;
    while (true) {
      if (eof() || s[i] == '\n') fail("unterminated string");
      char c = s[i++];
      if (c == q) break;
      if (c == '\\' && q == '"') {
        if (eof()) fail("unterminated escape");
        char e = s[i++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  json value() {
    skip_ws();
    if (eof()) fail("expected a value");
    char c = s[i];
    if (c == '"' || c == '\'') return string_value();
    if (c == '[') {
      ++i;
      json arr = json::array();
      while (true) {
        skip_ws();
        if (eof() || s[i] == '\n') fail("arrays must fit on one line");
        if (s[i] == ']') {
          ++i;
          break;
        }
        arr.push_back(value());
        skip_ws();
        if (!eof() && s[i] == ',') ++i;
        else if (eof() || s[i] != ']') fail("expected ',' or ']'");
      }
      return arr;
    }
    if (s.compare(i, 4, "true") == 0) {
      i += 4;
      return true;
    }
    if (s.compare(i, 5, "false") == 0) {
      i += 5;
      return false;
    }
    std::size_t b = i;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '+' || s[i] == '-' ||
                      s[i] == '.' || s[i] == '_'))
      ++i;
    std::string tok = s.substr(b, i - b);
    std::string clean;
    for (char ch : tok)
      if (ch != '_') clean += ch;
    if (clean.empty()) fail("expected a value");
    try {
      std::size_t used = 0;
      if (clean.find_first_of(".eE") == std::string::npos) {
        long long v = std::stoll(clean, &used, 10);
        if (used == clean.size()) return v;
      } else {
        double v = std::stod(clean, &used);
        if (used == clean.size()) return v;
      }
    } catch (const std::exception&) {
    }
    fail("cannot parse value '" + tok + "'");
  }

  json parse() {
    json root = json::object();
    json* table = &root;
    while (!eof()) {
      skip_ws();
      if (eof()) break;
      if (s[i] == '#' || s[i] == '\n' || s[i] == '\r') {
        end_of_line();
        continue;
      }
      if (s[i] == '[') {
        ++i;
        if (!eof() && s[i] == '[') fail("arrays of tables are not supported");
        auto parts = dotted_key();
        if (eof() || s[i] != ']') fail("expected ']'");
        ++i;
        table = &root;
        for (const auto& p : parts) {
          json& next = (*table)[p];
          if (next.is_null()) next = json::object();
          if (!next.is_object()) fail("'" + p + "' is not a table");
          table = &next;
        }
        end_of_line();
        continue;
      }
      auto parts = dotted_key();
      if (eof() || s[i] != '=') fail("expected '='");
      ++i;
      json* target = table;
      for (std::size_t k = 0; k + 1 < parts.size(); ++k) {
        json& next = (*target)[parts[k]];
        if (next.is_null()) next = json::object();
        if (!next.is_object()) fail("'" + parts[k] + "' is not a table");
        target = &next;
      }
      if (target->contains(parts.back())) fail("duplicate key '" + parts.back() + "'");
      (*target)[parts.back()] = value();
      end_of_line();
    }
    return root;
  }
};

}  // namespace

json parse_toml(const std::string& text) {
  TomlParser p{text};
  return p.parse();
}

json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  if (path.extension() == ".toml") return parse_toml(ss.str());
  try {
    return json::parse(ss.str());
  } catch (const json::exception& e) {
    throw ArgumentError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace wmid
