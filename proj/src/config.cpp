#include "nlar/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nlar {

namespace {

[[noreturn]] void fail(const std::string& origin, std::size_t line, const std::string& what) {
  throw std::runtime_error("config error: " + origin + ":" + std::to_string(line) + ": " + what);
}

std::string trim(std::string s) {
  const auto is_space = [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r'; };
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

ConfigValue parse_scalar(const std::string& text, const std::string& origin, std::size_t line) {
  ConfigValue v;
  if (text.size() >= 2 && text.front() == '"' && text.back() == '"') {
    v.type = ConfigValue::Type::String;
    v.str = text.substr(1, text.size() - 2);
    return v;
  }
  if (text == "true" || text == "false") {
    v.type = ConfigValue::Type::Bool;
    v.flag = (text == "true");
    return v;
  }
  char* end = nullptr;
  const double num = std::strtod(text.c_str(), &end);
  if (end == text.c_str() + text.size() && !text.empty() && std::isfinite(num)) {
    v.type = ConfigValue::Type::Number;
    v.num = num;
    return v;
  }
  fail(origin, line, "cannot parse value '" + text + "'");
}

ConfigValue parse_value(const std::string& text, const std::string& origin, std::size_t line) {
  if (!text.empty() && text.front() == '[') {
    if (text.back() != ']') fail(origin, line, "unterminated array");
    ConfigValue v;
    v.type = ConfigValue::Type::Array;
    const std::string inner = text.substr(1, text.size() - 2);
    std::string item;
    bool quoted = false;
    for (char c : inner) {
      if (c == '"') quoted = !quoted;
      if (c == ',' && !quoted) {
        const std::string t = trim(item);
        if (!t.empty()) v.items.push_back(parse_scalar(t, origin, line));
        item.clear();
      } else {
        item += c;
      }
    }
    const std::string t = trim(item);
    if (!t.empty()) v.items.push_back(parse_scalar(t, origin, line));
    return v;
  }
  return parse_scalar(text, origin, line);
}

}  // namespace

void ConfigTable::set(const std::string& key, ConfigValue value) {
  values_[key] = std::move(value);
}

const ConfigValue& ConfigTable::at(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end())
    throw std::runtime_error("config error: missing key '" + key + "' in table [" + name_ + "]");
  return it->second;
}

std::string ConfigTable::get_string(const std::string& key) const {
  const ConfigValue& v = at(key);
  if (v.type != ConfigValue::Type::String)
    throw std::runtime_error("config error: key '" + key + "' in [" + name_ + "] is not a string");
  return v.str;
}

std::string ConfigTable::get_string_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

double ConfigTable::get_number(const std::string& key) const {
  const ConfigValue& v = at(key);
  if (v.type != ConfigValue::Type::Number)
    throw std::runtime_error("config error: key '" + key + "' in [" + name_ + "] is not a number");
  return v.num;
}

double ConfigTable::get_number_or(const std::string& key, double fallback) const {
  return has(key) ? get_number(key) : fallback;
}

long ConfigTable::get_int(const std::string& key) const {
  const double v = get_number(key);
  const long i = static_cast<long>(v);
  if (static_cast<double>(i) != v)
    throw std::runtime_error("config error: key '" + key + "' in [" + name_ + "] is not an integer");
  return i;
}

long ConfigTable::get_int_or(const std::string& key, long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool ConfigTable::get_bool_or(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const ConfigValue& v = at(key);
  if (v.type != ConfigValue::Type::Bool)
    throw std::runtime_error("config error: key '" + key + "' in [" + name_ + "] is not a bool");
  return v.flag;
}

std::vector<double> ConfigTable::get_number_list(const std::string& key) const {
  const ConfigValue& v = at(key);
  std::vector<double> out;
  if (v.type == ConfigValue::Type::Number) {
    out.push_back(v.num);
    return out;
  }
  if (v.type != ConfigValue::Type::Array)
    throw std::runtime_error("config error: key '" + key + "' in [" + name_ + "] is not an array");
  for (const auto& item : v.items) {
    if (item.type != ConfigValue::Type::Number)
      throw std::runtime_error("config error: array '" + key + "' in [" + name_ +
                               "] holds a non-number");
    out.push_back(item.num);
  }
  return out;
}

std::vector<std::string> ConfigTable::get_string_list(const std::string& key) const {
  const ConfigValue& v = at(key);
  std::vector<std::string> out;
  if (v.type == ConfigValue::Type::String) {
    out.push_back(v.str);
    return out;
  }
  if (v.type != ConfigValue::Type::Array)
    throw std::runtime_error("config error: key '" + key + "' in [" + name_ + "] is not an array");
  for (const auto& item : v.items) {
    if (item.type != ConfigValue::Type::String)
      throw std::runtime_error("config error: array '" + key + "' in [" + name_ +
                               "] holds a non-string");
    out.push_back(item.str);
  }
  return out;
}

const ConfigTable* Config::find(const std::string& name) const {
  for (const auto& t : tables_)
    if (t.name() == name) return &t;
  return nullptr;
}

const ConfigTable& Config::require(const std::string& name) const {
  const ConfigTable* t = find(name);
  if (!t) throw std::runtime_error("config error: missing table [" + name + "]");
  return *t;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config error: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str(), path);
}

Config Config::parse_text(const std::string& text, const std::string& origin) {
  Config cfg;
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  std::size_t current = 0;  // index into tables_
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(origin, lineno, "unterminated table header");
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) fail(origin, lineno, "empty table name");
      cfg.tables_.emplace_back(name);
      current = cfg.tables_.size() - 1;
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail(origin, lineno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(origin, lineno, "empty key");
    if (value.empty()) fail(origin, lineno, "empty value for '" + key + "'");
    cfg.tables_[current].set(key, parse_value(value, origin, lineno));
  }
  return cfg;
}

}  // namespace nlar
