#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace nlar {

// Minimal TOML-subset reader: '#' comments, [table] / [table.sub] headers,
// key = value lines with string, number, boolean or flat-array values.
// Enough for the experiment and lab configs; see README for the schema.
struct ConfigValue {
  enum class Type { String, Number, Bool, Array };
  Type type = Type::String;
  std::string str;
  double num = 0.0;
  bool flag = false;
  std::vector<ConfigValue> items;
};

class ConfigTable {
 public:
  explicit ConfigTable(std::string name) : name_(std::move(name)) {}

  const std::string& name() const { return name_; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key) const;
  std::string get_string_or(const std::string& key, const std::string& fallback) const;
  double get_number(const std::string& key) const;
  double get_number_or(const std::string& key, double fallback) const;
  long get_int(const std::string& key) const;
  long get_int_or(const std::string& key, long fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;
  std::vector<double> get_number_list(const std::string& key) const;
  std::vector<std::string> get_string_list(const std::string& key) const;

  void set(const std::string& key, ConfigValue value);

 private:
  const ConfigValue& at(const std::string& key) const;
  std::string name_;
  std::map<std::string, ConfigValue> values_;
};

// Tables in file order (root keys live in the unnamed first table).
class Config {
 public:
  const ConfigTable& root() const { return tables_.front(); }
  const ConfigTable* find(const std::string& name) const;
  const ConfigTable& require(const std::string& name) const;
  const std::vector<ConfigTable>& tables() const { return tables_; }

  static Config parse_file(const std::string& path);
  static Config parse_text(const std::string& text, const std::string& origin);

 private:
  std::vector<ConfigTable> tables_{ConfigTable("")};
};

}  // namespace nlar
