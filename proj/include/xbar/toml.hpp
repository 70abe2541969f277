#pragma once

// Minimal TOML subset reader, enough for the shipped config files:
// [section] / [section.sub] headers, key = value with string, integer,
// float, boolean and flat array values, and '#' comments.

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace xbar::toml {

struct Value {
  enum class Kind { String, Integer, Float, Boolean, Array };
  Kind kind = Kind::String;
  std::string str;
  long long integer = 0;
  double real = 0.0;
  bool boolean = false;
  std::vector<Value> array;

  double as_number() const;
};

class Table {
public:
  // keys are "section.key" (dotted path)
  void set(const std::string &key, Value v) { entries_[key] = std::move(v); }
  bool contains(const std::string &key) const { return entries_.count(key) != 0; }

  const Value &at(const std::string &key) const;
  std::string get_string(const std::string &key) const;
  long long get_int(const std::string &key) const;
  double get_double(const std::string &key) const;
  std::vector<double> get_double_array(const std::string &key) const;
  std::vector<long long> get_int_array(const std::string &key) const;
  std::vector<std::string> get_string_array(const std::string &key) const;

  std::optional<double> find_double(const std::string &key) const;
  std::optional<std::string> find_string(const std::string &key) const;

  // all keys under "prefix." (prefix without trailing dot)
  std::vector<std::string> keys_under(const std::string &prefix) const;

  const std::map<std::string, Value> &entries() const { return entries_; }

private:
  std::map<std::string, Value> entries_;
};

Table parse(const std::string &text);
Table parse_file(const std::string &path);

} // namespace xbar::toml
