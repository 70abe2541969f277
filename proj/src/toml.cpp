#include "xbar/toml.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "xbar/errors.hpp"

namespace xbar::toml {

double Value::as_number() const {
  switch (kind) {
  case Kind::Integer: return static_cast<double>(integer);
  case Kind::Float: return real;
  default: throw ConfigError("TOML value is not numeric");
  }
}

const Value &Table::at(const std::string &key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing config key: " + key);
  return it->second;
}

std::string Table::get_string(const std::string &key) const {
  const Value &v = at(key);
  if (v.kind != Value::Kind::String) throw ConfigError("config key is not a string: " + key);
  return v.str;
}

long long Table::get_int(const std::string &key) const {
  const Value &v = at(key);
  if (v.kind != Value::Kind::Integer) throw ConfigError("config key is not an integer: " + key);
  return v.integer;
}

double Table::get_double(const std::string &key) const { return at(key).as_number(); }

std::vector<double> Table::get_double_array(const std::string &key) const {
  const Value &v = at(key);
  if (v.kind != Value::Kind::Array) throw ConfigError("config key is not an array: " + key);
  std::vector<double> out;
  out.reserve(v.array.size());
  for (const Value &e : v.array) out.push_back(e.as_number());
  return out;
}

std::vector<long long> Table::get_int_array(const std::string &key) const {
  const Value &v = at(key);
  if (v.kind != Value::Kind::Array) throw ConfigError("config key is not an array: " + key);
  std::vector<long long> out;
  out.reserve(v.array.size());
  for (const Value &e : v.array) {
    if (e.kind != Value::Kind::Integer) throw ConfigError("array element is not an integer: " + key);
    out.push_back(e.integer);
  }
  return out;
}

std::vector<std::string> Table::get_string_array(const std::string &key) const {
  const Value &v = at(key);
  if (v.kind != Value::Kind::Array) throw ConfigError("config key is not an array: " + key);
  std::vector<std::string> out;
  for (const Value &e : v.array) {
    if (e.kind != Value::Kind::String) throw ConfigError("array element is not a string: " + key);
    out.push_back(e.str);
  }
  return out;
}

std::optional<double> Table::find_double(const std::string &key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second.as_number();
}

std::optional<std::string> Table::find_string(const std::string &key) const {
  auto it = entries_.find(key);
  if (it == entries_.end() || it->second.kind != Value::Kind::String) return std::nullopt;
  return it->second.str;
}

std::vector<std::string> Table::keys_under(const std::string &prefix) const {
  std::vector<std::string> out;
  const std::string dotted = prefix + ".";
  for (const auto &[k, v] : entries_)
    if (k.rfind(dotted, 0) == 0) out.push_back(k);
  return out;
}

namespace {

std::string strip(const std::string &s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// removes a trailing comment that is not inside a string literal
std::string strip_comment(const std::string &s) {
  bool in_str = false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_str = !in_str;
    if (s[i] == '#' && !in_str) return s.substr(0, i);
  }
  return s;
}

Value parse_scalar(const std::string &raw, int line) {
  std::string s = strip(raw);
  Value v;
  if (s.empty()) throw ParseError("empty TOML value", line);
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"') throw ParseError("unterminated string", line);
    v.kind = Value::Kind::String;
    v.str = s.substr(1, s.size() - 2);
    return v;
  }
  if (s == "true" || s == "false") {
    v.kind = Value::Kind::Boolean;
    v.boolean = (s == "true");
    return v;
  }
  // number: integer unless it contains . e E or inf/nan
  bool is_float = s.find_first_of(".eE") != std::string::npos || s.find("inf") != std::string::npos;
  try {
    size_t pos = 0;
    if (is_float) {
      v.kind = Value::Kind::Float;
      v.real = std::stod(s, &pos);
    } else {
      v.kind = Value::Kind::Integer;
      v.integer = std::stoll(s, &pos);
    }
    if (pos != s.size()) throw ParseError("trailing characters in value '" + s + "'", line);
  } catch (const ParseError &) {
    throw;
  } catch (const std::exception &) {
    throw ParseError("cannot parse TOML value '" + s + "'", line);
  }
  return v;
}

Value parse_value(const std::string &raw, int line) {
  std::string s = strip(raw);
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') throw ParseError("unterminated array", line);
    Value v;
    v.kind = Value::Kind::Array;
    std::string inner = s.substr(1, s.size() - 2);
    std::string cur;
    bool in_str = false;
    for (char c : inner) {
      if (c == '"') in_str = !in_str;
      if (c == ',' && !in_str) {
        if (!strip(cur).empty()) v.array.push_back(parse_scalar(cur, line));
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!strip(cur).empty()) v.array.push_back(parse_scalar(cur, line));
    return v;
  }
  return parse_scalar(s, line);
}

} // namespace

Table parse(const std::string &text) {
  Table t;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", lineno);
      section = strip(line.substr(1, line.size() - 2));
      if (section.empty()) throw ParseError("empty section name", lineno);
      continue;
    }
    size_t eq = 0;
    bool in_str = false;
    for (; eq < line.size(); ++eq) {
      if (line[eq] == '"') in_str = !in_str;
      if (line[eq] == '=' && !in_str) break;
    }
    if (eq >= line.size()) throw ParseError("expected key = value", lineno);
    std::string key = strip(line.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", lineno);
    std::string full = section.empty() ? key : section + "." + key;
    t.set(full, parse_value(line.substr(eq + 1), lineno));
  }
  return t;
}

Table parse_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

} // namespace xbar::toml
