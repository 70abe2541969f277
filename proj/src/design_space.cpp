#include "xbar/design_space.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "xbar/errors.hpp"

namespace xbar {

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

static std::string to_upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

void DeviceKind::validate() const {
  if (name.empty()) throw ConfigError("device name must not be empty");
  if (!(r_on > 0.0)) throw ConfigError("device " + name + ": r_on must be positive");
  if (!(r_off > r_on)) throw ConfigError("device " + name + ": r_off must exceed r_on");
  if (!std::isfinite(r_off / r_on)) throw ConfigError("device " + name + ": r_off/r_on not finite");
}

void BitcellKind::validate() const {
  if (name.empty()) throw ConfigError("bitcell name must not be empty");
  if (num_access_transistors < 1 || num_access_transistors > 2)
    throw ConfigError("bitcell " + name + ": access transistor count must be 1 or 2");
  if (access_resistance < 0.0)
    throw ConfigError("bitcell " + name + ": access_resistance must be >= 0");
  if (!(cell_area_factor > 0.0))
    throw ConfigError("bitcell " + name + ": cell_area_factor must be positive");
}

std::string bit_mode_name(BitMode m) {
  switch (m) {
  case BitMode::Analog: return "analog";
  case BitMode::Digital: return "digital";
  case BitMode::Unspecified: return "unspecified";
  }
  return "unspecified";
}

BitMode bit_mode_from_name(const std::string &s) {
  std::string l = to_lower(s);
  if (l == "analog") return BitMode::Analog;
  if (l == "digital") return BitMode::Digital;
  if (l == "unspecified" || l == "unspec") return BitMode::Unspecified;
  throw ConfigError("unknown bit mode: " + s);
}

void DesignPoint::validate() const {
  if (rows < 1 || cols < 1) throw ConfigError("crossbar dimensions must be positive");
  if (partition.h_parts < 1 || partition.v_parts < 1)
    throw ConfigError("partition counts must be positive");
  if (rows % partition.h_parts != 0)
    throw ConfigError("rows (" + std::to_string(rows) + ") not divisible by h_parts (" +
                      std::to_string(partition.h_parts) + ")");
  if (cols % partition.v_parts != 0)
    throw ConfigError("cols (" + std::to_string(cols) + ") not divisible by v_parts (" +
                      std::to_string(partition.v_parts) + ")");
  if (mode == BitMode::Digital && bits < 1)
    throw ConfigError("digital mode requires bits >= 1");
  if (mode != BitMode::Digital && bits != 0)
    throw ConfigError("bit count only valid in digital mode");
}

DeviceRegistry DeviceRegistry::defaults() {
  DeviceRegistry r;
  // Interconnect segment resistance rises as the node shrinks.
  // These and the device resistance states are literature-typical defaults,
  // not values reported with the reference dataset; override via devices.toml.
  r.add_tech({7, 5.0});
  r.add_tech({9, 4.0});
  r.add_tech({14, 2.5});
  r.add_tech({20, 1.5});
  r.add_device({"MRAM", 3e3, 6e3});
  r.add_device({"RRAM", 10e3, 1e6});
  r.add_device({"PCM", 20e3, 10e6});
  r.add_device({"CBRAM", 1e3, 1e6});
  r.add_bitcell({"1T1R", 1, 500.0, 1.0});
  r.add_bitcell({"2T1R", 2, 500.0, 1.54});
  return r;
}

void DeviceRegistry::add_device(DeviceKind d) {
  d.validate();
  devices_[to_upper(d.name)] = d;
}

void DeviceRegistry::add_bitcell(BitcellKind b) {
  b.validate();
  bitcells_[to_upper(b.name)] = b;
}

const TechNode &DeviceRegistry::tech(int feature_size_nm) const {
  auto it = techs_.find(feature_size_nm);
  if (it == techs_.end())
    throw ConfigError("unregistered tech node: " + std::to_string(feature_size_nm) + "nm");
  return it->second;
}

const DeviceKind &DeviceRegistry::device(const std::string &name) const {
  auto it = devices_.find(to_upper(name));
  if (it == devices_.end()) throw ConfigError("unregistered device: " + name);
  return it->second;
}

const BitcellKind &DeviceRegistry::bitcell(const std::string &name) const {
  auto it = bitcells_.find(to_upper(name));
  if (it == bitcells_.end()) throw ConfigError("unregistered bitcell: " + name);
  return it->second;
}

std::vector<int> DeviceRegistry::tech_nodes() const {
  std::vector<int> out;
  for (const auto &[k, v] : techs_) out.push_back(k);
  return out;
}

std::vector<std::string> DeviceRegistry::device_names() const {
  std::vector<std::string> out;
  for (const auto &[k, v] : devices_) out.push_back(v.name);
  return out;
}

std::vector<std::string> DeviceRegistry::bitcell_names() const {
  std::vector<std::string> out;
  for (const auto &[k, v] : bitcells_) out.push_back(v.name);
  return out;
}

DeviceRegistry DeviceRegistry::from_toml(const toml::Table &t) {
  DeviceRegistry r = defaults();
  for (const std::string &key : t.keys_under("tech")) {
    // tech.<nm>.wire_r
    std::string rest = key.substr(5);
    size_t dot = rest.find('.');
    if (dot == std::string::npos) continue;
    int nm = std::stoi(rest.substr(0, dot));
    std::string field = rest.substr(dot + 1);
    TechNode node{nm, 0.0};
    try {
      node = r.tech(nm);
    } catch (const ConfigError &) {
    }
    if (field == "wire_r") node.wire_r_per_segment = t.get_double(key);
    r.add_tech(node);
  }
  auto load_group = [&](const std::string &group, auto apply) {
    for (const std::string &key : t.keys_under(group)) {
      std::string rest = key.substr(group.size() + 1);
      size_t dot = rest.find('.');
      if (dot == std::string::npos) continue;
      apply(rest.substr(0, dot), rest.substr(dot + 1), key);
    }
  };
  std::map<std::string, DeviceKind> devs;
  load_group("device", [&](const std::string &name, const std::string &field, const std::string &key) {
    DeviceKind &d = devs[to_upper(name)];
    d.name = to_upper(name);
    if (field == "r_on") d.r_on = t.get_double(key);
    else if (field == "r_off") d.r_off = t.get_double(key);
    else throw ConfigError("unknown device field: " + key);
  });
  for (auto &[n, d] : devs) r.add_device(d);
  std::map<std::string, BitcellKind> cells;
  load_group("bitcell", [&](const std::string &name, const std::string &field, const std::string &key) {
    BitcellKind &b = cells[to_upper(name)];
    b.name = to_upper(name);
    if (field == "access_resistance") b.access_resistance = t.get_double(key);
    else if (field == "cell_area_factor") b.cell_area_factor = t.get_double(key);
    else if (field == "access_transistors") b.num_access_transistors = static_cast<int>(t.get_int(key));
    else throw ConfigError("unknown bitcell field: " + key);
  });
  for (auto &[n, b] : cells) r.add_bitcell(b);
  return r;
}

DeviceRegistry DeviceRegistry::from_file(const std::string &path) {
  return from_toml(toml::parse_file(path));
}

GridSpec GridSpec::defaults() {
  GridSpec g;
  g.tech_nm = {7, 9, 14, 20};
  g.devices = {"CBRAM", "MRAM", "PCM", "RRAM"};
  g.bitcells = {"1T1R", "2T1R"};
  g.sizes = {16, 32, 64};
  g.include_analog = true;
  g.digital_bits = {1, 2, 3, 4, 6, 8};
  return g;
}

GridSpec GridSpec::from_toml(const toml::Table &t) {
  GridSpec g = defaults();
  if (t.contains("grid.tech_nm")) {
    g.tech_nm.clear();
    for (long long v : t.get_int_array("grid.tech_nm")) g.tech_nm.push_back(static_cast<int>(v));
  }
  if (t.contains("grid.devices")) g.devices = t.get_string_array("grid.devices");
  if (t.contains("grid.bitcells")) g.bitcells = t.get_string_array("grid.bitcells");
  if (t.contains("grid.sizes")) {
    g.sizes.clear();
    for (long long v : t.get_int_array("grid.sizes")) g.sizes.push_back(static_cast<int>(v));
  }
  if (t.contains("grid.include_analog")) g.include_analog = t.at("grid.include_analog").boolean;
  if (t.contains("grid.digital_bits")) {
    g.digital_bits.clear();
    for (long long v : t.get_int_array("grid.digital_bits")) g.digital_bits.push_back(static_cast<int>(v));
  }
  return g;
}

GridSpec GridSpec::from_file(const std::string &path) {
  return from_toml(toml::parse_file(path));
}

std::vector<DesignPoint> enumerate_grid(const GridSpec &spec, const DeviceRegistry &reg) {
  if (spec.tech_nm.empty()) throw ConfigError("grid axis 'tech_nm' is empty");
  if (spec.devices.empty()) throw ConfigError("grid axis 'devices' is empty");
  if (spec.bitcells.empty()) throw ConfigError("grid axis 'bitcells' is empty");
  if (spec.sizes.empty()) throw ConfigError("grid axis 'sizes' is empty");
  if (!spec.include_analog && spec.digital_bits.empty())
    throw ConfigError("grid axis 'mode' is empty (no analog, no digital bits)");

  auto sorted_unique = [](auto v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  auto techs = sorted_unique(spec.tech_nm);
  auto devices = sorted_unique(spec.devices);
  auto bitcells = sorted_unique(spec.bitcells);
  auto sizes = sorted_unique(spec.sizes);
  auto bits = sorted_unique(spec.digital_bits);

  std::vector<DesignPoint> out;
  for (int t : techs) {
    (void)reg.tech(t); // reject unregistered nodes early
    for (const std::string &dev : devices) {
      const std::string dname = reg.device(dev).name;
      for (const std::string &bc : bitcells) {
        const std::string bname = reg.bitcell(bc).name;
        for (int s : sizes) {
          if (s < 1) throw ConfigError("grid size must be positive");
          auto push = [&](BitMode m, int b) {
            DesignPoint dp;
            dp.tech_nm = t;
            dp.device = dname;
            dp.bitcell = bname;
            dp.rows = dp.cols = s;
            dp.mode = m;
            dp.bits = b;
            dp.validate();
            out.push_back(dp);
          };
          if (spec.include_analog) push(BitMode::Analog, 0);
          for (int b : bits) push(BitMode::Digital, b);
        }
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const DesignPoint &a, const DesignPoint &b) {
    return design_key(a) < design_key(b);
  });
  return out;
}

std::string design_key(const DesignPoint &dp) {
  std::ostringstream os;
  os << "t" << dp.tech_nm << "_" << to_lower(dp.device) << "_" << to_lower(dp.bitcell) << "_"
     << dp.rows << "x" << dp.cols << "_";
  switch (dp.mode) {
  case BitMode::Analog: os << "analog"; break;
  case BitMode::Digital: os << "d" << dp.bits; break;
  case BitMode::Unspecified: os << "unspec"; break;
  }
  os << "_p" << dp.partition.h_parts << "x" << dp.partition.v_parts;
  return os.str();
}

DesignPoint parse_design_key(const std::string &key) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : key) {
    if (c == '_') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  if (parts.size() != 6 || parts[0].size() < 2 || parts[0][0] != 't')
    throw ParseError("malformed design key: " + key);
  DesignPoint dp;
  auto parse_pair = [&](const std::string &s, char sep, int &a, int &b) {
    size_t x = s.find(sep);
    if (x == std::string::npos) throw ParseError("malformed design key: " + key);
    a = std::stoi(s.substr(0, x));
    b = std::stoi(s.substr(x + 1));
  };
  try {
    dp.tech_nm = std::stoi(parts[0].substr(1));
    dp.device = to_upper(parts[1]);
    dp.bitcell = to_upper(parts[2]);
    parse_pair(parts[3], 'x', dp.rows, dp.cols);
    const std::string &m = parts[4];
    if (m == "analog") {
      dp.mode = BitMode::Analog;
    } else if (m == "unspec") {
      dp.mode = BitMode::Unspecified;
    } else if (!m.empty() && m[0] == 'd') {
      dp.mode = BitMode::Digital;
      dp.bits = std::stoi(m.substr(1));
    } else {
      throw ParseError("malformed mode in design key: " + key);
    }
    if (parts[5].empty() || parts[5][0] != 'p')
      throw ParseError("malformed partition in design key: " + key);
    parse_pair(parts[5].substr(1), 'x', dp.partition.h_parts, dp.partition.v_parts);
  } catch (const ParseError &) {
    throw;
  } catch (const std::exception &) {
    throw ParseError("malformed design key: " + key);
  }
  dp.validate();
  return dp;
}

} // namespace xbar
