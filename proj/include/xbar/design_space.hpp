#pragma once

// Configuration grid for crossbar design points: technology node, memory
// device, bitcell, array size, bit mode and array partitioning.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xbar/toml.hpp"

namespace xbar {

struct TechNode {
  int feature_size_nm = 0; // e.g. 7, 9, 14, 20
  double wire_r_per_segment = 0.0; // ohms, interconnect segment between adjacent cells

  bool operator==(const TechNode &) const = default;
};

struct DeviceKind {
  std::string name; // MRAM, RRAM, PCM, CBRAM (extensible)
  double r_on = 0.0;  // ohms
  double r_off = 0.0; // ohms

  double g_on() const { return 1.0 / r_on; }
  double g_off() const { return 1.0 / r_off; }
  void validate() const;
};

struct BitcellKind {
  std::string name; // 1T1R, 2T1R
  int num_access_transistors = 1;
  double access_resistance = 0.0; // ohms per selected transistor
  double cell_area_factor = 1.0;  // dimensionless multiplier on cell area
  void validate() const;
};

// Unspecified is used for ingested reference rows whose bit resolution is
// not recorded; the enumerator never produces it.
enum class BitMode { Analog, Digital, Unspecified };

std::string bit_mode_name(BitMode m);
BitMode bit_mode_from_name(const std::string &s);

struct Partition {
  int h_parts = 1;
  int v_parts = 1;
  bool operator==(const Partition &) const = default;
  auto operator<=>(const Partition &) const = default;
};

struct DesignPoint {
  int tech_nm = 7;
  std::string device;  // DeviceKind name
  std::string bitcell; // BitcellKind name
  int rows = 16;
  int cols = 16;
  BitMode mode = BitMode::Analog;
  int bits = 0; // valid iff mode == Digital
  Partition partition{1, 1};

  bool operator==(const DesignPoint &) const = default;
  void validate() const;
};

// Registry of tech nodes, devices and bitcells, read from devices.toml or
// built from compiled-in defaults. Defaults other than the four paper tech
// nodes are literature-typical values, not paper data.
class DeviceRegistry {
public:
  static DeviceRegistry defaults();
  static DeviceRegistry from_toml(const toml::Table &t);
  static DeviceRegistry from_file(const std::string &path);

  const TechNode &tech(int feature_size_nm) const;
  const DeviceKind &device(const std::string &name) const;
  const BitcellKind &bitcell(const std::string &name) const;

  std::vector<int> tech_nodes() const;
  std::vector<std::string> device_names() const;
  std::vector<std::string> bitcell_names() const;

  void add_tech(TechNode t) { techs_[t.feature_size_nm] = t; }
  void add_device(DeviceKind d);
  void add_bitcell(BitcellKind b);

private:
  std::map<int, TechNode> techs_;
  std::map<std::string, DeviceKind> devices_;
  std::map<std::string, BitcellKind> bitcells_;
};

// Axis lists for grid enumeration. Every list must be non-empty.
struct GridSpec {
  std::vector<int> tech_nm;
  std::vector<std::string> devices;
  std::vector<std::string> bitcells;
  std::vector<int> sizes; // square arrays: rows = cols = size
  bool include_analog = true;
  std::vector<int> digital_bits; // one design point per entry

  static GridSpec defaults();
  static GridSpec from_toml(const toml::Table &t);
  static GridSpec from_file(const std::string &path);
};

// Cartesian product over (tech, device, bitcell, size, mode), canonical
// lexicographic order in that axis order, Analog before Digital bits.
std::vector<DesignPoint> enumerate_grid(const GridSpec &spec, const DeviceRegistry &reg);

// Canonical identifier, usable as a file name, e.g.
// "t7_pcm_1t1r_64x64_analog_p1x1" or "t9_mram_2t1r_16x16_d4_p1x1".
std::string design_key(const DesignPoint &dp);

// Inverse of design_key. Device/bitcell names come back lower-case and are
// matched case-insensitively against the registry by callers.
DesignPoint parse_design_key(const std::string &key);

std::string to_lower(std::string s);

} // namespace xbar
