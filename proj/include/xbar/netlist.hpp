#pragma once

// Differential crossbar netlists: structured element-level description,
// generation from a conductance tile, SPICE emission and parsing.
//
// Dialect subset (extension .sp):
//   * comment                        -- header comments carry annotations
//   R<name> <n1> <n2> <ohms>
//   V<name> <n+> <n-> DC <volts>
//   .END
// Values accept SPICE magnitude suffixes T G MEG K M U N P F.
// Access switches are DC-linear on-resistances; the text encodes them as
// resistor cards preceded by "*switch <control-node>".

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "xbar/design_space.hpp"

namespace xbar {

enum class ElementKind { Resistor, VSource, Switch };

struct Element {
  ElementKind kind = ElementKind::Resistor;
  std::string name; // unique per netlist, includes the R/V prefix letter
  std::vector<std::string> nodes; // 2 nodes; Switch: {control, in, out}
  double value = 0.0; // ohms (Resistor/Switch on-resistance) or volts (VSource)

  bool operator==(const Element &) const = default;
};

struct Netlist {
  std::string title;
  std::vector<Element> elements;
  std::string ground_node = "0";
  std::map<std::string, std::string> annotations;

  const Element *find(const std::string &name) const;
  // Nodes held at 0 V by the readout (virtual-ground column sense nodes),
  // from the "vground" annotation (comma-separated).
  std::vector<std::string> virtual_ground_nodes() const;
};

struct ConductanceTile {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> g_pos; // row-major, siemens
  std::vector<double> g_neg;

  static ConductanceTile zeros(std::size_t rows, std::size_t cols);
  double &pos(std::size_t i, std::size_t j) { return g_pos[i * cols + j]; }
  double &neg(std::size_t i, std::size_t j) { return g_neg[i * cols + j]; }
  double pos(std::size_t i, std::size_t j) const { return g_pos[i * cols + j]; }
  double neg(std::size_t i, std::size_t j) const { return g_neg[i * cols + j]; }
};

struct GenerateOptions {
  double wire_r = 0.0;          // ohms per interconnect segment; 0 omits segments
  double vdd = 1.0;             // volts
  double access_resistance = 0.0; // ohms per access transistor; 0 = ideal switch
  int num_access_transistors = 1; // from the bitcell kind
  // device conductance window for annotation and range checks; 0 disables
  double g_min = 0.0;
  double g_max = 0.0;
};

// Expected element inventory for a generated netlist; static_check compares
// against the same formula.
struct ElementBudget {
  std::size_t memory_resistors = 0; // 2 * rows * cols
  std::size_t switches = 0;         // 2 * rows * cols * access transistors
  std::size_t wire_segments = 0;    // 2 * (rows*cols row-wise + rows*cols column-wise), 0 if wire_r == 0
  std::size_t sources = 0;          // 2 * rows (row drivers)
  std::size_t total() const { return memory_resistors + switches + wire_segments + sources; }
};

ElementBudget element_budget(std::size_t rows, std::size_t cols, int access_transistors,
                             bool with_wire_segments);

// Emits the differential array pair (polarities p and n).
// input_pattern holds the effective row drive voltages u_i = V_i - Vref;
// the positive array rows are driven at +u_i and the negative array rows at
// -u_i, so the differential column current at zero parasitics equals
// sum_i u_i * (g_pos[i][j] - g_neg[i][j]).
Netlist generate_crossbar_netlist(const DesignPoint &dp, const ConductanceTile &tile,
                                  const GenerateOptions &opts,
                                  const std::vector<double> &input_pattern);

std::string emit_spice(const Netlist &n);

Netlist parse_spice(const std::string &text);

// Structural equality: annotations, ground node and the name-keyed element
// sets must agree; element order is ignored.
bool structurally_equal(const Netlist &a, const Netlist &b, double value_tol = 0.0);

// One array of the differential pair (polarity 'p' or 'n'), e.g. for the
// per-array netlist-scale measurement. Shared annotations are kept; the
// vground list is filtered to the selected polarity.
Netlist single_polarity(const Netlist &n, char polarity);

// SPICE number formatting/parsing with magnitude suffixes.
std::string format_spice_value(double v);
double parse_spice_value(const std::string &token, int line = 0);

} // namespace xbar
