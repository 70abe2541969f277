#include "xbar/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "xbar/errors.hpp"

namespace xbar {

namespace {
// Stand-in resistance for an intentionally open cell (conductance 0).
constexpr double kOpenResistance = 1e12;
} // namespace

const Element *Netlist::find(const std::string &name) const {
  for (const Element &e : elements)
    if (e.name == name) return &e;
  return nullptr;
}

std::vector<std::string> Netlist::virtual_ground_nodes() const {
  std::vector<std::string> out;
  auto it = annotations.find("vground");
  if (it == annotations.end()) return out;
  std::string cur;
  for (char c : it->second) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

ConductanceTile ConductanceTile::zeros(std::size_t rows, std::size_t cols) {
  ConductanceTile t;
  t.rows = rows;
  t.cols = cols;
  t.g_pos.assign(rows * cols, 0.0);
  t.g_neg.assign(rows * cols, 0.0);
  return t;
}

ElementBudget element_budget(std::size_t rows, std::size_t cols, int access_transistors,
                             bool with_wire_segments) {
  ElementBudget b;
  b.memory_resistors = 2 * rows * cols;
  b.switches = 2 * rows * cols * static_cast<std::size_t>(access_transistors);
  // per polarity: cols segments per row plus rows segments per column
  b.wire_segments = with_wire_segments ? 2 * (rows * cols + rows * cols) : 0;
  b.sources = 2 * rows;
  return b;
}

Netlist generate_crossbar_netlist(const DesignPoint &dp, const ConductanceTile &tile,
                                  const GenerateOptions &opts,
                                  const std::vector<double> &input_pattern) {
  dp.validate();
  if (tile.rows != static_cast<std::size_t>(dp.rows) ||
      tile.cols != static_cast<std::size_t>(dp.cols))
    throw ContractError("tile shape " + std::to_string(tile.rows) + "x" +
                        std::to_string(tile.cols) + " does not match design point " +
                        std::to_string(dp.rows) + "x" + std::to_string(dp.cols));
  if (input_pattern.size() != static_cast<std::size_t>(dp.rows))
    throw ContractError("input pattern length " + std::to_string(input_pattern.size()) +
                        " does not match row count " + std::to_string(dp.rows));
  if (opts.wire_r < 0.0) throw ContractError("wire_r must be >= 0");
  if (opts.access_resistance < 0.0) throw ContractError("access_resistance must be >= 0");

  const std::size_t rows = tile.rows, cols = tile.cols;
  const bool wired = opts.wire_r > 0.0;

  auto check_range = [&](double g, std::size_t i, std::size_t j, char pol) {
    if (opts.g_min <= 0.0 && opts.g_max <= 0.0) return;
    const double slack = 1e-12 * opts.g_max;
    if (g < opts.g_min - slack || g > opts.g_max + slack) {
      std::ostringstream os;
      os << "conductance " << g << " S outside device range [" << opts.g_min << ", "
         << opts.g_max << "] at (" << i << ", " << j << ", " << pol << ")";
      throw ContractError(os.str());
    }
  };

  Netlist n;
  n.title = "crossbar pair " + design_key(dp);
  n.annotations["design_key"] = design_key(dp);
  n.annotations["polarity"] = "pn";
  n.annotations["rows"] = std::to_string(rows);
  n.annotations["cols"] = std::to_string(cols);
  n.annotations["wire_r"] = format_spice_value(opts.wire_r);
  // DC analysis only: wire capacitance is recorded for reference, not simulated.
  n.annotations["wire_c"] = "0";
  n.annotations["vdd"] = format_spice_value(opts.vdd);
  if (opts.g_min > 0.0) n.annotations["g_min"] = format_spice_value(opts.g_min);
  if (opts.g_max > 0.0) n.annotations["g_max"] = format_spice_value(opts.g_max);
  {
    std::string vg;
    for (char q : {'p', 'n'})
      for (std::size_t j = 0; j < cols; ++j) {
        if (!vg.empty()) vg += ',';
        vg += std::string(1, q) + "_sense_c" + std::to_string(j);
      }
    n.annotations["vground"] = vg;
  }

  for (char q : {'p', 'n'}) {
    const std::string qs(1, q);
    const double sign = (q == 'p') ? 1.0 : -1.0;
    const std::string gate = qs + "_gate";

    for (std::size_t i = 0; i < rows; ++i) {
      const std::string feed = qs + "_row" + std::to_string(i) + "_s0";
      n.elements.push_back({ElementKind::VSource, "V" + qs + "row" + std::to_string(i),
                            {feed, n.ground_node}, sign * input_pattern[i]});
      if (wired) {
        for (std::size_t k = 0; k < cols; ++k) {
          n.elements.push_back(
              {ElementKind::Resistor,
               "R" + qs + "wr_r" + std::to_string(i) + "_s" + std::to_string(k),
               {qs + "_row" + std::to_string(i) + "_s" + std::to_string(k),
                qs + "_row" + std::to_string(i) + "_s" + std::to_string(k + 1)},
               opts.wire_r});
        }
      }
      for (std::size_t j = 0; j < cols; ++j) {
        const std::string rc = "_r" + std::to_string(i) + "_c" + std::to_string(j);
        const std::string tap =
            wired ? qs + "_row" + std::to_string(i) + "_s" + std::to_string(j + 1) : feed;
        const std::string cell = qs + rc; // node between access device and memory cell
        std::string prev = tap;
        if (opts.num_access_transistors >= 2) {
          n.elements.push_back(
              {ElementKind::Switch, "R" + qs + "swa" + rc, {gate, prev, cell + "a"},
               opts.access_resistance});
          prev = cell + "a";
          n.elements.push_back({ElementKind::Switch, "R" + qs + "swb" + rc, {gate, prev, cell},
                                opts.access_resistance});
        } else {
          n.elements.push_back({ElementKind::Switch, "R" + qs + "sw" + rc, {gate, prev, cell},
                                opts.access_resistance});
        }
        const double g = (q == 'p') ? tile.pos(i, j) : tile.neg(i, j);
        if (g > 0.0) check_range(g, i, j, q);
        const double r = g > 0.0 ? 1.0 / g : kOpenResistance;
        const std::string col_node =
            wired ? qs + "_col" + std::to_string(j) + "_s" + std::to_string(i)
                  : qs + "_sense_c" + std::to_string(j);
        n.elements.push_back({ElementKind::Resistor, "R" + qs + "mem" + rc, {cell, col_node}, r});
      }
    }
    if (wired) {
      for (std::size_t j = 0; j < cols; ++j) {
        for (std::size_t i = 0; i < rows; ++i) {
          const std::string a = qs + "_col" + std::to_string(j) + "_s" + std::to_string(i);
          const std::string b = (i + 1 < rows)
                                    ? qs + "_col" + std::to_string(j) + "_s" + std::to_string(i + 1)
                                    : qs + "_sense_c" + std::to_string(j);
          n.elements.push_back(
              {ElementKind::Resistor,
               "R" + qs + "wc_c" + std::to_string(j) + "_s" + std::to_string(i), {a, b},
               opts.wire_r});
        }
      }
    }
  }
  return n;
}

std::string format_spice_value(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_spice_value(const std::string &token, int line) {
  if (token.empty()) throw ParseError("empty numeric value", line);
  double base = 0.0;
  const char *begin = token.data();
  const char *end = token.data() + token.size();
  auto res = std::from_chars(begin, end, base);
  if (res.ec != std::errc() || res.ptr == begin)
    throw ParseError("cannot parse numeric value '" + token + "'", line);
  std::string suffix(res.ptr, end);
  std::transform(suffix.begin(), suffix.end(), suffix.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (suffix.empty()) return base;
  if (suffix == "T") return base * 1e12;
  if (suffix == "G") return base * 1e9;
  if (suffix == "MEG") return base * 1e6;
  if (suffix == "K") return base * 1e3;
  if (suffix == "M") return base * 1e-3;
  if (suffix == "U") return base * 1e-6;
  if (suffix == "N") return base * 1e-9;
  if (suffix == "P") return base * 1e-12;
  if (suffix == "F") return base * 1e-15;
  throw ParseError("unknown magnitude suffix '" + suffix + "' in '" + token + "'", line);
}

std::string emit_spice(const Netlist &n) {
  std::ostringstream os;
  os << "* " << n.title << "\n";
  for (const auto &[k, v] : n.annotations) os << "* @" << k << "=" << v << "\n";
  for (const Element &e : n.elements) {
    switch (e.kind) {
    case ElementKind::Resistor:
      os << e.name << " " << e.nodes[0] << " " << e.nodes[1] << " " << format_spice_value(e.value)
         << "\n";
      break;
    case ElementKind::Switch:
      os << "*switch " << e.nodes[0] << "\n";
      os << e.name << " " << e.nodes[1] << " " << e.nodes[2] << " " << format_spice_value(e.value)
         << "\n";
      break;
    case ElementKind::VSource:
      os << e.name << " " << e.nodes[0] << " " << e.nodes[1] << " DC "
         << format_spice_value(e.value) << "\n";
      break;
    }
  }
  os << ".END\n";
  return os.str();
}

namespace {

std::vector<std::string> split_ws(const std::string &s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

} // namespace

Netlist parse_spice(const std::string &text) {
  Netlist n;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool saw_title = false;
  bool saw_end = false;
  std::string pending_switch_control;
  int pending_switch_line = 0;
  std::map<std::string, int> name_lines;

  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    if (saw_end) {
      if (line.find_first_not_of(" \t") != std::string::npos)
        throw ParseError("content after .END", lineno);
      continue;
    }
    if (line[0] == '*') {
      std::string body = line.substr(1);
      if (body.rfind("switch ", 0) == 0) {
        auto toks = split_ws(body);
        if (toks.size() != 2) throw ParseError("malformed *switch annotation", lineno);
        pending_switch_control = toks[1];
        pending_switch_line = lineno;
        continue;
      }
      // strip a single leading space of ordinary comments
      if (!body.empty() && body[0] == ' ') body = body.substr(1);
      if (body.rfind("@", 0) == 0) {
        size_t eq = body.find('=');
        if (eq == std::string::npos) throw ParseError("malformed annotation comment", lineno);
        n.annotations[body.substr(1, eq - 1)] = body.substr(eq + 1);
      } else if (!saw_title) {
        n.title = body;
        saw_title = true;
      }
      continue;
    }
    if (line[0] == '.') {
      std::string card = split_ws(line)[0];
      std::transform(card.begin(), card.end(), card.begin(),
                     [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
      if (card == ".END") {
        saw_end = true;
        continue;
      }
      throw ParseError("unsupported control card '" + card + "' at line " +
                           std::to_string(lineno),
                       lineno);
    }
    auto toks = split_ws(line);
    const char head = static_cast<char>(std::toupper(static_cast<unsigned char>(toks[0][0])));
    Element e;
    if (head == 'R') {
      if (toks.size() != 4) throw ParseError("resistor card expects 4 fields", lineno);
      e.name = toks[0];
      e.value = parse_spice_value(toks[3], lineno);
      if (!pending_switch_control.empty()) {
        if (pending_switch_line + 1 != lineno)
          throw ParseError("*switch annotation not adjacent to its card", lineno);
        if (e.value < 0.0) throw ParseError("negative switch on-resistance", lineno);
        e.kind = ElementKind::Switch;
        e.nodes = {pending_switch_control, toks[1], toks[2]};
        pending_switch_control.clear();
      } else {
        if (!(e.value > 0.0)) throw ParseError("non-positive resistance", lineno);
        e.kind = ElementKind::Resistor;
        e.nodes = {toks[1], toks[2]};
      }
    } else if (head == 'V') {
      if (!pending_switch_control.empty())
        throw ParseError("*switch annotation must precede a resistor card", lineno);
      if (toks.size() != 5) throw ParseError("voltage source card expects 5 fields", lineno);
      std::string dc = toks[3];
      std::transform(dc.begin(), dc.end(), dc.begin(),
                     [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
      if (dc != "DC") throw ParseError("only DC sources are supported", lineno);
      e.kind = ElementKind::VSource;
      e.name = toks[0];
      e.nodes = {toks[1], toks[2]};
      e.value = parse_spice_value(toks[4], lineno);
    } else {
      throw ParseError("unsupported element kind '" + std::string(1, toks[0][0]) +
                           "' at line " + std::to_string(lineno),
                       lineno);
    }
    auto [it, inserted] = name_lines.emplace(e.name, lineno);
    if (!inserted)
      throw ParseError("duplicate element name '" + e.name + "' (lines " +
                           std::to_string(it->second) + " and " + std::to_string(lineno) + ")",
                       lineno);
    n.elements.push_back(std::move(e));
  }
  if (!saw_end) throw ParseError("missing .END", lineno);
  return n;
}

bool structurally_equal(const Netlist &a, const Netlist &b, double value_tol) {
  if (a.title != b.title || a.ground_node != b.ground_node || a.annotations != b.annotations)
    return false;
  if (a.elements.size() != b.elements.size()) return false;
  std::map<std::string, const Element *> bmap;
  for (const Element &e : b.elements) bmap[e.name] = &e;
  for (const Element &e : a.elements) {
    auto it = bmap.find(e.name);
    if (it == bmap.end()) return false;
    const Element &o = *it->second;
    if (e.kind != o.kind || e.nodes != o.nodes) return false;
    const double scale = std::max({std::abs(e.value), std::abs(o.value), 1.0});
    if (std::abs(e.value - o.value) > value_tol * scale) return false;
  }
  return true;
}

Netlist single_polarity(const Netlist &n, char polarity) {
  if (polarity != 'p' && polarity != 'n')
    throw ContractError("polarity must be 'p' or 'n'");
  Netlist out;
  out.title = n.title + " (" + polarity + " array)";
  out.ground_node = n.ground_node;
  out.annotations = n.annotations;
  out.annotations["polarity"] = std::string(1, polarity);
  auto it = out.annotations.find("vground");
  if (it != out.annotations.end()) {
    std::string filtered;
    std::istringstream in(it->second);
    std::string node;
    while (std::getline(in, node, ','))
      if (!node.empty() && node[0] == polarity) {
        if (!filtered.empty()) filtered += ',';
        filtered += node;
      }
    it->second = filtered;
  }
  for (const Element &e : n.elements)
    if (e.name.size() > 1 && e.name[1] == polarity) out.elements.push_back(e);
  return out;
}

} // namespace xbar
