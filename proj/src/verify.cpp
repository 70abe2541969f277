#include "xbar/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "xbar/errors.hpp"

namespace xbar {

bool has_errors(const std::vector<Diagnostic> &diags) {
  return std::any_of(diags.begin(), diags.end(),
                     [](const Diagnostic &d) { return d.severity == Severity::Error; });
}

std::string fault_kind_name(FaultKind k) {
  switch (k) {
  case FaultKind::DropElement: return "drop_element";
  case FaultKind::ShortNodes: return "short_nodes";
  case FaultKind::OpenColumn: return "open_column";
  case FaultKind::OutOfRangeConductance: return "out_of_range_conductance";
  case FaultKind::DuplicateName: return "duplicate_name";
  case FaultKind::FloatingNode: return "floating_node";
  case FaultKind::WrongElementCount: return "wrong_element_count";
  case FaultKind::PolarityMixup: return "polarity_mixup";
  case FaultKind::SourceMisbind: return "source_misbind";
  case FaultKind::GroundDetach: return "ground_detach";
  }
  return "unknown";
}

namespace {

constexpr double kOpenResistance = 1e12;

// electrical terminals only; a switch's control node carries no current
std::vector<std::string> electrical_nodes(const Element &e) {
  if (e.kind == ElementKind::Switch) return {e.nodes[1], e.nodes[2]};
  return {e.nodes[0], e.nodes[1]};
}

double annotation_value(const Netlist &n, const std::string &key, double fallback) {
  auto it = n.annotations.find(key);
  if (it == n.annotations.end()) return fallback;
  return parse_spice_value(it->second);
}

bool is_memory_resistor(const Element &e) {
  return e.kind == ElementKind::Resistor && e.name.find("mem") != std::string::npos;
}

std::string ostr(double v) { return format_spice_value(v); }

} // namespace

std::vector<Diagnostic> static_check(const Netlist &n, const DesignPoint &dp,
                                     const DeviceRegistry &reg) {
  std::vector<Diagnostic> out;
  if (n.elements.empty()) {
    out.push_back({Severity::Error, diag::kElementCountMismatch, n.ground_node,
                   "netlist has no elements"});
    return out;
  }

  // unique names
  {
    std::unordered_map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < n.elements.size(); ++i) {
      auto [it, fresh] = seen.emplace(n.elements[i].name, i);
      if (!fresh)
        out.push_back({Severity::Error, diag::kDuplicateName, n.elements[i].name,
                       "element name used at positions " + std::to_string(it->second) + " and " +
                           std::to_string(i)});
    }
  }

  // ground presence + reachability
  std::unordered_map<std::string, std::vector<const Element *>> adjacency;
  std::set<std::string> all_nodes;
  for (const Element &e : n.elements)
    for (const std::string &node : electrical_nodes(e)) {
      adjacency[node].push_back(&e);
      all_nodes.insert(node);
    }
  if (!all_nodes.count(n.ground_node)) {
    out.push_back({Severity::Error, diag::kGroundDetached, n.elements.front().name,
                   "ground node '" + n.ground_node + "' is not referenced by any element"});
  } else {
    std::unordered_set<std::string> reached;
    std::queue<std::string> frontier;
    frontier.push(n.ground_node);
    reached.insert(n.ground_node);
    while (!frontier.empty()) {
      std::string node = frontier.front();
      frontier.pop();
      for (const Element *e : adjacency[node])
        for (const std::string &other : electrical_nodes(*e))
          if (reached.insert(other).second) frontier.push(other);
    }
    int reported = 0;
    for (const std::string &node : all_nodes) {
      if (reached.count(node)) continue;
      if (reported++ >= 10) {
        out.back().message += " (and more)";
        break;
      }
      out.push_back({Severity::Error, diag::kFloatingNode, node,
                     "node has no resistive path to ground"});
    }
  }

  // element inventory vs. the closed-form budget
  const double wire_r = annotation_value(n, "wire_r", 0.0);
  const BitcellKind &bc = reg.bitcell(dp.bitcell);
  const ElementBudget budget = element_budget(dp.rows, dp.cols, bc.num_access_transistors,
                                              wire_r > 0.0);
  std::size_t resistors = 0, switches = 0, sources = 0;
  for (const Element &e : n.elements) {
    if (e.kind == ElementKind::Resistor) ++resistors;
    else if (e.kind == ElementKind::Switch) ++switches;
    else ++sources;
  }
  auto first_of = [&](ElementKind k) -> std::string {
    for (const Element &e : n.elements)
      if (e.kind == k) return e.name;
    return n.elements.front().name;
  };
  const std::size_t want_resistors = budget.memory_resistors + budget.wire_segments;
  if (resistors != want_resistors)
    out.push_back({Severity::Error, diag::kElementCountMismatch, first_of(ElementKind::Resistor),
                   "resistor count " + std::to_string(resistors) + ", expected " +
                       std::to_string(want_resistors)});
  if (switches != budget.switches)
    out.push_back({Severity::Error, diag::kElementCountMismatch, first_of(ElementKind::Switch),
                   "switch count " + std::to_string(switches) + ", expected " +
                       std::to_string(budget.switches)});
  if (sources != budget.sources)
    out.push_back({Severity::Error, diag::kElementCountMismatch, first_of(ElementKind::VSource),
                   "source count " + std::to_string(sources) + ", expected " +
                       std::to_string(budget.sources)});

  // conductance window on memory cells; open cells (padding) are allowed
  const DeviceKind &dev = reg.device(dp.device);
  const double g_min = annotation_value(n, "g_min", dev.g_off());
  const double g_max = annotation_value(n, "g_max", dev.g_on());
  const double slack = 1e-9 * g_max;
  std::size_t pos_cells = 0, neg_cells = 0;
  for (const Element &e : n.elements) {
    if (!is_memory_resistor(e)) continue;
    if (e.name.rfind("Rp", 0) == 0) ++pos_cells;
    if (e.name.rfind("Rn", 0) == 0) ++neg_cells;
    if (e.value >= kOpenResistance * (1.0 - 1e-9)) continue;
    const double g = e.value > 0.0 ? 1.0 / e.value : std::numeric_limits<double>::infinity();
    if (g < g_min - slack || g > g_max + slack)
      out.push_back({Severity::Error, diag::kConductanceOutOfRange, e.name,
                     "conductance " + ostr(g) + " S outside [" + ostr(g_min) + ", " + ostr(g_max) +
                         "]"});
  }
  if (pos_cells == 0 || neg_cells == 0)
    out.push_back({Severity::Error, diag::kPolarityMissing, n.elements.front().name,
                   std::string("differential pair incomplete: missing the ") +
                       (pos_cells == 0 ? "positive" : "negative") + " array"});

  // every column reaches its sense node, every row its source
  for (char q : {'p', 'n'}) {
    const std::string qs(1, q);
    for (int j = 0; j < dp.cols; ++j) {
      const std::string sense = qs + "_sense_c" + std::to_string(j);
      if (!all_nodes.count(sense)) {
        const std::string cell = "R" + qs + "mem_r0_c" + std::to_string(j);
        out.push_back({Severity::Error, diag::kColumnNotSensed,
                       n.find(cell) ? cell : n.elements.front().name,
                       "column " + std::to_string(j) + " (" + qs +
                           ") has no connection to sense node " + sense});
      }
    }
    for (int i = 0; i < dp.rows; ++i) {
      const std::string name = "V" + qs + "row" + std::to_string(i);
      const std::string feed = qs + "_row" + std::to_string(i) + "_s0";
      const Element *src = n.find(name);
      bool ok = src && src->kind == ElementKind::VSource &&
                (src->nodes[0] == feed || src->nodes[1] == feed);
      if (!ok)
        out.push_back({Severity::Error, diag::kRowNotDriven,
                       src ? name : (all_nodes.count(feed) ? feed : n.elements.front().name),
                       "row " + std::to_string(i) + " (" + qs + ") is not driven at " + feed});
    }
  }
  return out;
}

std::vector<Diagnostic> dynamic_check(const Netlist &n, const DesignPoint &dp,
                                      const ConductanceTile &tile,
                                      const std::vector<std::vector<double>> &vectors,
                                      const VerifyOptions &opts) {
  std::vector<Diagnostic> out;
  const double wire_r = annotation_value(n, "wire_r", 0.0);
  const bool ideal = wire_r == 0.0 && annotation_value(n, "access_r", 0.0) == 0.0;

  LinearSystem sys;
  try {
    sys = build_system(n);
  } catch (const std::exception &e) {
    out.push_back({Severity::Error, diag::kSolveFailed, n.elements.front().name, e.what()});
    return out;
  }

  SolverOptions sopts = opts.solver;
  sopts.full_report = true;

  for (std::size_t v = 0; v < vectors.size(); ++v) {
    const std::vector<double> &u = vectors[v];
    if (u.size() != static_cast<std::size_t>(dp.rows))
      throw ContractError("test vector " + std::to_string(v) + " length " +
                          std::to_string(u.size()) + " does not match row count");
    std::vector<Element> sources = sys.sources;
    for (Element &s : sources) {
      for (int i = 0; i < dp.rows; ++i) {
        if (s.name == "Vprow" + std::to_string(i)) s.value = u[i];
        else if (s.name == "Vnrow" + std::to_string(i)) s.value = -u[i];
      }
    }
    sys.restamp_sources(sources);

    SolveReport rep;
    try {
      rep = solve(sys, sopts);
    } catch (const std::exception &e) {
      out.push_back({Severity::Error, diag::kSolveFailed, n.elements.front().name,
                     "vector " + std::to_string(v) + ": " + e.what()});
      continue;
    }

    const std::vector<double> ref = ideal_mac(u, tile);
    for (std::size_t j = 0; j < ref.size() && j < rep.column_currents.size(); ++j) {
      const double got = rep.column_currents[j];
      const double want = ref[j];
      // gross column current: the deviation scale that stays meaningful when
      // the differential nearly cancels
      double ideal_pos = 0.0, ideal_neg = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) {
        ideal_pos += std::abs(u[i]) * tile.pos(i, j);
        ideal_neg += std::abs(u[i]) * tile.neg(i, j);
      }
      const double gross = ideal_pos + ideal_neg;
      const std::string sense = "p_sense_c" + std::to_string(j);
      const double sign_floor = std::max(opts.current_tol_abs, 0.05 * gross);
      if (std::abs(got) > sign_floor && std::abs(want) > sign_floor &&
          std::signbit(got) != std::signbit(want))
        out.push_back({Severity::Error, diag::kSignMismatch, sense,
                       "vector " + std::to_string(v) + " column " + std::to_string(j) +
                           ": current " + ostr(got) + " A has the opposite sign of ideal " +
                           ostr(want) + " A"});
      // parasitics only attenuate each array's column current
      const bool magnitude_ok =
          ideal ||
          (std::abs(rep.column_currents_pos[j]) <=
               ideal_pos * (1.0 + opts.ideal_rel_tol) + opts.current_tol_abs &&
           std::abs(rep.column_currents_neg[j]) <=
               ideal_neg * (1.0 + opts.ideal_rel_tol) + opts.current_tol_abs);
      const double scale = ideal ? std::max(std::abs(want), opts.current_tol_abs)
                                 : std::max(gross, opts.current_tol_abs);
      const double rel = std::abs(got - want) / scale;
      const double bound = ideal ? opts.ideal_rel_tol : opts.parasitic_rel_bound;
      if (rel > bound || !magnitude_ok)
        out.push_back({Severity::Error, diag::kMacDeviation, sense,
                       "vector " + std::to_string(v) + " column " + std::to_string(j) +
                           ": current " + ostr(got) + " A deviates from ideal " + ostr(want) +
                           " A (relative " + ostr(rel) + ")"});
    }

    const double kcl = max_kcl_residual(sys, rep);
    if (kcl > opts.kcl_tol)
      out.push_back({Severity::Error, diag::kKclResidual, n.ground_node,
                     "vector " + std::to_string(v) + ": KCL residual " + ostr(kcl) +
                         " exceeds " + ostr(opts.kcl_tol)});
  }
  return out;
}

namespace {

std::size_t pick(std::mt19937_64 &rng, std::size_t count) {
  return std::uniform_int_distribution<std::size_t>(0, count - 1)(rng);
}

std::vector<std::size_t> indices_of(const Netlist &n, bool (*pred)(const Element &)) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n.elements.size(); ++i)
    if (pred(n.elements[i])) out.push_back(i);
  return out;
}

} // namespace

Netlist inject_fault(const Netlist &n, const FaultSpec &f) {
  Netlist m = n;
  std::mt19937_64 rng(f.seed ^ 0x9e3779b97f4a7c15ull);
  const auto mem = indices_of(m, [](const Element &e) { return is_memory_resistor(e); });

  switch (f.kind) {
  case FaultKind::DropElement: {
    if (m.elements.empty()) throw ContractError("drop_element needs at least one element");
    m.elements.erase(m.elements.begin() + pick(rng, m.elements.size()));
    return m;
  }
  case FaultKind::ShortNodes: {
    if (mem.empty()) throw ContractError("short_nodes needs a memory resistor");
    m.elements[mem[pick(rng, mem.size())]].value = 0.0;
    return m;
  }
  case FaultKind::OpenColumn: {
    const int cols = static_cast<int>(annotation_value(m, "cols", 0.0));
    if (cols <= 0) throw ContractError("open_column needs the cols annotation");
    const char q = pick(rng, 2) ? 'p' : 'n';
    const std::string sense = std::string(1, q) + "_sense_c" + std::to_string(pick(rng, cols));
    auto incident = [&](const Element &e) {
      for (const std::string &node : electrical_nodes(e))
        if (node == sense) return true;
      return false;
    };
    const auto before = m.elements.size();
    std::erase_if(m.elements, incident);
    if (m.elements.size() == before)
      throw ContractError("open_column: no element touches " + sense);
    return m;
  }
  case FaultKind::OutOfRangeConductance: {
    if (mem.empty()) throw ContractError("out_of_range_conductance needs a memory resistor");
    const double g_max = annotation_value(m, "g_max", 0.0);
    if (g_max <= 0.0) throw ContractError("out_of_range_conductance needs the g_max annotation");
    m.elements[mem[pick(rng, mem.size())]].value = 0.1 / g_max; // 10x the device window
    return m;
  }
  case FaultKind::DuplicateName: {
    if (m.elements.size() < 2) throw ContractError("duplicate_name needs two elements");
    const std::size_t a = pick(rng, m.elements.size());
    std::size_t b = pick(rng, m.elements.size() - 1);
    if (b >= a) ++b;
    m.elements[b].name = m.elements[a].name;
    return m;
  }
  case FaultKind::FloatingNode: {
    m.elements.push_back({ElementKind::Resistor, "Rorphan" + std::to_string(f.seed),
                          {"orphan_a", "orphan_b"}, 1e3});
    return m;
  }
  case FaultKind::WrongElementCount: {
    if (m.elements.empty()) throw ContractError("wrong_element_count needs an existing node");
    const Element &host = m.elements[pick(rng, m.elements.size())];
    m.elements.push_back({ElementKind::Resistor, "Rextra" + std::to_string(f.seed),
                          {electrical_nodes(host)[0], m.ground_node}, 1e6});
    return m;
  }
  case FaultKind::PolarityMixup: {
    bool swapped = false;
    for (Element &e : m.elements) {
      if (!is_memory_resistor(e) || e.name.rfind("Rpmem", 0) != 0) continue;
      Element *twin = nullptr;
      const std::string other = "Rnmem" + e.name.substr(5);
      for (Element &c : m.elements)
        if (c.name == other) {
          twin = &c;
          break;
        }
      if (!twin) continue;
      std::swap(e.value, twin->value);
      swapped = true;
    }
    if (!swapped) throw ContractError("polarity_mixup needs matching differential cell pairs");
    return m;
  }
  case FaultKind::SourceMisbind: {
    std::vector<std::size_t> sources;
    for (std::size_t i = 0; i < m.elements.size(); ++i)
      if (m.elements[i].kind == ElementKind::VSource) sources.push_back(i);
    if (sources.empty()) throw ContractError("source_misbind needs a voltage source");
    Element &src = m.elements[sources[pick(rng, sources.size())]];
    for (std::string &node : src.nodes) {
      if (node == m.ground_node) continue;
      if (!node.empty() && (node[0] == 'p' || node[0] == 'n')) {
        node[0] = node[0] == 'p' ? 'n' : 'p'; // bind to the opposite array's feed
        return m;
      }
    }
    throw ContractError("source_misbind: source terminal is not a polarity feed node");
  }
  case FaultKind::GroundDetach: {
    bool touched = false;
    for (Element &e : m.elements)
      for (std::string &node : e.nodes)
        if (node == m.ground_node) {
          node = "gnd_detached";
          touched = true;
        }
    if (!touched) throw ContractError("ground_detach: nothing is tied to ground");
    return m;
  }
  }
  throw ContractError("unknown fault kind");
}

Netlist apply_fixups(const Netlist &n, const std::vector<Diagnostic> &diags) {
  Netlist m = n;
  for (const Diagnostic &d : diags) {
    if (d.code == diag::kDuplicateName) {
      int suffix = 0;
      bool first = true;
      for (Element &e : m.elements) {
        if (e.name != d.element_or_node) continue;
        if (first) {
          first = false;
          continue;
        }
        e.name += "_fix" + std::to_string(suffix++);
      }
    } else if (d.code == diag::kGroundDetached) {
      // sources are grounded on one side by construction; restore the tie
      for (Element &e : m.elements)
        if (e.kind == ElementKind::VSource) e.nodes[1] = m.ground_node;
    }
  }
  return m;
}

LoopResult verification_loop(const DesignPoint &dp, const ConductanceTile &tile,
                             const NetlistGenerator &generator, const DeviceRegistry &reg,
                             const std::vector<std::vector<double>> &vectors, int max_rounds,
                             const VerifyOptions &opts) {
  if (max_rounds < 1) throw ContractError("max_rounds must be >= 1");
  LoopResult result;
  std::vector<Diagnostic> previous;
  for (int round = 1; round <= max_rounds; ++round) {
    Netlist candidate = generator(round, previous);
    std::vector<Diagnostic> diags = static_check(candidate, dp, reg);
    if (!has_errors(diags)) {
      auto dyn = dynamic_check(candidate, dp, tile, vectors, opts);
      diags.insert(diags.end(), dyn.begin(), dyn.end());
    }
    result.history.push_back(diags);
    result.rounds_used = round;
    if (!has_errors(diags)) {
      result.accepted = true;
      result.netlist = std::move(candidate);
      return result;
    }
    previous = std::move(diags);
  }
  return result;
}

} // namespace xbar
