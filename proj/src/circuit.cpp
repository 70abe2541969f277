#include "xbar/circuit.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "xbar/errors.hpp"

namespace xbar {

std::vector<double> ideal_mac(const std::vector<double> &v, const ConductanceTile &tile) {
  if (v.size() != tile.rows)
    throw ContractError("input length " + std::to_string(v.size()) +
                        " does not match tile rows " + std::to_string(tile.rows));
  std::vector<double> out(tile.cols, 0.0);
  for (std::size_t i = 0; i < tile.rows; ++i) {
    const double vi = v[i];
    if (vi == 0.0) continue;
    for (std::size_t j = 0; j < tile.cols; ++j)
      out[j] += vi * (tile.pos(i, j) - tile.neg(i, j));
  }
  return out;
}

double ideal_power(const std::vector<double> &v, const ConductanceTile &tile) {
  if (v.size() != tile.rows)
    throw ContractError("input length does not match tile rows");
  double p = 0.0;
  for (std::size_t i = 0; i < tile.rows; ++i) {
    const double v2 = v[i] * v[i];
    if (v2 == 0.0) continue;
    for (std::size_t j = 0; j < tile.cols; ++j)
      p += v2 * (tile.pos(i, j) + tile.neg(i, j));
  }
  return p;
}

namespace {

// Union-find over node names for zero-resistance merging.
class NodeSets {
public:
  std::string find(const std::string &x) {
    auto it = parent_.find(x);
    if (it == parent_.end()) {
      parent_[x] = x;
      return x;
    }
    if (it->second == x) return x;
    std::string root = find(it->second);
    parent_[x] = root;
    return root;
  }
  void unite(const std::string &a, const std::string &b) {
    std::string ra = find(a), rb = find(b);
    if (ra != rb) parent_[std::max(ra, rb)] = std::min(ra, rb);
  }
  const std::unordered_map<std::string, std::string> &raw() const { return parent_; }

private:
  std::unordered_map<std::string, std::string> parent_;
};

} // namespace

const std::string &LinearSystem::rep(const std::string &node) const {
  auto it = alias.find(node);
  return it == alias.end() ? node : it->second;
}

void LinearSystem::restamp_sources(const std::vector<Element> &new_sources) {
  known_voltage.clear();
  for (const std::string &vg : sense_pos) known_voltage[rep(vg)] = 0.0;
  for (const std::string &vg : sense_neg) known_voltage[rep(vg)] = 0.0;
  known_voltage[rep("0")] = 0.0;
  for (const Element &s : new_sources) {
    const bool plus_grounded = s.nodes[0] == "0";
    const std::string &node = plus_grounded ? s.nodes[1] : s.nodes[0];
    const double v = plus_grounded ? -s.value : s.value;
    known_voltage[rep(node)] = v;
  }
  sources = new_sources;
  current_vector.setZero(dimension());
  for (const StampedElement &e : stamped) {
    if (e.shorted || e.node_a == e.node_b) continue;
    auto ia = node_index.find(e.node_a);
    auto ib = node_index.find(e.node_b);
    const bool a_known = ia == node_index.end();
    const bool b_known = ib == node_index.end();
    if (!a_known && b_known) current_vector[ia->second] += e.conductance * known_voltage.at(e.node_b);
    if (a_known && !b_known) current_vector[ib->second] += e.conductance * known_voltage.at(e.node_a);
  }
}

LinearSystem build_system(const Netlist &n) {
  LinearSystem sys;

  NodeSets sets;
  sets.find(n.ground_node);
  std::vector<std::pair<const Element *, bool>> resistive; // element, is_short
  for (const Element &e : n.elements) {
    switch (e.kind) {
    case ElementKind::Resistor:
    case ElementKind::Switch: {
      const std::string &a = e.kind == ElementKind::Switch ? e.nodes[1] : e.nodes[0];
      const std::string &b = e.kind == ElementKind::Switch ? e.nodes[2] : e.nodes[1];
      if (e.value < 0.0) throw ContractError("negative resistance on element " + e.name);
      sets.find(a);
      sets.find(b);
      const bool is_short = e.value == 0.0;
      if (is_short) sets.unite(a, b);
      resistive.push_back({&e, is_short});
      break;
    }
    case ElementKind::VSource:
      if (e.nodes[0] != "0" && e.nodes[1] != "0")
        throw SolveError("voltage source " + e.name +
                         " must have one terminal at ground for nodal reduction");
      sets.find(e.nodes[0]);
      sets.find(e.nodes[1]);
      sys.sources.push_back(e);
      break;
    }
  }

  // resolve aliases for every seen node
  for (const auto &[node, parent] : sets.raw()) {
    std::string r = sets.find(node);
    if (r != node) sys.alias[node] = r;
  }
  auto rep = [&](const std::string &x) { return sets.find(x); };

  // known voltages: ground, sense nodes, source terminals
  std::map<std::string, double> known;
  known[rep(n.ground_node)] = 0.0;
  for (const std::string &vg : n.virtual_ground_nodes()) {
    sets.find(vg);
    const std::string r = rep(vg);
    auto it = known.find(r);
    if (it != known.end() && it->second != 0.0)
      throw SolveError("sense node " + vg + " shorted to a driven node");
    known[r] = 0.0;
  }
  for (const Element &s : sys.sources) {
    const bool plus_grounded = s.nodes[0] == "0";
    const std::string &node = plus_grounded ? s.nodes[1] : s.nodes[0];
    const double v = plus_grounded ? -s.value : s.value;
    const std::string r = rep(node);
    auto it = known.find(r);
    if (it != known.end() && it->second != v)
      throw SolveError("conflicting voltages on shorted node " + node + " via source " + s.name);
    known[r] = v;
  }
  sys.known_voltage = known;

  // sense column metadata (polarity + column index from the node name)
  {
    auto vgs = n.virtual_ground_nodes();
    std::size_t max_col = 0;
    bool any = false;
    for (const std::string &vg : vgs) {
      auto pos = vg.find("_sense_c");
      if (pos == std::string::npos) continue;
      max_col = std::max(max_col, static_cast<std::size_t>(std::stoul(vg.substr(pos + 8))));
      any = true;
    }
    if (any) {
      sys.sense_pos.assign(max_col + 1, "");
      sys.sense_neg.assign(max_col + 1, "");
      for (const std::string &vg : vgs) {
        auto pos = vg.find("_sense_c");
        if (pos == std::string::npos) continue;
        std::size_t j = std::stoul(vg.substr(pos + 8));
        if (vg[0] == 'p') sys.sense_pos[j] = vg;
        else if (vg[0] == 'n') sys.sense_neg[j] = vg;
      }
    }
  }

  // index unknown representatives
  for (const auto &[node, parent] : sets.raw()) {
    const std::string r = sets.find(node);
    if (r == node && known.find(r) == known.end() && !sys.node_index.count(r))
      sys.node_index[r] = 0;
  }
  // control nodes of switches are not electrical; drop them if they only
  // appear as controls
  {
    std::unordered_map<std::string, bool> electrical;
    for (const auto &[eptr, is_short] : resistive) {
      const Element &e = *eptr;
      const std::string &a = e.kind == ElementKind::Switch ? e.nodes[1] : e.nodes[0];
      const std::string &b = e.kind == ElementKind::Switch ? e.nodes[2] : e.nodes[1];
      electrical[rep(a)] = true;
      electrical[rep(b)] = true;
    }
    for (const Element &s : sys.sources) {
      electrical[rep(s.nodes[0])] = true;
      electrical[rep(s.nodes[1])] = true;
    }
    for (auto it = sys.node_index.begin(); it != sys.node_index.end();) {
      if (!electrical.count(it->first)) it = sys.node_index.erase(it);
      else ++it;
    }
  }
  int idx = 0;
  for (auto &[node, i] : sys.node_index) i = idx++;

  // stamp
  const int dim = sys.dimension();
  std::vector<Eigen::Triplet<double>> trips;
  sys.current_vector.setZero(dim);
  for (const auto &[eptr, is_short] : resistive) {
    const Element &e = *eptr;
    const std::string &a0 = e.kind == ElementKind::Switch ? e.nodes[1] : e.nodes[0];
    const std::string &b0 = e.kind == ElementKind::Switch ? e.nodes[2] : e.nodes[1];
    StampedElement se;
    se.name = e.name;
    se.node_a = rep(a0);
    se.node_b = rep(b0);
    se.shorted = is_short;
    se.conductance = is_short ? 0.0 : 1.0 / e.value;
    sys.stamped.push_back(se);
    if (is_short || se.node_a == se.node_b) continue;
    auto ia = sys.node_index.find(se.node_a);
    auto ib = sys.node_index.find(se.node_b);
    const double g = se.conductance;
    if (ia != sys.node_index.end()) trips.emplace_back(ia->second, ia->second, g);
    if (ib != sys.node_index.end()) trips.emplace_back(ib->second, ib->second, g);
    if (ia != sys.node_index.end() && ib != sys.node_index.end()) {
      trips.emplace_back(ia->second, ib->second, -g);
      trips.emplace_back(ib->second, ia->second, -g);
    } else if (ia != sys.node_index.end()) {
      sys.current_vector[ia->second] += g * known.at(se.node_b);
    } else if (ib != sys.node_index.end()) {
      sys.current_vector[ib->second] += g * known.at(se.node_a);
    }
  }
  sys.conductance_matrix.resize(dim, dim);
  sys.conductance_matrix.setFromTriplets(trips.begin(), trips.end());

  for (int i = 0; i < static_cast<int>(sys.stamped.size()); ++i) {
    const StampedElement &se = sys.stamped[i];
    if (se.shorted || se.node_a == se.node_b) continue;
    sys.incident[se.node_a].push_back(i);
    sys.incident[se.node_b].push_back(i);
  }

  // island check: every unknown must reach a known node through conductances
  {
    std::unordered_map<std::string, std::vector<std::string>> adj;
    for (const StampedElement &se : sys.stamped) {
      if (se.shorted || se.node_a == se.node_b) continue;
      adj[se.node_a].push_back(se.node_b);
      adj[se.node_b].push_back(se.node_a);
    }
    std::unordered_map<std::string, bool> reached;
    std::vector<std::string> stack;
    for (const auto &[r, v] : known) {
      reached[r] = true;
      stack.push_back(r);
    }
    while (!stack.empty()) {
      std::string cur = stack.back();
      stack.pop_back();
      for (const std::string &nb : adj[cur])
        if (!reached[nb]) {
          reached[nb] = true;
          stack.push_back(nb);
        }
    }
    std::string island;
    int count = 0;
    for (const auto &[node, i] : sys.node_index)
      if (!reached[node]) {
        if (!island.empty()) island += ", ";
        if (count++ < 8) island += node;
      }
    if (count > 0)
      throw SolveError("isolated island with no path to ground: " + island +
                       (count > 8 ? " (+" + std::to_string(count - 8) + " more)" : ""));
  }
  return sys;
}

namespace {

SolveReport finalize_report(const LinearSystem &sys, const Eigen::VectorXd &x, int iterations,
                            bool full_report) {
  SolveReport rep;
  rep.iterations = iterations;

  Eigen::VectorXd r = sys.conductance_matrix * x - sys.current_vector;
  const double bnorm = sys.current_vector.norm();
  rep.residual_norm = bnorm > 0.0 ? r.norm() / bnorm : r.norm();

  auto voltage_of_rep = [&](const std::string &r0) {
    auto ik = sys.known_voltage.find(r0);
    if (ik != sys.known_voltage.end()) return ik->second;
    auto iu = sys.node_index.find(r0);
    if (iu != sys.node_index.end()) return x[iu->second];
    return 0.0;
  };
  if (full_report) {
    // every node seen anywhere, aliases resolved
    for (const auto &[node, r0] : sys.alias) rep.node_voltages[node] = voltage_of_rep(r0);
    for (const auto &[node, i] : sys.node_index) rep.node_voltages[node] = x[i];
    for (const auto &[node, v] : sys.known_voltage) rep.node_voltages[node] = v;
    for (const StampedElement &se : sys.stamped) {
      if (!rep.node_voltages.count(se.node_a))
        rep.node_voltages[se.node_a] = voltage_of_rep(se.node_a);
      if (!rep.node_voltages.count(se.node_b))
        rep.node_voltages[se.node_b] = voltage_of_rep(se.node_b);
    }
  }

  // current delivered into the network at a given representative
  auto injected_current = [&](const std::string &r0) {
    double out = 0.0;
    const double v0 = voltage_of_rep(r0);
    auto it = sys.incident.find(r0);
    if (it == sys.incident.end()) return out;
    for (int i : it->second) {
      const StampedElement &se = sys.stamped[i];
      const std::string &other = se.node_a == r0 ? se.node_b : se.node_a;
      out += se.conductance * (v0 - voltage_of_rep(other));
    }
    return out;
  };

  for (const Element &s : sys.sources) {
    const bool plus_grounded = s.nodes[0] == "0";
    const std::string &node = plus_grounded ? s.nodes[1] : s.nodes[0];
    const std::string r0 = sys.rep(node);
    const double v = sys.known_voltage.at(r0);
    const double i = injected_current(r0);
    rep.source_currents[s.name] = plus_grounded ? -i : i;
    rep.total_power += v * i;
  }

  const std::size_t ncols = sys.sense_pos.size();
  if (ncols > 0) {
    rep.column_currents_pos.assign(ncols, 0.0);
    rep.column_currents_neg.assign(ncols, 0.0);
    rep.column_currents.assign(ncols, 0.0);
    for (std::size_t j = 0; j < ncols; ++j) {
      if (!sys.sense_pos[j].empty())
        rep.column_currents_pos[j] = -injected_current(sys.rep(sys.sense_pos[j]));
      if (!sys.sense_neg[j].empty())
        rep.column_currents_neg[j] = -injected_current(sys.rep(sys.sense_neg[j]));
      // negative rows are driven at -u, so the differential current is the sum
      rep.column_currents[j] = rep.column_currents_pos[j] + rep.column_currents_neg[j];
    }
  }
  return rep;
}

Eigen::VectorXd solve_vector(const LinearSystem &sys, const SolverOptions &opts, int *iterations) {
  const int dim = sys.dimension();
  *iterations = 0;
  if (dim == 0) return Eigen::VectorXd();
  if (dim <= opts.direct_threshold) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> llt(sys.conductance_matrix);
    if (llt.info() != Eigen::Success)
      throw SolveError("singular factorization of the nodal system");
    return llt.solve(sys.current_vector);
  }
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(opts.tol);
  const int max_iter =
      opts.max_iter > 0 ? opts.max_iter : static_cast<int>(20.0 * std::sqrt(double(dim))) + 1;
  cg.setMaxIterations(max_iter);
  cg.compute(sys.conductance_matrix);
  Eigen::VectorXd x = cg.solve(sys.current_vector);
  *iterations = static_cast<int>(cg.iterations());
  if (cg.info() != Eigen::Success && cg.error() > opts.tol)
    throw SolveError("conjugate gradient did not converge after " + std::to_string(max_iter) +
                     " iterations (residual " + std::to_string(cg.error()) + ")");
  return x;
}

} // namespace

SolveReport solve(const LinearSystem &sys, const SolverOptions &opts) {
  int iters = 0;
  Eigen::VectorXd x = solve_vector(sys, opts, &iters);
  SolveReport rep = finalize_report(sys, x, iters, opts.full_report);
  if (rep.residual_norm > opts.tol && sys.dimension() > 0)
    throw SolveError("solve residual " + std::to_string(rep.residual_norm) +
                     " above tolerance " + std::to_string(opts.tol));
  return rep;
}

SolveReport solve_netlist(const Netlist &n, const SolverOptions &opts) {
  return solve(build_system(n), opts);
}

PatternSolver::PatternSolver(const Netlist &n, const SolverOptions &opts)
    : opts_(opts), sys_(build_system(n)) {
  auto it = n.annotations.find("rows");
  rows_ = it != n.annotations.end() ? std::stoi(it->second) : 0;
  it = n.annotations.find("cols");
  cols_ = it != n.annotations.end() ? std::stoi(it->second) : 0;
  vground_ = n.virtual_ground_nodes();
  use_direct_ = sys_.dimension() <= opts_.direct_threshold;
  if (use_direct_ && sys_.dimension() > 0) {
    direct_.compute(sys_.conductance_matrix);
    if (direct_.info() != Eigen::Success)
      throw SolveError("singular factorization of the nodal system");
  }
}

SolveReport PatternSolver::solve_pattern(const std::vector<double> &pattern) {
  if (static_cast<int>(pattern.size()) != rows_)
    throw ContractError("pattern length does not match netlist rows");
  std::vector<Element> srcs = sys_.sources;
  for (Element &s : srcs) {
    // names are V{p|n}row{i}
    if (s.name.size() < 6 || s.name[0] != 'V') continue;
    const char q = s.name[1];
    const std::size_t i = std::stoul(s.name.substr(5));
    if (i >= pattern.size()) throw ContractError("source row index out of range: " + s.name);
    s.value = (q == 'p' ? 1.0 : -1.0) * pattern[i];
  }
  sys_.restamp_sources(srcs);
  int iters = 0;
  Eigen::VectorXd x;
  if (sys_.dimension() == 0) {
    x = Eigen::VectorXd();
  } else if (use_direct_) {
    x = direct_.solve(sys_.current_vector);
  } else {
    x = solve_vector(sys_, opts_, &iters);
  }
  SolveReport rep = finalize_report(sys_, x, iters, opts_.full_report);
  if (rep.residual_norm > opts_.tol && sys_.dimension() > 0)
    throw SolveError("solve residual above tolerance");
  return rep;
}

double average_power(const Netlist &n, const std::vector<std::vector<double>> &patterns,
                     const SolverOptions &opts) {
  if (patterns.empty()) throw ContractError("average_power requires at least one pattern");
  PatternSolver solver(n, opts);
  double sum = 0.0;
  for (std::size_t k = 0; k < patterns.size(); ++k) {
    try {
      sum += solver.solve_pattern(patterns[k]).total_power;
    } catch (const SolveError &e) {
      throw SolveError("pattern " + std::to_string(k) + ": " + e.what());
    }
  }
  return sum / static_cast<double>(patterns.size());
}

double dac_quantize(double x, int n_bits, double vdd) {
  if (n_bits < 1) throw ContractError("dac_quantize requires n_bits >= 1");
  if (!(x >= 0.0 && x <= 1.0))
    throw ContractError("dac_quantize input " + std::to_string(x) + " outside [0,1]");
  const double levels = std::ldexp(1.0, n_bits) - 1.0; // 2^n - 1 steps
  return std::round(x * levels) / levels * vdd;
}

double max_kcl_residual(const LinearSystem &sys, const SolveReport &rep) {
  double worst = 0.0;
  for (const auto &[node, idx] : sys.node_index) {
    double net = 0.0, scale = 0.0;
    const double v0 = rep.node_voltages.at(node);
    auto it = sys.incident.find(node);
    if (it == sys.incident.end()) continue;
    for (int i : it->second) {
      const StampedElement &se = sys.stamped[i];
      const std::string &other = se.node_a == node ? se.node_b : se.node_a;
      const double term = se.conductance * (v0 - rep.node_voltages.at(other));
      net += term;
      scale += std::abs(term);
    }
    if (scale > 0.0) worst = std::max(worst, std::abs(net) / scale);
  }
  return worst;
}

} // namespace xbar
