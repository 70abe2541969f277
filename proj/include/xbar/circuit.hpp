#pragma once

// DC evaluation of crossbar netlists: closed-form ideal MAC, nodal analysis
// with parasitics (sparse direct below a size threshold, preconditioned CG
// above), and average power accounting.
//
// Voltage sources must have one terminal at ground; they are eliminated as
// known-voltage nodes, which keeps the reduced system symmetric positive
// definite. Column sense nodes (the "vground" annotation) are held at 0 V.

#include <Eigen/Sparse>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "xbar/netlist.hpp"

namespace xbar {

struct SolverOptions {
  double tol = 1e-10;        // relative residual
  int max_iter = 0;          // 0: 20 * sqrt(dimension)
  int direct_threshold = 5000; // unknown count at which CG takes over
  bool full_report = true;   // false skips the per-node voltage map (sweeps)
};

// Resistive element after short-merging, endpoints are supernode reps.
struct StampedElement {
  std::string name;
  std::string node_a;
  std::string node_b;
  double conductance = 0.0;
  bool shorted = false; // zero-resistance element merged away
};

struct LinearSystem {
  Eigen::SparseMatrix<double> conductance_matrix; // unknown x unknown, SPD
  Eigen::VectorXd current_vector;                 // Norton injections from known nodes
  std::map<std::string, int> node_index;          // unknown representative -> row
  std::map<std::string, std::string> alias;       // node -> supernode representative
  std::map<std::string, double> known_voltage;    // representative -> fixed volts
  std::vector<StampedElement> stamped;            // all resistive elements
  std::vector<Element> sources;                   // voltage source elements
  std::vector<std::string> sense_pos;             // per-column sense nodes, may be empty
  std::vector<std::string> sense_neg;
  std::unordered_map<std::string, std::vector<int>> incident; // rep -> stamped indices

  int dimension() const { return static_cast<int>(node_index.size()); }
  const std::string &rep(const std::string &node) const;
  // Rebuilds current_vector and known_voltage after changing source values.
  void restamp_sources(const std::vector<Element> &new_sources);
};

struct SolveReport {
  std::map<std::string, double> node_voltages; // every node, aliases resolved
  std::vector<double> column_currents;         // differential amperes per column pair
  std::vector<double> column_currents_pos;
  std::vector<double> column_currents_neg;
  std::map<std::string, double> source_currents; // amperes delivered into the network
  double total_power = 0.0;                      // watts, sum of V*I over sources
  double residual_norm = 0.0;
  int iterations = 0; // 0 for the direct path
};

// I_j = sum_i v[i] * (g_pos[i][j] - g_neg[i][j]); no network effects.
std::vector<double> ideal_mac(const std::vector<double> &v, const ConductanceTile &tile);

// Power drawn by the ideal (zero-parasitic, ideal-switch) network:
// P = sum_ij v[i]^2 * (g_pos[i][j] + g_neg[i][j]).
double ideal_power(const std::vector<double> &v, const ConductanceTile &tile);

LinearSystem build_system(const Netlist &n);

SolveReport solve(const LinearSystem &sys, const SolverOptions &opts = {});

// Convenience: build + solve, with column currents derived from the
// netlist's sense-node annotation.
SolveReport solve_netlist(const Netlist &n, const SolverOptions &opts = {});

// Holds one factorization of a netlist's system and re-solves it for many
// row-drive patterns (only the source values change between patterns).
class PatternSolver {
public:
  explicit PatternSolver(const Netlist &n, const SolverOptions &opts = {});
  // pattern holds u_i; positive rows driven at +u_i, negative at -u_i.
  SolveReport solve_pattern(const std::vector<double> &pattern);
  int rows() const { return rows_; }
  int cols() const { return cols_; }

private:
  SolverOptions opts_;
  LinearSystem sys_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> direct_;
  bool use_direct_ = true;
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::string> vground_;
};

// Mean over patterns of the solved source power. Patterns are effective row
// drive voltages u_i.
double average_power(const Netlist &n, const std::vector<std::vector<double>> &patterns,
                     const SolverOptions &opts = {});

// Maps x in [0,1] to the nearest of 2^n_bits uniform levels in [0, vdd].
double dac_quantize(double x, int n_bits, double vdd);

// Worst per-node KCL violation relative to the local current scale; used by
// dynamic verification and property tests.
double max_kcl_residual(const LinearSystem &sys, const SolveReport &rep);

} // namespace xbar
