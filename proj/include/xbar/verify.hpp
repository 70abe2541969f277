#pragma once

// Script-driven validation: static netlist lint, dynamic solve-and-compare
// checks, deterministic fault injection for self-test, and the bounded
// generate-check-regenerate loop.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "xbar/circuit.hpp"
#include "xbar/design_space.hpp"
#include "xbar/netlist.hpp"

namespace xbar {

enum class Severity { Error, Warning };

// Frozen code catalog; tests and external tools match on these strings.
namespace diag {
inline constexpr const char *kDuplicateName = "DUPLICATE_NAME";
inline constexpr const char *kFloatingNode = "FLOATING_NODE";
inline constexpr const char *kGroundDetached = "GROUND_DETACHED";
inline constexpr const char *kElementCountMismatch = "ELEMENT_COUNT_MISMATCH";
inline constexpr const char *kConductanceOutOfRange = "CONDUCTANCE_OUT_OF_RANGE";
inline constexpr const char *kPolarityMissing = "POLARITY_MISSING";
inline constexpr const char *kColumnNotSensed = "COLUMN_NOT_SENSED";
inline constexpr const char *kRowNotDriven = "ROW_NOT_DRIVEN";
inline constexpr const char *kMacDeviation = "MAC_DEVIATION";
inline constexpr const char *kSignMismatch = "SIGN_MISMATCH";
inline constexpr const char *kSolveFailed = "SOLVE_FAILED";
inline constexpr const char *kKclResidual = "KCL_RESIDUAL";
} // namespace diag

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string code;
  std::string element_or_node; // a concrete name present in the netlist
  std::string message;
  int line = 0; // nonzero when derived from parsed text
};

bool has_errors(const std::vector<Diagnostic> &diags);

enum class FaultKind {
  DropElement,
  ShortNodes,
  OpenColumn,
  OutOfRangeConductance,
  DuplicateName,
  FloatingNode,
  WrongElementCount,
  PolarityMixup,
  SourceMisbind,
  GroundDetach,
};

inline constexpr FaultKind kAllFaultKinds[] = {
    FaultKind::DropElement,    FaultKind::ShortNodes,   FaultKind::OpenColumn,
    FaultKind::OutOfRangeConductance, FaultKind::DuplicateName, FaultKind::FloatingNode,
    FaultKind::WrongElementCount, FaultKind::PolarityMixup, FaultKind::SourceMisbind,
    FaultKind::GroundDetach,
};

std::string fault_kind_name(FaultKind k);

struct FaultSpec {
  FaultKind kind = FaultKind::DropElement;
  std::uint64_t seed = 0;
};

struct VerifyOptions {
  double ideal_rel_tol = 1e-9;      // MAC deviation bound at wire_r == 0
  double parasitic_rel_bound = 0.25; // relative deviation bound at wire_r > 0
  double current_tol_abs = 1e-12;   // amperes; below this a column is "zero"
  double kcl_tol = 1e-9;            // relative KCL residual bound
  SolverOptions solver;
};

// Structural lint: unique names, ground reachability, element inventory vs.
// the closed-form budget, conductance window, polarity pair presence, column
// sensing and row drive. Empty result == clean.
std::vector<Diagnostic> static_check(const Netlist &n, const DesignPoint &dp,
                                     const DeviceRegistry &reg);

// Solves the netlist per input vector and compares the differential column
// currents to ideal_mac on the tile; audits the KCL residual.
std::vector<Diagnostic> dynamic_check(const Netlist &n, const DesignPoint &dp,
                                      const ConductanceTile &tile,
                                      const std::vector<std::vector<double>> &vectors,
                                      const VerifyOptions &opts = {});

// Deterministic mutated copy of n realizing the fault; throws ContractError
// when the fault's precondition does not hold.
Netlist inject_fault(const Netlist &n, const FaultSpec &f);

// Unambiguous automatic repairs only: duplicate renames and ground-node
// restoration. Structural faults are left for regeneration.
Netlist apply_fixups(const Netlist &n, const std::vector<Diagnostic> &diags);

// round is 1-based; prior round's diagnostics are passed back in.
using NetlistGenerator =
    std::function<Netlist(int round, const std::vector<Diagnostic> &previous)>;

struct LoopResult {
  bool accepted = false;
  std::optional<Netlist> netlist;
  int rounds_used = 0;
  std::vector<std::vector<Diagnostic>> history; // per round
};

LoopResult verification_loop(const DesignPoint &dp, const ConductanceTile &tile,
                             const NetlistGenerator &generator, const DeviceRegistry &reg,
                             const std::vector<std::vector<double>> &vectors, int max_rounds = 3,
                             const VerifyOptions &opts = {});

} // namespace xbar
