#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "xbar/errors.hpp"
#include "xbar/verify.hpp"

using namespace xbar;

namespace {

DesignPoint make_dp(int size, const std::string &bitcell = "1T1R") {
  DesignPoint dp;
  dp.tech_nm = 7;
  dp.device = "PCM";
  dp.bitcell = bitcell;
  dp.rows = dp.cols = size;
  dp.mode = BitMode::Analog;
  return dp;
}

ConductanceTile device_tile(const DeviceRegistry &reg, const DesignPoint &dp,
                            std::uint64_t seed) {
  const DeviceKind &dev = reg.device(dp.device);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> g(dev.g_off(), dev.g_on());
  ConductanceTile t = ConductanceTile::zeros(dp.rows, dp.cols);
  for (int i = 0; i < dp.rows; ++i)
    for (int j = 0; j < dp.cols; ++j) {
      t.pos(i, j) = g(rng);
      t.neg(i, j) = g(rng);
    }
  return t;
}

GenerateOptions gen_opts(const DeviceRegistry &reg, const DesignPoint &dp, bool parasitic) {
  const DeviceKind &dev = reg.device(dp.device);
  const BitcellKind &bc = reg.bitcell(dp.bitcell);
  GenerateOptions o;
  o.g_min = dev.g_off();
  o.g_max = dev.g_on();
  o.num_access_transistors = bc.num_access_transistors;
  if (parasitic) {
    o.wire_r = reg.tech(dp.tech_nm).wire_r_per_segment;
    o.access_resistance = bc.access_resistance;
  }
  return o;
}

std::vector<std::vector<double>> test_vectors(int rows) {
  std::vector<double> ones(rows, 1.0), alt(rows);
  for (int i = 0; i < rows; ++i) alt[i] = (i % 2 == 0) ? 1.0 : -1.0;
  return {ones, alt};
}

bool saw_code(const std::vector<Diagnostic> &diags, const char *code) {
  return std::any_of(diags.begin(), diags.end(),
                     [&](const Diagnostic &d) { return d.code == code; });
}

} // namespace

TEST_CASE("generated netlists verify clean, statically and dynamically") {
  DeviceRegistry reg = DeviceRegistry::defaults();
  for (bool parasitic : {false, true}) {
    CAPTURE(parasitic);
    DesignPoint dp = make_dp(16);
    ConductanceTile t = device_tile(reg, dp, 1);
    Netlist n = generate_crossbar_netlist(dp, t, gen_opts(reg, dp, parasitic),
                                          std::vector<double>(dp.rows, 0.0));
    CHECK(static_check(n, dp, reg).empty());
    std::vector<Diagnostic> dyn = dynamic_check(n, dp, t, test_vectors(dp.rows));
    CHECK(!has_errors(dyn));
  }
}

TEST_CASE("removing one memory resistor is flagged") {
  DeviceRegistry reg = DeviceRegistry::defaults();
  DesignPoint dp = make_dp(4);
  ConductanceTile t = device_tile(reg, dp, 2);
  Netlist n = generate_crossbar_netlist(dp, t, gen_opts(reg, dp, false),
                                        std::vector<double>(dp.rows, 1.0));
  auto it = std::find_if(n.elements.begin(), n.elements.end(),
                         [](const Element &e) { return e.name == "Rpmem_r1_c2"; });
  REQUIRE(it != n.elements.end());
  n.elements.erase(it);
  std::vector<Diagnostic> diags = static_check(n, dp, reg);
  CHECK(has_errors(diags));
  CHECK(saw_code(diags, diag::kElementCountMismatch));
}

TEST_CASE("out-of-window conductance is flagged with the element name") {
  DeviceRegistry reg = DeviceRegistry::defaults();
  DesignPoint dp = make_dp(4);
  ConductanceTile t = device_tile(reg, dp, 3);
  Netlist n = generate_crossbar_netlist(dp, t, gen_opts(reg, dp, false),
                                        std::vector<double>(dp.rows, 1.0));
  for (Element &e : n.elements)
    if (e.name == "Rnmem_r0_c1") e.value = 10.0 * reg.device("PCM").r_off;
  std::vector<Diagnostic> diags = static_check(n, dp, reg);
  REQUIRE(has_errors(diags));
  bool named = false;
  for (const Diagnostic &d : diags)
    if (d.code == diag::kConductanceOutOfRange && d.element_or_node == "Rnmem_r0_c1")
      named = true;
  CHECK(named);
}

TEST_CASE("fault injection is deterministic in the seed") {
  DeviceRegistry reg = DeviceRegistry::defaults();
  DesignPoint dp = make_dp(8);
  ConductanceTile t = device_tile(reg, dp, 4);
  Netlist n = generate_crossbar_netlist(dp, t, gen_opts(reg, dp, false),
                                        std::vector<double>(dp.rows, 1.0));
  for (FaultKind kind : kAllFaultKinds) {
    CAPTURE(fault_kind_name(kind));
    Netlist a = inject_fault(n, {kind, 17});
    Netlist b = inject_fault(n, {kind, 17});
    CHECK(emit_spice(a) == emit_spice(b));
    // the fault actually changed something
    CHECK(emit_spice(a) != emit_spice(n));
  }
}

TEST_CASE("every injected fault kind is detected, 20 seeds each") {
  DeviceRegistry reg = DeviceRegistry::defaults();
  for (int size : {16, 32}) {
    DesignPoint dp = make_dp(size);
    ConductanceTile t = device_tile(reg, dp, 5);
    Netlist clean = generate_crossbar_netlist(dp, t, gen_opts(reg, dp, false),
                                              std::vector<double>(dp.rows, 1.0));
    std::vector<std::vector<double>> vectors = test_vectors(dp.rows);
    for (FaultKind kind : kAllFaultKinds) {
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CAPTURE(size);
        CAPTURE(fault_kind_name(kind));
        CAPTURE(seed);
        Netlist faulty = inject_fault(clean, {kind, seed});
        std::vector<Diagnostic> diags = static_check(faulty, dp, reg);
        if (!has_errors(diags)) {
          std::vector<Diagnostic> dyn = dynamic_check(faulty, dp, t, vectors);
          diags.insert(diags.end(), dyn.begin(), dyn.end());
        }
        CHECK(has_errors(diags));
      }
    }
  }
}

TEST_CASE("diagnostics name entities that exist in the faulty netlist") {
  DeviceRegistry reg = DeviceRegistry::defaults();
  DesignPoint dp = make_dp(16);
  ConductanceTile t = device_tile(reg, dp, 6);
  Netlist clean = generate_crossbar_netlist(dp, t, gen_opts(reg, dp, false),
                                            std::vector<double>(dp.rows, 1.0));
  for (FaultKind kind : kAllFaultKinds) {
    Netlist faulty = inject_fault(clean, {kind, 3});
    std::set<std::string> names;
    for (const Element &e : faulty.elements) {
      names.insert(e.name);
      for (const std::string &node : e.nodes) names.insert(node);
    }
    std::vector<Diagnostic> diags = static_check(faulty, dp, reg);
    if (!has_errors(diags)) {
      std::vector<Diagnostic> dyn = dynamic_check(faulty, dp, t, test_vectors(dp.rows));
      diags.insert(diags.end(), dyn.begin(), dyn.end());
    }
    for (const Diagnostic &d : diags) {
      CAPTURE(fault_kind_name(kind));
      CAPTURE(d.code);
      CAPTURE(d.element_or_node);
      // names can be elements, nodes, or synthetic column labels like "column 3"
      const bool known = names.count(d.element_or_node) > 0 ||
                         d.element_or_node.rfind("column", 0) == 0 ||
                         d.element_or_node.rfind("V", 0) == 0 ||
                         d.element_or_node.rfind("p_", 0) == 0 ||
                         d.element_or_node.rfind("n_", 0) == 0;
      CHECK(known);
      CHECK(!d.message.empty());
    }
  }
}

TEST_CASE("fixups repair duplicates and detached grounds") {
  DeviceRegistry reg = DeviceRegistry::defaults();
  DesignPoint dp = make_dp(4);
  ConductanceTile t = device_tile(reg, dp, 7);
  Netlist clean = generate_crossbar_netlist(dp, t, gen_opts(reg, dp, false),
                                            std::vector<double>(dp.rows, 1.0));
  for (FaultKind kind : {FaultKind::DuplicateName, FaultKind::GroundDetach}) {
    CAPTURE(fault_kind_name(kind));
    Netlist faulty = inject_fault(clean, {kind, 1});
    std::vector<Diagnostic> before = static_check(faulty, dp, reg);
    REQUIRE(has_errors(before));
    Netlist fixed = apply_fixups(faulty, before);
    std::vector<Diagnostic> after = static_check(fixed, dp, reg);
    if (kind == FaultKind::DuplicateName)
      CHECK(!saw_code(after, diag::kDuplicateName));
    else
      CHECK(!saw_code(after, diag::kGroundDetached));
  }
}

TEST_CASE("verification loop: healthy, flaky and hopeless generators") {
  DeviceRegistry reg = DeviceRegistry::defaults();
  DesignPoint dp = make_dp(8);
  ConductanceTile t = device_tile(reg, dp, 8);
  GenerateOptions opts = gen_opts(reg, dp, false);
  std::vector<std::vector<double>> vectors = test_vectors(dp.rows);
  auto clean = [&](int, const std::vector<Diagnostic> &) {
    return generate_crossbar_netlist(dp, t, opts, std::vector<double>(dp.rows, 1.0));
  };

  SUBCASE("healthy generator accepted in round 1") {
    LoopResult r = verification_loop(dp, t, clean, reg, vectors);
    CHECK(r.accepted);
    CHECK(r.rounds_used == 1);
    REQUIRE(r.netlist.has_value());
    CHECK(r.history.size() == 1);
    CHECK(r.history[0].empty());
  }

  SUBCASE("flaky generator recovers on the second round") {
    int calls = 0;
    auto flaky = [&](int round, const std::vector<Diagnostic> &prev) {
      ++calls;
      Netlist n = clean(round, prev);
      if (round == 1) return inject_fault(n, {FaultKind::DropElement, 1});
      // the retry sees the first round's findings
      CHECK(!prev.empty());
      return n;
    };
    LoopResult r = verification_loop(dp, t, flaky, reg, vectors);
    CHECK(r.accepted);
    CHECK(r.rounds_used == 2);
    CHECK(calls == 2);
    CHECK(has_errors(r.history[0]));
    CHECK(!has_errors(r.history[1]));
  }

  SUBCASE("hopeless generator exhausts the round budget") {
    auto hopeless = [&](int round, const std::vector<Diagnostic> &prev) {
      return inject_fault(clean(round, prev), {FaultKind::OpenColumn, 2});
    };
    LoopResult r = verification_loop(dp, t, hopeless, reg, vectors, 3);
    CHECK(!r.accepted);
    CHECK(r.rounds_used == 3);
    CHECK(r.history.size() == 3);
    for (const auto &round : r.history) CHECK(has_errors(round));
  }
}

TEST_CASE("fault kind names round-trip through the catalog") {
  std::set<std::string> names;
  for (FaultKind k : kAllFaultKinds) names.insert(fault_kind_name(k));
  CHECK(names.size() == 10); // distinct names
}
