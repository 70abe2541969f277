#include <cmath>
#include <random>

#include "doctest.h"
#include "xbar/circuit.hpp"
#include "xbar/errors.hpp"
#include "xbar/netlist.hpp"

using namespace xbar;

namespace {

DesignPoint make_dp(int rows, int cols) {
  DesignPoint dp;
  dp.tech_nm = 7;
  dp.device = "PCM";
  dp.bitcell = "1T1R";
  dp.rows = rows;
  dp.cols = cols;
  dp.mode = BitMode::Analog;
  return dp;
}

ConductanceTile random_tile(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> g(1e-7, 5e-5);
  ConductanceTile t = ConductanceTile::zeros(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      t.pos(i, j) = g(rng);
      t.neg(i, j) = g(rng);
    }
  return t;
}

std::vector<double> random_pattern(int rows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> p(rows);
  for (double &x : p) x = u(rng);
  return p;
}

} // namespace

TEST_CASE("ideal_mac hand-computed values") {
  ConductanceTile t = ConductanceTile::zeros(2, 2);
  t.pos(0, 0) = 1e-4;
  t.pos(0, 1) = 2e-4;
  t.pos(1, 0) = 3e-4;
  t.pos(1, 1) = 4e-4;
  t.neg(0, 0) = 0.5e-4;
  t.neg(1, 1) = 2e-4;
  std::vector<double> out = ideal_mac({1.0, 0.5}, t);
  REQUIRE(out.size() == 2);
  // col 0: 1*(1e-4 - 0.5e-4) + 0.5*(3e-4 - 0)   = 2e-4
  // col 1: 1*(2e-4 - 0)      + 0.5*(4e-4 - 2e-4) = 3e-4
  CHECK(out[0] == doctest::Approx(2e-4).epsilon(1e-12));
  CHECK(out[1] == doctest::Approx(3e-4).epsilon(1e-12));
  CHECK_THROWS_AS(static_cast<void>(ideal_mac({1.0}, t)), ContractError);

  // P = sum v_i^2 * (g_pos + g_neg)
  const double want_p = 1.0 * (1e-4 + 2e-4 + 0.5e-4) + 0.25 * (3e-4 + 4e-4 + 2e-4);
  CHECK(ideal_power({1.0, 0.5}, t) == doctest::Approx(want_p).epsilon(1e-12));
}

TEST_CASE("zero-parasitic solve reproduces the ideal MAC") {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 20; ++k) {
    const int rows = 1 + int(rng() % 8);
    const int cols = 1 + int(rng() % 8);
    ConductanceTile t = random_tile(rows, cols, rng());
    std::vector<double> pattern = random_pattern(rows, rng());
    Netlist n = generate_crossbar_netlist(make_dp(rows, cols), t, {}, pattern);
    SolveReport rep = solve_netlist(n);
    std::vector<double> want = ideal_mac(pattern, t);
    REQUIRE(rep.column_currents.size() == want.size());
    for (std::size_t j = 0; j < want.size(); ++j) {
      const double scale = std::max(std::abs(want[j]), 1e-12);
      CHECK(std::abs(rep.column_currents[j] - want[j]) / scale < 1e-9);
    }
    LinearSystem sys = build_system(n);
    CHECK(max_kcl_residual(sys, solve(sys)) <= 1e-9);
  }
}

TEST_CASE("parasitics attenuate each polarity's gross column current") {
  const int rows = 16, cols = 8;
  ConductanceTile t = random_tile(rows, cols, 11);
  std::vector<double> pattern(rows, 1.0); // all-positive drive, no cancellation
  GenerateOptions opts;
  opts.wire_r = 5.0;
  opts.access_resistance = 500.0;
  Netlist n = generate_crossbar_netlist(make_dp(rows, cols), t, opts, pattern);
  SolveReport rep = solve_netlist(n);
  // per-polarity ideal gross currents
  for (int j = 0; j < cols; ++j) {
    double ideal_pos = 0.0, ideal_neg = 0.0;
    for (int i = 0; i < rows; ++i) {
      ideal_pos += pattern[i] * t.pos(i, j);
      ideal_neg += pattern[i] * t.neg(i, j);
    }
    CHECK(rep.column_currents_pos[j] > 0.0);
    CHECK(rep.column_currents_pos[j] < ideal_pos);
    CHECK(std::abs(rep.column_currents_neg[j]) < std::abs(ideal_neg) + 1e-15);
    // attenuation is bounded: parasitics are small relative to cell resistance
    CHECK(rep.column_currents_pos[j] > 0.5 * ideal_pos);
  }
  LinearSystem sys = build_system(n);
  CHECK(max_kcl_residual(sys, solve(sys)) <= 1e-9);
}

TEST_CASE("PatternSolver matches fresh per-pattern solves") {
  const int rows = 12, cols = 6;
  ConductanceTile t = random_tile(rows, cols, 21);
  GenerateOptions opts;
  opts.wire_r = 3.0;
  opts.access_resistance = 500.0;
  Netlist n = generate_crossbar_netlist(make_dp(rows, cols), t, opts,
                                        std::vector<double>(rows, 0.0));
  PatternSolver ps(n);
  CHECK(ps.rows() == rows);
  CHECK(ps.cols() == cols);
  for (int k = 0; k < 5; ++k) {
    std::vector<double> pattern = random_pattern(rows, 100 + k);
    // fresh netlist generated with the same pattern baked in
    Netlist fresh = generate_crossbar_netlist(make_dp(rows, cols), t, opts, pattern);
    SolveReport a = ps.solve_pattern(pattern);
    SolveReport b = solve_netlist(fresh);
    REQUIRE(a.column_currents.size() == b.column_currents.size());
    for (std::size_t j = 0; j < a.column_currents.size(); ++j)
      CHECK(a.column_currents[j] == doctest::Approx(b.column_currents[j]).epsilon(1e-9));
    CHECK(a.total_power == doctest::Approx(b.total_power).epsilon(1e-9));
  }
  CHECK_THROWS_AS(static_cast<void>(ps.solve_pattern({1.0})), ContractError);
}

TEST_CASE("conjugate-gradient path agrees with the direct factorization") {
  const int rows = 10, cols = 10;
  ConductanceTile t = random_tile(rows, cols, 31);
  GenerateOptions opts;
  opts.wire_r = 4.0;
  opts.access_resistance = 500.0;
  std::vector<double> pattern = random_pattern(rows, 32);
  Netlist n = generate_crossbar_netlist(make_dp(rows, cols), t, opts, pattern);
  SolverOptions direct_opts; // default threshold keeps this on the direct path
  SolverOptions cg_opts;
  cg_opts.direct_threshold = 0; // force CG
  SolveReport a = solve_netlist(n, direct_opts);
  SolveReport b = solve_netlist(n, cg_opts);
  CHECK(a.iterations == 0);
  CHECK(b.iterations > 0);
  for (std::size_t j = 0; j < a.column_currents.size(); ++j) {
    const double scale = std::max(std::abs(a.column_currents[j]), 1e-12);
    CHECK(std::abs(a.column_currents[j] - b.column_currents[j]) / scale < 1e-6);
  }
  CHECK(a.total_power == doctest::Approx(b.total_power).epsilon(1e-6));
}

TEST_CASE("average_power equals the mean of per-pattern powers") {
  const int rows = 6, cols = 4;
  ConductanceTile t = random_tile(rows, cols, 41);
  Netlist n = generate_crossbar_netlist(make_dp(rows, cols), t, {},
                                        std::vector<double>(rows, 0.0));
  std::vector<std::vector<double>> patterns;
  double manual = 0.0;
  for (int k = 0; k < 4; ++k) {
    patterns.push_back(random_pattern(rows, 200 + k));
    // zero-parasitic network: closed-form power
    manual += ideal_power(patterns.back(), t);
  }
  manual /= patterns.size();
  CHECK(average_power(n, patterns) == doctest::Approx(manual).epsilon(1e-9));
  CHECK_THROWS_AS(static_cast<void>(average_power(n, {})), ContractError);
}

TEST_CASE("dac_quantize levels and domain") {
  CHECK(dac_quantize(0.0, 4, 1.0) == 0.0);
  CHECK(dac_quantize(1.0, 4, 1.0) == 1.0);
  CHECK(dac_quantize(0.4, 1, 1.0) == 0.0);  // 1 bit: {0, vdd}
  CHECK(dac_quantize(0.6, 1, 1.0) == 1.0);
  const double mid = dac_quantize(0.5, 2, 3.0); // rounds to an adjacent level of 0.5
  CHECK(std::abs(mid - 1.0) * std::abs(mid - 2.0) < 1e-9);
  // 2 bits: levels at k/3, x=0.3 snaps to 1/3
  CHECK(dac_quantize(0.3, 2, 1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK_THROWS_AS(static_cast<void>(dac_quantize(1.5, 4, 1.0)), ContractError);
  CHECK_THROWS_AS(static_cast<void>(dac_quantize(0.5, 0, 1.0)), ContractError);
}

TEST_CASE("solver rejects ill-posed networks") {
  // resistor island with no path to ground
  Netlist island = parse_spice("* island\n"
                               "V1 a 0 DC 1\n"
                               "R1 a 0 1000\n"
                               "Rfloat x y 1000\n"
                               ".END\n");
  CHECK_THROWS_WITH_AS(static_cast<void>(solve_netlist(island)),
                       doctest::Contains("island"), SolveError);

  // voltage source with neither terminal grounded
  Netlist ungrounded = parse_spice("* bad source\n"
                                   "V1 a b DC 1\n"
                                   "R1 a 0 1000\n"
                                   "R2 b 0 1000\n"
                                   ".END\n");
  CHECK_THROWS_AS(static_cast<void>(solve_netlist(ungrounded)), SolveError);
}

TEST_CASE("zero-resistance elements short their nodes") {
  Netlist n = parse_spice("* shorted divider\n"
                          "V1 a 0 DC 2\n"
                          "R1 a b 1000\n"
                          "*switch g\n"
                          "Rsw b c 0\n"
                          "R2 c 0 1000\n"
                          ".END\n");
  SolveReport rep = solve_netlist(n);
  CHECK(rep.node_voltages.at("b") == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.node_voltages.at("c") == doctest::Approx(1.0).epsilon(1e-9)); // merged with b
  CHECK(rep.total_power == doctest::Approx(2.0 * 2.0 / 2000.0).epsilon(1e-9));
}
