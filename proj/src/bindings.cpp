#include <random>

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "xbar/circuit.hpp"
#include "xbar/design_space.hpp"
#include "xbar/dse.hpp"
#include "xbar/errors.hpp"
#include "xbar/llm.hpp"
#include "xbar/netlist.hpp"
#include "xbar/paa.hpp"
#include "xbar/verify.hpp"

namespace py = pybind11;
using namespace xbar;

namespace {

ConductanceTile tile_from_lists(const std::vector<std::vector<double>> &pos,
                                const std::vector<std::vector<double>> &neg) {
  if (pos.empty() || pos.size() != neg.size() || pos[0].size() != neg[0].size())
    throw ContractError("g_pos and g_neg must be equal-shaped non-empty matrices");
  ConductanceTile t = ConductanceTile::zeros(pos.size(), pos[0].size());
  for (std::size_t i = 0; i < pos.size(); ++i)
    for (std::size_t j = 0; j < pos[0].size(); ++j) {
      t.pos(i, j) = pos[i][j];
      t.neg(i, j) = neg[i][j];
    }
  return t;
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Resistive-crossbar design-space exploration core";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<ParseError>(m, "ParseError");
  py::register_exception<SolveError>(m, "SolveError");

  py::class_<DesignPoint>(m, "DesignPoint")
      .def(py::init<>())
      .def_readwrite("tech_nm", &DesignPoint::tech_nm)
      .def_readwrite("device", &DesignPoint::device)
      .def_readwrite("bitcell", &DesignPoint::bitcell)
      .def_readwrite("rows", &DesignPoint::rows)
      .def_readwrite("cols", &DesignPoint::cols)
      .def_readwrite("bits", &DesignPoint::bits)
      .def("__repr__", [](const DesignPoint &dp) { return "<DesignPoint " + design_key(dp) + ">"; });

  py::class_<EvalResult>(m, "EvalResult")
      .def_readonly("design", &EvalResult::design)
      .def_readonly("area_um2", &EvalResult::area_um2)
      .def_readonly("accuracy_pct", &EvalResult::accuracy_pct)
      .def_readonly("avg_power_w", &EvalResult::avg_power_w)
      .def_readonly("n_images", &EvalResult::n_images);

  m.def("design_key", &design_key);
  m.def("parse_design_key", &parse_design_key);
  m.def("enumerate_default_grid", [] {
    std::vector<std::string> keys;
    for (const DesignPoint &dp : enumerate_grid(GridSpec::defaults(), DeviceRegistry::defaults()))
      keys.push_back(design_key(dp));
    return keys;
  });

  m.def("seed_paper_table", [] {
    std::vector<EvalResult> out;
    for (const auto &[key, r] : seed_paper_table().entries) out.push_back(r);
    return out;
  });

  m.def(
      "query",
      [](const std::string &dsl) {
        Repository repo = seed_paper_table();
        RankedSelection sel = rank(repo, parse_query_dsl(dsl));
        std::vector<std::pair<std::string, double>> out;
        for (const RankedEntry &e : sel.entries) out.push_back({e.design_key, e.score});
        return out;
      },
      py::arg("dsl"), "Rank the embedded reference repository with a DSL query; "
                      "returns (design_key, score) pairs, best first.");

  m.def(
      "ideal_mac",
      [](const std::vector<double> &v, const std::vector<std::vector<double>> &pos,
         const std::vector<std::vector<double>> &neg) {
        return ideal_mac(v, tile_from_lists(pos, neg));
      },
      py::arg("inputs"), py::arg("g_pos"), py::arg("g_neg"));

  m.def(
      "solve_crossbar",
      [](const std::string &key, const std::vector<std::vector<double>> &pos,
         const std::vector<std::vector<double>> &neg, const std::vector<double> &pattern,
         double wire_r) {
        DeviceRegistry reg = DeviceRegistry::defaults();
        DesignPoint dp = parse_design_key(key);
        const BitcellKind &bc = reg.bitcell(dp.bitcell);
        GenerateOptions opts;
        opts.wire_r = wire_r;
        opts.access_resistance = wire_r > 0.0 ? bc.access_resistance : 0.0;
        opts.num_access_transistors = bc.num_access_transistors;
        Netlist n = generate_crossbar_netlist(dp, tile_from_lists(pos, neg), opts, pattern);
        SolveReport rep = solve_netlist(n);
        return py::make_tuple(rep.column_currents, rep.total_power);
      },
      py::arg("design_key"), py::arg("g_pos"), py::arg("g_neg"), py::arg("pattern"),
      py::arg("wire_r") = 0.0,
      "Generate and solve one differential crossbar; returns (column_currents, power_w).");

  m.def(
      "generate_netlist",
      [](const std::string &key, const std::vector<std::vector<double>> &pos,
         const std::vector<std::vector<double>> &neg, const std::vector<double> &pattern,
         double wire_r) {
        DeviceRegistry reg = DeviceRegistry::defaults();
        DesignPoint dp = parse_design_key(key);
        const BitcellKind &bc = reg.bitcell(dp.bitcell);
        GenerateOptions opts;
        opts.wire_r = wire_r;
        opts.access_resistance = wire_r > 0.0 ? bc.access_resistance : 0.0;
        opts.num_access_transistors = bc.num_access_transistors;
        return emit_spice(generate_crossbar_netlist(dp, tile_from_lists(pos, neg), opts, pattern));
      },
      py::arg("design_key"), py::arg("g_pos"), py::arg("g_neg"), py::arg("pattern"),
      py::arg("wire_r") = 0.0);

  m.def(
      "verify_netlist",
      [](const std::string &spice_text, const std::string &key) {
        Netlist n = parse_spice(spice_text);
        DesignPoint dp = parse_design_key(key);
        std::vector<py::dict> out;
        for (const Diagnostic &d : static_check(n, dp, DeviceRegistry::defaults())) {
          py::dict row;
          row["severity"] = d.severity == Severity::Error ? "error" : "warning";
          row["code"] = d.code;
          row["element"] = d.element_or_node;
          row["message"] = d.message;
          out.push_back(row);
        }
        return out;
      },
      py::arg("spice_text"), py::arg("design_key"));

  m.def(
      "evaluate_design",
      [](const std::string &key, std::uint64_t seed, int n_images, const std::string &fidelity) {
        DeviceRegistry reg = DeviceRegistry::defaults();
        DesignPoint dp = parse_design_key(key);
        MlpWeights w = MlpWeights::synthetic({400, 120, 84, 10}, seed);
        std::mt19937_64 rng(seed ^ 0x5bf03635ull);
        std::uniform_real_distribution<double> pix(0.0, 1.0);
        ImageDataset ds;
        ds.image_rows = ds.image_cols = 20;
        for (int i = 0; i < n_images; ++i) {
          std::vector<double> img(400);
          for (double &p : img) p = pix(rng);
          ds.labels.push_back(infer_float(w, img));
          ds.images.push_back(std::move(img));
        }
        std::vector<std::pair<DesignPoint, double>> reference;
        for (const auto &[k2, r] : seed_paper_table().entries)
          reference.push_back({parse_design_key(k2), r.area_um2});
        EvaluateParams params;
        params.area = calibrate_area_model(reference, reg);
        params.inference.fidelity =
            fidelity == "parasitic" ? Fidelity::FullParasitic : Fidelity::IdealMac;
        return evaluate_design(dp, w, ds, 0, n_images, reg, params);
      },
      py::arg("design_key"), py::arg("seed") = 42, py::arg("n_images") = 10,
      py::arg("fidelity") = "ideal",
      "Evaluate one design point on a deterministic synthetic workload.");
}
