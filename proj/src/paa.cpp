#include "xbar/paa.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <random>

#include "nlohmann/json.hpp"
#include "xbar/errors.hpp"

namespace xbar {

using nlohmann::json;

void MlpWeights::validate() const {
  if (layer_dims.size() < 2) throw ConfigError("MLP needs at least two layer dims");
  for (int d : layer_dims)
    if (d < 1) throw ConfigError("layer dimensions must be positive");
  if (matrices.size() != layer_dims.size() - 1 || biases.size() != matrices.size())
    throw ConfigError("layer count mismatch between dims, weights and biases");
  for (std::size_t l = 0; l < matrices.size(); ++l) {
    const std::size_t out = layer_dims[l + 1], in = layer_dims[l];
    if (matrices[l].size() != out * in)
      throw ConfigError("layer " + std::to_string(l) + " weight matrix has " +
                        std::to_string(matrices[l].size()) + " entries, expected " +
                        std::to_string(out * in));
    if (biases[l].size() != out)
      throw ConfigError("layer " + std::to_string(l) + " bias vector has wrong length");
    for (double x : matrices[l])
      if (!std::isfinite(x)) throw ConfigError("non-finite weight in layer " + std::to_string(l));
    for (double x : biases[l])
      if (!std::isfinite(x)) throw ConfigError("non-finite bias in layer " + std::to_string(l));
  }
}

MlpWeights MlpWeights::load_json(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open weights file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception &e) {
    throw ParseError("invalid weights JSON: " + std::string(e.what()));
  }
  MlpWeights w;
  try {
    w.layer_dims = j.at("layer_dims").get<std::vector<int>>();
    std::string act = j.value("activation", "sigmoid");
    w.activation = to_lower(act) == "relu" ? Activation::ReLU : Activation::Sigmoid;
    for (const auto &layer : j.at("layers")) {
      w.matrices.push_back(layer.at("weights").get<std::vector<double>>());
      w.biases.push_back(layer.at("biases").get<std::vector<double>>());
    }
  } catch (const json::exception &e) {
    throw ParseError("weights JSON schema error: " + std::string(e.what()));
  }
  w.validate();
  return w;
}

void MlpWeights::save_json(const std::string &path) const {
  validate();
  json j;
  j["layer_dims"] = layer_dims;
  j["activation"] = activation == Activation::ReLU ? "relu" : "sigmoid";
  j["layers"] = json::array();
  for (std::size_t l = 0; l < matrices.size(); ++l)
    j["layers"].push_back({{"weights", matrices[l]}, {"biases", biases[l]}});
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write weights file: " + path);
  out << j.dump() << "\n";
}

MlpWeights MlpWeights::synthetic(const std::vector<int> &dims, std::uint64_t seed,
                                 Activation act) {
  MlpWeights w;
  w.layer_dims = dims;
  w.activation = act;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::size_t out = dims[l + 1], in = dims[l];
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    std::vector<double> m(out * in), b(out);
    for (double &x : m) x = dist(rng) * scale;
    for (double &x : b) x = dist(rng) * 0.1;
    w.matrices.push_back(std::move(m));
    w.biases.push_back(std::move(b));
  }
  w.validate();
  return w;
}

void AreaParams::validate() const {
  if (cell_coeff < 0 || periph_fixed < 0 || periph_per_row < 0 || periph_per_col < 0)
    throw ConfigError("area parameters must be non-negative");
  if (cell_coeff == 0 && periph_fixed == 0 && periph_per_row == 0 && periph_per_col == 0)
    throw ConfigError("area model is identically zero");
}

std::string result_source_name(ResultSource s) {
  switch (s) {
  case ResultSource::InternalSolver: return "internal";
  case ResultSource::PaperTable: return "reference";
  case ResultSource::External: return "external";
  }
  return "internal";
}

ResultSource result_source_from_name(const std::string &s) {
  std::string l = to_lower(s);
  if (l == "internal" || l == "internalsolver") return ResultSource::InternalSolver;
  if (l == "reference" || l == "papertable") return ResultSource::PaperTable;
  if (l == "external") return ResultSource::External;
  throw ConfigError("unknown result source: " + s);
}

void EvalResult::validate() const {
  if (design.empty()) throw ConfigError("EvalResult requires a design key");
  if (!(accuracy_pct >= 0.0 && accuracy_pct <= 100.0))
    throw ConfigError("accuracy out of [0,100] for " + design);
  if (!(avg_power_w >= 0.0)) throw ConfigError("negative power for " + design);
  if (!(area_um2 > 0.0)) throw ConfigError("non-positive area for " + design);
}

ConductanceTile map_weights_to_conductance(const std::vector<std::vector<double>> &w,
                                           const DeviceKind &device, int n_levels,
                                           double w_max) {
  device.validate();
  const std::size_t rows = w.size();
  if (rows == 0) throw ContractError("empty weight tile");
  const std::size_t cols = w[0].size();
  for (const auto &row : w) {
    if (row.size() != cols) throw ContractError("ragged weight tile");
    for (double x : row)
      if (!std::isfinite(x)) throw ContractError("non-finite weight");
  }
  if (n_levels != 0 && n_levels < 2)
    throw ContractError("digital mapping requires n_levels >= 2 (0 = analog)");

  double wm = w_max;
  if (wm <= 0.0) {
    for (const auto &row : w)
      for (double x : row) wm = std::max(wm, std::abs(x));
    if (wm == 0.0) wm = 1.0;
  }
  const double g_off = device.g_off();
  const double g_on = device.g_on();
  const double span = g_on - g_off;

  auto snap = [&](double g) {
    if (n_levels == 0) return g;
    const double steps = n_levels - 1;
    const double k = std::round((g - g_off) / span * steps);
    return g_off + k / steps * span;
  };

  ConductanceTile t = ConductanceTile::zeros(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      const double x = w[i][j];
      const double g = snap(g_off + std::min(std::abs(x) / wm, 1.0) * span);
      t.pos(i, j) = x > 0.0 ? g : g_off;
      t.neg(i, j) = x < 0.0 ? g : g_off;
    }
  return t;
}

std::size_t mlp_tile_count(const std::vector<int> &layer_dims, int rows, int cols) {
  if (layer_dims.size() < 2) throw ContractError("MLP needs at least two layer dims");
  if (rows < 1 || cols < 1) throw ContractError("crossbar dims must be positive");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const std::size_t r = (layer_dims[l] + rows - 1) / rows;
    const std::size_t c = (layer_dims[l + 1] + cols - 1) / cols;
    total += r * c;
  }
  return total;
}

double tile_area(const DesignPoint &dp, const AreaParams &p, const DeviceRegistry &reg) {
  const BitcellKind &bc = reg.bitcell(dp.bitcell);
  const double f_scale = std::pow(static_cast<double>(dp.tech_nm), p.node_scaling_exponent);
  const double cells = 2.0 * dp.rows * dp.cols * p.cell_coeff * bc.cell_area_factor * f_scale;
  const int h = dp.partition.h_parts, v = dp.partition.v_parts;
  const double periph = static_cast<double>(h) * v *
                        (p.periph_fixed + p.periph_per_row * (static_cast<double>(dp.rows) / h) +
                         p.periph_per_col * (static_cast<double>(dp.cols) / v));
  return cells + periph;
}

double area_estimate(const DesignPoint &dp, const AreaParams &p, const DeviceRegistry &reg,
                     const std::vector<int> &layer_dims) {
  p.validate();
  dp.validate();
  const double a =
      static_cast<double>(mlp_tile_count(layer_dims, dp.rows, dp.cols)) * tile_area(dp, p, reg);
  if (!(a > 0.0)) throw SolveError("area model produced non-positive area");
  return a;
}

namespace {

// Lawson-Hanson non-negative least squares; fine for a handful of unknowns.
Eigen::VectorXd nnls(const Eigen::MatrixXd &A, const Eigen::VectorXd &b) {
  const int n = static_cast<int>(A.cols());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(n, false);
  for (int iter = 0; iter < 10 * n + 10; ++iter) {
    Eigen::VectorXd grad = A.transpose() * (b - A * x);
    int best = -1;
    double best_g = 1e-12;
    for (int i = 0; i < n; ++i)
      if (!passive[i] && grad[i] > best_g) {
        best_g = grad[i];
        best = i;
      }
    if (best < 0) break;
    passive[best] = true;
    while (true) {
      std::vector<int> idx;
      for (int i = 0; i < n; ++i)
        if (passive[i]) idx.push_back(i);
      Eigen::MatrixXd Ap(A.rows(), idx.size());
      for (std::size_t k = 0; k < idx.size(); ++k) Ap.col(k) = A.col(idx[k]);
      Eigen::VectorXd z = Ap.colPivHouseholderQr().solve(b);
      bool all_pos = true;
      for (int k = 0; k < z.size(); ++k)
        if (z[k] <= 0.0) all_pos = false;
      if (all_pos) {
        x.setZero();
        for (std::size_t k = 0; k < idx.size(); ++k) x[idx[k]] = z[k];
        break;
      }
      // step back to the feasible boundary and drop the blocking variable
      double alpha = 1.0;
      for (std::size_t k = 0; k < idx.size(); ++k)
        if (z[k] <= 0.0) alpha = std::min(alpha, x[idx[k]] / (x[idx[k]] - z[k]));
      for (std::size_t k = 0; k < idx.size(); ++k)
        x[idx[k]] += alpha * (z[k] - x[idx[k]]);
      for (int i = 0; i < n; ++i)
        if (passive[i] && x[i] <= 1e-14) {
          passive[i] = false;
          x[i] = 0.0;
        }
    }
  }
  return x;
}

struct FitRow {
  double cells_unit; // T * 2*R*C*caf (multiply by F^e at fit time)
  double f_nm;
  double fixed_unit;
  double row_unit;
  double col_unit;
  double area;
};

double fit_for_exponent(const std::vector<FitRow> &rows, double e, AreaParams *out,
                        const std::vector<double> *weights = nullptr) {
  Eigen::MatrixXd A(rows.size(), 4);
  Eigen::VectorXd b(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const FitRow &r = rows[i];
    const double s = weights ? std::sqrt((*weights)[i]) : 1.0;
    A(i, 0) = s * r.cells_unit * std::pow(r.f_nm, e) / r.area;
    A(i, 1) = s * r.fixed_unit / r.area;
    A(i, 2) = s * r.row_unit / r.area;
    A(i, 3) = s * r.col_unit / r.area;
    b(i) = s;
  }
  Eigen::VectorXd x = nnls(A, b);
  if (out) {
    out->cell_coeff = x[0];
    out->periph_fixed = x[1];
    out->periph_per_row = x[2];
    out->periph_per_col = x[3];
    out->node_scaling_exponent = e;
  }
  return (A * x - b).squaredNorm();
}

// least-squares fit (optionally Lawson-weighted) over exponent grid + refinement
AreaParams best_fit(const std::vector<FitRow> &rows, const std::vector<double> *weights) {
  double best_e = 2.0, best_obj = std::numeric_limits<double>::infinity();
  for (double e = 0.0; e <= 4.0 + 1e-9; e += 0.05) {
    const double obj = fit_for_exponent(rows, e, nullptr, weights);
    if (obj < best_obj) {
      best_obj = obj;
      best_e = e;
    }
  }
  double lo = std::max(0.0, best_e - 0.05), hi = std::min(4.0, best_e + 0.05);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
  double fa = fit_for_exponent(rows, a, nullptr, weights);
  double fb = fit_for_exponent(rows, b, nullptr, weights);
  while (hi - lo > 1e-12) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - phi * (hi - lo);
      fa = fit_for_exponent(rows, a, nullptr, weights);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + phi * (hi - lo);
      fb = fit_for_exponent(rows, b, nullptr, weights);
    }
  }
  AreaParams params;
  fit_for_exponent(rows, (lo + hi) / 2.0, &params, weights);
  return params;
}

double max_rel_residual(const std::vector<FitRow> &rows, const AreaParams &p) {
  double worst = 0.0;
  for (const FitRow &r : rows) {
    const double got = p.cell_coeff * r.cells_unit * std::pow(r.f_nm, p.node_scaling_exponent) +
                       p.periph_fixed * r.fixed_unit + p.periph_per_row * r.row_unit +
                       p.periph_per_col * r.col_unit;
    worst = std::max(worst, std::abs(got - r.area) / r.area);
  }
  return worst;
}

} // namespace

AreaParams calibrate_area_model(const std::vector<std::pair<DesignPoint, double>> &reference,
                                const DeviceRegistry &reg,
                                const std::vector<int> &layer_dims) {
  if (reference.size() < 5)
    throw ConfigError("underdetermined: area calibration needs at least 5 reference rows");
  bool varied = false;
  for (const auto &[dp, a] : reference) {
    if (!(a > 0.0)) throw ConfigError("non-positive reference area");
    if (a != reference.front().second) varied = true;
  }
  if (!varied) throw ConfigError("degenerate calibration data: all reference areas identical");

  std::vector<FitRow> rows;
  rows.reserve(reference.size());
  for (const auto &[dp, area] : reference) {
    const BitcellKind &bc = reg.bitcell(dp.bitcell);
    const double T = static_cast<double>(mlp_tile_count(layer_dims, dp.rows, dp.cols));
    const int h = dp.partition.h_parts, v = dp.partition.v_parts;
    FitRow r;
    r.cells_unit = T * 2.0 * dp.rows * dp.cols * bc.cell_area_factor;
    r.f_nm = static_cast<double>(dp.tech_nm);
    r.fixed_unit = T * h * v;
    r.row_unit = T * h * v * (static_cast<double>(dp.rows) / h);
    r.col_unit = T * h * v * (static_cast<double>(dp.cols) / v);
    r.area = area;
    rows.push_back(r);
  }

  // least-squares fit, then Lawson reweighting toward the minimax (Chebyshev)
  // solution so single inconsistent reference rows cannot dominate the
  // worst-case residual
  AreaParams params = best_fit(rows, nullptr);
  double best_minimax = max_rel_residual(rows, params);
  std::vector<double> weights(rows.size(), 1.0 / double(rows.size()));
  for (int iter = 0; iter < 40 && best_minimax > 1e-9; ++iter) {
    AreaParams trial = best_fit(rows, &weights);
    const double worst = max_rel_residual(rows, trial);
    if (worst < best_minimax) {
      best_minimax = worst;
      params = trial;
    }
    // Lawson update: scale each weight by its relative residual
    double sum = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const FitRow &r = rows[i];
      const double got =
          trial.cell_coeff * r.cells_unit * std::pow(r.f_nm, trial.node_scaling_exponent) +
          trial.periph_fixed * r.fixed_unit + trial.periph_per_row * r.row_unit +
          trial.periph_per_col * r.col_unit;
      weights[i] *= std::abs(got - r.area) / r.area + 1e-12;
      sum += weights[i];
    }
    for (double &w : weights) w /= sum;
  }
  params.validate();
  return params;
}

namespace {

double apply_activation(double x, Activation act) {
  return act == Activation::ReLU ? std::max(0.0, x) : 1.0 / (1.0 + std::exp(-x));
}

// One layer's mapping onto crossbar tiles: the weight matrix is augmented
// with the bias as an always-on input row, then cut into dp-sized tiles.
struct LayerPlan {
  int d_in = 0;  // without bias row
  int d_out = 0;
  double w_max = 1.0;
  struct Tile {
    int row0 = 0, col0 = 0;
    ConductanceTile g;
    std::unique_ptr<PatternSolver> solver; // null on the ideal path
  };
  std::vector<Tile> tiles;
};

struct NetworkPlan {
  std::vector<LayerPlan> layers;
  Activation activation = Activation::Sigmoid;
  int adc_levels = 0; // 0 = analog
  double vdd = 1.0;
  double g_span = 1.0; // g_on - g_off of the mapped device
};

NetworkPlan plan_network(const DesignPoint &dp, const MlpWeights &w, const DeviceRegistry &reg,
                         const InferenceOptions &opts, bool build_solvers) {
  w.validate();
  dp.validate();
  const DeviceKind &device = reg.device(dp.device);
  const BitcellKind &bitcell = reg.bitcell(dp.bitcell);
  const int n_levels = dp.mode == BitMode::Digital ? (1 << dp.bits) : 0;

  NetworkPlan plan;
  plan.activation = w.activation;
  plan.adc_levels = n_levels;
  plan.vdd = opts.vdd;
  plan.g_span = device.g_on() - device.g_off();

  GenerateOptions gen;
  gen.vdd = opts.vdd;
  gen.g_min = device.g_off();
  gen.g_max = device.g_on();
  if (opts.fidelity == Fidelity::FullParasitic) {
    gen.wire_r = reg.tech(dp.tech_nm).wire_r_per_segment;
    gen.access_resistance = bitcell.access_resistance;
    gen.num_access_transistors = bitcell.num_access_transistors;
  } else {
    gen.wire_r = 0.0;
    gen.access_resistance = 0.0;
    gen.num_access_transistors = bitcell.num_access_transistors;
  }

  for (std::size_t l = 0; l + 1 < w.layer_dims.size(); ++l) {
    LayerPlan lp;
    lp.d_in = w.layer_dims[l];
    lp.d_out = w.layer_dims[l + 1];
    const int aug_in = lp.d_in + 1; // bias row

    double wm = 0.0;
    for (double x : w.matrices[l]) wm = std::max(wm, std::abs(x));
    for (double x : w.biases[l]) wm = std::max(wm, std::abs(x));
    lp.w_max = wm > 0.0 ? wm : 1.0;

    for (int r0 = 0; r0 < aug_in; r0 += dp.rows) {
      for (int c0 = 0; c0 < lp.d_out; c0 += dp.cols) {
        std::vector<std::vector<double>> wt(dp.rows, std::vector<double>(dp.cols, 0.0));
        for (int i = 0; i < dp.rows && r0 + i < aug_in; ++i)
          for (int j = 0; j < dp.cols && c0 + j < lp.d_out; ++j) {
            const int gi = r0 + i, gj = c0 + j;
            wt[i][j] = gi < lp.d_in ? w.matrices[l][std::size_t(gj) * lp.d_in + gi]
                                    : w.biases[l][gj];
          }
        LayerPlan::Tile tile;
        tile.row0 = r0;
        tile.col0 = c0;
        tile.g = map_weights_to_conductance(wt, device, n_levels, lp.w_max);
        if (build_solvers) {
          Netlist nl = generate_crossbar_netlist(dp, tile.g, gen,
                                                 std::vector<double>(dp.rows, 0.0));
          tile.solver = std::make_unique<PatternSolver>(nl, opts.solver);
        }
        lp.tiles.push_back(std::move(tile));
      }
    }
    plan.layers.push_back(std::move(lp));
  }
  return plan;
}

// forward pass; returns argmax class, accumulates source power if power != null
int forward(const NetworkPlan &plan, const DesignPoint &dp, const std::vector<double> &image,
            double *power, std::size_t layer_index_base = 0) {
  std::vector<double> act = image;
  std::vector<double> pre;
  for (std::size_t l = 0; l < plan.layers.size(); ++l) {
    const LayerPlan &lp = plan.layers[l];
    if (static_cast<int>(act.size()) != lp.d_in)
      throw ContractError("activation length " + std::to_string(act.size()) +
                          " does not match layer input " + std::to_string(lp.d_in) +
                          " at layer " + std::to_string(layer_index_base + l));
    // augmented drive voltages
    std::vector<double> aug(act.size() + 1);
    for (std::size_t i = 0; i < act.size(); ++i) {
      double a = act[i];
      if (plan.adc_levels > 0) a = dac_quantize(std::clamp(a, 0.0, 1.0), dp.bits, 1.0);
      aug[i] = a * plan.vdd;
    }
    aug[act.size()] = plan.vdd; // always-on bias row

    pre.assign(lp.d_out, 0.0);
    for (const auto &tile : lp.tiles) {
      std::vector<double> v(dp.rows, 0.0);
      for (int i = 0; i < dp.rows; ++i)
        if (tile.row0 + i < static_cast<int>(aug.size())) v[i] = aug[tile.row0 + i];
      std::vector<double> currents;
      if (tile.solver) {
        try {
          SolveReport rep = tile.solver->solve_pattern(v);
          currents = rep.column_currents;
          if (power) *power += rep.total_power;
        } catch (const SolveError &e) {
          throw SolveError("layer " + std::to_string(layer_index_base + l) + " tile (" +
                           std::to_string(tile.row0) + "," + std::to_string(tile.col0) +
                           "): " + e.what());
        }
      } else {
        currents = ideal_mac(v, tile.g);
        if (power) *power += ideal_power(v, tile.g);
      }
      for (int j = 0; j < dp.cols && tile.col0 + j < lp.d_out; ++j)
        pre[tile.col0 + j] += currents[j];
    }
    // documented affine readout: current -> weighted activation sum,
    // I_j * w_max / (vdd * (g_on - g_off)) = sum_i a_i w_ij at zero parasitics
    const double scale = lp.w_max / (plan.vdd * plan.g_span);
    for (double &x : pre) x *= scale;
    if (l + 1 < plan.layers.size()) {
      act.assign(lp.d_out, 0.0);
      for (int j = 0; j < lp.d_out; ++j) {
        double a = apply_activation(pre[j], plan.activation);
        if (plan.adc_levels > 0) a = dac_quantize(std::clamp(a, 0.0, 1.0), dp.bits, 1.0);
        act[j] = a;
      }
    }
  }
  int best = 0;
  for (std::size_t j = 1; j < pre.size(); ++j)
    if (pre[j] > pre[best]) best = static_cast<int>(j);
  return best;
}

} // namespace

int infer_float(const MlpWeights &w, const std::vector<double> &image) {
  w.validate();
  if (static_cast<int>(image.size()) != w.layer_dims.front())
    throw ContractError("image length does not match network input size");
  std::vector<double> act = image;
  std::vector<double> pre;
  for (std::size_t l = 0; l < w.matrices.size(); ++l) {
    const int in = w.layer_dims[l], out = w.layer_dims[l + 1];
    pre.assign(out, 0.0);
    for (int i = 0; i < in; ++i) {
      const double a = act[i];
      if (a == 0.0) continue;
      for (int j = 0; j < out; ++j) pre[j] += a * w.matrices[l][std::size_t(j) * in + i];
    }
    for (int j = 0; j < out; ++j) pre[j] += w.biases[l][j];
    if (l + 1 < w.matrices.size()) {
      act.assign(out, 0.0);
      for (int j = 0; j < out; ++j) act[j] = apply_activation(pre[j], w.activation);
    }
  }
  int best = 0;
  for (std::size_t j = 1; j < pre.size(); ++j)
    if (pre[j] > pre[best]) best = static_cast<int>(j);
  return best;
}

int infer_analog(const DesignPoint &dp, const MlpWeights &w, const std::vector<double> &image,
                 const DeviceRegistry &reg, const InferenceOptions &opts) {
  if (static_cast<int>(image.size()) != w.layer_dims.front())
    throw ContractError("image length does not match network input size");
  NetworkPlan plan =
      plan_network(dp, w, reg, opts, opts.fidelity == Fidelity::FullParasitic);
  return forward(plan, dp, image, nullptr);
}

EvalResult evaluate_design(const DesignPoint &dp, const MlpWeights &w, const ImageDataset &images,
                           std::size_t first, std::size_t count, const DeviceRegistry &reg,
                           const EvaluateParams &params) {
  if (count == 0 || first + count > images.size())
    throw ContractError("empty or out-of-range image slice for " + design_key(dp));
  const bool netlist_power =
      params.power_from_netlist || params.inference.fidelity == Fidelity::FullParasitic;
  NetworkPlan plan = plan_network(dp, w, reg, params.inference, netlist_power);

  std::size_t correct = 0;
  double power_sum = 0.0;
  for (std::size_t k = first; k < first + count; ++k) {
    double p = 0.0;
    int pred;
    try {
      pred = forward(plan, dp, images.images[k], &p);
    } catch (const std::exception &e) {
      throw SolveError(design_key(dp) + ": image " + std::to_string(k) + ": " + e.what());
    }
    if (pred == images.labels[k]) ++correct;
    power_sum += p;
  }

  EvalResult res;
  res.design = design_key(dp);
  res.area_um2 = area_estimate(dp, params.area, reg, w.layer_dims);
  res.accuracy_pct = 100.0 * static_cast<double>(correct) / static_cast<double>(count);
  res.avg_power_w = power_sum / static_cast<double>(count);
  res.n_images = static_cast<int>(count);
  res.n_patterns = static_cast<int>(count);
  res.source = ResultSource::InternalSolver;
  res.validate();
  return res;
}

} // namespace xbar
