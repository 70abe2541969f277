#pragma once

// Power-Area-Accuracy evaluation: weight-to-conductance mapping, the
// parametric area model with calibration, analog-mapped MLP inference and
// whole-design evaluation.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "xbar/circuit.hpp"
#include "xbar/design_space.hpp"
#include "xbar/mnist.hpp"
#include "xbar/netlist.hpp"

namespace xbar {

enum class Activation { Sigmoid, ReLU };

struct MlpWeights {
  std::vector<int> layer_dims = {400, 120, 84, 10};
  // matrices[l] is (layer_dims[l+1] x layer_dims[l]), row-major
  std::vector<std::vector<double>> matrices;
  std::vector<std::vector<double>> biases;
  Activation activation = Activation::Sigmoid;

  void validate() const;
  static MlpWeights load_json(const std::string &path);
  void save_json(const std::string &path) const;
  // deterministic synthetic weights for tests and demos
  static MlpWeights synthetic(const std::vector<int> &dims, std::uint64_t seed,
                              Activation act = Activation::Sigmoid);
};

struct AreaParams {
  double cell_coeff = 0.0;      // um^2 per cell at F = 1 nm, before node scaling
  double periph_fixed = 0.0;    // um^2 per crossbar partition
  double periph_per_row = 0.0;  // um^2 per row line
  double periph_per_col = 0.0;  // um^2 per column line
  double node_scaling_exponent = 2.0;

  void validate() const;
};

enum class ResultSource { InternalSolver, PaperTable, External };

std::string result_source_name(ResultSource s);
ResultSource result_source_from_name(const std::string &s);

struct EvalResult {
  std::string design; // design_key
  double area_um2 = 0.0;
  double accuracy_pct = 0.0;
  double avg_power_w = 0.0;
  int n_images = 0;
  int n_patterns = 0;
  ResultSource source = ResultSource::InternalSolver;

  void validate() const;
};

// Differential mapping: positive weights onto g_pos, negative magnitudes onto
// g_neg, the idle polarity at g_off. |w| maps linearly onto [g_off, g_on];
// digital mode snaps to the nearest of n_levels uniform conductance levels.
// w_max <= 0 means "use max |w| over the tile" (1 if the tile is all zero).
ConductanceTile map_weights_to_conductance(const std::vector<std::vector<double>> &w,
                                           const DeviceKind &device, int n_levels,
                                           double w_max = 0.0);

// Number of rows x cols crossbar pairs needed to map the given MLP topology
// (ceiling-division tiling per layer).
std::size_t mlp_tile_count(const std::vector<int> &layer_dims, int rows, int cols);

// Whole-design area for the evaluation MLP: tile count times per-tile area.
// Per-tile area is strictly increasing in rows*cols and in cell_area_factor.
double area_estimate(const DesignPoint &dp, const AreaParams &p, const DeviceRegistry &reg,
                     const std::vector<int> &layer_dims = {400, 120, 84, 10});
double tile_area(const DesignPoint &dp, const AreaParams &p, const DeviceRegistry &reg);

// Bounded least squares on relative error: non-negative linear coefficients,
// scalar search over the node-scaling exponent. Deterministic.
AreaParams calibrate_area_model(const std::vector<std::pair<DesignPoint, double>> &reference,
                                const DeviceRegistry &reg,
                                const std::vector<int> &layer_dims = {400, 120, 84, 10});

enum class Fidelity { IdealMac, FullParasitic };

struct InferenceOptions {
  Fidelity fidelity = Fidelity::IdealMac;
  double vdd = 1.0;
  // Parasitic/bitcell values come from the registry for FullParasitic;
  // IdealMac evaluates the zero-parasitic ideal-switch network.
  SolverOptions solver;
};

// Forward pass through dp-sized crossbar tiles; returns the predicted class
// (argmax, ties to the lowest index).
int infer_analog(const DesignPoint &dp, const MlpWeights &w, const std::vector<double> &image,
                 const DeviceRegistry &reg, const InferenceOptions &opts = {});

// Plain floating-point forward pass, the reference oracle for inference.
int infer_float(const MlpWeights &w, const std::vector<double> &image);

struct EvaluateParams {
  AreaParams area;
  InferenceOptions inference;
  bool power_from_netlist = true; // false: closed-form ideal power accounting
};

EvalResult evaluate_design(const DesignPoint &dp, const MlpWeights &w, const ImageDataset &images,
                           std::size_t first, std::size_t count, const DeviceRegistry &reg,
                           const EvaluateParams &params);

} // namespace xbar
