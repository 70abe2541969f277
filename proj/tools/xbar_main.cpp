// Command-line front end for the crossbar design-space exploration engine.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"
#include "xbar/circuit.hpp"
#include "xbar/design_space.hpp"
#include "xbar/dse.hpp"
#include "xbar/errors.hpp"
#include "xbar/llm.hpp"
#include "xbar/mnist.hpp"
#include "xbar/netlist.hpp"
#include "xbar/paa.hpp"
#include "xbar/verify.hpp"

using nlohmann::json;
using namespace xbar;

namespace {

constexpr const char *kToolVersion = "0.1.0";

struct GlobalOptions {
  std::string devices_config;
  std::uint64_t seed = 42;
  bool json_output = false;
  int parallel = 1;
};

DeviceRegistry load_registry(const GlobalOptions &g) {
  if (!g.devices_config.empty()) return DeviceRegistry::from_file(g.devices_config);
  return DeviceRegistry::defaults();
}

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << content;
}

std::string fnv1a_hex(const std::string &data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Deterministic stand-in dataset: random 20x20 images labeled by the float
// oracle, so accuracy measures hardware-induced degradation only.
ImageDataset synthetic_dataset(int count, std::uint64_t seed, const MlpWeights &w) {
  ImageDataset ds;
  ds.image_rows = 20;
  ds.image_cols = 20;
  std::mt19937_64 rng(seed ^ 0x5bf03635ull);
  std::uniform_real_distribution<double> pix(0.0, 1.0);
  for (int i = 0; i < count; ++i) {
    std::vector<double> img(400);
    for (double &p : img) p = pix(rng);
    ds.labels.push_back(infer_float(w, img));
    ds.images.push_back(std::move(img));
  }
  return ds;
}

MlpWeights load_or_synthesize_weights(const std::string &path, std::uint64_t seed) {
  if (!path.empty()) return MlpWeights::load_json(path);
  return MlpWeights::synthetic({400, 120, 84, 10}, seed);
}

ImageDataset load_or_synthesize_images(const std::string &images, const std::string &labels,
                                       int count, std::uint64_t seed, const MlpWeights &w) {
  if (!images.empty()) {
    if (labels.empty()) throw ConfigError("--images requires --labels");
    return load_mnist(images, labels);
  }
  return synthetic_dataset(count, seed, w);
}

AreaParams calibrated_area_params(const DeviceRegistry &reg) {
  std::vector<std::pair<DesignPoint, double>> reference;
  for (const auto &[key, r] : seed_paper_table().entries)
    reference.push_back({parse_design_key(key), r.area_um2});
  return calibrate_area_model(reference, reg);
}

Fidelity parse_fidelity(const std::string &s) {
  if (s == "ideal") return Fidelity::IdealMac;
  if (s == "parasitic") return Fidelity::FullParasitic;
  throw ConfigError("fidelity must be 'ideal' or 'parasitic', got '" + s + "'");
}

json result_to_json(const EvalResult &r) {
  json j;
  j["design_key"] = r.design;
  j["area_um2"] = r.area_um2;
  j["accuracy_pct"] = r.accuracy_pct;
  j["avg_power_w"] = r.avg_power_w;
  j["n_images"] = r.n_images;
  j["n_patterns"] = r.n_patterns;
  j["source"] = result_source_name(r.source);
  return j;
}

json diagnostics_to_json(const std::vector<Diagnostic> &diags) {
  json arr = json::array();
  for (const Diagnostic &d : diags) {
    json j;
    j["severity"] = d.severity == Severity::Error ? "error" : "warning";
    j["code"] = d.code;
    j["element"] = d.element_or_node;
    j["message"] = d.message;
    j["line"] = d.line;
    arr.push_back(j);
  }
  return arr;
}

// ---------------------------------------------------------------- enumerate

int cmd_enumerate(const GlobalOptions &g, const std::string &grid_path) {
  DeviceRegistry reg = load_registry(g);
  GridSpec grid = grid_path.empty() ? GridSpec::defaults() : GridSpec::from_file(grid_path);
  std::vector<DesignPoint> points = enumerate_grid(grid, reg);
  if (g.json_output) {
    json arr = json::array();
    for (const DesignPoint &dp : points) arr.push_back(design_key(dp));
    std::cout << arr.dump(2) << "\n";
  } else {
    for (const DesignPoint &dp : points) std::cout << design_key(dp) << "\n";
  }
  std::cerr << points.size() << " design points\n";
  return 0;
}

// ------------------------------------------------------------------ netlist

int cmd_netlist(const GlobalOptions &g, const std::string &key, const std::string &weights_path,
                const std::string &out_path, bool ideal, int layer, const std::string &polarity) {
  DeviceRegistry reg = load_registry(g);
  DesignPoint dp = parse_design_key(key);
  const DeviceKind &dev = reg.device(dp.device);
  const BitcellKind &bc = reg.bitcell(dp.bitcell);

  ConductanceTile tile = ConductanceTile::zeros(dp.rows, dp.cols);
  if (!weights_path.empty()) {
    MlpWeights w = MlpWeights::load_json(weights_path);
    if (layer < 0 || layer >= static_cast<int>(w.matrices.size()))
      throw ConfigError("--layer out of range for the weights file");
    const int out_dim = w.layer_dims[layer + 1], in_dim = w.layer_dims[layer];
    if (in_dim != dp.rows || out_dim != dp.cols)
      throw ConfigError("layer " + std::to_string(layer) + " is " + std::to_string(in_dim) + "x" +
                        std::to_string(out_dim) + "; design point wants " +
                        std::to_string(dp.rows) + "x" + std::to_string(dp.cols));
    std::vector<std::vector<double>> m(in_dim, std::vector<double>(out_dim));
    for (int i = 0; i < in_dim; ++i)
      for (int j = 0; j < out_dim; ++j) m[i][j] = w.matrices[layer][j * in_dim + i];
    tile = map_weights_to_conductance(m, dev, dp.mode == BitMode::Digital ? (1 << dp.bits) : 0);
  } else {
    std::mt19937_64 rng(g.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < dp.rows; ++i)
      for (int j = 0; j < dp.cols; ++j) {
        tile.pos(i, j) = dev.g_off() + u(rng) * (dev.g_on() - dev.g_off());
        tile.neg(i, j) = dev.g_off() + u(rng) * (dev.g_on() - dev.g_off());
      }
  }

  GenerateOptions opts;
  opts.wire_r = ideal ? 0.0 : reg.tech(dp.tech_nm).wire_r_per_segment;
  opts.access_resistance = ideal ? 0.0 : bc.access_resistance;
  opts.num_access_transistors = bc.num_access_transistors;
  opts.g_min = dev.g_off();
  opts.g_max = dev.g_on();
  std::vector<double> pattern(dp.rows, 1.0);
  Netlist n = generate_crossbar_netlist(dp, tile, opts, pattern);
  if (!polarity.empty()) n = single_polarity(n, polarity[0]);
  std::string text = emit_spice(n);
  if (out_path.empty()) std::cout << text;
  else write_file(out_path, text);
  std::cerr << "netlist: " << n.elements.size() << " elements, "
            << std::count(text.begin(), text.end(), '\n') << " lines\n";
  return 0;
}

// --------------------------------------------------------------- eval/sweep

struct EvalInputs {
  std::string weights_path;
  std::string images_path;
  std::string labels_path;
  int n_images = 50;
  std::string fidelity = "ideal";
};

EvalResult eval_point(const DesignPoint &dp, const MlpWeights &w, const ImageDataset &ds,
                      const DeviceRegistry &reg, const AreaParams &area,
                      const std::string &fidelity, std::size_t count) {
  EvaluateParams params;
  params.area = area;
  params.inference.fidelity = parse_fidelity(fidelity);
  return evaluate_design(dp, w, ds, 0, count, reg, params);
}

int cmd_eval(const GlobalOptions &g, const std::string &key, const EvalInputs &in) {
  DeviceRegistry reg = load_registry(g);
  DesignPoint dp = parse_design_key(key);
  MlpWeights w = load_or_synthesize_weights(in.weights_path, g.seed);
  ImageDataset ds = load_or_synthesize_images(in.images_path, in.labels_path, in.n_images, g.seed, w);
  AreaParams area = calibrated_area_params(reg);
  EvalResult r = eval_point(dp, w, ds, reg, area, in.fidelity,
                            std::min<std::size_t>(in.n_images, ds.size()));
  if (g.json_output) std::cout << result_to_json(r).dump(2) << "\n";
  else
    std::cout << r.design << " area=" << r.area_um2 << "um2 accuracy=" << r.accuracy_pct
              << "% power=" << r.avg_power_w << "W (" << r.n_images << " images)\n";
  return 0;
}

int cmd_sweep(const GlobalOptions &g, const std::string &grid_path,
              const std::string &designs_path, const EvalInputs &in, const std::string &out_path,
              const std::string &manifest_path) {
  const auto t0 = std::chrono::steady_clock::now();
  DeviceRegistry reg = load_registry(g);

  std::vector<DesignPoint> points;
  if (!designs_path.empty()) {
    std::istringstream keys(read_file(designs_path));
    std::string line;
    while (std::getline(keys, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      if (!line.empty()) points.push_back(parse_design_key(line));
    }
  } else {
    GridSpec grid = grid_path.empty() ? GridSpec::defaults() : GridSpec::from_file(grid_path);
    points = enumerate_grid(grid, reg);
  }
  if (points.empty()) throw ConfigError("no design points to sweep");

  MlpWeights w = load_or_synthesize_weights(in.weights_path, g.seed);
  ImageDataset ds = load_or_synthesize_images(in.images_path, in.labels_path, in.n_images, g.seed, w);
  AreaParams area = calibrated_area_params(reg);
  const std::size_t count = std::min<std::size_t>(in.n_images, ds.size());

  std::vector<std::optional<EvalResult>> results(points.size());
  std::vector<std::pair<std::string, std::string>> failures;
  std::mutex failures_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < points.size(); i = next.fetch_add(1)) {
      try {
        results[i] = eval_point(points[i], w, ds, reg, area, in.fidelity, count);
      } catch (const std::exception &e) {
        std::lock_guard<std::mutex> lock(failures_mutex);
        failures.push_back({design_key(points[i]), e.what()});
      }
    }
  };
  const int workers = std::max(1, g.parallel);
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread &t : pool) t.join();

  Repository repo;
  for (const auto &r : results)
    if (r) repo.entries[r->design] = *r;
  const std::string csv = format_repository_csv(repo);
  write_file(out_path, csv);

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json manifest;
  {
    std::ostringstream cmdline;
    cmdline << "sweep --out " << out_path << " --fidelity " << in.fidelity << " --n-images "
            << in.n_images << " --seed " << g.seed << " --parallel " << g.parallel;
    manifest["command_line"] = cmdline.str();
    manifest["tool_version"] = kToolVersion;
    manifest["duration_s"] = seconds;
    manifest["points"] = points.size();
    manifest["evaluated"] = repo.entries.size();
    manifest["result_files"] = {out_path};
    manifest["output_digest"] = fnv1a_hex(csv);
    json inputs = json::object();
    if (!in.weights_path.empty()) inputs["weights"] = fnv1a_hex(read_file(in.weights_path));
    if (!in.images_path.empty()) inputs["images"] = fnv1a_hex(read_file(in.images_path));
    if (!grid_path.empty()) inputs["grid"] = fnv1a_hex(read_file(grid_path));
    if (!designs_path.empty()) inputs["designs"] = fnv1a_hex(read_file(designs_path));
    if (!g.devices_config.empty()) inputs["devices"] = fnv1a_hex(read_file(g.devices_config));
    manifest["input_digests"] = inputs;
    json fail = json::array();
    for (const auto &[key, msg] : failures) fail.push_back({{"design", key}, {"error", msg}});
    manifest["failures"] = fail;
  }
  if (!manifest_path.empty()) write_file(manifest_path, manifest.dump(2) + "\n");
  std::cerr << "sweep: " << repo.entries.size() << "/" << points.size() << " points in " << seconds
            << " s\n";
  return failures.empty() ? 0 : 1;
}

// ---------------------------------------------------------------- repo ops

int cmd_seed_paper(const GlobalOptions &g, const std::string &out_path) {
  Repository repo = seed_paper_table();
  const std::string csv = format_repository_csv(repo);
  if (out_path.empty()) std::cout << csv;
  else write_file(out_path, csv);
  std::cerr << "seeded " << repo.entries.size() << " reference entries\n";
  return 0;
}

int print_selection(const GlobalOptions &g, const Repository &repo, const RankedSelection &sel,
                    int top) {
  if (g.json_output) {
    json j;
    j["query"] = query_to_json(sel.query_echo);
    json entries = json::array();
    for (std::size_t i = 0; i < sel.entries.size() && (top <= 0 || i < std::size_t(top)); ++i) {
      const RankedEntry &e = sel.entries[i];
      json row = result_to_json(repo.entries.at(e.design_key));
      row["score"] = e.score;
      entries.push_back(row);
    }
    j["entries"] = entries;
    if (sel.nearest_miss) {
      json miss;
      miss["design_key"] = sel.nearest_miss->design_key;
      json v = json::array();
      for (const auto &[text, amount] : sel.nearest_miss->violation_by_constraint)
        v.push_back({{"constraint", text}, {"overshoot", amount}});
      miss["violations"] = v;
      j["nearest_miss"] = miss;
    }
    std::cout << j.dump(2) << "\n";
  } else if (sel.entries.empty()) {
    std::cout << "no feasible design\n";
    if (sel.nearest_miss) {
      std::cout << "nearest miss: " << sel.nearest_miss->design_key << "\n";
      for (const auto &[text, amount] : sel.nearest_miss->violation_by_constraint)
        std::cout << "  " << text << " violated by " << format_spice_value(amount) << "\n";
    }
  } else {
    for (std::size_t i = 0; i < sel.entries.size() && (top <= 0 || i < std::size_t(top)); ++i) {
      const RankedEntry &e = sel.entries[i];
      const EvalResult &r = repo.entries.at(e.design_key);
      std::cout << (i + 1) << ". " << e.design_key << " score=" << e.score
                << " power=" << r.avg_power_w << "W area=" << r.area_um2
                << "um2 accuracy=" << r.accuracy_pct << "%\n";
    }
  }
  return sel.entries.empty() ? 1 : 0;
}

int cmd_query(const GlobalOptions &g, const std::string &repo_path, const std::string &dsl,
              const std::string &dsl_file, int top) {
  Repository repo = repo_path.empty() ? seed_paper_table() : load_repository(repo_path);
  const std::string text = dsl_file.empty() ? dsl : read_file(dsl_file);
  if (text.empty()) throw ConfigError("provide --dsl or --dsl-file");
  ConstraintQuery q = parse_query_dsl(text);
  return print_selection(g, repo, rank(repo, q), top);
}

int cmd_pareto(const GlobalOptions &g, const std::string &repo_path,
               const std::string &objectives) {
  Repository repo = repo_path.empty() ? seed_paper_table() : load_repository(repo_path);
  ConstraintQuery q = parse_query_dsl(objectives);
  std::vector<std::string> front = pareto_front(repo, q.soft);
  if (g.json_output) {
    json arr = json::array();
    for (const std::string &key : front) arr.push_back(result_to_json(repo.entries.at(key)));
    std::cout << arr.dump(2) << "\n";
  } else {
    for (const std::string &key : front) std::cout << key << "\n";
  }
  std::cerr << front.size() << " Pareto-optimal designs\n";
  return 0;
}

// ------------------------------------------------------------------ verify

ConductanceTile tile_from_netlist(const Netlist &n, int rows, int cols) {
  ConductanceTile tile = ConductanceTile::zeros(rows, cols);
  for (const Element &e : n.elements) {
    if (e.kind != ElementKind::Resistor || e.name.find("mem") == std::string::npos) continue;
    char q;
    int i, j;
    if (std::sscanf(e.name.c_str(), "R%cmem_r%d_c%d", &q, &i, &j) != 3) continue;
    if (i < 0 || i >= rows || j < 0 || j >= cols) continue;
    const double g = e.value > 0.0 ? 1.0 / e.value : 0.0;
    if (q == 'p') tile.pos(i, j) = g >= 1e-11 ? g : 0.0;
    else if (q == 'n') tile.neg(i, j) = g >= 1e-11 ? g : 0.0;
  }
  return tile;
}

int cmd_verify(const GlobalOptions &g, const std::string &netlist_path, const std::string &key,
               bool dynamic) {
  DeviceRegistry reg = load_registry(g);
  DesignPoint dp = parse_design_key(key);
  Netlist n = parse_spice(read_file(netlist_path));
  std::vector<Diagnostic> diags = static_check(n, dp, reg);
  if (dynamic && !has_errors(diags)) {
    ConductanceTile tile = tile_from_netlist(n, dp.rows, dp.cols);
    std::vector<std::vector<double>> vectors;
    vectors.push_back(std::vector<double>(dp.rows, 1.0));
    std::vector<double> alternating(dp.rows, 0.0);
    for (int i = 0; i < dp.rows; i += 2) alternating[i] = 1.0;
    vectors.push_back(alternating);
    auto dyn = dynamic_check(n, dp, tile, vectors);
    diags.insert(diags.end(), dyn.begin(), dyn.end());
  }
  if (g.json_output) {
    std::cout << diagnostics_to_json(diags).dump(2) << "\n";
  } else if (diags.empty()) {
    std::cout << "clean\n";
  } else {
    for (const Diagnostic &d : diags)
      std::cout << (d.severity == Severity::Error ? "ERROR " : "WARN  ") << d.code << " "
                << d.element_or_node << ": " << d.message << "\n";
  }
  return has_errors(diags) ? 1 : 0;
}

// --------------------------------------------------------------- llm/passk

int cmd_llm_query(const GlobalOptions &g, const std::string &prompt,
                  const std::string &endpoint_path, const std::string &repo_path, int top) {
  EndpointConfig cfg = EndpointConfig::from_file(endpoint_path);
  Extraction ex = extract_query(prompt, cfg);
  std::cerr << "extracted query in " << ex.attempts << " attempt(s)\n";
  if (repo_path.empty()) {
    std::cout << query_to_json(ex.query).dump(2) << "\n";
    return 0;
  }
  Repository repo = load_repository(repo_path);
  return print_selection(g, repo, rank(repo, ex.query), top);
}

int cmd_passk(const GlobalOptions &g, const std::string &tasks_path, int k,
              const std::string &endpoint_path, bool use_dsl, const std::string &repo_path) {
  std::vector<PassKTask> tasks = load_passk_tasks(tasks_path);
  Repository repo = repo_path.empty() ? seed_paper_table() : load_repository(repo_path);
  QueryBackend backend;
  if (use_dsl) backend = dsl_backend();
  else if (!endpoint_path.empty()) backend = llm_backend(EndpointConfig::from_file(endpoint_path));
  else throw ConfigError("provide --endpoint <cfg.toml> or --dsl");
  PassKReport report = passk_harness(tasks, k, backend, repo);

  json j;
  j["k"] = report.k;
  j["pass_at_1"] = report.pass_at_1;
  j["pass_at_k"] = report.pass_at_k;
  json per_task = json::array();
  for (const TaskOutcome &t : report.tasks) {
    json row;
    row["id"] = t.id;
    row["category"] = t.category;
    if (t.first_success) row["first_success"] = *t.first_success;
    else row["first_success"] = nullptr;
    per_task.push_back(row);
  }
  j["tasks"] = per_task;
  std::cout << j.dump(2) << "\n";
  return 0;
}

// ------------------------------------------------------------------ report

int cmd_report(const GlobalOptions &g, const std::string &repo_path, const std::string &csv_out) {
  Repository repo = repo_path.empty() ? seed_paper_table() : load_repository(repo_path);
  if (repo.entries.empty()) {
    std::cout << "empty repository\n";
    return 1;
  }

  struct Group {
    std::vector<double> power, area, accuracy;
  };
  std::map<std::string, std::map<std::string, Group>> axes; // axis -> value -> samples
  for (const auto &[key, r] : repo.entries) {
    DesignPoint dp = parse_design_key(key);
    const std::map<std::string, std::string> labels = {
        {"tech", std::to_string(dp.tech_nm) + "nm"},
        {"device", dp.device},
        {"bitcell", dp.bitcell},
        {"size", std::to_string(dp.rows) + "x" + std::to_string(dp.cols)},
        {"mode", bit_mode_name(dp.mode)},
    };
    for (const auto &[axis, value] : labels) {
      Group &grp = axes[axis][value];
      grp.power.push_back(r.avg_power_w);
      grp.area.push_back(r.area_um2);
      grp.accuracy.push_back(r.accuracy_pct);
    }
  }
  auto stats = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const double median = v.size() % 2 ? v[v.size() / 2]
                                       : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
    return std::array<double, 3>{v.front(), median, v.back()};
  };

  std::ostringstream csv;
  csv << "axis,value,metric,min,median,max\n";
  json jout;
  for (const auto &[axis, groups] : axes) {
    for (const auto &[value, grp] : groups) {
      const std::map<std::string, const std::vector<double> *> metrics = {
          {"power_w", &grp.power}, {"area_um2", &grp.area}, {"accuracy_pct", &grp.accuracy}};
      for (const auto &[metric, samples] : metrics) {
        auto [mn, med, mx] = stats(*samples);
        csv << axis << "," << value << "," << metric << "," << format_spice_value(mn) << ","
            << format_spice_value(med) << "," << format_spice_value(mx) << "\n";
        jout[axis][value][metric] = {{"min", mn}, {"median", med}, {"max", mx}};
      }
    }
  }

  std::vector<SoftObjective> objectives = {
      {Metric::Power, Direction::Minimize, 1.0},
      {Metric::Area, Direction::Minimize, 1.0},
      {Metric::Accuracy, Direction::Maximize, 1.0},
  };
  std::vector<std::string> front = pareto_front(repo, objectives);
  jout["pareto_front"] = front;

  if (!csv_out.empty()) write_file(csv_out, csv.str());
  if (g.json_output) {
    std::cout << jout.dump(2) << "\n";
  } else {
    std::cout << csv.str();
    std::cout << "pareto front (" << front.size() << "):\n";
    for (const std::string &key : front) std::cout << "  " << key << "\n";
  }
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Resistive-crossbar accelerator design-space exploration"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  GlobalOptions g;
  app.add_option("--config", g.devices_config, "Device/tech registry TOML")->configurable(false);
  app.add_option("--seed", g.seed, "Seed for all synthetic randomness (default 42)");
  app.add_flag("--json", g.json_output, "Machine-readable JSON output");
  app.add_option("--parallel", g.parallel, "Worker threads for sweeps");
  app.fallthrough();

  // enumerate
  auto *enumerate = app.add_subcommand("enumerate", "List design points of a grid");
  std::string grid_path;
  enumerate->add_option("--grid", grid_path, "Grid TOML file");

  // netlist
  auto *netlist = app.add_subcommand("netlist", "Generate a crossbar netlist");
  std::string nl_key, nl_weights, nl_out, nl_polarity;
  bool nl_ideal = false;
  int nl_layer = 0;
  netlist->add_option("--design", nl_key, "Design key")->required();
  netlist->add_option("--weights", nl_weights, "MLP weights JSON (omit for a random tile)");
  netlist->add_option("--layer", nl_layer, "Layer index within the weights file");
  netlist->add_option("--out", nl_out, "Output .sp path (default stdout)");
  netlist->add_flag("--ideal", nl_ideal, "Zero parasitics and ideal switches");
  netlist->add_option("--polarity", nl_polarity, "Emit a single array: p or n");

  // eval
  auto *eval = app.add_subcommand("eval", "Evaluate one design point");
  std::string ev_key;
  EvalInputs ev_in;
  eval->add_option("--design", ev_key, "Design key")->required();
  eval->add_option("--weights", ev_in.weights_path, "MLP weights JSON");
  eval->add_option("--images", ev_in.images_path, "IDX image file");
  eval->add_option("--labels", ev_in.labels_path, "IDX label file");
  eval->add_option("--n-images", ev_in.n_images, "Image count (default 50)");
  eval->add_option("--fidelity", ev_in.fidelity, "ideal | parasitic");

  // sweep
  auto *sweep = app.add_subcommand("sweep", "Evaluate a whole grid into a repository CSV");
  std::string sw_grid, sw_designs, sw_out = "repository.csv", sw_manifest;
  EvalInputs sw_in;
  sweep->add_option("--grid", sw_grid, "Grid TOML file");
  sweep->add_option("--designs", sw_designs, "File with one design key per line");
  sweep->add_option("--weights", sw_in.weights_path, "MLP weights JSON");
  sweep->add_option("--images", sw_in.images_path, "IDX image file");
  sweep->add_option("--labels", sw_in.labels_path, "IDX label file");
  sweep->add_option("--n-images", sw_in.n_images, "Image count (default 50)");
  sweep->add_option("--fidelity", sw_in.fidelity, "ideal | parasitic");
  sweep->add_option("--out", sw_out, "Repository CSV output path");
  sweep->add_option("--manifest", sw_manifest, "Run manifest JSON output path");

  // seed-paper
  auto *seed_paper = app.add_subcommand("seed-paper", "Write the embedded reference repository");
  std::string sp_out;
  seed_paper->add_option("--out", sp_out, "CSV output path (default stdout)");

  // query
  auto *query = app.add_subcommand("query", "Rank designs with a DSL query");
  std::string q_repo, q_dsl, q_dsl_file;
  int q_top = 10;
  query->add_option("--repo", q_repo, "Repository CSV/JSONL (default: embedded reference data)");
  query->add_option("--dsl", q_dsl, "Query text, e.g. \"power<=3W; minimize power\"");
  query->add_option("--dsl-file", q_dsl_file, "File containing the query");
  query->add_option("--top", q_top, "Entries to print (default 10, 0 = all)");

  // pareto
  auto *pareto = app.add_subcommand("pareto", "List the Pareto-optimal designs");
  std::string pa_repo, pa_obj = "minimize power; minimize area; maximize accuracy";
  pareto->add_option("--repo", pa_repo, "Repository CSV/JSONL (default: embedded reference data)");
  pareto->add_option("--objectives", pa_obj, "Objectives in DSL form");

  // verify
  auto *verify = app.add_subcommand("verify", "Lint and check a netlist");
  std::string vf_netlist, vf_key;
  bool vf_dynamic = false;
  verify->add_option("--netlist", vf_netlist, "SPICE netlist path")->required();
  verify->add_option("--design", vf_key, "Design key the netlist claims to implement")->required();
  verify->add_flag("--dynamic", vf_dynamic, "Also solve and compare against the ideal MAC");

  // llm-query
  auto *llm_query = app.add_subcommand("llm-query", "Extract a query from free text");
  std::string lq_prompt, lq_endpoint, lq_repo;
  int lq_top = 10;
  llm_query->add_option("--prompt", lq_prompt, "Natural-language request")->required();
  llm_query->add_option("--endpoint", lq_endpoint, "Endpoint TOML config")->required();
  llm_query->add_option("--repo", lq_repo, "Rank over this repository after extraction");
  llm_query->add_option("--top", lq_top, "Entries to print");

  // passk
  auto *passk = app.add_subcommand("passk", "Run the pass@k evaluation harness");
  std::string pk_tasks, pk_endpoint, pk_repo;
  int pk_k = 3;
  bool pk_dsl = false;
  passk->add_option("--tasks", pk_tasks, "Task suite JSON")->required();
  passk->add_option("--k", pk_k, "Attempts per task (default 3)");
  passk->add_option("--endpoint", pk_endpoint, "Endpoint TOML config");
  passk->add_flag("--dsl", pk_dsl, "Use the deterministic DSL backend");
  passk->add_option("--repo", pk_repo, "Repository (default: embedded reference data)");

  // report
  auto *report = app.add_subcommand("report", "Per-axis metric summary and Pareto front");
  std::string rp_repo, rp_csv;
  report->add_option("--repo", rp_repo, "Repository CSV/JSONL (default: embedded reference data)");
  report->add_option("--csv", rp_csv, "Write the summary as CSV to this path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*enumerate) return cmd_enumerate(g, grid_path);
    if (*netlist)
      return cmd_netlist(g, nl_key, nl_weights, nl_out, nl_ideal, nl_layer, nl_polarity);
    if (*eval) return cmd_eval(g, ev_key, ev_in);
    if (*sweep) return cmd_sweep(g, sw_grid, sw_designs, sw_in, sw_out, sw_manifest);
    if (*seed_paper) return cmd_seed_paper(g, sp_out);
    if (*query) return cmd_query(g, q_repo, q_dsl, q_dsl_file, q_top);
    if (*pareto) return cmd_pareto(g, pa_repo, pa_obj);
    if (*verify) return cmd_verify(g, vf_netlist, vf_key, vf_dynamic);
    if (*llm_query) return cmd_llm_query(g, lq_prompt, lq_endpoint, lq_repo, lq_top);
    if (*passk) return cmd_passk(g, pk_tasks, pk_k, pk_endpoint, pk_dsl, pk_repo);
    if (*report) return cmd_report(g, rp_repo, rp_csv);
  } catch (const ConfigError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
