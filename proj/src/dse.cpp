#include "xbar/dse.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nlohmann/json.hpp"
#include "xbar/errors.hpp"
#include "xbar/netlist.hpp" // format_spice_value for shortest float text

namespace xbar {

using nlohmann::json;

std::string metric_name(Metric m) {
  switch (m) {
  case Metric::Power: return "power";
  case Metric::Area: return "area";
  case Metric::Accuracy: return "accuracy";
  case Metric::Tech: return "tech";
  case Metric::Device: return "device";
  case Metric::Bitcell: return "bitcell";
  case Metric::Size: return "size";
  }
  return "power";
}

Metric metric_from_name(const std::string &s) {
  const std::string l = to_lower(s);
  if (l == "power") return Metric::Power;
  if (l == "area") return Metric::Area;
  if (l == "accuracy") return Metric::Accuracy;
  if (l == "tech") return Metric::Tech;
  if (l == "device") return Metric::Device;
  if (l == "bitcell") return Metric::Bitcell;
  if (l == "size") return Metric::Size;
  throw ParseError("unknown metric name: " + s);
}

bool metric_is_numeric(Metric m) {
  return m == Metric::Power || m == Metric::Area || m == Metric::Accuracy || m == Metric::Tech ||
         m == Metric::Size;
}

void ConstraintQuery::validate() const {
  double weight_sum = 0.0;
  for (const SoftObjective &s : soft) {
    if (!(s.weight >= 0.0) || !std::isfinite(s.weight))
      throw ConfigError("soft objective weights must be finite and non-negative");
    if (!metric_is_numeric(s.metric))
      throw ConfigError("soft objective on categorical metric " + metric_name(s.metric));
    weight_sum += s.weight;
  }
  if (weight_sum == 0.0 && tie_break.empty())
    throw ConfigError("query needs at least one weighted soft objective or a tie-break list");
  for (const HardConstraint &h : hard) {
    if (metric_is_numeric(h.metric)) {
      if (h.cmp != Comparator::In && !std::isfinite(h.bound))
        throw ConfigError("non-finite bound on " + metric_name(h.metric));
    } else if (h.cmp != Comparator::Equal && h.cmp != Comparator::In) {
      throw ConfigError("categorical metric " + metric_name(h.metric) +
                        " supports only = and in");
    }
  }
}

void Repository::commit(const EvalResult &r) {
  r.validate();
  entries[r.design] = r;
  ++version;
}

double metric_value(const EvalResult &r, Metric m) {
  switch (m) {
  case Metric::Power: return r.avg_power_w;
  case Metric::Area: return r.area_um2;
  case Metric::Accuracy: return r.accuracy_pct;
  case Metric::Tech: return static_cast<double>(parse_design_key(r.design).tech_nm);
  case Metric::Size: return static_cast<double>(parse_design_key(r.design).rows);
  default: throw ConfigError("metric " + metric_name(m) + " is not numeric");
  }
}

std::string metric_category(const EvalResult &r, Metric m) {
  DesignPoint dp = parse_design_key(r.design);
  switch (m) {
  case Metric::Device: return to_lower(dp.device);
  case Metric::Bitcell: return to_lower(dp.bitcell);
  case Metric::Tech: return std::to_string(dp.tech_nm);
  case Metric::Size: return std::to_string(dp.rows);
  default: throw ConfigError("metric " + metric_name(m) + " is not categorical");
  }
}

namespace {

bool satisfies(const EvalResult &r, const HardConstraint &h) {
  if (metric_is_numeric(h.metric)) {
    const double v = metric_value(r, h.metric);
    switch (h.cmp) {
    case Comparator::LessEq: return v <= h.bound;
    case Comparator::GreaterEq: return v >= h.bound;
    case Comparator::Equal: return v == h.bound;
    case Comparator::In:
      for (const std::string &c : h.choices)
        if (v == std::stod(c)) return true;
      return false;
    }
    return false;
  }
  const std::string cat = metric_category(r, h.metric);
  for (const std::string &c : h.choices)
    if (to_lower(c) == cat) return true;
  return false;
}

// positive when violated; relative units are the caller's concern
double violation(const EvalResult &r, const HardConstraint &h) {
  if (!metric_is_numeric(h.metric)) return satisfies(r, h) ? 0.0 : 1.0;
  const double v = metric_value(r, h.metric);
  switch (h.cmp) {
  case Comparator::LessEq: return std::max(0.0, v - h.bound);
  case Comparator::GreaterEq: return std::max(0.0, h.bound - v);
  case Comparator::Equal: return std::abs(v - h.bound);
  case Comparator::In: return satisfies(r, h) ? 0.0 : 1.0;
  }
  return 0.0;
}

std::string constraint_text(const HardConstraint &h) {
  std::ostringstream os;
  os << metric_name(h.metric);
  switch (h.cmp) {
  case Comparator::LessEq: os << "<=" << h.bound; break;
  case Comparator::GreaterEq: os << ">=" << h.bound; break;
  case Comparator::Equal:
    os << "=";
    if (h.choices.empty()) os << h.bound;
    else os << h.choices.front();
    break;
  case Comparator::In: {
    os << " in {";
    for (std::size_t i = 0; i < h.choices.size(); ++i) os << (i ? "," : "") << h.choices[i];
    os << "}";
    break;
  }
  }
  return os.str();
}

Direction tie_break_direction(const ConstraintQuery &q, Metric m) {
  for (const SoftObjective &s : q.soft)
    if (s.metric == m) return s.direction;
  return m == Metric::Accuracy ? Direction::Maximize : Direction::Minimize;
}

} // namespace

std::vector<std::string> filter_hard(const Repository &repo, const ConstraintQuery &q) {
  if (repo.entries.empty()) throw ContractError("repository is empty");
  std::vector<std::string> out;
  for (const auto &[key, entry] : repo.entries) {
    bool ok = true;
    for (const HardConstraint &h : q.hard)
      if (!satisfies(entry, h)) {
        ok = false;
        break;
      }
    if (ok) out.push_back(key);
  }
  return out;
}

std::map<Metric, MetricStats> normalization_stats(const Repository &repo,
                                                  const std::vector<std::string> &candidates,
                                                  const ConstraintQuery &q) {
  std::map<Metric, MetricStats> stats;
  auto want = [&](Metric m) { return stats.count(m) == 0; };
  std::vector<Metric> metrics;
  for (const SoftObjective &s : q.soft)
    if (want(s.metric)) {
      stats[s.metric] = {};
      metrics.push_back(s.metric);
    }
  for (Metric m : q.tie_break)
    if (metric_is_numeric(m) && want(m)) {
      stats[m] = {};
      metrics.push_back(m);
    }
  bool first = true;
  for (const std::string &key : candidates) {
    const EvalResult &r = repo.entries.at(key);
    for (Metric m : metrics) {
      const double v = metric_value(r, m);
      MetricStats &st = stats[m];
      if (first) {
        st.min = st.max = v;
      } else {
        st.min = std::min(st.min, v);
        st.max = std::max(st.max, v);
      }
    }
    first = false;
  }
  return stats;
}

double score(const EvalResult &entry, const ConstraintQuery &q,
             const std::map<Metric, MetricStats> &norm_stats) {
  q.validate();
  double weight_sum = 0.0, acc = 0.0;
  for (const SoftObjective &s : q.soft) {
    if (s.weight == 0.0) continue;
    const MetricStats &st = norm_stats.at(s.metric);
    double u;
    if (st.max == st.min) {
      u = 1.0; // degenerate metric: every candidate is equally good
    } else {
      const double t = (metric_value(entry, s.metric) - st.min) / (st.max - st.min);
      u = s.direction == Direction::Minimize ? 1.0 - t : t;
    }
    acc += s.weight * u;
    weight_sum += s.weight;
  }
  return weight_sum > 0.0 ? acc / weight_sum : 0.0;
}

RankedSelection rank(const Repository &repo, const ConstraintQuery &q) {
  q.validate();
  RankedSelection sel;
  sel.query_echo = q;
  std::vector<std::string> candidates = filter_hard(repo, q);
  if (candidates.empty()) {
    // nearest miss: the entry with the smallest total relative violation
    std::string best;
    double best_v = std::numeric_limits<double>::infinity();
    for (const auto &[key, entry] : repo.entries) {
      double total = 0.0;
      for (const HardConstraint &h : q.hard) {
        double v = violation(entry, h);
        if (metric_is_numeric(h.metric) && h.bound != 0.0) v /= std::abs(h.bound);
        total += v;
      }
      if (total < best_v) {
        best_v = total;
        best = key;
      }
    }
    NearestMiss miss;
    miss.design_key = best;
    const EvalResult &entry = repo.entries.at(best);
    for (const HardConstraint &h : q.hard)
      miss.violation_by_constraint.push_back({constraint_text(h), violation(entry, h)});
    sel.nearest_miss = std::move(miss);
    return sel;
  }

  auto stats = normalization_stats(repo, candidates, q);
  for (const std::string &key : candidates)
    sel.entries.push_back({key, score(repo.entries.at(key), q, stats), true});

  std::stable_sort(sel.entries.begin(), sel.entries.end(),
                   [&](const RankedEntry &a, const RankedEntry &b) {
                     if (a.score != b.score) return a.score > b.score;
                     for (Metric m : q.tie_break) {
                       if (!metric_is_numeric(m)) continue;
                       const double va = metric_value(repo.entries.at(a.design_key), m);
                       const double vb = metric_value(repo.entries.at(b.design_key), m);
                       if (va != vb)
                         return tie_break_direction(q, m) == Direction::Minimize ? va < vb
                                                                                 : va > vb;
                     }
                     return a.design_key < b.design_key;
                   });
  return sel;
}

std::vector<std::string> pareto_front(const Repository &repo,
                                      const std::vector<SoftObjective> &objectives) {
  if (objectives.empty()) throw ContractError("pareto_front needs at least one objective");
  std::vector<std::string> keys;
  for (const auto &[k, v] : repo.entries) keys.push_back(k);

  auto oriented = [&](const std::string &key, const SoftObjective &o) {
    const double v = metric_value(repo.entries.at(key), o.metric);
    return o.direction == Direction::Minimize ? -v : v; // larger = better
  };
  auto dominates = [&](const std::string &a, const std::string &b) {
    bool strictly = false;
    for (const SoftObjective &o : objectives) {
      const double va = oriented(a, o), vb = oriented(b, o);
      if (va < vb) return false;
      if (va > vb) strictly = true;
    }
    return strictly;
  };

  std::vector<std::string> front;
  for (const std::string &k : keys) {
    bool dominated = false;
    for (const std::string &other : keys)
      if (other != k && dominates(other, k)) {
        dominated = true;
        break;
      }
    if (!dominated) front.push_back(k);
  }
  return front;
}

namespace {

constexpr const char *kCsvHeader =
    "tech_nm,device,bitcell,rows,cols,mode,bits,area_um2,accuracy_pct,avg_power_w,n_images,source";

std::vector<std::string> split_csv_line(const std::string &line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_num(const std::string &s, const std::string &col, int row) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception &) {
    throw ParseError("unparsable numeric '" + s + "' in column " + col, row);
  }
}

json entry_to_json(const EvalResult &r) {
  DesignPoint dp = parse_design_key(r.design);
  json j;
  j["design_key"] = r.design;
  j["tech_nm"] = dp.tech_nm;
  j["device"] = dp.device;
  j["bitcell"] = dp.bitcell;
  j["rows"] = dp.rows;
  j["cols"] = dp.cols;
  j["mode"] = bit_mode_name(dp.mode);
  if (dp.mode == BitMode::Digital) j["bits"] = dp.bits;
  j["area_um2"] = r.area_um2;
  j["accuracy_pct"] = r.accuracy_pct;
  j["avg_power_w"] = r.avg_power_w;
  j["n_images"] = r.n_images;
  j["source"] = result_source_name(r.source);
  return j;
}

bool ends_with(const std::string &s, const std::string &suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

} // namespace

std::string format_repository_csv(const Repository &repo) {
  std::ostringstream os;
  os << kCsvHeader << "\n";
  for (const auto &[key, r] : repo.entries) {
    DesignPoint dp = parse_design_key(key);
    os << dp.tech_nm << "," << to_lower(dp.device) << "," << to_lower(dp.bitcell) << "," << dp.rows
       << "," << dp.cols << "," << bit_mode_name(dp.mode) << ",";
    if (dp.mode == BitMode::Digital) os << dp.bits;
    os << "," << format_spice_value(r.area_um2) << "," << format_spice_value(r.accuracy_pct) << ","
       << format_spice_value(r.avg_power_w) << "," << r.n_images << ","
       << result_source_name(r.source) << "\n";
  }
  return os.str();
}

Repository parse_repository_csv(const std::string &text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty repository file");
  {
    auto cols = split_csv_line(line);
    auto expect = split_csv_line(kCsvHeader);
    if (cols != expect) {
      for (const std::string &e : expect)
        if (std::find(cols.begin(), cols.end(), e) == cols.end())
          throw ParseError("missing column '" + e + "' in CSV header", 1);
      throw ParseError("unexpected CSV header (column order must be: " + std::string(kCsvHeader) +
                           ")",
                       1);
    }
  }
  Repository repo;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    auto f = split_csv_line(line);
    if (f.size() != 12) throw ParseError("expected 12 columns, got " + std::to_string(f.size()), row);
    DesignPoint dp;
    dp.tech_nm = static_cast<int>(parse_num(f[0], "tech_nm", row));
    dp.device = f[1];
    dp.bitcell = f[2];
    dp.rows = static_cast<int>(parse_num(f[3], "rows", row));
    dp.cols = static_cast<int>(parse_num(f[4], "cols", row));
    dp.mode = bit_mode_from_name(f[5]);
    dp.bits = f[6].empty() ? 0 : static_cast<int>(parse_num(f[6], "bits", row));
    EvalResult r;
    r.design = design_key(dp);
    r.area_um2 = parse_num(f[7], "area_um2", row);
    r.accuracy_pct = parse_num(f[8], "accuracy_pct", row);
    r.avg_power_w = parse_num(f[9], "avg_power_w", row);
    r.n_images = static_cast<int>(parse_num(f[10], "n_images", row));
    r.source = result_source_from_name(f[11]);
    r.validate();
    if (repo.entries.count(r.design))
      throw ParseError("duplicate design key '" + r.design + "'", row);
    repo.entries[r.design] = r;
  }
  repo.version = 1;
  return repo;
}

Repository load_repository(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open repository file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (ends_with(to_lower(path), ".jsonl")) {
    Repository repo;
    std::istringstream lines(buf.str());
    std::string line;
    int row = 0;
    while (std::getline(lines, line)) {
      ++row;
      if (line.empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception &e) {
        throw ParseError(std::string("invalid JSONL: ") + e.what(), row);
      }
      EvalResult r;
      r.design = j.at("design_key").get<std::string>();
      r.area_um2 = j.at("area_um2").get<double>();
      r.accuracy_pct = j.at("accuracy_pct").get<double>();
      r.avg_power_w = j.at("avg_power_w").get<double>();
      r.n_images = j.value("n_images", 0);
      r.source = result_source_from_name(j.value("source", "internal"));
      r.validate();
      if (repo.entries.count(r.design)) throw ParseError("duplicate design key '" + r.design + "'", row);
      repo.entries[r.design] = r;
    }
    repo.version = 1;
    return repo;
  }
  return parse_repository_csv(buf.str());
}

void save_repository(const Repository &repo, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write repository file: " + path);
  if (ends_with(to_lower(path), ".jsonl")) {
    for (const auto &[k, r] : repo.entries) out << entry_to_json(r).dump() << "\n";
    return;
  }
  out << format_repository_csv(repo);
}

namespace {

std::string strip_ws(const std::string &s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// strips a trailing unit token if present; units are documentation, the
// stored bound is always in the metric's base unit (W, um2, %, nm)
double parse_bound(std::string s, int line) {
  s = strip_ws(to_lower(s));
  for (const char *unit : {"um2", "nm", "w", "%"}) {
    const std::string u = unit;
    if (s.size() > u.size() && ends_with(s, u)) {
      // make sure we are not chopping an exponent digit
      const char before = s[s.size() - u.size() - 1];
      if (!std::isalpha(static_cast<unsigned char>(before))) {
        s = strip_ws(s.substr(0, s.size() - u.size()));
        break;
      }
    }
  }
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception &) {
    throw ParseError("cannot parse bound '" + s + "'", line);
  }
}

std::vector<std::string> split_list(const std::string &s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!strip_ws(cur).empty()) out.push_back(strip_ws(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!strip_ws(cur).empty()) out.push_back(strip_ws(cur));
  return out;
}

} // namespace

ConstraintQuery parse_query_dsl(const std::string &text) {
  ConstraintQuery q;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  std::vector<std::string> statements;
  std::vector<int> stmt_lines;
  while (std::getline(in, raw)) {
    ++lineno;
    for (const std::string &part : [&] {
           std::vector<std::string> out;
           std::string cur;
           for (char c : raw) {
             if (c == ';') {
               out.push_back(cur);
               cur.clear();
             } else {
               cur += c;
             }
           }
           out.push_back(cur);
           return out;
         }()) {
      std::string s = strip_ws(part);
      if (s.empty() || s[0] == '#') continue;
      statements.push_back(s);
      stmt_lines.push_back(lineno);
    }
  }

  for (std::size_t i = 0; i < statements.size(); ++i) {
    const std::string &s = statements[i];
    const int line = stmt_lines[i];
    const std::string l = to_lower(s);

    if (l.rfind("minimize ", 0) == 0 || l.rfind("maximize ", 0) == 0) {
      SoftObjective o;
      o.direction = l[2] == 'n' ? Direction::Minimize : Direction::Maximize;
      std::string rest = strip_ws(s.substr(9));
      double weight = 1.0;
      auto wp = to_lower(rest).find("weight=");
      if (wp != std::string::npos) {
        weight = parse_bound(rest.substr(wp + 7), line);
        rest = strip_ws(rest.substr(0, wp));
      }
      o.metric = metric_from_name(rest);
      if (!metric_is_numeric(o.metric))
        throw ParseError("cannot optimize categorical metric '" + rest + "'", line);
      o.weight = weight;
      q.soft.push_back(o);
      continue;
    }
    if (l.rfind("tiebreak", 0) == 0) {
      std::string rest = strip_ws(s.substr(8));
      for (const std::string &m : split_list(rest)) q.tie_break.push_back(metric_from_name(m));
      continue;
    }
    auto inp = l.find(" in ");
    if (inp != std::string::npos) {
      HardConstraint h;
      h.metric = metric_from_name(strip_ws(s.substr(0, inp)));
      h.cmp = Comparator::In;
      std::string rest = strip_ws(s.substr(inp + 4));
      if (rest.size() < 2 || rest.front() != '{' || rest.back() != '}')
        throw ParseError("expected '{a,b,...}' after 'in'", line);
      h.choices = split_list(rest.substr(1, rest.size() - 2));
      if (h.choices.empty()) throw ParseError("empty 'in' set", line);
      if (metric_is_numeric(h.metric)) {
        // numeric membership sets must be numbers
        for (const std::string &c : h.choices) {
          try {
            static_cast<void>(parse_bound(c, line));
          } catch (const ParseError &) {
            throw ParseError("non-numeric choice '" + c + "' for metric " +
                                 metric_name(h.metric),
                             line);
          }
        }
      }
      q.hard.push_back(h);
      continue;
    }
    // comparator statements
    std::size_t op_pos = std::string::npos;
    Comparator cmp = Comparator::Equal;
    std::size_t op_len = 0;
    for (const auto &[tok, c] : std::initializer_list<std::pair<const char *, Comparator>>{
             {"<=", Comparator::LessEq}, {">=", Comparator::GreaterEq}, {"=", Comparator::Equal}}) {
      auto p = s.find(tok);
      if (p != std::string::npos) {
        op_pos = p;
        cmp = c;
        op_len = std::string(tok).size();
        break;
      }
    }
    if (op_pos == std::string::npos)
      throw ParseError("cannot parse query statement '" + s + "'", line);
    HardConstraint h;
    h.metric = metric_from_name(strip_ws(s.substr(0, op_pos)));
    h.cmp = cmp;
    const std::string rhs = strip_ws(s.substr(op_pos + op_len));
    if (metric_is_numeric(h.metric)) {
      h.bound = parse_bound(rhs, line);
    } else {
      if (cmp != Comparator::Equal)
        throw ParseError("categorical metric supports only '=' or 'in'", line);
      h.choices = {rhs};
    }
    q.hard.push_back(h);
  }
  q.validate();
  return q;
}

} // namespace xbar
