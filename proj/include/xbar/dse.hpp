#pragma once

// Design repository and weighted-constraint query engine: hard filtering,
// min-max-normalized weighted scoring, deterministic ranking, Pareto fronts,
// flat-file persistence, and the line-oriented constraint DSL.

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "xbar/design_space.hpp"
#include "xbar/paa.hpp"

namespace xbar {

// Queryable metrics. Numeric metrics support <=, >=, =; categorical support
// = and "in {...}".
enum class Metric { Power, Area, Accuracy, Tech, Device, Bitcell, Size };

std::string metric_name(Metric m);
Metric metric_from_name(const std::string &s);
bool metric_is_numeric(Metric m);

enum class Comparator { LessEq, GreaterEq, Equal, In };

struct HardConstraint {
  Metric metric = Metric::Power;
  Comparator cmp = Comparator::LessEq;
  double bound = 0.0;                    // numeric metrics
  std::vector<std::string> choices;      // categorical =/in
};

enum class Direction { Minimize, Maximize };

struct SoftObjective {
  Metric metric = Metric::Power;
  Direction direction = Direction::Minimize;
  double weight = 1.0;
};

struct ConstraintQuery {
  std::vector<HardConstraint> hard;
  std::vector<SoftObjective> soft;
  std::vector<Metric> tie_break;

  void validate() const;
};

struct Repository {
  std::map<std::string, EvalResult> entries; // design_key -> result
  std::uint64_t version = 0;

  // committed write: replaces/adds the entry and bumps the version
  void commit(const EvalResult &r);
  std::size_t size() const { return entries.size(); }
};

struct RankedEntry {
  std::string design_key;
  double score = 0.0; // in [0,1]
  bool feasible = true;
};

// per-constraint slack of the least-violating entry, for empty feasible sets
struct NearestMiss {
  std::string design_key;
  std::vector<std::pair<std::string, double>> violation_by_constraint; // text, overshoot
};

struct RankedSelection {
  std::vector<RankedEntry> entries;
  ConstraintQuery query_echo;
  std::optional<NearestMiss> nearest_miss; // set when entries is empty
};

struct MetricStats {
  double min = 0.0;
  double max = 0.0;
};

// numeric metric value of an entry (design axes come from the key)
double metric_value(const EvalResult &r, Metric m);
std::string metric_category(const EvalResult &r, Metric m);

std::vector<std::string> filter_hard(const Repository &repo, const ConstraintQuery &q);

std::map<Metric, MetricStats> normalization_stats(const Repository &repo,
                                                  const std::vector<std::string> &candidates,
                                                  const ConstraintQuery &q);

double score(const EvalResult &entry, const ConstraintQuery &q,
             const std::map<Metric, MetricStats> &norm_stats);

RankedSelection rank(const Repository &repo, const ConstraintQuery &q);

std::vector<std::string> pareto_front(const Repository &repo,
                                      const std::vector<SoftObjective> &objectives);

// CSV persistence (schema: tech_nm,device,bitcell,rows,cols,mode,bits,
// area_um2,accuracy_pct,avg_power_w,n_images,source) and JSONL (one entry
// object per line). Chosen by file extension: .jsonl vs anything else = CSV.
Repository load_repository(const std::string &path);
void save_repository(const Repository &repo, const std::string &path);

Repository parse_repository_csv(const std::string &text);
std::string format_repository_csv(const Repository &repo);

// The embedded 60-row reference dataset (source = PaperTable).
Repository seed_paper_table();

// Line-oriented DSL, e.g.:
//   power<=3W
//   accuracy>=96%
//   device in {PCM,MRAM}
//   minimize power weight=2
//   maximize accuracy weight=1
//   tiebreak area,power
// Statements may also be separated by ';'. Metric names and units
// (W, um2, %, nm) are case-insensitive.
ConstraintQuery parse_query_dsl(const std::string &text);

} // namespace xbar
