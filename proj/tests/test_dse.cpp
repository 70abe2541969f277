#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "xbar/dse.hpp"
#include "xbar/errors.hpp"

using namespace xbar;

namespace {

// Independent re-implementation of filter + score + ordering, kept deliberately
// simple, used as the oracle for the ranking tests.
struct OracleRank {
  std::vector<std::pair<std::string, double>> ordered; // key, score
};

double oracle_metric(const EvalResult &r, Metric m) {
  switch (m) {
  case Metric::Power: return r.avg_power_w;
  case Metric::Area: return r.area_um2;
  case Metric::Accuracy: return r.accuracy_pct;
  case Metric::Tech: return double(parse_design_key(r.design).tech_nm);
  case Metric::Size: return double(parse_design_key(r.design).rows);
  default: throw std::logic_error("not numeric");
  }
}

std::string oracle_category(const EvalResult &r, Metric m) {
  DesignPoint dp = parse_design_key(r.design);
  std::string s = m == Metric::Device ? dp.device : dp.bitcell;
  for (char &c : s) c = char(std::tolower(c));
  return s;
}

bool oracle_pass(const EvalResult &r, const HardConstraint &h) {
  if (h.cmp == Comparator::LessEq) return oracle_metric(r, h.metric) <= h.bound;
  if (h.cmp == Comparator::GreaterEq) return oracle_metric(r, h.metric) >= h.bound;
  if (metric_is_numeric(h.metric) && h.cmp == Comparator::Equal)
    return oracle_metric(r, h.metric) == h.bound;
  std::string cat = oracle_category(r, h.metric);
  for (const std::string &c : h.choices) {
    std::string lc = c;
    for (char &ch : lc) ch = char(std::tolower(ch));
    if (lc == cat) return true;
  }
  return false;
}

OracleRank oracle_rank(const Repository &repo, const ConstraintQuery &q) {
  std::vector<const EvalResult *> cand;
  for (const auto &[k, r] : repo.entries) {
    bool ok = true;
    for (const HardConstraint &h : q.hard) ok = ok && oracle_pass(r, h);
    if (ok) cand.push_back(&r);
  }
  std::map<Metric, std::pair<double, double>> mm;
  for (const SoftObjective &o : q.soft) {
    double lo = 1e300, hi = -1e300;
    for (const EvalResult *r : cand) {
      const double v = oracle_metric(*r, o.metric);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    mm[o.metric] = {lo, hi};
  }
  auto sc = [&](const EvalResult &r) {
    double num = 0.0, den = 0.0;
    for (const SoftObjective &o : q.soft) {
      const auto [lo, hi] = mm[o.metric];
      double u = 1.0;
      if (hi > lo) {
        const double t = (oracle_metric(r, o.metric) - lo) / (hi - lo);
        u = o.direction == Direction::Minimize ? 1.0 - t : t;
      }
      num += o.weight * u;
      den += o.weight;
    }
    return den > 0.0 ? num / den : 0.0;
  };
  // stable sort by descending score, then tie-break metrics, then key
  std::vector<std::pair<std::string, double>> rows;
  for (const EvalResult *r : cand) rows.emplace_back(r->design, sc(*r));
  auto tb_dir = [&](Metric m) {
    for (const SoftObjective &o : q.soft)
      if (o.metric == m) return o.direction;
    return m == Metric::Accuracy ? Direction::Maximize : Direction::Minimize;
  };
  std::stable_sort(rows.begin(), rows.end(), [&](const auto &a, const auto &b) {
    if (a.second != b.second) return a.second > b.second;
    for (Metric m : q.tie_break) {
      const double va = oracle_metric(repo.entries.at(a.first), m);
      const double vb = oracle_metric(repo.entries.at(b.first), m);
      if (va != vb) return tb_dir(m) == Direction::Minimize ? va < vb : va > vb;
    }
    return a.first < b.first;
  });
  return {rows};
}

ConstraintQuery random_query(std::mt19937_64 &rng) {
  ConstraintQuery q;
  std::uniform_real_distribution<double> pw(0.4, 12.0), ar(2000.0, 90000.0), ac(80.0, 100.0);
  if (rng() % 2) q.hard.push_back({Metric::Power, Comparator::LessEq, pw(rng), {}});
  if (rng() % 2) q.hard.push_back({Metric::Area, Comparator::LessEq, ar(rng), {}});
  if (rng() % 2) q.hard.push_back({Metric::Accuracy, Comparator::GreaterEq, ac(rng), {}});
  if (rng() % 3 == 0)
    q.hard.push_back({Metric::Device, Comparator::In, 0.0, {"PCM", "MRAM"}});
  const int nsoft = 1 + int(rng() % 3);
  const Metric softm[3] = {Metric::Power, Metric::Area, Metric::Accuracy};
  for (int i = 0; i < nsoft; ++i) {
    SoftObjective o;
    o.metric = softm[i];
    o.direction = o.metric == Metric::Accuracy ? Direction::Maximize : Direction::Minimize;
    o.weight = 1.0 + double(rng() % 4);
    q.soft.push_back(o);
  }
  if (rng() % 2) q.tie_break = {Metric::Area, Metric::Power};
  return q;
}

} // namespace

TEST_CASE("seed table carries the published reference values") {
  Repository repo = seed_paper_table();
  REQUIRE(repo.size() == 60);
  const EvalResult &best = repo.entries.at("t7_pcm_1t1r_64x64_unspec_p1x1");
  CHECK(best.area_um2 == 2156.134);
  CHECK(best.accuracy_pct == 100.0);
  CHECK(best.avg_power_w == 0.457961);
  const EvalResult &m16 = repo.entries.at("t7_mram_1t1r_16x16_unspec_p1x1");
  CHECK(m16.area_um2 == 5286.615);
  CHECK(m16.accuracy_pct == 96.0);
  CHECK(m16.avg_power_w == 3.937868);
  const EvalResult &p9 = repo.entries.at("t9_pcm_1t1r_64x64_unspec_p1x1");
  CHECK(p9.area_um2 == 2627.994);
  CHECK(p9.avg_power_w == 0.469902);
  const EvalResult &p20 = repo.entries.at("t20_pcm_2t1r_64x64_unspec_p1x1");
  CHECK(p20.area_um2 == 10477.57);
  CHECK(p20.avg_power_w == 0.495376);
  for (const auto &[k, r] : repo.entries) {
    CHECK(r.source == ResultSource::PaperTable);
    CHECK(r.n_images == 50);
    CHECK_NOTHROW(r.validate());
  }
}

TEST_CASE("reference query selects the published optimum") {
  Repository repo = seed_paper_table();
  ConstraintQuery q = parse_query_dsl("power<=3W; accuracy>=96%; minimize power");
  RankedSelection sel = rank(repo, q);
  REQUIRE(!sel.entries.empty());
  CHECK(sel.entries.front().design_key == "t7_pcm_1t1r_64x64_unspec_p1x1");
  CHECK(sel.entries.front().score == doctest::Approx(1.0));
}

TEST_CASE("ranking agrees with an independent oracle on random queries") {
  Repository repo = seed_paper_table();
  std::mt19937_64 rng(2024);
  int nonempty = 0;
  for (int k = 0; k < 100; ++k) {
    ConstraintQuery q = random_query(rng);
    CAPTURE(k);
    RankedSelection sel = rank(repo, q);
    OracleRank want = oracle_rank(repo, q);
    REQUIRE(sel.entries.size() == want.ordered.size());
    for (std::size_t i = 0; i < want.ordered.size(); ++i) {
      CHECK(sel.entries[i].design_key == want.ordered[i].first);
      CHECK(sel.entries[i].score == doctest::Approx(want.ordered[i].second).epsilon(1e-12));
    }
    if (!sel.entries.empty()) ++nonempty;
  }
  CHECK(nonempty > 30); // the random queries must actually exercise ranking
}

TEST_CASE("scores are invariant to uniform weight scaling") {
  Repository repo = seed_paper_table();
  ConstraintQuery q = parse_query_dsl("minimize power weight=1; maximize accuracy weight=2");
  ConstraintQuery q10 = parse_query_dsl("minimize power weight=10; maximize accuracy weight=20");
  RankedSelection a = rank(repo, q);
  RankedSelection b = rank(repo, q10);
  REQUIRE(a.entries.size() == b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].design_key == b.entries[i].design_key);
    CHECK(a.entries[i].score == doctest::Approx(b.entries[i].score).epsilon(1e-12));
  }
}

TEST_CASE("a degenerate metric contributes full utility") {
  Repository repo;
  EvalResult a, b;
  a.design = "t7_pcm_1t1r_16x16_unspec_p1x1";
  a.area_um2 = 100.0;
  a.accuracy_pct = 90.0;
  a.avg_power_w = 1.0;
  a.n_images = 1;
  b = a;
  b.design = "t7_pcm_1t1r_32x32_unspec_p1x1";
  b.area_um2 = 200.0; // same power, different area
  repo.commit(a);
  repo.commit(b);
  ConstraintQuery q = parse_query_dsl("minimize power; minimize area");
  RankedSelection sel = rank(repo, q);
  REQUIRE(sel.entries.size() == 2);
  // power is constant -> utility 1 for both; area separates them
  CHECK(sel.entries[0].design_key == a.design);
  CHECK(sel.entries[0].score == doctest::Approx(1.0));
  CHECK(sel.entries[1].score == doctest::Approx(0.5));
}

TEST_CASE("infeasible queries report the nearest miss with overshoots") {
  Repository repo = seed_paper_table();
  RankedSelection sel = rank(repo, parse_query_dsl("power<=0.1W; minimize power"));
  CHECK(sel.entries.empty());
  REQUIRE(sel.nearest_miss.has_value());
  CHECK(sel.nearest_miss->design_key == "t7_pcm_1t1r_64x64_unspec_p1x1");
  REQUIRE(sel.nearest_miss->violation_by_constraint.size() == 1);
  CHECK(sel.nearest_miss->violation_by_constraint[0].second ==
        doctest::Approx(0.457961 - 0.1).epsilon(1e-12));
}

TEST_CASE("empty repository is a contract violation") {
  Repository repo;
  CHECK_THROWS_AS(static_cast<void>(rank(repo, parse_query_dsl("minimize power"))),
                  ContractError);
}

TEST_CASE("query validation") {
  ConstraintQuery q;
  CHECK_THROWS_AS(q.validate(), ConfigError); // neither soft nor tie-break
  q.soft.push_back({Metric::Power, Direction::Minimize, -1.0});
  CHECK_THROWS_AS(q.validate(), ConfigError); // negative weight
  q.soft[0].weight = 1.0;
  CHECK_NOTHROW(q.validate());
  q.hard.push_back({Metric::Device, Comparator::LessEq, 1.0, {}});
  CHECK_THROWS_AS(q.validate(), ConfigError); // categorical with <=
}

TEST_CASE("CSV round-trip preserves the repository") {
  Repository repo = seed_paper_table();
  const std::string csv = format_repository_csv(repo);
  CHECK(csv.rfind("tech_nm,device,bitcell,rows,cols,mode,bits,area_um2,accuracy_pct,"
                  "avg_power_w,n_images,source",
                  0) == 0);
  Repository back = parse_repository_csv(csv);
  REQUIRE(back.size() == repo.size());
  for (const auto &[k, r] : repo.entries) {
    const EvalResult &b = back.entries.at(k);
    CHECK(b.area_um2 == r.area_um2);
    CHECK(b.accuracy_pct == r.accuracy_pct);
    CHECK(b.avg_power_w == r.avg_power_w);
    CHECK(b.n_images == r.n_images);
    CHECK(b.source == r.source);
  }
  // formatting is deterministic
  CHECK(format_repository_csv(back) == csv);
}

TEST_CASE("CSV parser reports broken input with row context") {
  const std::string header = "tech_nm,device,bitcell,rows,cols,mode,bits,area_um2,accuracy_pct,"
                             "avg_power_w,n_images,source\n";
  CHECK_THROWS_AS(static_cast<void>(parse_repository_csv("bogus,header\nrow\n")), ParseError);
  CHECK_THROWS_AS(static_cast<void>(parse_repository_csv(header + "7,PCM,1T1R,64,64\n")),
                  ParseError); // short row
  CHECK_THROWS_WITH_AS(
      static_cast<void>(parse_repository_csv(
          header + "7,PCM,1T1R,64,64,analog,,notanumber,100,0.4,50,reference\n")),
      doctest::Contains("line 2"), ParseError);
  const std::string row = "7,PCM,1T1R,64,64,analog,,2156.134,100,0.457961,50,reference\n";
  CHECK_THROWS_AS(static_cast<void>(parse_repository_csv(header + row + row)),
                  ParseError); // duplicate design key
}

TEST_CASE("JSONL and CSV persistence agree") {
  Repository repo = seed_paper_table();
  save_repository(repo, "repo_roundtrip.csv");
  save_repository(repo, "repo_roundtrip.jsonl");
  Repository from_csv = load_repository("repo_roundtrip.csv");
  Repository from_jsonl = load_repository("repo_roundtrip.jsonl");
  std::remove("repo_roundtrip.csv");
  std::remove("repo_roundtrip.jsonl");
  REQUIRE(from_csv.size() == repo.size());
  REQUIRE(from_jsonl.size() == repo.size());
  for (const auto &[k, r] : repo.entries) {
    CHECK(from_csv.entries.at(k).avg_power_w == r.avg_power_w);
    CHECK(from_jsonl.entries.at(k).avg_power_w == r.avg_power_w);
  }
}

TEST_CASE("DSL parsing covers the documented grammar") {
  ConstraintQuery q = parse_query_dsl("# comment line\n"
                                      "power <= 3W\n"
                                      "area<=9000um2; accuracy>=96%\n"
                                      "device in {PCM, MRAM}\n"
                                      "bitcell=1T1R\n"
                                      "tech<=9nm\n"
                                      "minimize power weight=2\n"
                                      "maximize accuracy\n"
                                      "tiebreak area,power\n");
  REQUIRE(q.hard.size() == 6);
  CHECK(q.hard[0].metric == Metric::Power);
  CHECK(q.hard[0].bound == 3.0);
  CHECK(q.hard[1].bound == 9000.0);
  CHECK(q.hard[2].cmp == Comparator::GreaterEq);
  CHECK(q.hard[3].choices == std::vector<std::string>{"PCM", "MRAM"});
  CHECK(q.hard[4].cmp == Comparator::Equal);
  CHECK(q.hard[5].metric == Metric::Tech);
  CHECK(q.hard[5].bound == 9.0);
  REQUIRE(q.soft.size() == 2);
  CHECK(q.soft[0].weight == 2.0);
  CHECK(q.soft[1].direction == Direction::Maximize);
  CHECK(q.tie_break == std::vector<Metric>{Metric::Area, Metric::Power});

  CHECK_THROWS_WITH_AS(static_cast<void>(parse_query_dsl("power <= fast")),
                       doctest::Contains("line 1"), ParseError);
  CHECK_THROWS_AS(static_cast<void>(parse_query_dsl("frobnicate power")), ParseError);
  CHECK_THROWS_AS(static_cast<void>(parse_query_dsl("power in {PCM}")), ParseError);
}

TEST_CASE("pareto front matches a brute-force oracle") {
  Repository repo = seed_paper_table();
  std::vector<SoftObjective> objs = {{Metric::Power, Direction::Minimize, 1.0},
                                     {Metric::Area, Direction::Minimize, 1.0},
                                     {Metric::Accuracy, Direction::Maximize, 1.0}};
  auto dominates = [&](const EvalResult &a, const EvalResult &b) {
    bool strict = false;
    for (const SoftObjective &o : objs) {
      double va = oracle_metric(a, o.metric), vb = oracle_metric(b, o.metric);
      if (o.direction == Direction::Maximize) { va = -va; vb = -vb; }
      if (va > vb) return false;
      if (va < vb) strict = true;
    }
    return strict;
  };
  std::vector<std::string> want;
  for (const auto &[ka, a] : repo.entries) {
    bool dominated = false;
    for (const auto &[kb, b] : repo.entries)
      if (dominates(b, a)) dominated = true;
    if (!dominated) want.push_back(ka);
  }
  std::vector<std::string> got = pareto_front(repo, objs);
  std::sort(got.begin(), got.end());
  std::sort(want.begin(), want.end());
  CHECK(got == want);
  // the published optimum is optimal on all three axes simultaneously
  CHECK(got == std::vector<std::string>{"t7_pcm_1t1r_64x64_unspec_p1x1"});
}

TEST_CASE("repository commits bump the version") {
  Repository repo;
  EvalResult r;
  r.design = "t7_pcm_1t1r_16x16_unspec_p1x1";
  r.area_um2 = 1.0;
  r.accuracy_pct = 50.0;
  r.avg_power_w = 1.0;
  r.n_images = 1;
  const std::uint64_t v0 = repo.version;
  repo.commit(r);
  CHECK(repo.version == v0 + 1);
  r.avg_power_w = 2.0;
  repo.commit(r);
  CHECK(repo.version == v0 + 2);
  CHECK(repo.size() == 1); // same key replaced
  CHECK(repo.entries.at(r.design).avg_power_w == 2.0);
}
