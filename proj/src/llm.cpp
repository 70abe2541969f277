#include "xbar/llm.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "httplib.h"
#include "xbar/errors.hpp"

namespace xbar {

using nlohmann::json;

void EndpointConfig::validate() const {
  if (base_url.rfind("http://", 0) != 0 && base_url.rfind("https://", 0) != 0)
    throw ConfigError("base_url must start with http:// or https://");
  if (model_name.empty()) throw ConfigError("model_name must not be empty");
  if (max_retries < 1) throw ConfigError("max_retries must be >= 1");
  if (timeout_s < 1) throw ConfigError("timeout must be >= 1 second");
}

EndpointConfig EndpointConfig::from_toml(const toml::Table &t) {
  EndpointConfig cfg;
  cfg.base_url = t.get_string("endpoint.base_url");
  cfg.model_name = t.get_string("endpoint.model_name");
  if (auto v = t.find_double("endpoint.timeout_s")) cfg.timeout_s = static_cast<int>(*v);
  if (auto v = t.find_double("endpoint.max_retries")) cfg.max_retries = static_cast<int>(*v);
  if (auto v = t.find_string("endpoint.audit_log")) cfg.audit_log = *v;
  if (const char *key = std::getenv("XBAR_LLM_API_KEY")) cfg.api_key = key;
  cfg.validate();
  return cfg;
}

EndpointConfig EndpointConfig::from_file(const std::string &path) {
  return from_toml(toml::parse_file(path));
}

std::map<std::string, std::pair<double, double>> repo_metric_ranges(const Repository &repo) {
  std::map<std::string, std::pair<double, double>> out;
  for (Metric m : {Metric::Power, Metric::Area, Metric::Accuracy, Metric::Tech, Metric::Size}) {
    bool first = true;
    std::pair<double, double> range{0.0, 0.0};
    for (const auto &[key, r] : repo.entries) {
      const double v = metric_value(r, m);
      if (first) {
        range = {v, v};
        first = false;
      } else {
        range.first = std::min(range.first, v);
        range.second = std::max(range.second, v);
      }
    }
    if (!first) out[metric_name(m)] = range;
  }
  return out;
}

std::string query_json_schema() {
  // kept as literal text so the prompt is byte-stable
  return R"({
  "type": "object",
  "properties": {
    "hard": {
      "type": "array",
      "items": {
        "type": "object",
        "properties": {
          "metric": {"enum": ["power", "area", "accuracy", "tech", "device", "bitcell", "size"]},
          "cmp": {"enum": ["<=", ">=", "=", "in"]},
          "bound": {"type": "number"},
          "choices": {"type": "array", "items": {"type": "string"}}
        },
        "required": ["metric", "cmp"]
      }
    },
    "soft": {
      "type": "array",
      "items": {
        "type": "object",
        "properties": {
          "metric": {"enum": ["power", "area", "accuracy", "tech", "size"]},
          "direction": {"enum": ["minimize", "maximize"]},
          "weight": {"type": "number", "minimum": 0}
        },
        "required": ["metric", "direction"]
      }
    },
    "tie_break": {"type": "array", "items": {"type": "string"}}
  },
  "required": ["hard", "soft"]
})";
}

Prompt build_prompt(const std::string &schema,
                    const std::map<std::string, std::pair<double, double>> &ranges,
                    const std::string &user_request) {
  std::ostringstream sys;
  sys << "You translate hardware design requests into constraint queries for a resistive "
         "crossbar accelerator repository.\n"
      << "Respond with a single JSON object and nothing else. The object must match this JSON "
         "schema:\n"
      << schema << "\n"
      << "Units: power in W, area in um2, accuracy in %, tech in nm, size is the square crossbar "
         "dimension.\n"
      << "Numeric metrics support <=, >=, =; categorical metrics (device, bitcell) support = and "
         "in.\n";
  if (!ranges.empty()) {
    sys << "Metric ranges available in the repository:\n";
    for (const auto &[name, range] : ranges)
      sys << "  " << name << ": [" << format_spice_value(range.first) << ", "
          << format_spice_value(range.second) << "]\n";
  }
  return {sys.str(), user_request};
}

namespace {

const char *cmp_token(Comparator c) {
  switch (c) {
  case Comparator::LessEq: return "<=";
  case Comparator::GreaterEq: return ">=";
  case Comparator::Equal: return "=";
  case Comparator::In: return "in";
  }
  return "<=";
}

Comparator cmp_from_token(const std::string &s) {
  if (s == "<=") return Comparator::LessEq;
  if (s == ">=") return Comparator::GreaterEq;
  if (s == "=") return Comparator::Equal;
  if (s == "in") return Comparator::In;
  throw ParseError("unknown comparator '" + s + "'");
}

} // namespace

json query_to_json(const ConstraintQuery &q) {
  json j;
  j["hard"] = json::array();
  for (const HardConstraint &h : q.hard) {
    json c;
    c["metric"] = metric_name(h.metric);
    c["cmp"] = cmp_token(h.cmp);
    if (h.choices.empty()) c["bound"] = h.bound;
    else c["choices"] = h.choices;
    j["hard"].push_back(c);
  }
  j["soft"] = json::array();
  for (const SoftObjective &s : q.soft) {
    json o;
    o["metric"] = metric_name(s.metric);
    o["direction"] = s.direction == Direction::Minimize ? "minimize" : "maximize";
    o["weight"] = s.weight;
    j["soft"].push_back(o);
  }
  j["tie_break"] = json::array();
  for (Metric m : q.tie_break) j["tie_break"].push_back(metric_name(m));
  return j;
}

ConstraintQuery query_from_json(const json &j) {
  if (!j.is_object()) throw ParseError("query must be a JSON object");
  ConstraintQuery q;
  for (const json &c : j.value("hard", json::array())) {
    HardConstraint h;
    h.metric = metric_from_name(c.at("metric").get<std::string>());
    h.cmp = cmp_from_token(c.at("cmp").get<std::string>());
    if (c.contains("bound")) h.bound = c.at("bound").get<double>();
    if (c.contains("choices")) h.choices = c.at("choices").get<std::vector<std::string>>();
    if (h.cmp == Comparator::In && h.choices.empty())
      throw ParseError("'in' constraint needs a non-empty choices array");
    if (!metric_is_numeric(h.metric) && h.choices.empty())
      throw ParseError("categorical constraint needs choices");
    q.hard.push_back(h);
  }
  for (const json &o : j.value("soft", json::array())) {
    SoftObjective s;
    s.metric = metric_from_name(o.at("metric").get<std::string>());
    const std::string dir = o.at("direction").get<std::string>();
    if (dir == "minimize") s.direction = Direction::Minimize;
    else if (dir == "maximize") s.direction = Direction::Maximize;
    else throw ParseError("direction must be minimize or maximize, got '" + dir + "'");
    s.weight = o.value("weight", 1.0);
    q.soft.push_back(s);
  }
  for (const json &m : j.value("tie_break", json::array()))
    q.tie_break.push_back(metric_from_name(m.get<std::string>()));
  q.validate();
  return q;
}

namespace {

struct UrlParts {
  std::string origin; // scheme://host:port
  std::string path_prefix;
};

UrlParts split_url(const std::string &url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("malformed base_url: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path_start), prefix};
}

// Models sometimes wrap the JSON in a code fence; take the outermost braces.
json parse_content_json(const std::string &content) {
  try {
    return json::parse(content);
  } catch (const json::exception &) {
  }
  auto open = content.find('{');
  auto close = content.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw ParseError("response content is not JSON");
  return json::parse(content.substr(open, close - open + 1));
}

void audit_append(const std::string &path, const std::string &task, int attempt,
                  const std::string &raw) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::app);
  json line;
  line["request"] = task;
  line["attempt"] = attempt;
  line["raw_response"] = raw;
  out << line.dump() << "\n";
}

} // namespace

Extraction extract_query(const std::string &text, const EndpointConfig &cfg) {
  cfg.validate();
  const UrlParts url = split_url(cfg.base_url);
  httplib::Client client(url.origin);
  client.set_connection_timeout(cfg.timeout_s);
  client.set_read_timeout(cfg.timeout_s);

  const Prompt prompt = build_prompt(query_json_schema(), {}, text);
  json messages = json::array();
  messages.push_back({{"role", "system"}, {"content", prompt.system}});
  messages.push_back({{"role", "user"}, {"content", prompt.user}});

  httplib::Headers headers;
  if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);

  Extraction result;
  std::vector<std::string> raw;
  std::string last_error;
  for (int attempt = 1; attempt <= cfg.max_retries; ++attempt) {
    json body;
    body["model"] = cfg.model_name;
    body["messages"] = messages;
    body["temperature"] = 0;
    auto res = client.Post(url.path_prefix + "/chat/completions", headers, body.dump(),
                           "application/json");
    if (!res)
      throw LlmError("endpoint unreachable: " + httplib::to_string(res.error()), raw);
    raw.push_back(res->body);
    audit_append(cfg.audit_log, text, attempt, res->body);
    if (res->status != 200)
      throw LlmError("endpoint returned HTTP " + std::to_string(res->status), raw);

    std::string content;
    try {
      json reply = json::parse(res->body);
      content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
      result.query = query_from_json(parse_content_json(content));
      result.attempts = attempt;
      result.raw_responses = std::move(raw);
      return result;
    } catch (const std::exception &e) {
      last_error = e.what();
      if (!content.empty()) messages.push_back({{"role", "assistant"}, {"content", content}});
      messages.push_back(
          {{"role", "user"},
           {"content", std::string("The previous response was invalid: ") + e.what() +
                           ". Respond again with a single JSON object matching the schema."}});
    }
  }
  throw LlmError("no valid query after " + std::to_string(cfg.max_retries) +
                     " attempts; last error: " + last_error,
                 raw);
}

std::vector<PassKTask> load_passk_tasks(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open task file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception &e) {
    throw ParseError(std::string("invalid task file: ") + e.what());
  }
  std::vector<PassKTask> tasks;
  for (const json &t : j.at("tasks")) {
    PassKTask task;
    task.id = t.at("id").get<std::string>();
    task.category = t.at("category").get<std::string>();
    task.text = t.at("text").get<std::string>();
    task.dsl = t.at("dsl").get<std::string>();
    tasks.push_back(std::move(task));
  }
  if (tasks.empty()) throw ConfigError("task file has no tasks");
  return tasks;
}

PassKReport passk_harness(const std::vector<PassKTask> &tasks, int k, const QueryBackend &backend,
                          const Repository &repo) {
  if (k < 1) throw ContractError("k must be >= 1");
  PassKReport report;
  report.k = k;

  auto top1 = [&](const ConstraintQuery &q) -> std::optional<std::string> {
    RankedSelection sel = rank(repo, q);
    if (sel.entries.empty()) return std::nullopt;
    return sel.entries.front().design_key;
  };

  std::map<std::string, std::pair<int, int>> at1, atk; // category -> (pass, total)
  for (const PassKTask &task : tasks) {
    const std::optional<std::string> expected = top1(parse_query_dsl(task.dsl));
    TaskOutcome outcome{task.id, task.category, std::nullopt};
    for (int attempt = 1; attempt <= k && !outcome.first_success; ++attempt) {
      try {
        if (top1(backend(task, attempt)) == expected) outcome.first_success = attempt;
      } catch (const std::exception &) {
        // failed attempt; try again
      }
    }
    for (auto *bucket : {&at1, &atk}) {
      auto &[pass, total] = (*bucket)[task.category];
      ++total;
      auto &[opass, ototal] = (*bucket)["overall"];
      ++ototal;
      const bool hit = outcome.first_success &&
                       (bucket == &at1 ? *outcome.first_success == 1 : *outcome.first_success <= k);
      if (hit) {
        ++pass;
        ++opass;
      }
    }
    report.tasks.push_back(std::move(outcome));
  }
  for (const auto &[cat, counts] : at1)
    report.pass_at_1[cat] = static_cast<double>(counts.first) / counts.second;
  for (const auto &[cat, counts] : atk)
    report.pass_at_k[cat] = static_cast<double>(counts.first) / counts.second;
  return report;
}

QueryBackend dsl_backend() {
  return [](const PassKTask &task, int) { return parse_query_dsl(task.dsl); };
}

QueryBackend llm_backend(const EndpointConfig &cfg) {
  EndpointConfig per_attempt = cfg;
  per_attempt.max_retries = 1; // the harness owns the retry budget
  return [per_attempt](const PassKTask &task, int) {
    return extract_query(task.text, per_attempt).query;
  };
}

} // namespace xbar
