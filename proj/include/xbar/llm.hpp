#pragma once

// Natural-language front end: turns free-text requests into constraint
// queries through any OpenAI-compatible chat endpoint, with schema-validated
// retry, plus the pass@k evaluation harness. The DSL parser (dse module) is
// the deterministic offline alternative.

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"
#include "xbar/dse.hpp"

namespace xbar {

// api_key is read from the XBAR_LLM_API_KEY environment variable and is
// never written to logs or audit files.
struct EndpointConfig {
  std::string base_url;   // e.g. http://127.0.0.1:8089/v1
  std::string model_name;
  std::string api_key;
  int timeout_s = 30;
  int max_retries = 3;
  std::string audit_log; // optional append-only JSONL of raw model output

  void validate() const;
  static EndpointConfig from_file(const std::string &path); // TOML
  static EndpointConfig from_toml(const toml::Table &t);
};

// Min/max per numeric metric over a repository, quoted in prompts so the
// model knows the achievable ranges.
std::map<std::string, std::pair<double, double>> repo_metric_ranges(const Repository &repo);

struct Prompt {
  std::string system;
  std::string user;
};

// JSON schema for the query object the model must emit.
std::string query_json_schema();

Prompt build_prompt(const std::string &schema,
                    const std::map<std::string, std::pair<double, double>> &ranges,
                    const std::string &user_request);

nlohmann::json query_to_json(const ConstraintQuery &q);
ConstraintQuery query_from_json(const nlohmann::json &j);

struct Extraction {
  ConstraintQuery query;
  int attempts = 1;
  std::vector<std::string> raw_responses; // one per attempt
};

class LlmError : public std::runtime_error {
public:
  LlmError(const std::string &msg, std::vector<std::string> raw = {})
      : std::runtime_error(msg), raw_responses(std::move(raw)) {}
  std::vector<std::string> raw_responses; // kept for audit
};

Extraction extract_query(const std::string &text, const EndpointConfig &cfg);

struct PassKTask {
  std::string id;
  std::string category; // power | area | hard
  std::string text;     // natural-language request
  std::string dsl;      // equivalent DSL query (the oracle)
};

std::vector<PassKTask> load_passk_tasks(const std::string &path);

// attempt is 1-based; throwing marks the attempt as failed.
using QueryBackend = std::function<ConstraintQuery(const PassKTask &task, int attempt)>;

struct TaskOutcome {
  std::string id;
  std::string category;
  std::optional<int> first_success;
};

struct PassKReport {
  int k = 3;
  std::vector<TaskOutcome> tasks;
  std::map<std::string, double> pass_at_1; // per category, plus "overall"
  std::map<std::string, double> pass_at_k;
};

// A task passes at attempt i when the backend's query, ranked over repo,
// selects the same top-1 design as the task's DSL oracle.
PassKReport passk_harness(const std::vector<PassKTask> &tasks, int k, const QueryBackend &backend,
                          const Repository &repo);

QueryBackend dsl_backend();                          // parses task.dsl directly
QueryBackend llm_backend(const EndpointConfig &cfg); // extract_query on task.text

} // namespace xbar
