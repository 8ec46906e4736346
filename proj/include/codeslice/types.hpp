#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace codeslice {

enum class TaskKind { CSyn, CT, CSum };
enum class Modality { NL, PL };
enum class Scheme { ZSQ, ICQ, ZSCOT_STAGE1, ZSCOT_STAGE2 };
enum class FinishState { Complete, Truncated, Error };

std::string_view to_string(TaskKind kind);
std::string_view to_string(Modality modality);
std::string_view to_string(Scheme scheme);
std::string_view to_string(FinishState state);

// Accepts the canonical names plus lowercase CLI spellings ("csum", "zscot").
TaskKind parse_task_kind(std::string_view text);
Scheme parse_scheme(std::string_view text);

struct TaskSpec {
    TaskKind task_kind = TaskKind::CSum;
    Modality input_modality = Modality::PL;
    Modality output_modality = Modality::NL;
    std::optional<std::string> source_language;
    std::optional<std::string> target_language;
    std::string question_head;
    std::string cot_answer_trigger;

    friend bool operator==(const TaskSpec &, const TaskSpec &) = default;
};

// Throws InvalidArgument when the task's I/O modalities or strings are incoherent.
void validate(const TaskSpec &spec);

struct ExamplePair {
    std::string input;
    std::string output;

    friend bool operator==(const ExamplePair &, const ExamplePair &) = default;
};

struct Query {
    std::string head;
    std::string body;
    Scheme scheme = Scheme::ZSQ;
    std::vector<ExamplePair> context_examples;
    std::optional<std::string> rationale;
    std::string rendered;
    std::int64_t estimated_tokens = 0;

    friend bool operator==(const Query &, const Query &) = default;
};

// Context limit of the completion endpoint, covering prompt and completion.
inline constexpr std::int64_t kDefaultContextLimit = 4097;
inline constexpr std::int64_t kDefaultMaxTokens = 512;

struct SamplingParams {
    double temperature = 0.5;
    double top_p = 0.5;
    std::int64_t max_tokens = kDefaultMaxTokens;
    std::int64_t repeats = 1;

    friend bool operator==(const SamplingParams &, const SamplingParams &) = default;
};

// Clamps temperature/top_p into [0,1] (logging a warning when it had to) and
// rejects non-positive max_tokens/repeats.
SamplingParams normalized(SamplingParams params);

// Usable prompt budget once the completion allowance is reserved.
std::int64_t prompt_budget(std::int64_t max_tokens, std::int64_t context_limit = kDefaultContextLimit);

struct LLMResponse {
    std::string text;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    std::string provider_id;
    FinishState finish_state = FinishState::Complete;
    std::int64_t latency_ms = 0;

    std::int64_t total_tokens() const { return prompt_tokens + completion_tokens; }

    friend bool operator==(const LLMResponse &, const LLMResponse &) = default;
};

struct Pricing {
    double per_1k_tokens = 0.0;
    double per_query = 0.0;

    friend bool operator==(const Pricing &, const Pricing &) = default;
};

struct LedgerAccount {
    std::int64_t query_count = 0;
    std::int64_t total_tokens = 0;
    double estimated_cost = 0.0;

    friend bool operator==(const LedgerAccount &, const LedgerAccount &) = default;
};

// Per-provider cost accounting. Single writer: callers serialize mutation.
struct CostLedger {
    std::map<std::string, Pricing> pricing;
    std::map<std::string, LedgerAccount> accounts;

    // Cost recomputed from the integer accumulators; exact for a given total.
    double cost_for(const std::string &provider_id) const;
    double total_cost() const;
    std::int64_t total_tokens() const;
    std::int64_t total_queries() const;

    friend bool operator==(const CostLedger &, const CostLedger &) = default;
};

std::vector<TaskSpec> default_task_specs();
const TaskSpec &default_task_spec(TaskKind kind);

// Adds one query and the response's token total to the provider's account.
CostLedger ledger_add(CostLedger ledger, const LLMResponse &response);
void ledger_add_in_place(CostLedger &ledger, const LLMResponse &response);

void to_json(nlohmann::json &j, const TaskKind &v);
void from_json(const nlohmann::json &j, TaskKind &v);
void to_json(nlohmann::json &j, const Modality &v);
void from_json(const nlohmann::json &j, Modality &v);
void to_json(nlohmann::json &j, const Scheme &v);
void from_json(const nlohmann::json &j, Scheme &v);
void to_json(nlohmann::json &j, const FinishState &v);
void from_json(const nlohmann::json &j, FinishState &v);
void to_json(nlohmann::json &j, const TaskSpec &v);
void from_json(const nlohmann::json &j, TaskSpec &v);
void to_json(nlohmann::json &j, const ExamplePair &v);
void from_json(const nlohmann::json &j, ExamplePair &v);
void to_json(nlohmann::json &j, const Query &v);
void from_json(const nlohmann::json &j, Query &v);
void to_json(nlohmann::json &j, const SamplingParams &v);
void from_json(const nlohmann::json &j, SamplingParams &v);
void to_json(nlohmann::json &j, const LLMResponse &v);
void from_json(const nlohmann::json &j, LLMResponse &v);
void to_json(nlohmann::json &j, const Pricing &v);
void from_json(const nlohmann::json &j, Pricing &v);
void to_json(nlohmann::json &j, const LedgerAccount &v);
void from_json(const nlohmann::json &j, LedgerAccount &v);
void to_json(nlohmann::json &j, const CostLedger &v);
void from_json(const nlohmann::json &j, CostLedger &v);

} // namespace codeslice
