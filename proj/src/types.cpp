#include "codeslice/types.hpp"

#include <algorithm>
#include <cctype>

#include "codeslice/error.hpp"
#include "codeslice/logging.hpp"

namespace codeslice {

using nlohmann::json;

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::UnknownProvider: return "UnknownProvider";
    case ErrorCode::EmptyBody: return "EmptyBody";
    case ErrorCode::EmptyRationale: return "EmptyRationale";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::PoolTooSmall: return "PoolTooSmall";
    case ErrorCode::InvalidBounds: return "InvalidBounds";
    case ErrorCode::UnsupportedLanguage: return "UnsupportedLanguage";
    case ErrorCode::EmptyReference: return "EmptyReference";
    case ErrorCode::UnparseableReference: return "UnparseableReference";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::AuthFailure: return "AuthFailure";
    case ErrorCode::ReplayMiss: return "ReplayMiss";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::CassetteCollision: return "CassetteCollision";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::AlreadySplit: return "AlreadySplit";
    case ErrorCode::BadRatios: return "BadRatios";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::AccessViolation: return "AccessViolation";
    case ErrorCode::ModelUnavailable: return "ModelUnavailable";
    case ErrorCode::NotApplicable: return "NotApplicable";
    case ErrorCode::RewriteBrokeSyntax: return "RewriteBrokeSyntax";
    case ErrorCode::BadBudget: return "BadBudget";
    case ErrorCode::MisalignedCorpora: return "MisalignedCorpora";
    }
    return "Unknown";
}

std::string_view to_string(TaskKind kind) {
    switch (kind) {
    case TaskKind::CSyn: return "CSyn";
    case TaskKind::CT: return "CT";
    case TaskKind::CSum: return "CSum";
    }
    return "?";
}

std::string_view to_string(Modality modality) {
    return modality == Modality::NL ? "NL" : "PL";
}

std::string_view to_string(Scheme scheme) {
    switch (scheme) {
    case Scheme::ZSQ: return "ZSQ";
    case Scheme::ICQ: return "ICQ";
    case Scheme::ZSCOT_STAGE1: return "ZSCOT_STAGE1";
    case Scheme::ZSCOT_STAGE2: return "ZSCOT_STAGE2";
    }
    return "?";
}

std::string_view to_string(FinishState state) {
    switch (state) {
    case FinishState::Complete: return "Complete";
    case FinishState::Truncated: return "Truncated";
    case FinishState::Error: return "Error";
    }
    return "?";
}

namespace {

std::string lowered(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    out.erase(std::remove(out.begin(), out.end(), '-'), out.end());
    out.erase(std::remove(out.begin(), out.end(), '_'), out.end());
    return out;
}

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view text, const Enum (&values)[N], const char *what) {
    const std::string key = lowered(text);
    for (Enum v : values) {
        if (lowered(to_string(v)) == key) {
            return v;
        }
    }
    throw Error(ErrorCode::InvalidArgument, std::string("unknown ") + what + " '" + std::string(text) + "'");
}

} // namespace

TaskKind parse_task_kind(std::string_view text) {
    static constexpr TaskKind kAll[] = {TaskKind::CSyn, TaskKind::CT, TaskKind::CSum};
    return parse_enum(text, kAll, "task kind");
}

Scheme parse_scheme(std::string_view text) {
    const std::string key = lowered(text);
    if (key == "zscot" || key == "zscot1") {
        return Scheme::ZSCOT_STAGE1;
    }
    if (key == "zscot2") {
        return Scheme::ZSCOT_STAGE2;
    }
    static constexpr Scheme kAll[] = {Scheme::ZSQ, Scheme::ICQ, Scheme::ZSCOT_STAGE1, Scheme::ZSCOT_STAGE2};
    return parse_enum(text, kAll, "query scheme");
}

void validate(const TaskSpec &spec) {
    auto expect = [&](Modality in, Modality out) {
        if (spec.input_modality != in || spec.output_modality != out) {
            throw Error(ErrorCode::InvalidArgument,
                        std::string("task ") + std::string(to_string(spec.task_kind)) + " has wrong I/O modality");
        }
    };
    switch (spec.task_kind) {
    case TaskKind::CSyn: expect(Modality::NL, Modality::PL); break;
    case TaskKind::CT: expect(Modality::PL, Modality::PL); break;
    case TaskKind::CSum: expect(Modality::PL, Modality::NL); break;
    }
    if (spec.question_head.empty()) {
        throw Error(ErrorCode::InvalidArgument, "question head must not be empty");
    }
    if (spec.cot_answer_trigger.empty()) {
        throw Error(ErrorCode::InvalidArgument, "answer trigger must not be empty");
    }
}

SamplingParams normalized(SamplingParams params) {
    auto clamp_unit = [](double &value, const char *name) {
        if (value < 0.0 || value > 1.0) {
            const double clamped = std::clamp(value, 0.0, 1.0);
            log::warning(std::string(name) + " " + std::to_string(value) + " outside [0,1], clamped to " +
                         std::to_string(clamped));
            value = clamped;
        }
    };
    clamp_unit(params.temperature, "temperature");
    clamp_unit(params.top_p, "top_p");
    if (params.max_tokens < 1) {
        throw Error(ErrorCode::InvalidArgument, "max_tokens must be >= 1");
    }
    if (params.repeats < 1) {
        throw Error(ErrorCode::InvalidArgument, "repeats must be >= 1");
    }
    return params;
}

std::int64_t prompt_budget(std::int64_t max_tokens, std::int64_t context_limit) {
    if (max_tokens < 1 || max_tokens >= context_limit) {
        throw Error(ErrorCode::InvalidArgument, "max_tokens must be in [1, context limit)");
    }
    return context_limit - max_tokens;
}

std::vector<TaskSpec> default_task_specs() {
    return {
        TaskSpec{TaskKind::CSyn, Modality::NL, Modality::PL, std::string("English"), std::string("Python"),
                 "Write a Python function for the following description", "Therefore, the Python code is"},
        TaskSpec{TaskKind::CT, Modality::PL, Modality::PL, std::string("Java"), std::string("C#"),
                 "Translate the following Java code into C# code", "Therefore, the translated C# code is"},
        TaskSpec{TaskKind::CSum, Modality::PL, Modality::NL, std::nullopt, std::string("English"),
                 "Summarize the following code in one sentence", "Therefore, the summarization is"},
    };
}

const TaskSpec &default_task_spec(TaskKind kind) {
    static const std::vector<TaskSpec> specs = default_task_specs();
    for (const auto &spec : specs) {
        if (spec.task_kind == kind) {
            return spec;
        }
    }
    throw Error(ErrorCode::InvalidArgument, "no default spec for task");
}

double CostLedger::cost_for(const std::string &provider_id) const {
    const auto account = accounts.find(provider_id);
    if (account == accounts.end()) {
        return 0.0;
    }
    const auto price = pricing.find(provider_id);
    if (price == pricing.end()) {
        throw Error(ErrorCode::UnknownProvider, "no pricing for provider '" + provider_id + "'");
    }
    return static_cast<double>(account->second.total_tokens) / 1000.0 * price->second.per_1k_tokens +
           static_cast<double>(account->second.query_count) * price->second.per_query;
}

double CostLedger::total_cost() const {
    double sum = 0.0;
    for (const auto &[id, account] : accounts) {
        sum += account.estimated_cost;
    }
    return sum;
}

std::int64_t CostLedger::total_tokens() const {
    std::int64_t sum = 0;
    for (const auto &[id, account] : accounts) {
        sum += account.total_tokens;
    }
    return sum;
}

std::int64_t CostLedger::total_queries() const {
    std::int64_t sum = 0;
    for (const auto &[id, account] : accounts) {
        sum += account.query_count;
    }
    return sum;
}

void ledger_add_in_place(CostLedger &ledger, const LLMResponse &response) {
    if (!ledger.pricing.contains(response.provider_id)) {
        throw Error(ErrorCode::UnknownProvider, "no pricing for provider '" + response.provider_id + "'");
    }
    auto &account = ledger.accounts[response.provider_id];
    account.query_count += 1;
    account.total_tokens += std::max<std::int64_t>(0, response.total_tokens());
    account.estimated_cost = ledger.cost_for(response.provider_id);
}

CostLedger ledger_add(CostLedger ledger, const LLMResponse &response) {
    ledger_add_in_place(ledger, response);
    return ledger;
}

// ---- JSON encoding -------------------------------------------------------

void to_json(json &j, const TaskKind &v) { j = std::string(to_string(v)); }
void from_json(const json &j, TaskKind &v) { v = parse_task_kind(j.get<std::string>()); }
void to_json(json &j, const Modality &v) { j = std::string(to_string(v)); }
void from_json(const json &j, Modality &v) {
    const auto s = j.get<std::string>();
    if (s == "NL") {
        v = Modality::NL;
    } else if (s == "PL") {
        v = Modality::PL;
    } else {
        throw Error(ErrorCode::SchemaMismatch, "unknown modality '" + s + "'");
    }
}
void to_json(json &j, const Scheme &v) { j = std::string(to_string(v)); }
void from_json(const json &j, Scheme &v) { v = parse_scheme(j.get<std::string>()); }
void to_json(json &j, const FinishState &v) { j = std::string(to_string(v)); }
void from_json(const json &j, FinishState &v) {
    const auto s = j.get<std::string>();
    if (s == "Complete") {
        v = FinishState::Complete;
    } else if (s == "Truncated") {
        v = FinishState::Truncated;
    } else if (s == "Error") {
        v = FinishState::Error;
    } else {
        throw Error(ErrorCode::SchemaMismatch, "unknown finish state '" + s + "'");
    }
}

namespace {

template <typename T>
void put_optional(json &j, const char *key, const std::optional<T> &value) {
    j[key] = value ? json(*value) : json(nullptr);
}

template <typename T>
void get_optional(const json &j, const char *key, std::optional<T> &value) {
    if (j.contains(key) && !j.at(key).is_null()) {
        value = j.at(key).get<T>();
    } else {
        value.reset();
    }
}

} // namespace

void to_json(json &j, const TaskSpec &v) {
    j = json{{"task_kind", v.task_kind},
             {"input_modality", v.input_modality},
             {"output_modality", v.output_modality},
             {"question_head", v.question_head},
             {"cot_answer_trigger", v.cot_answer_trigger}};
    put_optional(j, "source_language", v.source_language);
    put_optional(j, "target_language", v.target_language);
}

void from_json(const json &j, TaskSpec &v) {
    j.at("task_kind").get_to(v.task_kind);
    j.at("input_modality").get_to(v.input_modality);
    j.at("output_modality").get_to(v.output_modality);
    j.at("question_head").get_to(v.question_head);
    j.at("cot_answer_trigger").get_to(v.cot_answer_trigger);
    get_optional(j, "source_language", v.source_language);
    get_optional(j, "target_language", v.target_language);
}

void to_json(json &j, const ExamplePair &v) { j = json{{"input", v.input}, {"output", v.output}}; }
void from_json(const json &j, ExamplePair &v) {
    j.at("input").get_to(v.input);
    j.at("output").get_to(v.output);
}

void to_json(json &j, const Query &v) {
    j = json{{"head", v.head},
             {"body", v.body},
             {"scheme", v.scheme},
             {"context_examples", v.context_examples},
             {"rendered", v.rendered},
             {"estimated_tokens", v.estimated_tokens}};
    put_optional(j, "rationale", v.rationale);
}

void from_json(const json &j, Query &v) {
    j.at("head").get_to(v.head);
    j.at("body").get_to(v.body);
    j.at("scheme").get_to(v.scheme);
    j.at("context_examples").get_to(v.context_examples);
    j.at("rendered").get_to(v.rendered);
    j.at("estimated_tokens").get_to(v.estimated_tokens);
    get_optional(j, "rationale", v.rationale);
}

void to_json(json &j, const SamplingParams &v) {
    j = json{{"temperature", v.temperature}, {"top_p", v.top_p}, {"max_tokens", v.max_tokens}, {"repeats", v.repeats}};
}

void from_json(const json &j, SamplingParams &v) {
    SamplingParams defaults;
    v.temperature = j.value("temperature", defaults.temperature);
    v.top_p = j.value("top_p", defaults.top_p);
    v.max_tokens = j.value("max_tokens", defaults.max_tokens);
    v.repeats = j.value("repeats", defaults.repeats);
}

void to_json(json &j, const LLMResponse &v) {
    j = json{{"text", v.text},
             {"prompt_tokens", v.prompt_tokens},
             {"completion_tokens", v.completion_tokens},
             {"provider_id", v.provider_id},
             {"finish_state", v.finish_state},
             {"latency_ms", v.latency_ms}};
}

void from_json(const json &j, LLMResponse &v) {
    j.at("text").get_to(v.text);
    j.at("prompt_tokens").get_to(v.prompt_tokens);
    j.at("completion_tokens").get_to(v.completion_tokens);
    j.at("provider_id").get_to(v.provider_id);
    v.finish_state = j.value("finish_state", FinishState::Complete);
    v.latency_ms = j.value("latency_ms", std::int64_t{0});
}

void to_json(json &j, const Pricing &v) { j = json{{"per_1k_tokens", v.per_1k_tokens}, {"per_query", v.per_query}}; }
void from_json(const json &j, Pricing &v) {
    j.at("per_1k_tokens").get_to(v.per_1k_tokens);
    j.at("per_query").get_to(v.per_query);
}

void to_json(json &j, const LedgerAccount &v) {
    j = json{{"query_count", v.query_count}, {"total_tokens", v.total_tokens}, {"estimated_cost", v.estimated_cost}};
}
void from_json(const json &j, LedgerAccount &v) {
    j.at("query_count").get_to(v.query_count);
    j.at("total_tokens").get_to(v.total_tokens);
    j.at("estimated_cost").get_to(v.estimated_cost);
}

void to_json(json &j, const CostLedger &v) { j = json{{"pricing", v.pricing}, {"accounts", v.accounts}}; }
void from_json(const json &j, CostLedger &v) {
    v.pricing = j.value("pricing", std::map<std::string, Pricing>{});
    v.accounts = j.value("accounts", std::map<std::string, LedgerAccount>{});
}

} // namespace codeslice
