#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "codeslice/tokenizer.hpp"
#include "codeslice/types.hpp"

namespace codeslice {

inline constexpr int kDefaultExampleCount = 3;
inline constexpr std::string_view kCotStepTrigger = "Let's think it step by step.";

// Demonstrations drawn from the proxy dataset's train split.
struct ExamplePool {
    TaskKind task_kind = TaskKind::CSum;
    std::vector<ExamplePair> entries;
    std::uint64_t selection_seed = 0;
};

// `count` distinct entries chosen uniformly under `seed`, in draw order.
// Throws PoolTooSmall when count exceeds the pool, InvalidArgument when count < 1.
std::vector<ExamplePair> select_examples(const ExamplePool &pool, int count, std::uint64_t seed);

Query build_zsq(const TaskSpec &spec, std::string_view body, const Tokenizer &tokenizer, std::int64_t budget);

// Layout: head, blank line, one "Input:\n<x>\nOutput:\n<y>\n\n" block per
// example, then "Input:\n<body>\nOutput:\n".
Query build_icq(const TaskSpec &spec, std::string_view body, const std::vector<ExamplePair> &examples,
                const Tokenizer &tokenizer, std::int64_t budget);

// build_icq, dropping examples from the end until the prompt fits. Throws
// BudgetExceeded when even a single example does not fit.
Query build_icq_fitting(const TaskSpec &spec, std::string_view body, std::vector<ExamplePair> examples,
                        const Tokenizer &tokenizer, std::int64_t budget);

// "<head>\nQ: <body> A: Let's think it step by step."
Query build_zscot_stage1(const TaskSpec &spec, std::string_view body, const Tokenizer &tokenizer,
                         std::int64_t budget);

// Stage-1 prompt, the rationale, then the task's answer trigger.
Query build_zscot_stage2(const TaskSpec &spec, std::string_view body, std::string_view rationale,
                         const Tokenizer &tokenizer, std::int64_t budget);

// Per-(task, scheme) overrides of the question head and answer trigger.
class PromptTemplates {
  public:
    struct Override {
        std::optional<std::string> question_head;
        std::optional<std::string> cot_answer_trigger;
    };

    void set(TaskKind task, Scheme scheme, Override value) { overrides_[{task, scheme}] = std::move(value); }
    bool empty() const { return overrides_.empty(); }

    // The spec with any override for (spec.task_kind, scheme) applied.
    TaskSpec resolve(const TaskSpec &spec, Scheme scheme) const;

    // {"templates": [{"task": "CSum", "scheme": "ZSQ", "question_head": "...", "cot_answer_trigger": "..."}]}
    static PromptTemplates from_json(const nlohmann::json &j);
    static PromptTemplates load(const std::string &path);

  private:
    std::map<std::pair<TaskKind, Scheme>, Override> overrides_;
};

} // namespace codeslice
