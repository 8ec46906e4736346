#include "codeslice/query_engine.hpp"

#include <fstream>
#include <numeric>

#include "codeslice/error.hpp"
#include "codeslice/rng.hpp"

namespace codeslice {

namespace {

void require_body(std::string_view body) {
    if (body.empty()) {
        throw Error(ErrorCode::EmptyBody, "query body is empty");
    }
}

Query finish(Query q, const Tokenizer &tokenizer, std::int64_t budget) {
    q.estimated_tokens = tokenizer.count(q.rendered);
    if (q.estimated_tokens > budget) {
        throw BudgetExceeded(q.estimated_tokens, budget);
    }
    return q;
}

std::string stage1_text(const TaskSpec &spec, std::string_view body) {
    std::string out = spec.question_head;
    out += "\nQ: ";
    out += body;
    out += " A: ";
    out += kCotStepTrigger;
    return out;
}

} // namespace

std::vector<ExamplePair> select_examples(const ExamplePool &pool, int count, std::uint64_t seed) {
    if (count < 1) {
        throw Error(ErrorCode::InvalidArgument, "example count must be >= 1");
    }
    if (static_cast<std::size_t>(count) > pool.entries.size()) {
        throw Error(ErrorCode::PoolTooSmall, "requested " + std::to_string(count) + " examples from a pool of " +
                                                 std::to_string(pool.entries.size()));
    }
    std::vector<std::size_t> order(pool.entries.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    std::vector<ExamplePair> picked;
    picked.reserve(count);
    // partial Fisher-Yates: the first `count` slots are the draw
    for (std::size_t i = 0; i < static_cast<std::size_t>(count); ++i) {
        const std::size_t j = i + rng.below(order.size() - i);
        std::swap(order[i], order[j]);
        picked.push_back(pool.entries[order[i]]);
    }
    return picked;
}

Query build_zsq(const TaskSpec &spec, std::string_view body, const Tokenizer &tokenizer, std::int64_t budget) {
    require_body(body);
    Query q;
    q.head = spec.question_head;
    q.body = std::string(body);
    q.scheme = Scheme::ZSQ;
    q.rendered = q.head + "\n" + q.body;
    return finish(std::move(q), tokenizer, budget);
}

Query build_icq(const TaskSpec &spec, std::string_view body, const std::vector<ExamplePair> &examples,
                const Tokenizer &tokenizer, std::int64_t budget) {
    require_body(body);
    if (examples.empty()) {
        throw Error(ErrorCode::InvalidArgument, "in-context query needs at least one example");
    }
    Query q;
    q.head = spec.question_head;
    q.body = std::string(body);
    q.scheme = Scheme::ICQ;
    q.context_examples = examples;
    q.rendered = q.head + "\n\n";
    for (const auto &ex : examples) {
        if (ex.input.empty() || ex.output.empty()) {
            throw Error(ErrorCode::InvalidArgument, "in-context example with empty input or output");
        }
        q.rendered += "Input:\n" + ex.input + "\nOutput:\n" + ex.output + "\n\n";
    }
    q.rendered += "Input:\n" + q.body + "\nOutput:\n";
    return finish(std::move(q), tokenizer, budget);
}

Query build_icq_fitting(const TaskSpec &spec, std::string_view body, std::vector<ExamplePair> examples,
                        const Tokenizer &tokenizer, std::int64_t budget) {
    while (true) {
        try {
            return build_icq(spec, body, examples, tokenizer, budget);
        } catch (const BudgetExceeded &) {
            if (examples.size() <= 1) {
                throw;
            }
            examples.pop_back();
        }
    }
}

Query build_zscot_stage1(const TaskSpec &spec, std::string_view body, const Tokenizer &tokenizer,
                         std::int64_t budget) {
    require_body(body);
    Query q;
    q.head = spec.question_head;
    q.body = std::string(body);
    q.scheme = Scheme::ZSCOT_STAGE1;
    q.rendered = stage1_text(spec, body);
    return finish(std::move(q), tokenizer, budget);
}

Query build_zscot_stage2(const TaskSpec &spec, std::string_view body, std::string_view rationale,
                         const Tokenizer &tokenizer, std::int64_t budget) {
    require_body(body);
    if (rationale.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        throw Error(ErrorCode::EmptyRationale, "stage-1 rationale is empty");
    }
    Query q;
    q.head = spec.question_head;
    q.body = std::string(body);
    q.scheme = Scheme::ZSCOT_STAGE2;
    q.rationale = std::string(rationale);
    q.rendered = stage1_text(spec, body) + " " + *q.rationale + "\n" + spec.cot_answer_trigger;
    return finish(std::move(q), tokenizer, budget);
}

TaskSpec PromptTemplates::resolve(const TaskSpec &spec, Scheme scheme) const {
    TaskSpec out = spec;
    auto it = overrides_.find({spec.task_kind, scheme});
    if (it == overrides_.end()) {
        return out;
    }
    if (it->second.question_head) {
        out.question_head = *it->second.question_head;
    }
    if (it->second.cot_answer_trigger) {
        out.cot_answer_trigger = *it->second.cot_answer_trigger;
    }
    validate(out);
    return out;
}

PromptTemplates PromptTemplates::from_json(const nlohmann::json &j) {
    PromptTemplates t;
    if (!j.contains("templates")) {
        return t;
    }
    for (const auto &entry : j.at("templates")) {
        Override o;
        if (entry.contains("question_head")) {
            o.question_head = entry.at("question_head").get<std::string>();
        }
        if (entry.contains("cot_answer_trigger")) {
            o.cot_answer_trigger = entry.at("cot_answer_trigger").get<std::string>();
        }
        t.set(parse_task_kind(entry.at("task").get<std::string>()),
              parse_scheme(entry.at("scheme").get<std::string>()), std::move(o));
    }
    return t;
}

PromptTemplates PromptTemplates::load(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoFailure, "cannot open template file " + path);
    }
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorCode::InvalidConfig, "bad template file " + path + ": " + e.what());
    }
}

} // namespace codeslice
