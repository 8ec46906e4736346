#include "codeslice/response_filter.hpp"

#include <cstdio>

#include "codeslice/error.hpp"

namespace codeslice {

namespace {

constexpr FilterReason kAllReasons[] = {FilterReason::Ok, FilterReason::TooShort, FilterReason::TooLong,
                                        FilterReason::SyntaxError, FilterReason::EmptyResponse};

bool blank(std::string_view text) {
    return text.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos;
}

std::string_view trim(std::string_view text) {
    const auto b = text.find_first_not_of(" \t\r\n\f\v");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = text.find_last_not_of(" \t\r\n\f\v");
    return text.substr(b, e - b + 1);
}

FilterVerdict ok() { return FilterVerdict{true, FilterReason::Ok, std::nullopt}; }
FilterVerdict reject(FilterReason reason, std::optional<FilterDetail> detail = std::nullopt) {
    return FilterVerdict{false, reason, std::move(detail)};
}

} // namespace

std::string_view to_string(FilterReason reason) {
    switch (reason) {
    case FilterReason::Ok: return "Ok";
    case FilterReason::TooShort: return "TooShort";
    case FilterReason::TooLong: return "TooLong";
    case FilterReason::SyntaxError: return "SyntaxError";
    case FilterReason::EmptyResponse: return "EmptyResponse";
    }
    return "?";
}

FilterReason parse_filter_reason(std::string_view text) {
    for (auto r : kAllReasons) {
        if (to_string(r) == text) {
            return r;
        }
    }
    throw Error(ErrorCode::SchemaMismatch, "unknown filter reason '" + std::string(text) + "'");
}

FilterVerdict check_nl(std::string_view text, const Tokenizer &tokenizer, std::int64_t lower, std::int64_t upper) {
    if (lower <= 0 || lower > upper) {
        throw Error(ErrorCode::InvalidBounds, "NL bounds must satisfy 0 < lower <= upper");
    }
    if (blank(text)) {
        return reject(FilterReason::EmptyResponse);
    }
    const std::int64_t n = tokenizer.count(text);
    if (n < lower) {
        return reject(FilterReason::TooShort);
    }
    if (n > upper) {
        return reject(FilterReason::TooLong);
    }
    return ok();
}

FilterVerdict check_pl(std::string_view code, syntax::Language language) {
    if (blank(code)) {
        return reject(FilterReason::EmptyResponse);
    }
    const auto check = syntax::check_fragment(code, language);
    if (check.ok) {
        return ok();
    }
    const auto &issue = *check.error;
    return reject(FilterReason::SyntaxError, FilterDetail{issue.position.line, issue.position.column, issue.message});
}

FilterVerdict check_pl(std::string_view code, std::string_view language) {
    return check_pl(code, syntax::require_language(language));
}

std::string strip_code_fence(std::string_view text) {
    const auto open = text.find("```");
    if (open == std::string_view::npos) {
        return std::string(text);
    }
    const auto body = text.find('\n', open);
    if (body == std::string_view::npos) {
        return std::string(text);
    }
    const auto close = text.find("```", body + 1);
    if (close == std::string_view::npos) {
        return std::string(text.substr(body + 1));
    }
    return std::string(text.substr(body + 1, close - body - 1));
}

std::string extract_cot_answer(std::string_view text, std::string_view trigger) {
    const auto at = trigger.empty() ? std::string_view::npos : text.rfind(trigger);
    if (at == std::string_view::npos) {
        return std::string(trim(text));
    }
    std::string_view rest = text.substr(at + trigger.size());
    rest = trim(rest);
    if (!rest.empty() && rest.front() == ':') {
        rest = trim(rest.substr(1));
    }
    return std::string(rest);
}

std::string checked_text(const FilterItem &item, const FilterOptions &options) {
    std::string text = item.answer_trigger ? extract_cot_answer(item.response.text, *item.answer_trigger)
                                           : item.response.text;
    if (item.modality == Modality::PL && options.strip_fences) {
        text = strip_code_fence(text);
    }
    return text;
}

FilterVerdict check_item(const FilterItem &item, const FilterOptions &options) {
    const Tokenizer &tokenizer = options.tokenizer ? *options.tokenizer : default_tokenizer();
    if (item.response.finish_state == FinishState::Error) {
        return reject(FilterReason::EmptyResponse, FilterDetail{0, 0, "provider reported an error"});
    }
    const std::string text = checked_text(item, options);
    if (item.modality == Modality::NL) {
        return check_nl(text, tokenizer, options.lower, options.upper);
    }
    const auto language = syntax::language_from_name(item.language);
    if (!language) {
        return reject(FilterReason::SyntaxError, FilterDetail{0, 0, "unsupported language '" + item.language + "'"});
    }
    return check_pl(text, *language);
}

std::string format_rate(std::int64_t rejected, std::int64_t total) {
    if (total <= 0) {
        return "0.0000";
    }
    // exact rounding of the rational to 4 decimals, half away from zero
    const long long scaled = (rejected * 20000 / total + 1) / 2;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lld.%04lld", scaled / 10000, scaled % 10000);
    return buf;
}

std::string format_percent(double rate) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", rate * 100.0);
    return buf;
}

FilterStats make_stats(const std::vector<FilterVerdict> &verdicts) {
    FilterStats s;
    for (auto r : kAllReasons) {
        s.breakdown[r] = 0;
    }
    for (const auto &v : verdicts) {
        ++s.total;
        ++s.breakdown[v.reason];
        if (!v.passed) {
            ++s.rejected;
        }
    }
    s.failure_rate = s.total == 0 ? 0.0 : static_cast<double>(s.rejected) / static_cast<double>(s.total);
    return s;
}

FilterResult filter_batch(const std::vector<FilterItem> &items, const FilterOptions &options) {
    FilterResult result;
    std::vector<FilterVerdict> verdicts;
    verdicts.reserve(items.size());
    for (const auto &item : items) {
        FilterVerdict v;
        try {
            v = check_item(item, options);
        } catch (const Error &e) {
            v = reject(FilterReason::SyntaxError, FilterDetail{0, 0, e.what()});
        }
        verdicts.push_back(v);
        (v.passed ? result.kept : result.rejected).push_back(FilteredItem{item, v});
    }
    result.stats = make_stats(verdicts);
    return result;
}

void to_json(nlohmann::json &j, const FilterReason &v) { j = std::string(to_string(v)); }
void from_json(const nlohmann::json &j, FilterReason &v) { v = parse_filter_reason(j.get<std::string>()); }

void to_json(nlohmann::json &j, const FilterVerdict &v) {
    j = {{"passed", v.passed}, {"reason", v.reason}};
    if (v.detail) {
        j["detail"] = {{"line", v.detail->line}, {"column", v.detail->column}, {"message", v.detail->message}};
    }
}
void from_json(const nlohmann::json &j, FilterVerdict &v) {
    v.passed = j.at("passed").get<bool>();
    v.reason = j.at("reason").get<FilterReason>();
    v.detail.reset();
    if (j.contains("detail")) {
        const auto &d = j.at("detail");
        v.detail = FilterDetail{d.at("line").get<int>(), d.at("column").get<int>(), d.at("message").get<std::string>()};
    }
}

void to_json(nlohmann::json &j, const FilterStats &v) {
    nlohmann::json breakdown = nlohmann::json::object();
    for (const auto &[reason, count] : v.breakdown) {
        breakdown[std::string(to_string(reason))] = count;
    }
    j = {{"total", v.total},
         {"rejected", v.rejected},
         {"failure_rate", v.failure_rate},
         {"failure_rate_text", format_rate(v.rejected, v.total)},
         {"breakdown", breakdown}};
}
void from_json(const nlohmann::json &j, FilterStats &v) {
    v.total = j.at("total").get<std::int64_t>();
    v.rejected = j.at("rejected").get<std::int64_t>();
    v.failure_rate = j.at("failure_rate").get<double>();
    v.breakdown.clear();
    for (const auto &[key, count] : j.at("breakdown").items()) {
        v.breakdown[parse_filter_reason(key)] = count.get<std::int64_t>();
    }
}

} // namespace codeslice
