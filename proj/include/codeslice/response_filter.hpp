#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "codeslice/syntax/syntax.hpp"
#include "codeslice/tokenizer.hpp"
#include "codeslice/types.hpp"

namespace codeslice {

enum class FilterReason { Ok, TooShort, TooLong, SyntaxError, EmptyResponse };
std::string_view to_string(FilterReason reason);
FilterReason parse_filter_reason(std::string_view text);

struct FilterDetail {
    int line = 0;
    int column = 0;
    std::string message;

    friend bool operator==(const FilterDetail &, const FilterDetail &) = default;
};

struct FilterVerdict {
    bool passed = false;
    FilterReason reason = FilterReason::EmptyResponse;
    std::optional<FilterDetail> detail;

    friend bool operator==(const FilterVerdict &, const FilterVerdict &) = default;
};

inline constexpr std::int64_t kDefaultNlLower = 3;
inline constexpr std::int64_t kDefaultNlUpper = 256;

// Length gate in tokens. Throws InvalidBounds unless 0 < lower <= upper.
FilterVerdict check_nl(std::string_view text, const Tokenizer &tokenizer, std::int64_t lower = kDefaultNlLower,
                       std::int64_t upper = kDefaultNlUpper);

// Grammar check with fragment tolerance. The string overload throws
// UnsupportedLanguage for unknown language names.
FilterVerdict check_pl(std::string_view code, syntax::Language language);
FilterVerdict check_pl(std::string_view code, std::string_view language);

// Contents of the first fenced code block, or the text unchanged.
std::string strip_code_fence(std::string_view text);

// For two-stage CoT answers: the text after the last occurrence of the
// trigger (leading ':' and whitespace dropped), or the trimmed text when the
// trigger is absent.
std::string extract_cot_answer(std::string_view text, std::string_view trigger);

struct FilterItem {
    LLMResponse response;
    Modality modality = Modality::NL;
    std::string language; // PL items only
    std::optional<std::string> answer_trigger; // set for ZSCOT_STAGE2 answers
};

struct FilterOptions {
    const Tokenizer *tokenizer = nullptr; // default_tokenizer() when null
    std::int64_t lower = kDefaultNlLower;
    std::int64_t upper = kDefaultNlUpper;
    bool strip_fences = true;
};

// The text the checks run on: CoT answer segment, then fence stripping for PL.
std::string checked_text(const FilterItem &item, const FilterOptions &options = {});

FilterVerdict check_item(const FilterItem &item, const FilterOptions &options = {});

struct FilterStats {
    std::int64_t total = 0;
    std::int64_t rejected = 0;
    double failure_rate = 0.0;
    std::map<FilterReason, std::int64_t> breakdown;

    friend bool operator==(const FilterStats &, const FilterStats &) = default;
};

// rejected/total to 4 decimals ("0.2500"), and as a percentage ("25.00%").
std::string format_rate(std::int64_t rejected, std::int64_t total);
std::string format_percent(double rate);

struct FilteredItem {
    FilterItem item;
    FilterVerdict verdict;
};

struct FilterResult {
    std::vector<FilteredItem> kept;
    std::vector<FilteredItem> rejected;
    FilterStats stats;
};

// Order-preserving partition. Never throws on item content; per-item failures
// (e.g. an unsupported language) become rejections.
FilterResult filter_batch(const std::vector<FilterItem> &items, const FilterOptions &options = {});

FilterStats make_stats(const std::vector<FilterVerdict> &verdicts);

void to_json(nlohmann::json &j, const FilterReason &v);
void from_json(const nlohmann::json &j, FilterReason &v);
void to_json(nlohmann::json &j, const FilterVerdict &v);
void from_json(const nlohmann::json &j, FilterVerdict &v);
void to_json(nlohmann::json &j, const FilterStats &v);
void from_json(const nlohmann::json &j, FilterStats &v);

} // namespace codeslice
