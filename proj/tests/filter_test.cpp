#include <doctest.h>

#include "codeslice/error.hpp"
#include "codeslice/response_filter.hpp"
#include "support.hpp"

using namespace codeslice;

namespace {

std::string words(int n) {
    std::string s;
    for (int i = 0; i < n; ++i) {
        s += i ? " w" : "w";
    }
    return s;
}

FilterItem nl_item(std::string text) {
    FilterItem item;
    item.response.text = std::move(text);
    return item;
}

FilterItem pl_item(std::string text, std::string language) {
    FilterItem item = nl_item(std::move(text));
    item.modality = Modality::PL;
    item.language = std::move(language);
    return item;
}

} // namespace

TEST_CASE("nl length bounds") {
    const auto &t = default_tokenizer();
    REQUIRE(t.count(words(257)) == 257);
    CHECK(check_nl(words(2), t).reason == FilterReason::TooShort);
    CHECK(check_nl(words(3), t).passed);
    CHECK(check_nl(words(256), t).passed);
    CHECK(check_nl(words(257), t).reason == FilterReason::TooLong);
    CHECK(check_nl(" \n\t", t).reason == FilterReason::EmptyResponse);
    CHECK_THROWS_AS(check_nl("a b c", t, 0, 10), Error);
    CHECK_THROWS_AS(check_nl("a b c", t, 5, 4), Error);
}

TEST_CASE("pl syntax check over the corpora") {
    for (const char *lang : {"python", "java", "csharp"}) {
        CAPTURE(lang);
        const auto valid = testing::syntax_corpus(lang, "valid");
        const auto broken = testing::syntax_corpus(lang, "corrupted");
        CHECK(valid.size() >= 50);
        CHECK(broken.size() >= 50);
        for (const auto &code : valid) {
            CHECK(check_pl(code, lang).passed);
        }
        for (const auto &code : broken) {
            const auto v = check_pl(code, lang);
            CHECK_FALSE(v.passed);
            CHECK(v.reason == FilterReason::SyntaxError);
            REQUIRE(v.detail.has_value());
            CHECK(v.detail->line >= 1);
            CHECK(v.detail->column >= 1);
        }
    }
    CHECK_THROWS_AS(check_pl("x", "cobol"), Error);
}

TEST_CASE("syntax error positions") {
    const auto v = check_pl("def add(a, b)\n    return a + b\n", "python");
    REQUIRE(v.detail);
    CHECK(v.detail->line == 1);
    CHECK(v.detail->column == 14);
}

TEST_CASE("fences and cot answers") {
    CHECK(strip_code_fence("Here:\n```python\nx = 1\n```\nDone") == "x = 1\n");
    CHECK(strip_code_fence("x = 1") == "x = 1");
    CHECK(strip_code_fence("```\nx = 1\n") == "x = 1\n");
    CHECK(extract_cot_answer("step one. Therefore, the summarization is: adds two numbers.",
                             "Therefore, the summarization is") == "adds two numbers.");
    CHECK(extract_cot_answer("just text ", "Therefore, the summarization is") == "just text");

    FilterItem item = pl_item("Therefore, the Python code is ```python\ndef f():\n    pass\n```", "python");
    item.answer_trigger = "Therefore, the Python code is";
    CHECK(checked_text(item) == "def f():\n    pass\n");
    CHECK(check_item(item).passed);
    FilterOptions keep;
    keep.strip_fences = false;
    CHECK_FALSE(check_item(item, keep).passed);
}

TEST_CASE("failure rate arithmetic") {
    std::vector<FilterItem> items;
    for (int i = 0; i < 6; ++i) {
        items.push_back(nl_item("this is fine"));
    }
    items.push_back(nl_item("no"));
    items.push_back(nl_item(""));
    const auto result = filter_batch(items);
    CHECK(result.kept.size() == 6);
    CHECK(result.rejected.size() == 2);
    CHECK(result.stats.failure_rate == 0.25);
    CHECK(format_rate(result.stats.rejected, result.stats.total) == "0.2500");
    CHECK(format_percent(result.stats.failure_rate) == "25.00%");
    CHECK(result.stats.breakdown.at(FilterReason::TooShort) == 1);
    CHECK(result.stats.breakdown.at(FilterReason::EmptyResponse) == 1);

    CHECK(format_rate(1, 3) == "0.3333");
    CHECK(format_rate(2, 3) == "0.6667");
    CHECK(format_rate(0, 0) == "0.0000");
    CHECK(format_percent(0.0462) == "4.62%");
    CHECK(format_percent(1.0 / 3.0) == "33.33%");
}

TEST_CASE("batch never throws on item content") {
    std::vector<FilterItem> items{pl_item("x = 1", "cobol"), pl_item("x = 1\n", "python"), pl_item("x = = 1", "py")};
    items.push_back(nl_item("provider failed badly"));
    items.back().response.finish_state = FinishState::Error;
    const auto result = filter_batch(items);
    CHECK(result.kept.size() == 1);
    CHECK(result.rejected.size() == 3);
    CHECK(result.rejected[0].verdict.reason == FilterReason::SyntaxError);
    CHECK(result.stats == make_stats({result.rejected[0].verdict, result.kept[0].verdict, result.rejected[1].verdict,
                                      result.rejected[2].verdict}));
    const nlohmann::json j = result.stats;
    CHECK(j.get<FilterStats>() == result.stats);
    CHECK(j["failure_rate_text"] == "0.7500");
}
