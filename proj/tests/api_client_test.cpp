#include <doctest.h>

#include <fstream>
#include <thread>

#include "codeslice/api_client.hpp"
#include "codeslice/code_metrics.hpp"
#include "codeslice/error.hpp"
#include "support.hpp"

using namespace codeslice;
using nlohmann::json;
using testing::FakeProvider;
using testing::Harness;

namespace {

Query zsq(const std::string &body) {
    return build_zsq(default_task_spec(TaskKind::CSum), body, default_tokenizer(), prompt_budget(kDefaultMaxTokens));
}

ErrorCode code_of(const std::function<void()> &f) {
    try {
        f();
    } catch (const Error &e) {
        return e.code();
    }
    FAIL("no error thrown");
    return ErrorCode::InvalidArgument;
}

HttpResult status(int code) { return HttpResult{code, R"({"error": "x"})", false, {}}; }

} // namespace

TEST_CASE("provider config validation") {
    ProviderConfig p = testing::fake_provider_config();
    CHECK_NOTHROW(validate(p));
    p.requests_per_minute = 0;
    CHECK(code_of([&] { validate(p); }) == ErrorCode::InvalidConfig);
    p = testing::fake_provider_config();
    p.endpoint_url = "ftp://x";
    CHECK(code_of([&] { validate(p); }) == ErrorCode::InvalidConfig);
    p = testing::fake_provider_config();
    p.max_retries = -1;
    CHECK(code_of([&] { validate(p); }) == ErrorCode::InvalidConfig);
    p = testing::fake_provider_config();
    CHECK(json(p).get<ProviderConfig>() == p);

    const auto u = parse_url("https://api.example.com:8443/v1/chat");
    REQUIRE(u);
    CHECK(u->scheme == "https");
    CHECK(u->host == "api.example.com");
    CHECK(u->port == 8443);
    CHECK(u->path == "/v1/chat");
    CHECK(parse_url("http://localhost")->port == 80);
    CHECK(parse_url("http://localhost")->path == "/");
    CHECK_FALSE(parse_url("localhost:80"));
    CHECK_FALSE(parse_url("http://"));
}

TEST_CASE("rate limiter keeps a sliding minute") {
    ManualClock clock(1000);
    RateLimiter limiter(3, clock);
    for (int i = 0; i < 7; ++i) {
        limiter.acquire();
        clock.advance(10);
    }
    const auto &h = limiter.history();
    REQUIRE(h.size() == 7);
    CHECK(h[0] == 1000);
    CHECK(h[3] == 61000);
    CHECK(h[6] == 121000);
    for (std::size_t i = 3; i < h.size(); ++i) {
        CHECK(h[i] - h[i - 3] >= 60000);
    }
}

TEST_CASE("wire format") {
    ProviderConfig p = testing::fake_provider_config();
    SamplingParams params{0.25, 0.75, 100, 1};
    const json completion = wire_request(p, "hello", params);
    CHECK(completion["prompt"] == "hello");
    CHECK(completion["model"] == "fake-1");
    CHECK(completion["top_p"] == 0.75);
    p.api_style = ApiStyle::Chat;
    const json chat = wire_request(p, "hello", params);
    CHECK_FALSE(chat.contains("prompt"));
    CHECK(chat["messages"] == json::parse(R"([{"role": "user", "content": "hello"}])"));

    const auto r = parse_wire_response(
        p, "hello", R"({"choices": [{"message": {"content": "hi there"}, "finish_reason": "length"}]})");
    CHECK(r.text == "hi there");
    CHECK(r.finish_state == FinishState::Truncated);
    CHECK(r.prompt_tokens == default_tokenizer().count("hello"));
    CHECK(r.completion_tokens == default_tokenizer().count("hi there"));
    CHECK(r.provider_id == "fake");
    const auto u = parse_wire_response(
        p, "hello", R"({"choices": [{"text": "x"}], "usage": {"prompt_tokens": 7, "completion_tokens": 2}})");
    CHECK(u.total_tokens() == 9);
    CHECK(code_of([&] { parse_wire_response(p, "", "{not json"); }) == ErrorCode::TransportError);
    CHECK(code_of([&] { parse_wire_response(p, "", R"({"error": {"message": "no"}})"); }) == ErrorCode::TransportError);
    CHECK(code_of([&] { parse_wire_response(p, "", R"({"choices": []})"); }) == ErrorCode::TransportError);
}

TEST_CASE("client sends with auth and counts cost") {
    Harness h;
    const auto r = h.client.send_query(zsq("int f() { return 1; }"), SamplingParams{});
    CHECK_FALSE(r.text.empty());
    CHECK(h.transport.calls() == 1);
    CHECK(h.transport.last_headers().at("Authorization") == "Bearer token");
    CHECK(h.transport.last_url() == "http://fake.local/v1/completions");
    CHECK(h.ledger.accounts.at("fake").query_count == 1);
    CHECK(h.ledger.accounts.at("fake").total_tokens == r.total_tokens());
    CHECK(h.ledger.total_cost() == doctest::Approx(r.total_tokens() / 1000.0 * 0.002 + 0.0001));
}

TEST_CASE("client retries transient failures with jittered backoff") {
    Harness h;
    h.transport.queue(status(429));
    h.transport.queue(status(503));
    h.transport.queue(HttpResult{0, "", true, "timeout"});
    const auto r = h.client.send_query(zsq("x = 1"), SamplingParams{});
    CHECK_FALSE(r.text.empty());
    CHECK(h.client.network_attempts() == 4);
    // backoffs 1000*2^a scaled by [0.8, 1.2]
    CHECK(h.clock.total_slept() >= 800 + 1600 + 3200);
    CHECK(h.clock.total_slept() <= 1200 + 2400 + 4800);

    Harness again;
    again.transport.queue(status(429));
    again.transport.queue(status(503));
    again.transport.queue(HttpResult{0, "", true, "timeout"});
    again.client.send_query(zsq("x = 1"), SamplingParams{});
    CHECK(again.clock.total_slept() == h.clock.total_slept());
}

TEST_CASE("client gives up with a typed error") {
    {
        Harness h;
        for (int i = 0; i < 4; ++i) h.transport.queue(status(429));
        CHECK(code_of([&] { h.client.send_query(zsq("x"), SamplingParams{}); }) == ErrorCode::RateLimited);
        CHECK(h.transport.calls() == 4);
        CHECK(h.ledger.accounts.empty());
    }
    {
        Harness h;
        for (int i = 0; i < 4; ++i) h.transport.queue(HttpResult{0, "", true, "timeout"});
        CHECK(code_of([&] { h.client.send_query(zsq("x"), SamplingParams{}); }) == ErrorCode::Timeout);
    }
    {
        Harness h;
        for (int i = 0; i < 4; ++i) h.transport.queue(status(502));
        CHECK(code_of([&] { h.client.send_query(zsq("x"), SamplingParams{}); }) == ErrorCode::TransportError);
    }
    {
        Harness h;
        h.transport.queue(status(400));
        CHECK(code_of([&] { h.client.send_query(zsq("x"), SamplingParams{}); }) == ErrorCode::TransportError);
        CHECK(h.transport.calls() == 1);
    }
    {
        Harness h;
        h.transport.queue(status(401));
        CHECK(code_of([&] { h.client.send_query(zsq("x"), SamplingParams{}); }) == ErrorCode::AuthFailure);
        CHECK(h.transport.calls() == 1);
    }
    {
        ProviderConfig p = testing::fake_provider_config();
        p.auth_token_env_var = "MISSING_TOKEN";
        Harness h(CassetteMode::Passthrough, {}, p);
        CHECK(code_of([&] { h.client.send_query(zsq("x"), SamplingParams{}); }) == ErrorCode::AuthFailure);
        CHECK(h.transport.calls() == 0);
    }
    {
        ProviderConfig p = testing::fake_provider_config();
        p.max_retries = 0;
        Harness h(CassetteMode::Passthrough, {}, p);
        h.transport.queue(status(500));
        CHECK(code_of([&] { h.client.send_query(zsq("x"), SamplingParams{}); }) == ErrorCode::TransportError);
        CHECK(h.transport.calls() == 1);
    }
}

TEST_CASE("client refuses over-budget and empty queries before the network") {
    Harness h;
    Query q = zsq("x");
    q.estimated_tokens = 4000;
    CHECK(code_of([&] { h.client.send_query(q, SamplingParams{}); }) == ErrorCode::BudgetExceeded);
    Query empty;
    CHECK(code_of([&] { h.client.send_query(empty, SamplingParams{}); }) == ErrorCode::EmptyBody);
    CHECK(h.transport.calls() == 0);
}

TEST_CASE("cassette record and replay") {
    testing::TempDir dir;
    const std::string path = dir / "c.jsonl";
    std::vector<LLMResponse> recorded;
    {
        Harness h(CassetteMode::Record, path);
        for (const char *body : {"a = 1", "b = 2", "a = 1"}) {
            recorded.push_back(h.client.send_query(zsq(body), SamplingParams{}));
        }
        CHECK(h.transport.calls() == 3);
        const auto entries = h.cassette.entries();
        CHECK(entries[0].duplicate);
        CHECK_FALSE(entries[1].duplicate);
        CHECK(entries[2].duplicate);
        CHECK(entries[2].repeat == 1);
    }
    {
        Harness h(CassetteMode::Replay, path);
        std::vector<LLMResponse> replayed;
        for (const char *body : {"a = 1", "b = 2", "a = 1"}) {
            replayed.push_back(h.client.send_query(zsq(body), SamplingParams{}));
        }
        CHECK(replayed == recorded);
        CHECK(h.transport.calls() == 0);
        CHECK(code_of([&] { h.client.send_query(zsq("a = 1"), SamplingParams{}); }) == ErrorCode::ReplayMiss);
        CHECK(code_of([&] { h.client.send_query(zsq("c = 3"), SamplingParams{}); }) == ErrorCode::ReplayMiss);
        SamplingParams other;
        other.temperature = 0.75;
        h.cassette.rewind();
        CHECK(code_of([&] { h.client.send_query(zsq("b = 2"), other); }) == ErrorCode::ReplayMiss);
        CHECK(h.client.send_query(zsq("b = 2"), SamplingParams{}) == recorded[1]);
    }
    {
        // appending to an existing cassette keeps earlier entries
        Harness h(CassetteMode::Record, path);
        h.client.send_query(zsq("d = 4"), SamplingParams{});
        CHECK(h.cassette.entries().size() == 4);
    }
    CHECK(code_of([&] { Cassette c(CassetteMode::Replay, dir / "missing.jsonl"); }) == ErrorCode::IoFailure);

    auto rows = read_jsonl(path);
    rows[1]["request"]["prompt"] = "tampered";
    write_jsonl(dir / "bad.jsonl", rows);
    CHECK(code_of([&] { Cassette c(CassetteMode::Replay, dir / "bad.jsonl"); }) == ErrorCode::CassetteCollision);
}

TEST_CASE("cassette digest is the canonical request hash") {
    const CassetteRequest r{"p", 0.5, 0.5, 512};
    CHECK(request_digest(r) == sha256_hex(R"({"max_tokens":512,"prompt":"p","temperature":0.5,"top_p":0.5})"));
    CHECK(request_digest(r) != request_digest(CassetteRequest{"p", 0.5, 0.5, 511}));
}

TEST_CASE("two-stage cot through the client") {
    Harness h;
    const auto &spec = default_task_spec(TaskKind::CSum);
    const auto budget = prompt_budget(kDefaultMaxTokens);
    const auto cot = run_two_stage_cot(spec, "int f() { return 1; }", SamplingParams{}, h.client,
                                       default_tokenizer(), budget);
    CHECK(cot.stage2.rendered.find(cot.rationale()) != std::string::npos);
    CHECK(cot.stage2.rendered.ends_with("Therefore, the summarization is"));
    CHECK(h.transport.calls() == 2);

    h.transport.queue(status(400));
    try {
        run_two_stage_cot(spec, "x", SamplingParams{}, h.client, default_tokenizer(), budget);
        FAIL("expected an error");
    } catch (const Error &e) {
        CHECK(e.phase() == "stage1");
    }
    // stage 1 succeeds, stage 2 fails
    h.transport.queue(HttpResult{200, R"({"choices": [{"text": "thinking"}]})", false, {}});
    h.transport.queue(status(400));
    try {
        run_two_stage_cot(spec, "x", SamplingParams{}, h.client, default_tokenizer(), budget);
        FAIL("expected an error");
    } catch (const Error &e) {
        CHECK(e.phase() == "stage2");
    }
    // empty rationale stops before stage 2 is sent
    const int before = h.transport.calls();
    h.transport.queue(HttpResult{200, R"({"choices": [{"text": ""}]})", false, {}});
    try {
        run_two_stage_cot(spec, "x", SamplingParams{}, h.client, default_tokenizer(), budget);
        FAIL("expected an error");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::EmptyRationale);
        CHECK(e.phase() == "stage2");
    }
    CHECK(h.transport.calls() == before + 1);
}

TEST_CASE("client is shareable across threads") {
    ProviderConfig p = testing::fake_provider_config();
    p.requests_per_minute = 5;
    Harness h(CassetteMode::Record, {}, p);
    std::vector<std::thread> pool;
    for (int t = 0; t < 4; ++t) {
        pool.emplace_back([&, t] {
            for (int i = 0; i < 5; ++i) {
                h.client.send_query(zsq("v" + std::to_string(t) + " = " + std::to_string(i)), SamplingParams{});
            }
        });
    }
    for (auto &t : pool) t.join();
    CHECK(h.transport.calls() == 20);
    CHECK(h.ledger.accounts.at("fake").query_count == 20);
    CHECK(h.cassette.entries().size() == 20);
    auto history = h.client.limiter().history();
    std::sort(history.begin(), history.end());
    for (std::size_t i = 5; i < history.size(); ++i) {
        CHECK(history[i] - history[i - 5] >= 60000);
    }
}

TEST_CASE("sweep grid") {
    CHECK(unit_steps(0.25) == std::vector<double>{0, 0.25, 0.5, 0.75, 1.0});
    CHECK(unit_steps(1.0) == std::vector<double>{0, 1.0});
    CHECK_THROWS_AS(unit_steps(0.3), Error);
    CHECK_THROWS_AS(unit_steps(0), Error);

    SweepGrid constant;
    for (int i = 0; i < 3; ++i) constant.cells.push_back(SweepCell{0, 0, {40, 40}, 0, 0, 0, {}});
    apply_pass_rule(constant);
    CHECK(constant.grid_mean == 40.0);
    for (const auto &c : constant.cells) CHECK(c.pass_count == 0);

    // scores {10, 30} and {30, 30}: grid mean 25, so 1 and 2 pass
    SweepGrid two;
    two.cells.push_back(SweepCell{0, 0, {10, 30}, 0, 0, 0, {}});
    two.cells.push_back(SweepCell{0, 1, {30, 30}, 0, 0, 0, {}});
    apply_pass_rule(two);
    CHECK(two.grid_mean == 25.0);
    CHECK(two.cells[0].pass_count == 1);
    CHECK(two.cells[1].pass_count == 2);
    CHECK(two.cells[0].mean_score == 20.0);

    Harness h;
    const auto steps = unit_steps(0.25);
    h.transport.queue(status(400)); // first cell fails, the rest continue
    const auto grid = run_sweep(default_task_spec(TaskKind::CSum), {"x = 1", "y = 2"}, {"sets x", "sets y"}, steps,
                                steps, h.client, [](const std::string &c, const std::string &r) { return nl_bleu(c, r); },
                                default_tokenizer());
    REQUIRE(grid.cells.size() == 25);
    CHECK(grid.cells[0].error.has_value());
    CHECK(grid.cell(1, 0).temperature == 0.25);
    CHECK(grid.cell(1, 0).top_p == 0.0);
    CHECK(grid.cell(0, 1).top_p == 0.25);
    for (std::size_t i = 1; i < 25; ++i) {
        CHECK_FALSE(grid.cells[i].error);
        CHECK(grid.cells[i].total == 2);
    }
    CHECK_THROWS_AS(run_sweep(default_task_spec(TaskKind::CSum), {"a"}, {}, steps, steps, h.client,
                              [](const std::string &, const std::string &) { return 0.0; }, default_tokenizer()),
                    Error);
    const json j = grid;
    CHECK(j["cells"].size() == 25);
}
