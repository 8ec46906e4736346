#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <thread>

#include "codeslice/ae_forge.hpp"
#include "codeslice/api_client.hpp"
#include "codeslice/error.hpp"
#include "codeslice/syntax/syntax.hpp"
#include "support.hpp"

using namespace codeslice;
using nlohmann::json;

namespace {

ErrorCode code_of(const std::function<void()> &f) {
    try {
        f();
    } catch (const Error &e) {
        return e.code();
    }
    FAIL("no error thrown");
    return ErrorCode::InvalidArgument;
}

// Local HTTP server on an ephemeral port, stopped on destruction.
class LocalServer {
  public:
    LocalServer() = default;
    void start() {
        port_ = server.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~LocalServer() {
        server.stop();
        if (thread_.joinable()) {
            thread_.join();
        }
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

    httplib::Server server;

  private:
    int port_ = 0;
    std::thread thread_;
};

// Serves the bridge protocol from the in-process mock. Faults can be switched on.
class StandInBridge : public LocalServer {
  public:
    std::atomic<bool> unhealthy{false};
    std::atomic<bool> short_attention{false};
    std::atomic<int> fail_status{0};
    std::atomic<int> attention_calls{0};

    StandInBridge() {
        server.Get("/health", [this](const httplib::Request &, httplib::Response &res) {
            json h{{"status", unhealthy ? "loading" : "ok"}, {"model", "stand-in"}, {"aggregator", "max"}};
            res.set_content(h.dump(), "application/json");
        });
        server.Post("/attention", [this](const httplib::Request &req, httplib::Response &res) {
            ++attention_calls;
            if (fail_status != 0) {
                res.status = fail_status;
                res.set_content("{\"error\": \"boom\"}", "application/json");
                return;
            }
            const auto body = json::parse(req.body);
            MockModel model;
            json out = to_json(model.attend(body.at("input").get<std::string>()));
            if (short_attention && !out["attention"].empty()) {
                out["attention"].erase(out["attention"].size() - 1);
            }
            res.set_content(out.dump(), "application/json");
        });
        server.Post("/generate", [](const httplib::Request &req, httplib::Response &res) {
            MockModel model;
            const auto body = json::parse(req.body);
            res.set_content(json{{"output", model.attend(body.at("input").get<std::string>()).summary_text}}.dump(),
                            "application/json");
        });
        start();
    }
};

const std::string kTwelve = "def f(a, b):\n    return a + b\n"; // 12 lexer tokens

// The contract every ScorableModel honors, live or mocked.
void check_contract(ScorableModel &model) {
    const auto independent = syntax::code_tokens(kTwelve, Language::Python);
    REQUIRE(independent.size() == 12);
    const auto p = model.attend(kTwelve);
    CHECK(p.tokens.size() == independent.size());
    CHECK(p.attention.size() == p.tokens.size());
    CHECK(p.scalar_attention == *std::max_element(p.attention.begin(), p.attention.end()));
    CHECK_NOTHROW(attention_profile_from_json(to_json(p), kTwelve));

    const auto again = model.attend(kTwelve);
    CHECK(to_json(again) == to_json(p));

    for (const auto &code : testing::syntax_corpus("python", "valid")) {
        const auto q = model.attend(code);
        CHECK(q.attention.size() == q.tokens.size());
        CHECK(q.tokens.size() == syntax::code_tokens(code, Language::Python).size());
    }
}

} // namespace

TEST_CASE("in-process mock honors the bridge contract") {
    MockModel model;
    check_contract(model);
}

TEST_CASE("bridge client honors the contract against a stand-in server") {
    StandInBridge bridge;
    BridgeModel model(bridge.url() + "/");
    const auto h = model.health();
    CHECK(h["status"] == "ok");
    CHECK(model.id() == "stand-in");
    check_contract(model);
    CHECK(model.generate(kTwelve) == MockModel().attend(kTwelve).summary_text);

    // the same ranking as the mock it wraps
    MockModel local;
    const auto a = attention_gap_ranking(model, kTwelve);
    const auto b = attention_gap_ranking(local, kTwelve);
    REQUIRE(a.entries.size() == b.entries.size());
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        CHECK(a.entries[i].index == b.entries[i].index);
        CHECK(a.entries[i].gap == b.entries[i].gap);
    }
}

TEST_CASE("bridge faults surface as typed errors") {
    StandInBridge bridge;
    BridgeModel model(bridge.url());

    bridge.unhealthy = true;
    CHECK(code_of([&] { model.health(); }) == ErrorCode::ModelUnavailable);
    bridge.unhealthy = false;

    bridge.short_attention = true;
    CHECK(code_of([&] { model.attend(kTwelve); }) == ErrorCode::SchemaMismatch);
    bridge.short_attention = false;

    bridge.fail_status = 503;
    CHECK(code_of([&] { model.attend(kTwelve); }) == ErrorCode::ModelUnavailable);
    bridge.fail_status = 0;

    BridgeModel nowhere("http://127.0.0.1:1", 500);
    CHECK(code_of([&] { nowhere.health(); }) == ErrorCode::ModelUnavailable);
    CHECK(code_of([] { BridgeModel("not a url"); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("campaign runs through the bridge client") {
    StandInBridge bridge;
    BridgeModel model(bridge.url());
    model.health();
    std::vector<Snippet> corpus;
    for (const auto &code : testing::syntax_corpus("python", "valid")) {
        corpus.push_back({std::to_string(corpus.size()), code, Language::Python});
    }
    corpus.resize(3);

    class Echo final : public SummaryTarget {
      public:
        std::string summarize(const std::string &) override { return "returns a value"; }
    } target;
    CampaignOptions options;
    options.budget = 4;
    const auto report = ae_campaign(corpus, model, target, options);
    CHECK_FALSE(report.aborted);
    CHECK(report.model_id == "stand-in");
    CHECK(report.candidates.size() <= 4);
    CHECK(report.not_ae == static_cast<int>(report.candidates.size()));
    CHECK(bridge.attention_calls > 0);
}

TEST_CASE("live bridge contract when one is configured") {
    const char *url = std::getenv("CODESLICE_BRIDGE_URL");
    if (url == nullptr) {
        MESSAGE("CODESLICE_BRIDGE_URL not set; live bridge contract skipped");
        return;
    }
    BridgeModel model(url);
    model.health();
    const auto p = model.attend(kTwelve);
    CHECK(p.attention.size() == p.tokens.size());
    CHECK(to_json(model.attend(kTwelve)) == to_json(p));
}

TEST_CASE("http transport talks to a completions endpoint") {
    LocalServer provider;
    std::atomic<int> hits{0};
    std::string seen_auth;
    std::string seen_body;
    std::mutex mu;
    provider.server.Post("/v1/completions", [&](const httplib::Request &req, httplib::Response &res) {
        ++hits;
        {
            std::lock_guard lock(mu);
            seen_auth = req.get_header_value("Authorization");
            seen_body = req.body;
        }
        if (hits == 1) {
            res.status = 429;
            return;
        }
        json out{{"choices", {{{"text", "Returns its argument."}, {"finish_reason", "stop"}}}},
                 {"usage", {{"prompt_tokens", 30}, {"completion_tokens", 4}, {"total_tokens", 34}}}};
        res.set_content(out.dump(), "application/json");
    });
    provider.server.Post("/slow", [](const httplib::Request &, httplib::Response &res) {
        std::this_thread::sleep_for(std::chrono::milliseconds(1500));
        res.set_content("{}", "application/json");
    });
    provider.start();

    ProviderConfig config = testing::fake_provider_config("local");
    config.endpoint_url = provider.url() + "/v1/completions";
    HttplibTransport transport;
    ManualClock clock;
    Cassette cassette(CassetteMode::Passthrough);
    CostLedger ledger;
    Client client(config, transport, clock, cassette, ledger, ClientOptions{1, testing::fake_env});
    const Query q = build_zsq(default_task_spec(TaskKind::CSum), "def f(x):\n    return x\n", default_tokenizer(),
                              prompt_budget(kDefaultMaxTokens));
    const auto r = client.send_query(q, SamplingParams{});
    CHECK(r.text == "Returns its argument.");
    CHECK(hits == 2); // one 429, one retry
    CHECK(client.network_attempts() == 2);
    CHECK(seen_auth == "Bearer token");
    CHECK(json::parse(seen_body)["model"] == "fake-1");
    CHECK(clock.total_slept() >= 800);

    ProviderConfig slow = config;
    slow.endpoint_url = provider.url() + "/slow";
    slow.timeout_ms = 300;
    slow.max_retries = 0;
    Client slow_client(slow, transport, clock, cassette, ledger, ClientOptions{1, testing::fake_env});
    CHECK(code_of([&] { slow_client.send_query(q, SamplingParams{}); }) == ErrorCode::Timeout);

    const auto missing = transport.post(provider.url() + "/nope", {}, "{}", 1000);
    CHECK(missing.status == 404);
    const auto refused = transport.post("http://127.0.0.1:1/x", {}, "{}", 500);
    CHECK(refused.status == 0);
    CHECK_FALSE(refused.error.empty());
}
