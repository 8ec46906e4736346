#include <doctest.h>

#include <atomic>
#include <chrono>
#include <filesystem>

#include "codeslice/error.hpp"
#include "codeslice/pipeline.hpp"
#include "codeslice/util.hpp"
#include "scenario.hpp"
#include "support.hpp"

using namespace codeslice;
using nlohmann::json;
namespace fs = std::filesystem;

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

// Transport that must never be reached.
class NoNetwork final : public Transport {
  public:
    HttpResult post(const std::string &, const std::map<std::string, std::string> &, const std::string &,
                    int) override {
        ++calls;
        return HttpResult{0, "", false, "network disabled"};
    }
    std::atomic<int> calls{0};
};

Runtime runtime_for(Transport &transport, Clock &clock) {
    Runtime r;
    r.transport = &transport;
    r.clock = &clock;
    r.env = testing::fake_env;
    return r;
}

} // namespace

TEST_CASE("frozen cassette regenerates byte for byte") {
    testing::TempDir dir;
    testing::FakeProvider provider;
    const auto run = testing::record_scenario(dir, dir / "cassette.jsonl", provider);
    CHECK(provider.calls() == 100);
    CHECK(run.collect.bodies == 100);
    CHECK(run.collect.responses == 100);
    const std::string recorded = read_file(dir / "cassette.jsonl");
    if (std::getenv("CODESLICE_REGENERATE_FIXTURES") != nullptr) {
        write_file_atomic(testing::fixture(testing::kFrozenCassette), recorded);
    }
    CHECK(recorded == read_file(testing::fixture(testing::kFrozenCassette)));
    CHECK(read_jsonl(testing::fixture(testing::kFrozenCassette)).size() == 100);
}

TEST_CASE("replay reproduces the recorded run without the network") {
    testing::TempDir rec;
    testing::FakeProvider provider;
    const auto recorded = testing::record_scenario(rec, rec / "cassette.jsonl", provider);

    testing::TempDir a;
    testing::TempDir b;
    NoNetwork offline;
    ManualClock clock;
    const auto proxy = testing::make_proxy(a);
    const auto frozen = testing::fixture(testing::kFrozenCassette);
    const auto t0 = std::chrono::steady_clock::now();
    const auto first = testing::run_scenario(
        testing::scenario_config(proxy, frozen, CassetteMode::Replay, a / "out"), runtime_for(offline, clock));
    const auto second = testing::run_scenario(
        testing::scenario_config(proxy, frozen, CassetteMode::Replay, b / "out"), runtime_for(offline, clock));
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(offline.calls == 0);
    CHECK(seconds < 30.0);
    CHECK(first.files == second.files);
    CHECK(first.files == recorded.files);
    CHECK(first.files.contains("collected.json"));
    CHECK(first.files.contains("train.export.jsonl"));
    CHECK(first.files.contains("stats.json"));
    CHECK(first.files.contains("ledger.json"));
    CHECK(first.exported > 0);
    CHECK(first.collect.ledger == recorded.collect.ledger);
    CHECK(first.collect.ingest.added + first.collect.stats.rejected <= 100);
    CHECK(first.collect.stats.rejected > 0);
}

TEST_CASE("ledger equals an independent sum over the cassette") {
    testing::TempDir dir;
    NoNetwork offline;
    ManualClock clock;
    const auto run = testing::run_scenario(
        testing::scenario_config(testing::make_proxy(dir), testing::fixture(testing::kFrozenCassette),
                                 CassetteMode::Replay, dir / "out"),
        runtime_for(offline, clock));
    std::int64_t tokens = 0;
    std::int64_t queries = 0;
    for (const auto &line : read_jsonl(testing::fixture(testing::kFrozenCassette))) {
        const auto &r = line.at("response");
        tokens += r.at("prompt_tokens").get<std::int64_t>() + r.at("completion_tokens").get<std::int64_t>();
        ++queries;
    }
    const auto p = testing::fake_provider_config().pricing;
    const double cost = static_cast<double>(tokens) / 1000.0 * p.per_1k_tokens + static_cast<double>(queries) * p.per_query;
    CHECK(run.collect.ledger.total_tokens() == tokens);
    CHECK(run.collect.ledger.total_queries() == queries);
    CHECK(run.collect.ledger.total_cost() == cost);
    const auto saved = json::parse(run.files.at("ledger.json")).get<CostLedger>();
    CHECK(saved == run.collect.ledger);
}

TEST_CASE("replay with a foreign cassette misses") {
    testing::TempDir dir;
    NoNetwork offline;
    ManualClock clock;
    auto config = testing::scenario_config(testing::make_proxy(dir), testing::fixture(testing::kFrozenCassette),
                                           CassetteMode::Replay, dir / "out");
    config.sampling.temperature = 0.75;
    try {
        cmd_collect(config, runtime_for(offline, clock));
        FAIL("expected ReplayMiss");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::ReplayMiss);
        CHECK(e.phase() == "collect/send");
    }
    CHECK(offline.calls == 0);
}

TEST_CASE("config parsing") {
    const json j{{"task", "CSum"},
                 {"scheme", "ZSCOT_STAGE1"},
                 {"providers", {testing::fake_provider_config()}},
                 {"sampling", {{"temperature", 0.25}, {"repeats", 2}}},
                 {"filter", {{"lower", 4}}},
                 {"metric_weights", "0.1,0.2,0.3,0.4"},
                 {"datasets", {{"proxy", "${DATA}/proxy.json"}}},
                 {"cassette", {{"path", "c.jsonl"}, {"mode", "record"}}},
                 {"limit", 5},
                 {"seed", 11}};
    auto env = [](const std::string &name) -> std::optional<std::string> {
        return name == "DATA" ? std::optional<std::string>("/data") : std::nullopt;
    };
    const auto c = config_from_json(interpolate_env(j, env));
    CHECK(c.task == TaskKind::CSum);
    CHECK(c.scheme == Scheme::ZSCOT_STAGE1);
    CHECK(c.sampling.temperature == 0.25);
    CHECK(c.sampling.repeats == 2);
    CHECK(c.sampling.max_tokens == kDefaultMaxTokens);
    CHECK(c.filter_lower == 4);
    CHECK(c.filter_upper == kDefaultNlUpper);
    CHECK(c.weights.gamma == 0.3);
    CHECK(c.proxy_manifest == "/data/proxy.json");
    CHECK(c.cassette.mode == CassetteMode::Record);
    CHECK(c.limit == 5);
    CHECK(c.seed == 11);
    CHECK(c.collected_path() == (fs::path("out") / "collected.json").string());
    CHECK(to_json(config_from_json(to_json(c))) == to_json(c));

    CHECK(code_of([&] { interpolate_env(json{{"x", "${NOPE}"}}, env); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([&] { interpolate_env(json("${DATA"), env); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] { config_from_json(json{{"temprature", 1}}); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] { config_from_json(json{{"seed", "x"}}); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] { config_from_json(json{{"task", "poetry"}}); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] { config_from_json(json::array()); }) == ErrorCode::InvalidConfig);

    testing::TempDir dir;
    write_file_atomic(dir / "bad.json", "{ not json");
    CHECK(code_of([&] { load_config(dir / "bad.json"); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("invalid configs fail before any request or file") {
    testing::TempDir dir;
    const auto proxy = testing::make_proxy(dir);
    struct Case {
        const char *name;
        std::function<void(PipelineConfig &)> mutate;
        ErrorCode code;
    };
    const std::vector<Case> cases{
        {"temperature", [](PipelineConfig &c) { c.sampling.temperature = 1.5; }, ErrorCode::InvalidConfig},
        {"max_tokens", [](PipelineConfig &c) { c.sampling.max_tokens = 4097; }, ErrorCode::InvalidConfig},
        {"bounds", [](PipelineConfig &c) { c.filter_lower = 10, c.filter_upper = 5; }, ErrorCode::InvalidBounds},
        {"provider", [](PipelineConfig &c) { c.provider = "other"; }, ErrorCode::UnknownProvider},
        {"no providers", [](PipelineConfig &c) { c.providers.clear(); }, ErrorCode::InvalidConfig},
        {"duplicate provider",
         [](PipelineConfig &c) { c.providers.push_back(c.providers.front()); }, ErrorCode::InvalidConfig},
        {"rpm", [](PipelineConfig &c) { c.providers[0].requests_per_minute = 0; }, ErrorCode::InvalidConfig},
        {"weights", [](PipelineConfig &c) { c.weights.alpha = -0.1; }, ErrorCode::InvalidArgument},
        {"jobs", [](PipelineConfig &c) { c.jobs = 0; }, ErrorCode::InvalidConfig},
        {"limit", [](PipelineConfig &c) { c.limit = 0; }, ErrorCode::InvalidConfig},
        {"proxy missing", [](PipelineConfig &c) { c.proxy_manifest.clear(); }, ErrorCode::InvalidConfig},
        {"proxy unreadable", [&](PipelineConfig &c) { c.proxy_manifest = dir / "nope.json"; }, ErrorCode::IoFailure},
        {"no cassette path", [](PipelineConfig &c) { c.cassette.path.clear(); }, ErrorCode::InvalidConfig},
        {"replay without file",
         [&](PipelineConfig &c) {
             c.cassette = {dir / "absent.jsonl", CassetteMode::Replay};
         },
         ErrorCode::InvalidConfig},
        {"auth", [](PipelineConfig &c) { c.providers[0].auth_token_env_var = "UNSET_TOKEN"; }, ErrorCode::AuthFailure},
    };
    for (const auto &tc : cases) {
        const std::string name = tc.name;
        CAPTURE(name);
        testing::FakeProvider provider;
        ManualClock clock;
        auto config = testing::scenario_config(proxy, dir / (std::string("cassette-") + tc.name), CassetteMode::Record,
                                               dir / (std::string("out-") + tc.name));
        tc.mutate(config);
        CHECK(code_of([&] { cmd_collect(config, runtime_for(provider, clock)); }) == tc.code);
        CHECK(provider.calls() == 0);
        CHECK_FALSE(fs::exists(config.output_dir));
        CHECK_FALSE(fs::exists(dir / (std::string("cassette-") + tc.name)));
    }

    // reference corpora are never used to build queries
    auto config = testing::scenario_config(proxy, dir / "c.jsonl", CassetteMode::Record, dir / "out-ref");
    auto ref = DatasetStore::create(dir / "ref.json", "ref", DatasetRole::Reference, "x");
    ref.ingest(import_pairs(testing::fixture("pipeline/proxy_pairs.jsonl"), TaskKind::CSum));
    ref.split_counts(10, 0, 0, 1);
    config.proxy_manifest = dir / "ref.json";
    testing::FakeProvider provider;
    ManualClock clock;
    CHECK(code_of([&] { cmd_collect(config, runtime_for(provider, clock)); }) == ErrorCode::AccessViolation);
    CHECK(provider.calls() == 0);
}

TEST_CASE("exit codes") {
    for (auto code : {ErrorCode::InvalidArgument, ErrorCode::InvalidConfig, ErrorCode::UnknownProvider,
                      ErrorCode::InvalidBounds, ErrorCode::UnsupportedLanguage, ErrorCode::BadRatios,
                      ErrorCode::BadBudget, ErrorCode::AccessViolation}) {
        CHECK(exit_code_for(code) == 1);
    }
    for (auto code : {ErrorCode::AuthFailure, ErrorCode::RateLimited, ErrorCode::Timeout, ErrorCode::ReplayMiss,
                      ErrorCode::IoFailure, ErrorCode::SchemaMismatch, ErrorCode::ModelUnavailable,
                      ErrorCode::MisalignedCorpora, ErrorCode::EmptySplit}) {
        CHECK(exit_code_for(code) == 2);
    }
}

TEST_CASE("two-stage collection keeps rationales") {
    testing::TempDir dir;
    testing::FakeProvider provider;
    ManualClock clock;
    auto config = testing::scenario_config(testing::make_proxy(dir), dir / "c.jsonl", CassetteMode::Record, dir / "out");
    config.scheme = Scheme::ZSCOT_STAGE1;
    config.limit = 12;
    const auto r = cmd_collect(config, runtime_for(provider, clock));
    CHECK(r.bodies == 12);
    CHECK(provider.calls() == 24);
    const auto records = DatasetStore::open(r.manifest_path).read(ReadPurpose::Evaluation);
    REQUIRE_FALSE(records.empty());
    for (const auto &rec : records) {
        REQUIRE(rec.rationale);
        CHECK(rec.rationale->starts_with("First it reads the arguments."));
        CHECK(rec.response.find("Therefore") == std::string::npos);
    }
    const auto requests = provider.requests();
    const auto stage2 = json::parse(requests.at(1))["prompt"].get<std::string>();
    CHECK(stage2.find("Let's think it step by step.") != std::string::npos);
    CHECK(stage2.find("Therefore, the summarization is") != std::string::npos);
}

TEST_CASE("in-context collection draws other bodies as examples") {
    testing::TempDir dir;
    testing::FakeProvider provider;
    ManualClock clock;
    auto config = testing::scenario_config(testing::make_proxy(dir), dir / "c.jsonl", CassetteMode::Record, dir / "out");
    config.scheme = Scheme::ICQ;
    config.limit = 5;
    config.example_count = 2;
    config.jobs = 3;
    const auto r = cmd_collect(config, runtime_for(provider, clock));
    CHECK(r.bodies == 5);
    CHECK(provider.calls() == 5);
    for (const auto &req : provider.requests()) {
        const auto prompt = json::parse(req)["prompt"].get<std::string>();
        CHECK(prompt.ends_with("\nOutput:\n"));
        std::size_t inputs = 0;
        for (auto at = prompt.find("Input:\n"); at != std::string::npos; at = prompt.find("Input:\n", at + 1)) {
            ++inputs;
        }
        CHECK(inputs == 3);
    }
}

TEST_CASE("collection is the same with more workers") {
    testing::TempDir one;
    testing::TempDir four;
    testing::FakeProvider p1;
    testing::FakeProvider p4;
    ManualClock c1;
    ManualClock c4;
    auto a = testing::scenario_config(testing::make_proxy(one), one / "c.jsonl", CassetteMode::Record, one / "out");
    auto b = testing::scenario_config(testing::make_proxy(four), four / "c.jsonl", CassetteMode::Record, four / "out");
    a.limit = b.limit = 30;
    b.jobs = 4;
    const auto ra = testing::run_scenario(a, runtime_for(p1, c1));
    const auto rb = testing::run_scenario(b, runtime_for(p4, c4));
    CHECK(ra.files == rb.files);
}

TEST_CASE("interrupted collection keeps what it has") {
    testing::TempDir dir;
    testing::FakeProvider provider;
    ManualClock clock;
    std::atomic<bool> stop{true};
    auto runtime = runtime_for(provider, clock);
    runtime.interrupted = &stop;
    const auto config =
        testing::scenario_config(testing::make_proxy(dir), dir / "c.jsonl", CassetteMode::Record, dir / "out");
    const auto r = cmd_collect(config, runtime);
    CHECK(r.interrupted);
    CHECK(r.responses == 0);
    CHECK(provider.calls() == 0);
    CHECK(fs::exists(r.manifest_path));
}

TEST_CASE("evaluation pairs by body") {
    testing::TempDir dir;
    const auto proxy = testing::make_proxy(dir);
    PipelineConfig config;
    const auto self = cmd_evaluate(config, proxy, proxy, "M_proxy");
    CHECK(self.metric == "BLEU");
    CHECK(self.rows.size() == 100);
    CHECK(self.mean == doctest::Approx(100.0).epsilon(1e-12));
    const auto j = to_json(self);
    CHECK(j["table_row"]["model"] == "M_proxy");
    CHECK(j["pairs"] == 100);

    auto other = DatasetStore::create(dir / "other.json", "other", DatasetRole::Reference, "x");
    other.ingest({make_record(TaskKind::CSum, Scheme::ZSQ, "int unrelated() { return 0; }", "Returns zero.")});
    CHECK(code_of([&] { cmd_evaluate(config, proxy, dir / "other.json"); }) == ErrorCode::MisalignedCorpora);

    // code tasks use CodeBLEU and drop unparseable references unless told otherwise
    PipelineConfig ct;
    ct.task = TaskKind::CT;
    auto cand = DatasetStore::create(dir / "cand.json", "cand", DatasetRole::Collected, "x");
    auto refs = DatasetStore::create(dir / "refs.json", "refs", DatasetRole::Reference, "x");
    cand.ingest({make_record(TaskKind::CT, Scheme::ZSQ, "a", "int F(int x) { return x + 1; }"),
                 make_record(TaskKind::CT, Scheme::ZSQ, "b", "int G() { return 2; }")});
    refs.ingest({make_record(TaskKind::CT, Scheme::ZSQ, "a", "int F(int x) { return x + 1; }"),
                 make_record(TaskKind::CT, Scheme::ZSQ, "b", "int G( { return")});
    const auto dropped = cmd_evaluate(ct, dir / "cand.json", dir / "refs.json");
    CHECK(dropped.metric == "CodeBLEU");
    CHECK(dropped.rows.size() == 1);
    CHECK(dropped.dropped == 1);
    CHECK(dropped.mean == doctest::Approx(100.0));
    const auto kept = cmd_evaluate(ct, dir / "cand.json", dir / "refs.json", "M", true);
    CHECK(kept.rows.size() == 2);
    CHECK(kept.mean == doctest::Approx(50.0));
    CHECK(kept.rows[1].note == "UnparseableReference");
}

TEST_CASE("sweep over the proxy corpus") {
    testing::TempDir dir;
    testing::FakeProvider provider;
    ManualClock clock;
    auto config = testing::scenario_config(testing::make_proxy(dir), dir / "c.jsonl", CassetteMode::Record, dir / "out");
    config.sweep.bodies = 4;
    const auto grid = cmd_sweep(config, runtime_for(provider, clock));
    CHECK(grid.cells.size() == 25);
    CHECK(provider.calls() == 100);
    for (const auto &cell : grid.cells) {
        CHECK(cell.total == 4);
        CHECK_FALSE(cell.error);
    }
}

TEST_CASE("ae command against the mock model") {
    testing::TempDir dir;
    testing::FakeProvider provider;
    ManualClock clock;
    PipelineConfig config;
    config.providers = {testing::fake_provider_config()};
    config.cassette = {dir / "ae.jsonl", CassetteMode::Record};
    config.ae.corpus = testing::fixture("ae/executable.jsonl");
    config.ae.budget = 6;
    const auto report = cmd_ae(config, runtime_for(provider, clock));
    CHECK_FALSE(report.aborted);
    CHECK(report.candidates.size() == 6);
    CHECK(report.verified() == 6);
    CHECK(report.model_id == "mock-v1");

    config.ae.budget = 0;
    CHECK(code_of([&] { cmd_ae(config, runtime_for(provider, clock)); }) == ErrorCode::BadBudget);
    config.ae.budget = 5;
    config.ae.bridge = "not a url";
    CHECK(code_of([&] { cmd_ae(config, runtime_for(provider, clock)); }) == ErrorCode::InvalidConfig);
    config.ae.bridge = "http://127.0.0.1:1";
    CHECK(code_of([&] { cmd_ae(config, runtime_for(provider, clock)); }) == ErrorCode::ModelUnavailable);
}

TEST_CASE("report summarizes each file kind") {
    testing::TempDir dir;
    FilterStats stats;
    stats.total = 130;
    stats.rejected = 6;
    stats.failure_rate = 6.0 / 130.0;
    write_file_atomic(dir / "stats.json", json{{"stats", stats}}.dump());
    AEReport empty;
    write_file_atomic(dir / "ae.json", to_json(empty).dump());
    const auto s = cmd_report({dir / "stats.json", dir / "ae.json"});
    CHECK(s.text.find("failure_rate: 4.62%") != std::string::npos);
    CHECK(s.text.find("no candidates") != std::string::npos);
    CHECK(s.json["sections"][0]["failure_rate_text"] == "4.62%");
    CHECK(s.json["sections"][1]["status"] == "no candidates");
    CHECK(json::parse(s.json.dump()) == s.json);

    write_file_atomic(dir / "other.json", "{\"hello\": 1}");
    CHECK(code_of([&] { cmd_report({dir / "other.json"}); }) == ErrorCode::SchemaMismatch);
    write_file_atomic(dir / "broken.json", "{");
    CHECK(code_of([&] { cmd_report({dir / "broken.json"}); }) == ErrorCode::IoFailure);
    CHECK(code_of([&] { cmd_report({dir / "missing.json"}); }) == ErrorCode::IoFailure);
}
